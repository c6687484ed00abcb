"""GF(2) linear algebra and small constraint codes.

Matrices are numpy ``uint8`` arrays with entries in {0, 1}. Codes are kept
extensionally: a :class:`ConstraintCode` stores its full codeword list, which
is what every downstream enumerator needs anyway.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable

import numpy as np

MAX_CODE_LENGTH = 24


class CodeSizeError(ValueError):
    """Raised when a code is too long to enumerate exhaustively."""


def as_binary_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a 2-D uint8 array and check it is binary and non-empty."""
    a = np.atleast_2d(np.asarray(m))
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"binary matrix must be 2-D and non-empty, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise ValueError("binary matrix entries must be 0 or 1")
    return a.astype(np.uint8)


def row_reduce(m) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2).

    Returns the nonzero rows of the RREF and the pivot columns.
    """
    a = as_binary_matrix(m).copy()
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        hit = np.nonzero(a[:, c])[0]
        hit = hit[hit != r]
        a[hit] ^= a[r]
        pivots.append(c)
        r += 1
    return a[:r], pivots


def rank(m) -> int:
    """Row rank of a binary matrix over GF(2)."""
    return len(row_reduce(m)[1])


def nullspace_basis(m) -> np.ndarray:
    """Basis of {x : m x = 0} over GF(2), one basis vector per row."""
    reduced, pivots = row_reduce(m)
    n = reduced.shape[1]
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in zip(reduced, pivots):
            basis[i, pc] = row[f]
    return basis


def _sorted_words(words: np.ndarray) -> np.ndarray:
    # lexicographic order on bit vectors, position 0 most significant
    order = np.lexsort(words.T[::-1])
    return words[order]


@dataclass(frozen=True, eq=False)
class ConstraintCode:
    """A binary linear block code given by its complete codeword list.

    ``parity_check`` is kept when the code was built from one; shortened codes
    carry ``None`` there and are described by their codewords only.
    """

    codewords: np.ndarray
    parity_check: np.ndarray | None = None
    _weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        words = np.asarray(self.codewords, dtype=np.uint8)
        if words.ndim != 2 or words.shape[1] < 1:
            raise ValueError("codewords must be a non-empty 2-D array")
        words = _sorted_words(np.unique(words, axis=0))
        words.setflags(write=False)
        object.__setattr__(self, "codewords", words)
        if self.parity_check is not None:
            h = as_binary_matrix(self.parity_check)
            h.setflags(write=False)
            object.__setattr__(self, "parity_check", h)
        object.__setattr__(self, "_weights", words.sum(axis=1))

    @property
    def length(self) -> int:
        return self.codewords.shape[1]

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def dimension(self) -> int:
        return self.size.bit_length() - 1

    @property
    def num_checks_effective(self) -> int:
        return self.length - self.dimension

    @property
    def rate(self) -> float:
        return self.dimension / self.length

    def weight_distribution(self) -> list[int]:
        return np.bincount(self._weights, minlength=self.length + 1).tolist()

    def contains(self, word: Iterable[int]) -> bool:
        w = np.asarray(list(word), dtype=np.uint8)
        return bool((self.codewords == w).all(axis=1).any())

    def __eq__(self, other):
        if not isinstance(other, ConstraintCode):
            return NotImplemented
        return self.codewords.shape == other.codewords.shape and bool(
            (self.codewords == other.codewords).all()
        )

    def __hash__(self):
        return hash((self.codewords.shape, self.codewords.tobytes()))

    def __repr__(self):
        return f"ConstraintCode(n={self.length}, k={self.dimension})"


def enumerate_codewords(h) -> ConstraintCode:
    """Build the code whose codewords are the GF(2) null space of ``h``."""
    h = as_binary_matrix(h)
    n = h.shape[1]
    if n > MAX_CODE_LENGTH:
        raise CodeSizeError(f"code length {n} exceeds enumeration limit {MAX_CODE_LENGTH}")
    basis = nullspace_basis(h)
    k = basis.shape[0]
    if k == 0:
        words = np.zeros((1, n), dtype=np.uint8)
    else:
        coeffs = np.array(list(product((0, 1), repeat=k)), dtype=np.uint8)
        words = (coeffs.astype(np.int64) @ basis.astype(np.int64)) % 2
    return ConstraintCode(words.astype(np.uint8), parity_check=h)


def shorten(code: ConstraintCode, removed_positions: Iterable[int]) -> ConstraintCode:
    """Keep codewords that vanish on ``removed_positions`` and delete those positions."""
    removed = sorted(set(int(p) for p in removed_positions))
    n = code.length
    if any(p < 0 or p >= n for p in removed):
        raise ValueError(f"removed positions {removed} out of range for length {n}")
    if len(removed) == n:
        raise ValueError("cannot shorten away every position of a code")
    if not removed:
        return code
    kept = [p for p in range(n) if p not in removed]
    words = code.codewords
    mask = ~words[:, removed].any(axis=1)
    return ConstraintCode(words[mask][:, kept])


def hamming_7_4() -> ConstraintCode:
    """The (7,4) Hamming code with the systematic-left parity-check matrix used throughout."""
    return enumerate_codewords(HAMMING_H1)


def single_parity_check(n: int) -> ConstraintCode:
    return enumerate_codewords(np.ones((1, n), dtype=np.uint8))


HAMMING_H1 = np.array(
    [
        [1, 0, 0, 1, 1, 1, 0],
        [0, 1, 0, 1, 1, 0, 1],
        [0, 0, 1, 1, 0, 1, 1],
    ],
    dtype=np.uint8,
)
