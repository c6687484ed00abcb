"""Brute-force ground truth for the counting and entropy machinery.

Everything here is deliberately naive and guarded by hard size limits:
the point is to be obviously correct, not fast.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations, permutations, product

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .enumerators import finite_count
from .gf2 import ConstraintCode
from .protograph import Protograph, validate

MAX_BRUTE_N = 3
MAX_BRUTE_EDGES = 6
MAX_FORMULA_N = 64
MAX_PRIMAL_WORDS = 16


class OracleSizeError(ValueError):
    """Instance exceeds an oracle's size guard."""


def _check_weights(p: Protograph, N: int, d) -> tuple[int, ...]:
    d = tuple(int(x) for x in d)
    if len(d) != p.num_variables:
        raise ValueError(f"weight vector has length {len(d)}, protograph has {p.num_variables} variables")
    if N < 1 or any(x < 0 for x in d):
        raise ValueError("N must be positive and weights non-negative")
    return d


def _weight_patterns(N: int, d: tuple[int, ...]) -> np.ndarray:
    """All binary ``(n_v, N)`` arrays whose row ``j`` has weight ``d[j]``, stacked."""
    rows = []
    for dj in d:
        opts = []
        for ones in combinations(range(N), dj):
            r = np.zeros(N, dtype=np.uint8)
            r[list(ones)] = 1
            opts.append(r)
        rows.append(opts)
    return np.array([np.stack(choice) for choice in product(*rows)], dtype=np.uint8)


def brute_force_average(p: Protograph, N: int, d) -> Fraction:
    """Average, over all ``(N!)**E`` edge permutations, of the number of
    lifted codewords whose copies of variable ``j`` carry weight ``d[j]``.

    The lifted graph connects copy ``k`` of a constraint to copy
    ``pi_e(k)`` of the variable on edge ``e``.  Only binary vectors with the
    requested per-variable weights can be counted, so only those are
    tested; every other vector of ``{0,1}^(N n_v)`` contributes zero.
    """
    validate(p)
    d = _check_weights(p, N, d)
    if N > MAX_BRUTE_N or p.num_edges > MAX_BRUTE_EDGES:
        raise OracleSizeError(
            f"brute force limited to N <= {MAX_BRUTE_N} and <= {MAX_BRUTE_EDGES} edges "
            f"(got N={N}, {p.num_edges} edges)"
        )
    if any(x > N for x in d):
        return Fraction(0)
    X = _weight_patterns(N, d)  # (S, n_v, N)
    member = []
    for node in p.constraints:
        table = np.zeros(1 << node.code.length, dtype=bool)
        idx = node.code.codewords.astype(np.int64) @ (1 << np.arange(node.code.length - 1, -1, -1))
        table[idx] = True
        member.append(table)
    edges = [(ci, pos, v) for ci, node in enumerate(p.constraints) for pos, v in enumerate(node.variables)]
    perms = [np.array(q) for q in permutations(range(N))]
    total = 0
    for choice in product(range(len(perms)), repeat=len(edges)):
        ok = np.ones(len(X), dtype=bool)
        key = [np.zeros((len(X), N), dtype=np.int64) for _ in p.constraints]
        for (ci, pos, v), k in zip(edges, choice):
            L = p.constraints[ci].code.length
            key[ci] += X[:, v, perms[k]].astype(np.int64) << (L - 1 - pos)
        for ci in range(len(p.constraints)):
            ok &= member[ci][key[ci]].all(axis=1)
        total += int(ok.sum())
    return Fraction(total, len(perms) ** len(edges))


def product_formula_average(p: Protograph, N: int, d) -> Fraction:
    """``prod_c finite_count(C_c, N, w_c) * prod_j binom(N, d_j)**(1 - q_j)``, exactly."""
    validate(p)
    d = _check_weights(p, N, d)
    if N > MAX_FORMULA_N:
        raise OracleSizeError(f"product formula limited to N <= {MAX_FORMULA_N}, got {N}")
    if any(x > N for x in d):
        return Fraction(0)
    value = Fraction(1)
    for node in p.constraints:
        value *= finite_count(node.code, N, [d[v] for v in node.variables])
        if value == 0:
            return value
    for dj, q in zip(d, p.variable_degrees()):
        value *= Fraction(math.comb(N, dj)) ** (1 - int(q))
    return value


def _entropy(probs: np.ndarray) -> float:
    q = probs[probs > 0]
    return float(-(q * np.log(q)).sum())


def primal_entropy_grid(code: ConstraintCode, tau, grid_step: float = 0.01) -> float:
    """Largest entropy of a codeword distribution with marginals ``tau``, by direct search.

    Distributions are parametrized on the affine set of exact solutions of
    the marginal equations, starting from the max-min interior point of an
    LP.  A compass search polls each direction of the affine set on a mesh
    that is halved from ``1/4`` down to ``grid_step``.  No dual quantity is
    used anywhere, which is what makes it an independent check.
    """
    words = np.asarray(code.codewords, dtype=np.float64)
    if len(words) > MAX_PRIMAL_WORDS:
        raise OracleSizeError(f"primal search limited to {MAX_PRIMAL_WORDS} codewords, got {len(words)}")
    tau = np.asarray(tau, dtype=np.float64)
    if tau.shape != (code.length,):
        raise ValueError(f"tau must have length {code.length}")
    # positions fixed at 0 or 1 rule out disagreeing codewords
    fixed = (tau == 0) | (tau == 1)
    keep = np.all(words[:, fixed] == tau[fixed], axis=1)
    if not keep.any():
        raise ValueError("no codeword matches the 0/1 entries of tau")
    W = words[keep]
    M = len(W)
    A = np.vstack([W.T, np.ones((1, M))])
    b = np.concatenate([tau, [1.0]])
    # maximize t subject to A p = b, p >= t
    res = linprog(
        c=np.concatenate([np.zeros(M), [-1.0]]),
        A_ub=np.hstack([-np.eye(M), np.ones((M, 1))]),
        b_ub=np.zeros(M),
        A_eq=np.hstack([A, np.zeros((A.shape[0], 1))]),
        b_eq=b,
        bounds=[(0, None)] * M + [(None, None)],
        method="highs",
    )
    if res.status != 0 or np.abs(A @ res.x[:M] - b).max() > 1e-9:
        raise ValueError("tau is outside the convex hull of the codewords")
    p = np.clip(res.x[:M], 0.0, None)
    basis = null_space(A)
    if basis.shape[1] == 0:
        return _entropy(p)
    dirs = np.hstack([basis, -basis])
    best = _entropy(p)
    mesh = 0.25
    while True:
        improved = True
        while improved:
            improved = False
            for k in range(dirs.shape[1]):
                trial = p + mesh * dirs[:, k]
                if trial.min() < 0:
                    continue
                h = _entropy(trial)
                if h > best + 1e-15:
                    p, best, improved = trial, h, True
        if mesh <= grid_step:
            break
        mesh = max(mesh / 2, grid_step)
    return best
