"""Protograph data model: variable nodes joined to generalized constraint nodes.

Each constraint node carries a :class:`~scgldpc.gf2.ConstraintCode` and a list
of sockets, one per code position, naming the variable node attached there.
Parallel edges (two positions of one node on the same variable) are allowed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .gf2 import ConstraintCode, shorten


class ProtographError(ValueError):
    """Structural problem with a protograph; ``problems`` lists every finding."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Socket:
    constraint_index: int
    position: int
    variable_index: int


@dataclass(frozen=True)
class ConstraintNode:
    """A generalized check: ``variables[p]`` is attached at code position ``p``."""

    code: ConstraintCode
    variables: tuple[int, ...]

    @classmethod
    def from_sockets(cls, code: ConstraintCode, sockets: Iterable[tuple[int, int]]) -> "ConstraintNode":
        """Build a node from ``(position, variable)`` pairs.

        Positions of ``code`` with no socket are shortened away and the
        remaining positions renumbered in increasing order.
        """
        sockets = list(sockets)
        positions = [p for p, _ in sockets]
        dup = [p for p, c in Counter(positions).items() if c > 1]
        if dup:
            raise ProtographError([f"positions {sorted(dup)} socketed more than once"])
        bad = [p for p in positions if not 0 <= p < code.length]
        if bad:
            raise ProtographError([f"positions {bad} out of range for code length {code.length}"])
        missing = sorted(set(range(code.length)) - set(positions))
        if missing:
            code = shorten(code, missing)
        by_pos = dict(sockets)
        return cls(code, tuple(by_pos[p] for p in sorted(by_pos)))

    @property
    def degree(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class Protograph:
    num_variables: int
    constraints: tuple[ConstraintNode, ...]
    name: str = ""
    _base: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        base = np.zeros((len(self.constraints), self.num_variables), dtype=np.int64)
        for i, node in enumerate(self.constraints):
            for v in node.variables:
                if 0 <= v < self.num_variables:
                    base[i, v] += 1
        base.setflags(write=False)
        object.__setattr__(self, "_base", base)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def base_matrix(self) -> np.ndarray:
        return self._base

    def variable_degrees(self) -> np.ndarray:
        return self._base.sum(axis=0)

    def sockets(self) -> list[Socket]:
        return [
            Socket(i, p, v)
            for i, node in enumerate(self.constraints)
            for p, v in enumerate(node.variables)
        ]

    @property
    def num_edges(self) -> int:
        return int(self._base.sum())


def validate(p: Protograph) -> dict:
    """Check structural invariants; return diagnostics or raise :class:`ProtographError`."""
    problems = []
    if p.num_variables < 1:
        problems.append("protograph has no variable nodes")
    if not p.constraints:
        problems.append("protograph has no constraint nodes")
    for i, node in enumerate(p.constraints):
        if len(node.variables) != node.code.length:
            problems.append(
                f"constraint {i}: {len(node.variables)} sockets for code length {node.code.length}"
            )
        for pos, v in enumerate(node.variables):
            if not 0 <= v < p.num_variables:
                problems.append(f"constraint {i} position {pos}: variable {v} out of range")
    if p.num_variables >= 1:
        degrees = p.variable_degrees()
        for v in np.nonzero(degrees == 0)[0]:
            problems.append(f"variable {int(v)} has no edges")
    if problems:
        raise ProtographError(problems)
    return {
        "num_variables": p.num_variables,
        "num_constraints": p.num_constraints,
        "variable_degrees": p.variable_degrees().tolist(),
        "constraint_degrees": [node.degree for node in p.constraints],
        "base_matrix": p.base_matrix.tolist(),
    }


def design_rate(p: Protograph) -> Fraction:
    """``1 - (sum of effective checks) / num_variables``, exactly."""
    checks = sum(node.code.num_checks_effective for node in p.constraints)
    return 1 - Fraction(checks, p.num_variables)


def rate_correction(p: Protograph, nominal_checks: int) -> int:
    """Rate-increase term: checks a node would have unshortened minus what it keeps.

    ``nominal_checks`` is the per-node parity-check count of the unshortened
    constraint code.
    """
    return sum(nominal_checks - node.code.num_checks_effective for node in p.constraints)
