"""Edge spreading plus spatially coupled (terminated) and tail-biting unrolling."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .protograph import ConstraintNode, Protograph, ProtographError, validate

log = logging.getLogger(__name__)


class SpreadingError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeSpreading:
    """Assignment of every socket ``(constraint, position)`` of ``block`` to a component.

    Component ``i`` connects variables at time ``t`` to constraints at time ``t + i``.
    """

    block: Protograph
    memory: int
    component_of: Mapping[tuple[int, int], int]

    def component_matrices(self) -> list[np.ndarray]:
        mats = [np.zeros_like(self.block.base_matrix) for _ in range(self.memory + 1)]
        for (c, p), i in self.component_of.items():
            mats[i][c, self.block.constraints[c].variables[p]] += 1
        return mats


def spread(block: Protograph, assignment: Mapping[tuple[int, int], int], memory: int | None = None) -> EdgeSpreading:
    """Validate a socket-to-component assignment for ``block``.

    ``memory`` defaults to the largest component used.
    """
    validate(block)
    assignment = {(int(c), int(p)): int(i) for (c, p), i in assignment.items()}
    if memory is None:
        memory = max(assignment.values(), default=0)
    if memory < 0:
        raise SpreadingError(f"memory must be non-negative, got {memory}")
    wanted = {(s.constraint_index, s.position) for s in block.sockets()}
    uncovered = sorted(wanted - assignment.keys())
    if uncovered:
        raise SpreadingError(f"sockets without a component: {uncovered}")
    extra = sorted(assignment.keys() - wanted)
    if extra:
        raise SpreadingError(f"assignment names sockets not in the protograph: {extra}")
    bad = sorted(k for k, i in assignment.items() if not 0 <= i <= memory)
    if bad:
        raise SpreadingError(f"components out of range 0..{memory} for sockets {bad}")
    s = EdgeSpreading(block, memory, assignment)
    total = sum(s.component_matrices())
    if not np.array_equal(total, block.base_matrix):
        raise SpreadingError("component base matrices do not sum to the block base matrix")
    return s


@dataclass(frozen=True)
class CoupledProtograph:
    kind: str  # "terminated" | "tailbiting"
    factor: int
    spreading: EdgeSpreading
    realized: Protograph
    time_of_variable: tuple[int, ...]
    time_of_constraint: tuple[int, ...]

    @property
    def memory(self) -> int:
        return self.spreading.memory


def _unroll(s: EdgeSpreading, factor: int, kind: str) -> CoupledProtograph:
    block = s.block
    bv, bc = block.num_variables, block.num_constraints
    ms = s.memory
    n_times = factor + ms if kind == "terminated" else factor
    nodes: list[ConstraintNode] = []
    node_times: list[int] = []
    for t in range(n_times):
        for c, node in enumerate(block.constraints):
            sockets = []
            for p, v in enumerate(node.variables):
                src = t - s.component_of[(c, p)]
                if kind == "tailbiting":
                    src %= factor
                elif not 0 <= src < factor:
                    continue
                sockets.append((p, src * bv + v))
            if not sockets:
                log.warning("constraint %d at time %d lost every socket; dropped", c, t)
                continue
            nodes.append(ConstraintNode.from_sockets(node.code, sockets))
            node_times.append(t)
    name = f"{block.name or 'protograph'}:{kind}{factor}"
    realized = Protograph(factor * bv, tuple(nodes), name=name)
    var_times = tuple(t for t in range(factor) for _ in range(bv))
    return CoupledProtograph(kind, factor, s, realized, var_times, tuple(node_times))


def terminate(s: EdgeSpreading, L: int) -> CoupledProtograph:
    """Terminated coupled chain over ``L`` time instants; boundary nodes are shortened."""
    if L < 1:
        raise ValueError(f"termination length must be >= 1, got {L}")
    return _unroll(s, L, "terminated")


def tailbite(s: EdgeSpreading, lam: int) -> CoupledProtograph:
    """Tail-biting chain of ``lam`` time instants with wraparound; nothing is shortened."""
    if lam < 1 or lam < s.memory:
        raise ProtographError([f"tail-biting factor {lam} must be >= max(1, memory={s.memory})"])
    return _unroll(s, lam, "tailbiting")


def delta_correction(cp: CoupledProtograph) -> int:
    """Checks lost to boundary shortening, relative to unshortened nodes at every time.

    Each block node nominally contributes the rank of its parity-check
    matrix; dropped nodes count in full.
    """
    n_times = cp.factor + cp.memory if cp.kind == "terminated" else cp.factor
    nominal = sum(node.code.num_checks_effective for node in cp.spreading.block.constraints)
    kept = sum(node.code.num_checks_effective for node in cp.realized.constraints)
    return n_times * nominal - kept
