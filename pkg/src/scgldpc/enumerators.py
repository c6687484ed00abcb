"""Counting machinery for a single constraint code.

Two views of the same quantity are provided:

* :func:`finite_count` is the exact number of ordered ``N``-tuples of
  codewords whose per-position column sums equal a weight vector ``w``;
* :func:`node_exponent` is its exponential growth rate
  ``lim (1/N) ln finite_count(C, N, N tau)``, the maximum entropy of a
  distribution on the codewords with position marginals ``tau``.  It is
  computed through the convex dual ``min_u ln sum_c exp(u.c) - u.tau``.

Real affine hulls of binary linear codes are cut out by two kinds of
equations only: positions that are zero in every codeword, and positions
that coincide in every codeword.  :class:`ReducedCode` collapses those
so that the dual is strictly convex on the remaining coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gf2 import ConstraintCode

TILT_CAP = 60.0
GAP_TOL = 1e-8
BOUNDARY_CLAMP = 1e-12


class InfeasibleMarginals(ValueError):
    """Raised when ``tau`` lies outside the convex hull of the codewords."""


class SolverToleranceError(RuntimeError):
    pass


# ----------------------------------------------------------------- exact counts


def finite_count(code: ConstraintCode, N: int, w) -> int:
    """Number of ordered ``N``-tuples of codewords with column sums ``w``.

    Dynamic programming over the ``N`` copies on a dense table of partial
    column sums bounded by ``w``.  The table holds Python integers (int64
    when ``|C|**N`` cannot overflow), so the count is exact at any size.
    """
    w = tuple(int(x) for x in w)
    if len(w) != code.length:
        raise ValueError(f"weight vector has length {len(w)}, code length is {code.length}")
    if N < 0 or any(x < 0 or x > N for x in w):
        raise ValueError(f"weights {w} must lie in [0, {N}]")
    dims = tuple(x + 1 for x in w)
    words = [c for c in code.codewords.astype(int) if all(cp <= x for cp, x in zip(c, w))]
    dtype = np.int64 if N * math.log2(max(code.size, 2)) < 62 else object
    table = np.zeros(dims, dtype=dtype)
    table[(0,) * len(w)] = 1
    shifts = [
        (tuple(slice(0, d - cp) for d, cp in zip(dims, c)), tuple(slice(cp, d) for d, cp in zip(dims, c)))
        for c in words
    ]
    for _ in range(N):
        nxt = np.zeros(dims, dtype=dtype)
        for src, dst in shifts:
            nxt[dst] += table[src]
        table = nxt
    return int(table[w])


# ------------------------------------------------------------- reduced geometry


@dataclass(frozen=True, eq=False)
class ReducedCode:
    """Codeword matrix with zero and duplicated coordinates collapsed.

    ``class_of[p]`` is the reduced coordinate of position ``p`` or ``-1`` for a
    position that is zero in every codeword.  ``words`` has one column per
    class and full real column rank.
    """

    class_of: np.ndarray
    words: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.words.shape[1]

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.class_of[self.class_of >= 0], minlength=self.num_classes)


def reduce_code(codewords: np.ndarray) -> ReducedCode:
    words = np.asarray(codewords, dtype=np.uint8)
    class_of = np.full(words.shape[1], -1, dtype=np.int64)
    reps: list[int] = []
    seen: dict[bytes, int] = {}
    for p in range(words.shape[1]):
        col = words[:, p]
        if not col.any():
            continue
        key = col.tobytes()
        if key not in seen:
            seen[key] = len(reps)
            reps.append(p)
        class_of[p] = seen[key]
    return ReducedCode(class_of, words[:, reps].astype(np.float64))


@lru_cache(maxsize=256)
def _reduced_for(code: ConstraintCode) -> ReducedCode:
    return reduce_code(code.codewords)


# ------------------------------------------------------------------ dual solver


@dataclass
class TiltSolution:
    value: np.ndarray  # (B,)
    tilt: np.ndarray  # (B, K)
    probs: np.ndarray  # (B, M)
    feasible: np.ndarray  # (B,) bool
    gap: np.ndarray  # (B,)
    iterations: int

    def covariance(self, words: np.ndarray) -> np.ndarray:
        """Covariance of the codeword under the tilted distributions, ``(B, K, K)``."""
        C = np.asarray(words, dtype=np.float64)
        mean = self.probs @ C
        return np.einsum("bm,mi,mj->bij", self.probs, C, C) - mean[:, :, None] * mean[:, None, :]


def _log_partition(U: np.ndarray, C: np.ndarray, T: np.ndarray):
    s = U @ C.T
    m = s.max(axis=1, keepdims=True)
    e = np.exp(s - m)
    z = e.sum(axis=1, keepdims=True)
    lse = (m + np.log(z))[:, 0]
    return lse - np.einsum("bk,bk->b", U, T), e / z


def solve_tilts(words: np.ndarray, taus: np.ndarray, u0: np.ndarray | None = None,
                max_iter: int = 200) -> TiltSolution:
    """Batched damped Newton for ``min_u logsumexp(words @ u) - u.tau``.

    ``words`` is ``(M, K)`` with full column rank; ``taus`` is ``(B, K)``.
    A row is declared infeasible when its tilt leaves the ``TILT_CAP`` box or
    fails to converge, which is how the dual signals marginals outside the hull.
    """
    # diverging rows overflow harmlessly: non-finite decrements mark them infeasible
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _solve_tilts(words, taus, u0, max_iter)


def _solve_tilts(words, taus, u0, max_iter) -> TiltSolution:
    C = np.asarray(words, dtype=np.float64)
    T = np.atleast_2d(np.asarray(taus, dtype=np.float64))
    B, K = T.shape
    U = np.zeros((B, K)) if u0 is None else np.array(u0, dtype=np.float64, copy=True)
    active = np.ones(B, dtype=bool)
    feasible = np.ones(B, dtype=bool)
    ridge = 1e-10 * np.eye(K)
    CC = C[:, :, None] * C[:, None, :]

    f, P = _log_partition(U, C, T)
    it = 0
    for it in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        Ua, Ta, Pa, fa = U[idx], T[idx], P[idx], f[idx]
        mean = Pa @ C
        g = mean - Ta
        H = np.tensordot(Pa, CC, axes=(1, 0)) - mean[:, :, None] * mean[:, None, :]
        # Jacobi scaling keeps tiny-marginal coordinates well conditioned
        d = np.sqrt(np.maximum(np.einsum("bii->bi", H), 1e-300))
        Hs = H / d[:, :, None] / d[:, None, :] + ridge
        step = -np.linalg.solve(Hs, (g / d)[..., None])[..., 0] / d
        decrement = np.abs(np.einsum("bk,bk->b", g, step))
        # inside the quadratic regime a full Newton step is taken unconditionally
        # and the row is finished: the next decrement would be ~decrement**2
        final = decrement < 1e-12
        alpha = np.ones(idx.size)
        fnew, Pnew = _log_partition(Ua + step, C, Ta)
        bad = ~(fnew <= fa - 0.25 * decrement) & ~final
        for _ in range(50):
            if not bad.any():
                break
            alpha[bad] *= 0.5
            b = np.nonzero(bad)[0]
            fb, Pb = _log_partition(Ua[b] + alpha[b, None] * step[b], C, Ta[b])
            fnew[b], Pnew[b] = fb, Pb
            bad[b] = ~(fb <= fa[b] - 0.25 * alpha[b] * decrement[b])
        move = ~bad
        U[idx[move]] = Ua[move] + alpha[move, None] * step[move]
        f[idx[move]] = fnew[move]
        P[idx[move]] = Pnew[move]
        diverged = bad | ~np.isfinite(decrement) | (np.abs(U[idx]).max(axis=1) > TILT_CAP)
        feasible[idx[diverged]] = False
        active[idx[final | diverged]] = False
    feasible &= ~active
    g = P @ C - T
    # entropy(P) = f - u.g, so |u.g| is the primal-dual gap
    gap = np.abs(np.einsum("bk,bk->b", U, g))
    return TiltSolution(f, U, P, feasible, gap, it)


# ------------------------------------------------------------- public exponent


@dataclass(frozen=True)
class NodeExponent:
    code: ConstraintCode
    tau: np.ndarray
    value: float
    dual_point: np.ndarray
    tilted_distribution: np.ndarray

    @property
    def gradient(self) -> np.ndarray:
        """Gradient of the exponent with respect to ``tau`` (minus the tilt)."""
        return -self.dual_point


def node_exponent(code: ConstraintCode, tau, u0=None) -> NodeExponent:
    """Maximum codeword-distribution entropy subject to position marginals ``tau``.

    Positions with ``tau`` exactly 0 or 1 condition the codeword set; those
    get an infinite tilt.  The tilt of a block of coinciding positions is
    spread evenly over the block.
    """
    tau = np.asarray(tau, dtype=np.float64)
    n = code.length
    if tau.shape != (n,):
        raise ValueError(f"tau must have shape ({n},), got {tau.shape}")
    if np.any(tau < 0) or np.any(tau > 1) or not np.all(np.isfinite(tau)):
        raise InfeasibleMarginals(f"tau outside [0,1]^n: {tau}")
    words = code.codewords
    zero = tau == 0.0
    one = tau == 1.0
    keep = np.all(words[:, zero] == 0, axis=1) & np.all(words[:, one] == 1, axis=1)
    if not keep.any():
        raise InfeasibleMarginals("no codeword matches the 0/1 entries of tau")
    free = ~(zero | one)
    sub = words[keep][:, free]
    u = np.zeros(n)
    u[zero] = -np.inf
    u[one] = np.inf
    probs = np.zeros(code.size)
    if not free.any():
        probs[keep] = 1.0
        return NodeExponent(code, tau, 0.0, u, probs)
    red = reduce_code(sub)
    t_free = tau[free]
    if np.any(red.class_of < 0):
        raise InfeasibleMarginals("tau is positive on a position forced to zero")
    t_red = np.zeros(red.num_classes)
    for k in range(red.num_classes):
        members = t_free[red.class_of == k]
        if np.ptp(members) > 1e-12:
            raise InfeasibleMarginals("tau differs on positions that coincide in every codeword")
        t_red[k] = members.mean()
    t_red = np.clip(t_red, BOUNDARY_CLAMP, 1 - BOUNDARY_CLAMP)
    start = None
    if u0 is not None:
        start = np.zeros((1, red.num_classes))
        u0 = np.asarray(u0, dtype=np.float64)[free]
        for k in range(red.num_classes):
            start[0, k] = u0[red.class_of == k].sum()
        start = np.where(np.isfinite(start), start, 0.0)
    sol = solve_tilts(red.words, t_red[None, :], start)
    if not sol.feasible[0]:
        raise InfeasibleMarginals(f"tau {tau} is outside the convex hull of the codewords")
    if sol.gap[0] > GAP_TOL:
        raise SolverToleranceError(f"primal-dual gap {sol.gap[0]:.3g} exceeds {GAP_TOL}")
    sizes = red.class_sizes()
    u_free = sol.tilt[0][red.class_of] / sizes[red.class_of]
    u[free] = u_free
    probs[keep] = sol.probs[0]
    return NodeExponent(code, tau, float(sol.value[0]), u, probs)


def entropy(p) -> float:
    p = np.asarray(p, dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())
