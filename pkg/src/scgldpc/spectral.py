"""Ensemble spectral shape and minimum-distance growth rate.

For a protograph with ``n_v`` variable nodes, the normalized log of the
ensemble-average number of codewords whose variable-node ``j`` copies carry
weight fraction ``x_j`` tends to

    (1/n_v) * [ sum_c a_c(tau_c(x)) - sum_j (deg_j - 1) * H(x_j) ]

where ``a_c`` is the node exponent of constraint ``c`` and ``tau_c`` reads
``x`` through the node's sockets.  The spectral shape ``r(delta)`` is the
maximum of this over ``x`` with ``mean(x) = delta``.  Every variable node is
its own coordinate; nothing is pooled across time instants.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq

from .enumerators import TILT_CAP, InfeasibleMarginals, node_exponent, reduce_code, solve_tilts
from .gf2 import shorten
from .protograph import Protograph, design_rate, validate

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
EDGE = 1e-8


def binary_entropy(x):
    """Binary entropy in nats; accepts scalars or arrays, ``H(0) = H(1) = 0``."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(x * np.log(x) + (1 - x) * np.log1p(-x))
    h = np.where((x <= 0) | (x >= 1), 0.0, h)
    return h if h.ndim else float(h)


def random_coding_shape(R, delta: float) -> float:
    """Random linear code reference curve ``H(delta) - (1 - R) ln 2`` in nats."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return binary_entropy(delta) - (1 - float(R)) * LN2


def random_coding_crossing(R) -> float:
    """Zero of :func:`random_coding_shape` below 1/2 (the Gilbert-Varshamov ratio)."""
    return brentq(lambda d: random_coding_shape(R, d), 1e-15, 0.5, xtol=1e-14)


def _lse_cols(s: np.ndarray) -> np.ndarray:
    m = s.max(axis=0, keepdims=True)
    return m + np.log(np.exp(s - m).sum(axis=0, keepdims=True))


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class _NodeGroup:
    words: np.ndarray  # (M, K) reduced codeword matrix shared by the group
    index: np.ndarray  # (B, K) coordinate index for each node class
    members: list[int]  # constraint indices
    tilt: np.ndarray | None = None
    # tilt, marginals and inverse covariance at the last Hessian evaluation,
    # used to predict warm starts to first order (d tilt = Cov^-1 d tau)
    base: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None


class EnsembleObjective:
    """The spectral objective of a protograph, with analytic gradient.

    Variables that every codeword forces to zero are removed, and variables
    that the constraint codes force to be equal share one coordinate.  The
    free coordinates ``z`` carry ``weights`` (how many variable nodes each
    stands for) and live in ``[EDGE, 1 - EDGE]``.
    """

    def __init__(self, p: Protograph):
        validate(p)
        self.protograph = p
        n_v = p.num_variables
        self.n_v = n_v
        degrees = p.variable_degrees()

        zero = np.zeros(n_v, dtype=bool)
        while True:
            effective = []
            changed = False
            for node in p.constraints:
                vars_ = np.array(node.variables)
                drop = [i for i, v in enumerate(vars_) if zero[v]]
                if len(drop) == len(vars_):
                    effective.append(None)
                    continue
                code = shorten(node.code, drop) if drop else node.code
                kept = np.array([v for i, v in enumerate(vars_) if not zero[v]])
                red = reduce_code(code.codewords)
                forced = kept[red.class_of < 0]
                if forced.size:
                    zero[forced] = True
                    changed = True
                effective.append((kept, red))
            if not changed:
                break
        self.forced_zero = zero

        uf = _UnionFind(n_v)
        for item in effective:
            if item is None:
                continue
            kept, red = item
            for k in range(red.num_classes):
                vs = kept[red.class_of == k]
                for v in vs[1:]:
                    uf.union(int(vs[0]), int(v))
        roots = {}
        coord = np.full(n_v, -1, dtype=np.int64)
        for v in range(n_v):
            if zero[v]:
                continue
            r = uf.find(v)
            coord[v] = roots.setdefault(r, len(roots))
        self.coord_of_variable = coord
        K = len(roots)
        self.num_coords = K
        live = coord >= 0
        self.weights = np.bincount(coord[live], minlength=K).astype(np.float64)
        self.entropy_coeff = np.bincount(coord[live], weights=(degrees[live] - 1.0), minlength=K)

        groups: dict[bytes, _NodeGroup] = {}
        for ci, item in enumerate(effective):
            if item is None:
                continue
            kept, red = item
            key = red.words.shape[1].to_bytes(2, "little") + red.words.tobytes()
            idx = np.array([coord[kept[red.class_of == k][0]] for k in range(red.num_classes)])
            g = groups.get(key)
            if g is None:
                groups[key] = _NodeGroup(red.words, idx[None, :], [ci])
            else:
                g.index = np.vstack([g.index, idx])
                g.members.append(ci)
        self.groups = list(groups.values())
        self.evaluations = 0

    # ---------------------------------------------------------------- mapping

    def expand(self, z: np.ndarray) -> np.ndarray:
        """Per-variable weight fractions from free coordinates."""
        x = np.zeros(self.n_v)
        live = self.coord_of_variable >= 0
        x[live] = z[self.coord_of_variable[live]]
        return x

    def contract(self, x: np.ndarray) -> np.ndarray:
        """Free coordinates from per-variable fractions (averaging tied variables)."""
        x = np.asarray(x, dtype=np.float64)
        live = self.coord_of_variable >= 0
        s = np.bincount(self.coord_of_variable[live], weights=x[live], minlength=self.num_coords)
        return s / self.weights

    # ------------------------------------------------------------- evaluation

    def value_and_grad(self, z: np.ndarray, warm: bool = True) -> tuple[float, np.ndarray]:
        """Objective and gradient in free coordinates; ``-inf`` outside the code polytopes."""
        self.evaluations += 1
        z = np.asarray(z, dtype=np.float64)
        total = 0.0
        grad = np.zeros(self.num_coords)
        for g in self.groups:
            T = z[g.index]
            u0 = None
            if warm and g.base is not None:
                u_b, T_b, inv_b = g.base
                u0 = u_b + np.einsum("bij,bj->bi", inv_b, T - T_b)
                if not np.all(np.isfinite(u0)) or np.abs(u0).max() > 0.5 * TILT_CAP:
                    u0 = g.tilt
            elif warm:
                u0 = g.tilt
            sol = solve_tilts(g.words, T, u0)
            if u0 is not None and not sol.feasible.all():
                # a stale warm start can stall the inner Newton; retry cold
                sol = solve_tilts(g.words, T)
            if not sol.feasible.all():
                return -math.inf, grad
            g.tilt = sol.tilt
            total += sol.value.sum()
            np.add.at(grad, g.index, -sol.tilt)
        zc = np.clip(z, EDGE, 1 - EDGE)
        total -= float(self.entropy_coeff @ binary_entropy(zc))
        grad -= self.entropy_coeff * np.log((1 - zc) / zc)
        return total / self.n_v, grad / self.n_v

    def value_grad_hess(self, z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray | None]:
        """Objective, gradient and *negated* Hessian in free coordinates.

        The node exponent is the Legendre dual of a log-partition function, so
        its Hessian in ``tau`` is minus the inverse covariance of the tilted
        codeword distribution.
        """
        f, grad = self.value_and_grad(z)
        if not math.isfinite(f):
            return f, grad, None
        K = self.num_coords
        neg_hess = np.zeros((K, K))
        for g in self.groups:
            P = np.exp(g.words @ g.tilt.T - _lse_cols(g.words @ g.tilt.T)).T
            cov = np.einsum("bm,mi,mj->bij", P, g.words, g.words)
            mean = P @ g.words
            cov -= mean[:, :, None] * mean[:, None, :]
            d = np.sqrt(np.maximum(np.einsum("bii->bi", cov), 1e-300))
            scaled = cov / d[:, :, None] / d[:, None, :]
            try:
                inv = np.linalg.inv(scaled)
            except np.linalg.LinAlgError:
                inv = np.linalg.pinv(scaled, hermitian=True)
            inv = inv / d[:, :, None] / d[:, None, :]
            g.base = (g.tilt.copy(), z[g.index], inv)
            rows = np.repeat(g.index[:, :, None], g.index.shape[1], axis=2)
            cols = np.repeat(g.index[:, None, :], g.index.shape[1], axis=1)
            np.add.at(neg_hess, (rows, cols), inv)
        zc = np.clip(z, EDGE, 1 - EDGE)
        neg_hess[np.diag_indices(K)] -= self.entropy_coeff / (zc * (1 - zc))
        return f, grad, neg_hess / self.n_v

    def value(self, z: np.ndarray) -> float:
        return self.value_and_grad(z)[0]

    def at_variables(self, x) -> float:
        """Objective at a per-variable fraction vector (no equality ties imposed)."""
        x = np.asarray(x, dtype=np.float64)
        z = self.contract(x)
        if not np.allclose(self.expand(z), x, atol=1e-12, rtol=0):
            return -math.inf
        if np.all(x == 0):
            return 0.0
        return self.value(np.clip(z, EDGE, 1 - EDGE))


# ------------------------------------------------------------------ optimizer


def project_slice(y: np.ndarray, w: np.ndarray, target: float, lo: float, hi: float) -> np.ndarray:
    """Project ``y`` onto ``{lo <= x <= hi, w.x = target}`` in the ``w``-weighted norm.

    The solution is ``clip(y - mu, lo, hi)``; ``mu`` is located exactly from
    the breakpoints of the piecewise-linear constraint residual.
    """
    def resid(mu):
        return float(w @ np.clip(y - mu, lo, hi)) - target

    bps = np.unique(np.concatenate([y - lo, y - hi]))
    vals = np.array([resid(m) for m in bps])
    # resid is non-increasing in mu
    if vals[0] < 0 or vals[-1] > 0:
        raise ValueError("target weight not reachable inside the box")
    j = int(np.searchsorted(-vals, 0.0, side="left"))
    if vals[j] == 0:
        return np.clip(y - bps[j], lo, hi)
    a, b = bps[j - 1], bps[j]
    fa, fb = vals[j - 1], vals[j]
    mu = a + (b - a) * fa / (fa - fb)
    return np.clip(y - mu, lo, hi)


@dataclass
class AscentResult:
    z: np.ndarray
    value: float
    iterations: int
    converged: bool


LOGIT_CAP = math.log((1 - EDGE) / EDGE)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _logit(z):
    z = np.clip(z, EDGE, 1 - EDGE)
    return np.log(z) - np.log1p(-z)


def shift_to_target(ell: np.ndarray, w: np.ndarray, target: float) -> np.ndarray:
    """Return ``ell - mu`` (capped) with ``mu`` chosen so the weighted mean matches ``target``."""
    def resid(mu):
        return float(w @ _sigmoid(np.clip(ell - mu, -LOGIT_CAP, LOGIT_CAP))) - target

    lo, hi = -2 * LOGIT_CAP - ell.max(), 2 * LOGIT_CAP - ell.min()
    lo, hi = min(lo, -1.0), max(hi, 1.0)
    mu = brentq(resid, lo - 1.0, hi + 1.0, xtol=1e-14, maxiter=400)
    return np.clip(ell - mu, -LOGIT_CAP, LOGIT_CAP)


NEAR_EDGE = 1e-5


def kkt_violation(obj: EnsembleObjective, z: np.ndarray, g: np.ndarray) -> tuple[float, float, np.ndarray]:
    """First-order optimality violations on the slice-box, per variable node.

    Returns ``(inner, outward, red)``: ``red`` is the reduced per-variable
    gradient ``n_v * g / w - nu`` with ``nu`` fitted on interior coordinates.
    ``inner`` is the largest ``|red|`` over interior coordinates, measured in
    the entropy metric ``2 sqrt(z(1-z))`` that the Newton steps use; for
    coordinates within ``NEAR_EDGE`` of a bound it is the largest
    achievable first-order gain ``|red| * distance`` from pushing them onto
    the bound.  ``outward`` is the largest reduced gradient pulling a
    near-edge coordinate into the interior.  Those are kept apart because
    the entropy term makes small outward gradients harmless: the optimum
    then sits within a relative ``O(red)`` of the edge.
    """
    G = obj.n_v * g / obj.weights
    low = z <= NEAR_EDGE
    high = z >= 1 - NEAR_EDGE
    interior = ~(low | high)
    if interior.any():
        nu = float(np.average(G[interior], weights=obj.weights[interior]))
    else:
        nu = float(np.average(G, weights=obj.weights))
    red = G - nu
    gain = np.zeros_like(z)
    zi = z[interior]
    gain[interior] = np.abs(red[interior]) * 2 * np.sqrt(zi * (1 - zi))
    gain[low] = np.maximum(-red[low], 0.0) * z[low]
    gain[high] = np.maximum(red[high], 0.0) * (1 - z[high])
    out = np.concatenate([np.maximum(red[low], 0.0), np.maximum(-red[high], 0.0)])
    return float(gain.max()), float(out.max()) if out.size else 0.0, red


def _newton_phase(obj, z, target, f, g, M, max_iter, tol, constrained=True):
    w = obj.weights
    lo, hi = EDGE, 1 - EDGE
    lam = 1e-3
    for it in range(1, max_iter + 1):
        scale = np.sqrt(z * (1 - z))
        at_lo = z <= lo * 1.5
        at_hi = z >= hi - lo * 0.5
        inner = ~(at_lo | at_hi)
        nu = float(np.sum((g * w)[inner]) / np.sum((w * w)[inner])) if constrained and inner.any() else 0.0
        red = g - nu * w
        free = ~((at_lo & (red < 0)) | (at_hi & (red > 0)))
        accepted = False
        for _ in range(40):
            step, dec, nu_s = _kkt_step(M, g, w, scale, free, lam, constrained)
            if step is None:
                lam = max(lam * 10, 1e-8)
                continue
            # freeze bound coordinates the step would push outward, then redo
            outward = free & ((at_lo & (step < 0)) | (at_hi & (step > 0)))
            if outward.any():
                free &= ~outward
                continue
            if dec < tol:
                return z, f, g, M, it, True
            with np.errstate(divide="ignore", invalid="ignore"):
                room = np.where(step < 0, (z - lo) / -step, np.where(step > 0, (hi - z) / step, np.inf))
            alpha = min(1.0, 0.99 * float(room.min()))
            zn = np.clip(z + alpha * step, lo, hi)
            fn, gn, Mn = obj.value_grad_hess(zn)
            if math.isfinite(fn) and fn >= f + 1e-4 * alpha * dec:
                accepted = True
                break
            lam = max(lam * 8, 1e-8)
        if not accepted:
            return z, f, g, M, it, False
        z, f, g, M = zn, fn, gn, Mn
        lam = max(lam * 0.25, 1e-12)
    return z, f, g, M, max_iter, False


def _kkt_step(M, g, w, scale, free, lam, constrained=True):
    if not free.any():
        return np.zeros_like(g), 0.0, 0.0
    Ms = M[np.ix_(free, free)] * scale[free][:, None] * scale[free][None, :]
    gs, ws = (g * scale)[free], (w * scale)[free]
    try:
        L = np.linalg.cholesky(Ms + lam * np.eye(Ms.shape[0]))
    except np.linalg.LinAlgError:
        return None, 0.0, 0.0
    a = _chol_solve(L, gs)
    b = _chol_solve(L, ws)
    nu_s = float(ws @ a) / float(ws @ b) if constrained else 0.0
    step = np.zeros_like(g)
    step[free] = (a - nu_s * b) * scale[free]
    return step, float((g - nu_s * w) @ step), nu_s


def newton_ascent(obj: EnsembleObjective, z0: np.ndarray, target: float,
                  max_iter: int = 400, tol: float = 1e-14, kkt_tol: float = 1e-5,
                  edge_tol: float = 1e-2, max_kicks: int = 60) -> AscentResult:
    """Damped projected Newton ascent on ``{w.z = target} cap box``.

    Newton steps solve the equality-constrained system with a
    Levenberg-Marquardt term in the entropy metric ``z(1-z)``; coordinates
    at the lower edge with an outward reduced gradient are frozen.  A
    coordinate sitting at the edge barely moves under a Newton step even
    when it should grow, so after each Newton phase the box optimality
    conditions are checked and violators get a logit-space kick.
    """
    w = obj.weights
    z = project_slice(np.asarray(z0, dtype=np.float64), w, target, EDGE, 1 - EDGE)
    f, g, M = obj.value_grad_hess(z)
    if not math.isfinite(f):
        return AscentResult(z, f, 0, False)
    total = 0
    for _ in range(max_kicks + 1):
        z, f, g, M, used, ok = _newton_phase(obj, z, target, f, g, M, max_iter - total, tol)
        total += used
        inner, edge, red = kkt_violation(obj, z, g)
        if inner <= kkt_tol and edge <= edge_tol:
            return AscentResult(z, f, total, ok)
        if total >= max_iter:
            break
        grow = (z <= NEAR_EDGE) & (red > edge_tol)
        if not grow.any():
            break
        kicked = False
        eta = 1.0
        ell = _logit(z)
        for _ in range(30):
            trial = ell.copy()
            trial[grow] += eta * 2.0
            zn = _sigmoid(shift_to_target(trial, w, target))
            fn, gn, Mn = obj.value_grad_hess(zn)
            if math.isfinite(fn) and fn >= f - 1e-15:
                z, f, g, M = zn, fn, gn, Mn
                kicked = True
                break
            eta *= 0.5
        if not kicked:
            break
    return AscentResult(z, f, total, False)


def _chol_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, y, lower=False)


# ------------------------------------------------------------- public objective


def objective(p: Protograph, dvec) -> float:
    """Spectral objective at per-variable weight fractions ``dvec``.

    Evaluated node by node with :func:`~scgldpc.enumerators.node_exponent`,
    so 0/1 entries are exact.  Marginals outside a code's hull give ``-inf``.
    """
    return objective_and_gradient(p, dvec)[0]


def objective_and_gradient(p: Protograph, dvec) -> tuple[float, np.ndarray]:
    x = np.asarray(dvec, dtype=np.float64)
    if x.shape != (p.num_variables,):
        raise ValueError(f"dvec must have length {p.num_variables}, got shape {x.shape}")
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("dvec entries must lie in [0, 1]")
    total = 0.0
    grad = np.zeros(p.num_variables)
    for node in p.constraints:
        vars_ = np.array(node.variables)
        try:
            ne = node_exponent(node.code, x[vars_])
        except InfeasibleMarginals:
            return -math.inf, np.full(p.num_variables, np.nan)
        total += ne.value
        np.add.at(grad, vars_, ne.gradient)
    q = p.variable_degrees()
    total -= float((q - 1) @ binary_entropy(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        dh = np.log1p(-x) - np.log(x)
        grad -= np.where(q > 1, (q - 1) * dh, 0.0)
    return total / p.num_variables, grad / p.num_variables


# ----------------------------------------------------------- spectral shape


@dataclass
class SpectralPoint:
    delta: float
    r: float
    converged: bool
    restarts: int
    best_start: str
    start_values: list[float]
    argmax: np.ndarray  # per-variable weight fractions

    @property
    def dispersion(self) -> float:
        """Spread between the best and worst finite restart values."""
        vals = [v for v in self.start_values if math.isfinite(v)]
        return max(vals) - min(vals) if vals else math.nan


class SpectralSolver:
    """Multi-start maximizer of the spectral objective on ``mean(x) = delta``.

    Starts are the uniform vector, the best solutions at the nearest
    already-solved ``delta`` on either side (rescaled), and randomized
    starts up to ``restarts`` in total.  Random starts are seeded by
    ``(seed, delta)``, so asking for more restarts only adds starts.  When
    variable time indices are given the random starts are bumps localized
    in time, otherwise entries are drawn from ``Beta(1/2, 1/2)``, which
    favors the box faces.
    """

    def __init__(self, p: Protograph, restarts: int = 8, seed: int = 0,
                 times: Sequence[int] | None = None, period: int | None = None,
                 max_iter: int = 400):
        if restarts < 1:
            raise ValueError("restarts must be positive")
        self.protograph = p
        self.objective = EnsembleObjective(p)
        self.restarts = restarts
        self.seed = seed
        self.max_iter = max_iter
        self.period = period
        self.times = None if times is None else np.asarray(times, dtype=np.float64)
        if self.times is not None and self.times.shape != (p.num_variables,):
            raise ValueError("times must give one time index per variable")
        self.pool: dict[float, np.ndarray] = {}

    @property
    def max_delta(self) -> float:
        return float(self.objective.weights.sum()) / self.objective.n_v

    def _random_x(self, rng: np.random.Generator, delta: float) -> np.ndarray:
        n = self.objective.n_v
        if self.times is None:
            x = rng.beta(0.5, 0.5, size=n)
        else:
            span = float(self.times.max()) + 1.0
            if rng.random() < 0.5:
                center = rng.choice([0.0, span - 1.0]) + rng.normal(0.0, 0.5)
            else:
                center = rng.uniform(0.0, span)
            width = math.exp(rng.uniform(math.log(0.5), math.log(max(span / 2, 0.6))))
            d = np.abs(self.times - center)
            if self.period:
                d = np.minimum(d, self.period - d)
            x = np.exp(-0.5 * (d / width) ** 2) * rng.uniform(0.5, 1.5, size=n)
        return x * (delta / max(x.mean(), 1e-300))

    def _feasible(self, z: np.ndarray, delta: float) -> np.ndarray | None:
        obj = self.objective
        target = delta * obj.n_v
        uniform = np.full(obj.num_coords, target / obj.weights.sum())
        for t in (0.0, 0.25, 0.5, 0.75, 0.9):
            trial = project_slice((1 - t) * z + t * uniform, obj.weights, target, EDGE, 1 - EDGE)
            if math.isfinite(obj.value(trial)):
                return trial
        return None

    def starts(self, delta: float) -> list[tuple[str, np.ndarray]]:
        obj = self.objective
        out = [("uniform", np.full(obj.num_coords, delta * obj.n_v / obj.weights.sum()))]
        below = [d for d in self.pool if d < delta]
        above = [d for d in self.pool if d > delta]
        for d in ([max(below)] if below else []) + ([min(above)] if above else []):
            out.append((f"warm@{d:.6g}", self.pool[d] * (delta / d)))
        rng = np.random.default_rng([self.seed, int(round(delta * 1e9))])
        while len(out) < self.restarts:
            out.append(("random", obj.contract(self._random_x(rng, delta))))
        return out

    def maximize(self, delta: float) -> SpectralPoint:
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        obj = self.objective
        target = delta * obj.n_v
        if target > obj.weights.sum() * (1 - EDGE):
            raise ValueError(f"delta {delta} exceeds the largest reachable weight {self.max_delta:.6g}")
        best = None
        values = []
        for label, z0 in self.starts(delta):
            z0 = self._feasible(np.clip(z0, EDGE, 1 - EDGE), delta)
            if z0 is None:
                values.append(-math.inf)
                continue
            res = newton_ascent(obj, z0, target, max_iter=self.max_iter)
            values.append(res.value)
            if best is None or res.value > best[1].value:
                best = (label, res)
        if best is None:
            log.warning("no feasible start at delta=%g", delta)
            return SpectralPoint(delta, -math.inf, False, len(values), "", values,
                                 np.full(obj.n_v, delta))
        label, res = best
        self.pool[delta] = res.z
        if not res.converged:
            log.info("delta=%g: best restart (%s) did not meet the optimality tolerance", delta, label)
        return SpectralPoint(delta, res.value, res.converged, len(values), label, values,
                             obj.expand(res.z))


@dataclass
class SpectralShape:
    protograph: Protograph
    points: list[SpectralPoint]
    solver: SpectralSolver = field(repr=False)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([pt.delta for pt in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([pt.r for pt in self.points])


def _solver_for(p, restarts, seed) -> SpectralSolver:
    # a CoupledProtograph brings time indices for localized random starts
    realized = getattr(p, "realized", None)
    if realized is None:
        return SpectralSolver(p, restarts, seed)
    period = p.factor if p.kind == "tailbiting" else None
    return SpectralSolver(realized, restarts, seed, times=p.time_of_variable, period=period)


def spectral_shape(p, delta_grid: Sequence[float], restarts: int = 8, seed: int = 0,
                   stop_at_crossing: bool = False, solver: SpectralSolver | None = None) -> SpectralShape:
    """Maximized spectral objective on ``delta_grid``.

    ``p`` is a :class:`Protograph` or a coupled protograph; the latter
    localizes random starts in time.  With ``stop_at_crossing`` the scan
    ends at the first nonnegative value that follows a negative one.
    """
    grid = [float(d) for d in delta_grid]
    if not grid:
        raise ValueError("delta grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("delta grid must be strictly increasing")
    if grid[0] <= 0 or grid[-1] >= 1:
        raise ValueError("delta grid must lie inside (0, 1)")
    solver = solver or _solver_for(p, restarts, seed)
    points = []
    for d in grid:
        if d * solver.objective.n_v > solver.objective.weights.sum() * (1 - EDGE):
            break
        pt = solver.maximize(d)
        points.append(pt)
        if stop_at_crossing and pt.r >= 0 and any(q.r < 0 for q in points[:-1]):
            break
    return SpectralShape(solver.protograph, points, solver)


def delta_grid(step: float = 0.0005, stop: float = 0.9, start: float | None = None) -> np.ndarray:
    """``start, start + step, ...`` up to ``stop`` inclusive; ``start`` defaults to ``step``."""
    start = step if start is None else start
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


# -------------------------------------------------------------- growth rate


@dataclass
class GrowthRateReport:
    design_rate: Fraction
    delta_correction: int
    delta_min: float | None
    asymptotically_good: bool
    shape: SpectralShape
    bracket: tuple[float, float] | None = None
    refinement: list[SpectralPoint] = field(default_factory=list)


def growth_rate(shape: SpectralShape, tol: float = 1e-4, delta_correction: int = 0) -> GrowthRateReport:
    """First sign change of ``r`` from negative to nonnegative, refined by bisection.

    Midpoints are maximized afresh with the shape's solver, so they inherit
    its restarts and warm starts from every point solved so far.
    """
    pts = shape.points
    if not pts:
        raise ValueError("spectral shape has no points")
    R = design_rate(shape.protograph)
    good = pts[0].r < -1e-6
    first = next((i for i, pt in enumerate(pts) if pt.r >= 0), None)
    if first is None:
        return GrowthRateReport(R, delta_correction, None, good, shape)
    if first == 0:
        return GrowthRateReport(R, delta_correction, None, False, shape)
    lo, hi = pts[first - 1].delta, pts[first].delta
    refinement = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        pt = shape.solver.maximize(mid)
        refinement.append(pt)
        if pt.r >= 0:
            hi = mid
        else:
            lo = mid
    return GrowthRateReport(R, delta_correction, 0.5 * (lo + hi), good, shape, (lo, hi), refinement)


def find_growth_rate(p, step: float = 0.01, stop: float = 0.9, tol: float = 1e-4,
                     restarts: int = 8, seed: int = 0) -> GrowthRateReport:
    """Coarse scan that stops at the first crossing, then bisection to ``tol``."""
    shape = spectral_shape(p, delta_grid(step, stop), restarts, seed, stop_at_crossing=True)
    correction = 0
    if getattr(p, "realized", None) is not None:
        from .coupling import delta_correction

        correction = delta_correction(p)
    return growth_rate(shape, tol, correction)


# --------------------------------------------------------- Lagrange cross-check


class _Tilted:
    """Objective minus ``slope * mean(x)``; exposes what the Newton phase needs."""

    def __init__(self, obj: EnsembleObjective, slope: float):
        self.obj = obj
        self.slope = slope
        self.weights = obj.weights
        self.n_v = obj.n_v

    def value_grad_hess(self, z):
        f, g, M = self.obj.value_grad_hess(z)
        lin = self.slope / self.n_v
        return f - lin * float(self.weights @ z), g - lin * self.weights, M


def lagrange_point(p: Protograph, slope: float, z0: np.ndarray | None = None,
                   max_iter: int = 400) -> tuple[float, float]:
    """Maximize ``objective(x) - slope * mean(x)`` over the box with no equality.

    Returns ``(delta, r)`` at the maximizer.  Every such pair lies on the
    concave envelope of the spectral shape, which makes it an independent
    check of the equality-constrained solver where the shape is concave.
    """
    obj = EnsembleObjective(p)
    tilted = _Tilted(obj, slope)
    z = np.full(obj.num_coords, 0.25) if z0 is None else np.clip(z0, EDGE, 1 - EDGE)
    f, g, M = tilted.value_grad_hess(z)
    if not math.isfinite(f):
        raise ValueError("starting point is infeasible")
    z, f, g, M, _, _ = _newton_phase(tilted, z, 0.0, f, g, M, max_iter, 1e-14, constrained=False)
    delta = float(obj.weights @ z) / obj.n_v
    return delta, obj.value(z)
