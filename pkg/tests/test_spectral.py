import math

import numpy as np
import pytest

from scgldpc.coupling import tailbite, terminate
from scgldpc.gf2 import single_parity_check
from scgldpc.protograph import ConstraintNode, Protograph
from scgldpc.spectral import (
    EnsembleObjective,
    SpectralSolver,
    binary_entropy,
    delta_grid,
    growth_rate,
    lagrange_point,
    objective,
    objective_and_gradient,
    project_slice,
    random_coding_crossing,
    random_coding_shape,
    spectral_shape,
)

LN2 = math.log(2)


def spc2_pairs(k=1):
    nodes = tuple(ConstraintNode(single_parity_check(2), (2 * i, 2 * i + 1)) for i in range(k))
    return Protograph(2 * k, nodes)


def test_random_coding_shape():
    assert random_coding_shape(1, 0.5) == pytest.approx(LN2)
    assert random_coding_shape(0, 1e-12) == pytest.approx(-LN2, abs=1e-9)
    assert random_coding_crossing(1 / 7) == pytest.approx(0.281, abs=1e-3)
    assert abs(random_coding_shape(1 / 7, random_coding_crossing(1 / 7))) < 1e-12
    with pytest.raises(ValueError):
        random_coding_shape(0.5, 1.0)


def test_binary_entropy():
    assert binary_entropy(0.5) == pytest.approx(LN2)
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert np.allclose(binary_entropy(np.array([0.1, 0.9])), binary_entropy(0.1))


def test_objective_examples(example):
    block, _ = example
    assert objective(block, np.zeros(7)) == 0.0
    assert objective(block, np.ones(7)) == 0.0
    assert objective(spc2_pairs(), [0.5, 0.5]) == pytest.approx(0.5 * LN2)
    assert objective(block, [0.5] * 7) == pytest.approx(LN2 / 7)
    assert objective(spc2_pairs(), [0.2, 0.3]) == -math.inf


def test_objective_gradient_matches_differences(example):
    block, _ = example
    rng = np.random.default_rng(5)
    x = rng.uniform(0.2, 0.6, 7)
    f, g = objective_and_gradient(block, x)
    for j in range(7):
        e = np.zeros(7)
        e[j] = 1e-6
        fd = (objective(block, x + e) - objective(block, x - e)) / 2e-6
        assert fd == pytest.approx(g[j], abs=1e-6)


def test_internal_objective_matches_public(example):
    _, s = example
    cp = terminate(s, 3)
    obj = EnsembleObjective(cp.realized)
    rng = np.random.default_rng(2)
    for _ in range(5):
        z = rng.uniform(0.2, 0.5, obj.num_coords)
        x = obj.expand(z)
        assert obj.value(z) == pytest.approx(objective(cp.realized, x), abs=1e-10)
        f, g = obj.value_and_grad(z)
        _, gx = objective_and_gradient(cp.realized, x)
        assert np.allclose(g, np.bincount(obj.coord_of_variable, gx, obj.num_coords), atol=1e-8)


def test_ties_collapse_coordinates():
    obj = EnsembleObjective(spc2_pairs(2))
    assert obj.num_coords == 2
    assert obj.weights.tolist() == [2.0, 2.0]


def test_project_slice():
    w = np.array([1.0, 2.0, 1.0])
    y = np.array([0.9, -0.3, 0.4])
    x = project_slice(y, w, 1.0, 0.0, 1.0)
    assert w @ x == pytest.approx(1.0)
    assert (x >= 0).all() and (x <= 1).all()
    with pytest.raises(ValueError):
        project_slice(y, w, 5.0, 0.0, 1.0)


def test_spc2_pairs_closed_form():
    sh = spectral_shape(spc2_pairs(2), [0.05, 0.2, 0.5, 0.8], restarts=8)
    for pt in sh.points:
        assert pt.r == pytest.approx(binary_entropy(pt.delta) / 2, abs=1e-7)
    rep = growth_rate(sh)
    assert rep.delta_min is None and not rep.asymptotically_good


@pytest.fixture(scope="module")
def block_shape(example):
    block, _ = example
    return spectral_shape(block, delta_grid(0.02, 0.5), restarts=8, seed=1)


def test_shape_invariants(example, block_shape):
    block, _ = example
    assert np.all(np.diff(block_shape.deltas) > 0)
    for pt in block_shape.points:
        assert abs(pt.argmax.mean() - pt.delta) <= 1e-9
        assert pt.restarts >= 8
        assert pt.converged
        # the uniform vector is one candidate, so it bounds the maximum from below
        assert objective(block, np.full(7, pt.delta)) <= pt.r + 1e-9


def test_monotone_refinement(example, block_shape):
    block, _ = example
    more = spectral_shape(block, block_shape.deltas, restarts=16, seed=1)
    assert np.all(more.values >= block_shape.values - 1e-7)
    finer = spectral_shape(block, delta_grid(0.01, 0.5), restarts=8, seed=1)
    lookup = dict(zip(np.round(finer.deltas, 12), finer.values))
    for d, r in zip(block_shape.deltas, block_shape.values):
        assert lookup[round(d, 12)] >= r - 1e-7


def test_restart_prefix_is_stable(example):
    block, _ = example
    a = SpectralSolver(block, restarts=8, seed=3).starts(0.1)
    b = SpectralSolver(block, restarts=16, seed=3).starts(0.1)
    for (la, za), (lb, zb) in zip(a, b[:8]):
        assert la == lb and np.array_equal(za, zb)


def test_block_growth_rate_coarse(example, block_shape):
    rep = growth_rate(block_shape, tol=1e-3)
    assert rep.asymptotically_good
    assert rep.delta_min == pytest.approx(0.186, abs=0.003)
    lo, hi = rep.bracket
    assert hi - lo <= 1e-3


def test_lagrange_cross_check(example):
    block, _ = example
    solver = SpectralSolver(block, restarts=8)
    # steeper slopes jump to delta = 0 since the shape is negative near the origin
    for slope in (0.0, 0.1, 0.2, 0.3):
        delta, r = lagrange_point(block, slope)
        assert 0.3 < delta < 0.6
        assert solver.maximize(delta).r == pytest.approx(r, abs=1e-6)


def test_tailbiting_lambda1_matches_block(example):
    block, s = example
    grid = delta_grid(0.05, 0.6)
    a = spectral_shape(block, grid).values
    b = spectral_shape(tailbite(s, 1), grid).values
    assert np.max(np.abs(a - b)) <= 1e-6


def test_grid_validation(example):
    block, _ = example
    with pytest.raises(ValueError):
        spectral_shape(block, [0.2, 0.1])
    with pytest.raises(ValueError):
        spectral_shape(block, [0.0, 0.1])
    with pytest.raises(ValueError):
        spectral_shape(block, [])


def test_delta_grid():
    g = delta_grid(0.0005, 0.9)
    assert g[0] == pytest.approx(0.0005) and g[-1] == pytest.approx(0.9) and len(g) == 1800


def test_forced_zero_variables_removed():
    # a node whose second position is zero in every codeword forces that variable to zero
    from scgldpc.gf2 import ConstraintCode

    code = ConstraintCode(np.array([[0, 0, 0], [1, 0, 1]], dtype=np.uint8))
    p = Protograph(3, (ConstraintNode(code, (0, 1, 2)),))
    obj = EnsembleObjective(p)
    assert obj.forced_zero.tolist() == [False, True, False]
    sh = spectral_shape(p, [0.2, 0.4])
    for pt in sh.points:
        assert pt.argmax[1] == 0.0
        assert pt.argmax.mean() == pytest.approx(pt.delta, abs=1e-9)
