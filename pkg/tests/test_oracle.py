import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scgldpc.enumerators import node_exponent
from scgldpc.gf2 import ConstraintCode, enumerate_codewords, hamming_7_4, single_parity_check
from scgldpc.oracle import (
    OracleSizeError,
    brute_force_average,
    primal_entropy_grid,
    product_formula_average,
)
from scgldpc.protograph import ConstraintNode, Protograph
from scgldpc.spectral import objective

SMALL_CODES = [
    single_parity_check(2),
    single_parity_check(3),
    enumerate_codewords(np.array([[1, 1, 0], [0, 1, 1]])),
    ConstraintCode(np.array([[0, 0, 0], [1, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=np.uint8)),
]


def spc2_node():
    return Protograph(2, (ConstraintNode(single_parity_check(2), (0, 1)),))


def test_brute_force_spc2():
    # x_1 must be x_0 pushed through the two permutations, so each of the two
    # permutation pairs admits both weight-(1,1) vectors of the form (e_i, pi(e_i))
    assert brute_force_average(spc2_node(), 2, (1, 1)) == 2
    assert product_formula_average(spc2_node(), 2, (1, 1)) == 2


def test_zero_and_overweight():
    p = spc2_node()
    assert brute_force_average(p, 3, (0, 0)) == 1
    assert product_formula_average(p, 3, (0, 0)) == 1
    assert brute_force_average(p, 2, (3, 0)) == 0
    assert product_formula_average(p, 2, (3, 0)) == 0


def test_product_formula_spc3():
    p = Protograph(3, (ConstraintNode(single_parity_check(3), (0, 1, 2)),))
    assert product_formula_average(p, 2, (1, 1, 0)) == 2


def test_guards(example):
    block, _ = example
    with pytest.raises(OracleSizeError):
        brute_force_average(block, 2, [0] * 7)
    with pytest.raises(OracleSizeError):
        brute_force_average(spc2_node(), 4, (1, 1))
    with pytest.raises(OracleSizeError):
        product_formula_average(spc2_node(), 65, (1, 1))
    big = ConstraintCode(np.array([[int(b) for b in f"{i:05b}"] for i in range(32)], dtype=np.uint8))
    with pytest.raises(OracleSizeError):
        primal_entropy_grid(big, [0.5] * 5)


@st.composite
def tiny_instances(draw):
    n_v = draw(st.integers(1, 3))
    nodes, edges = [], 0
    for _ in range(draw(st.integers(1, 2))):
        code = draw(st.sampled_from(SMALL_CODES))
        if edges + code.length > 6:
            break
        vs = tuple(draw(st.lists(st.integers(0, n_v - 1), min_size=code.length, max_size=code.length)))
        nodes.append(ConstraintNode(code, vs))
        edges += code.length
    p = Protograph(n_v, tuple(nodes))
    N = draw(st.integers(1, 3 if edges <= 5 else 2))
    d = tuple(draw(st.lists(st.integers(0, N), min_size=n_v, max_size=n_v)))
    return p, N, d


@settings(max_examples=30, deadline=None)
@given(tiny_instances())
def test_product_formula_equals_brute_force(inst):
    p, N, d = inst
    if (p.variable_degrees() == 0).any():
        return
    assert product_formula_average(p, N, d) == brute_force_average(p, N, d)


def test_primal_examples():
    spc3 = single_parity_check(3)
    assert primal_entropy_grid(spc3, [0.5] * 3, 0.01) == pytest.approx(math.log(4), abs=0.02)
    assert primal_entropy_grid(spc3, [0.0] * 3, 0.01) == 0.0
    assert primal_entropy_grid(hamming_7_4(), [0.5] * 7, 0.05) == pytest.approx(math.log(16), abs=0.1)


@pytest.mark.parametrize("code", [single_parity_check(3), hamming_7_4()], ids=["spc3", "hamming"])
def test_primal_matches_dual(code):
    rng = np.random.default_rng(17)
    for _ in range(6):
        tau = rng.dirichlet(np.ones(code.size)) @ code.codewords
        primal = primal_entropy_grid(code, tau, 0.01)
        dual = node_exponent(code, tau).value
        assert primal <= dual + 1e-9
        assert dual - primal <= 0.02


def test_finite_lift_approaches_asymptotic(example):
    block, _ = example
    x = np.array([0.125, 0, 0.125, 0, 0.125, 0, 0.125])
    a = objective(block, x)
    Ns = (8, 16, 32, 64)
    rates = []
    for N in Ns:
        avg = product_formula_average(block, N, np.rint(N * x).astype(int))
        assert isinstance(avg, Fraction)
        rates.append(math.log(avg) / (N * 7))
    scaled = [(r - a) * N / math.log(N) for r, N in zip(rates, Ns)]
    c = max(scaled)
    for r, N in zip(rates, Ns):
        assert r <= a + c * math.log(N) / N + 1e-12
    # the fitted constant describes every N, and the difference shrinks to zero
    assert max(scaled) - min(scaled) < 0.01
    diffs = [abs(r - a) for r in rates]
    assert all(u > v for u, v in zip(diffs, diffs[1:]))
