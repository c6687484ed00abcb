from fractions import Fraction

import numpy as np
import pytest

from scgldpc.gf2 import hamming_7_4, single_parity_check
from scgldpc.protograph import ConstraintNode, Protograph, ProtographError, design_rate, rate_correction, validate


def test_block_example(example):
    block, _ = example
    diag = validate(block)
    assert np.array_equal(block.base_matrix, np.ones((2, 7), dtype=int))
    assert diag["variable_degrees"] == [2] * 7
    assert diag["constraint_degrees"] == [7, 7]
    assert design_rate(block) == Fraction(1, 7)


def test_duplicate_position_rejected():
    with pytest.raises(ProtographError):
        ConstraintNode.from_sockets(single_parity_check(3), [(0, 0), (0, 1), (2, 2)])


def test_empty_variable_list_rejected():
    with pytest.raises(ProtographError):
        validate(Protograph(0, ()))


def test_zero_degree_variable_named():
    p = Protograph(4, (ConstraintNode(single_parity_check(3), (0, 1, 2)),))
    with pytest.raises(ProtographError) as err:
        validate(p)
    assert any("variable 3" in m for m in err.value.problems)


def test_socket_count_must_match_code_length():
    node = ConstraintNode(single_parity_check(3), (0, 1))
    with pytest.raises(ProtographError):
        validate(Protograph(2, (node,)))


def test_spc3_rate():
    p = Protograph(3, (ConstraintNode(single_parity_check(3), (0, 1, 2)),))
    assert design_rate(p) == Fraction(2, 3)


def test_missing_sockets_shorten():
    node = ConstraintNode.from_sockets(hamming_7_4(), [(4, 0), (5, 1), (6, 2)])
    assert node.code.length == 3 and node.code.dimension == 1
    assert node.variables == (0, 1, 2)


def test_parallel_edges_and_sums():
    p = Protograph(2, (ConstraintNode(single_parity_check(3), (0, 0, 1)),
                       ConstraintNode(single_parity_check(2), (1, 0))))
    assert p.base_matrix.tolist() == [[2, 1], [1, 1]]
    assert p.base_matrix.sum(axis=0).tolist() == p.variable_degrees().tolist()
    assert p.base_matrix.sum(axis=1).tolist() == [n.degree for n in p.constraints]
    assert p.num_edges == 5


def test_rate_correction():
    short = ConstraintNode.from_sockets(hamming_7_4(), [(4, 0), (5, 1), (6, 2)])
    p = Protograph(3, (short,))
    assert rate_correction(p, 3) == 1
