import pytest

from scgldpc.coupling import spread
from scgldpc.freedist import FreeDistanceBounds, lower_bound, scan, upper_bound
from scgldpc.spectral import find_growth_rate


def test_upper_bound():
    assert upper_bound(0.161, 10, 1) == pytest.approx(0.805)
    assert upper_bound(0.0, 7, 1) == 0.0
    assert upper_bound(0.3, 2, 1) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        upper_bound(0.1, 0, 1)


def test_lower_bound():
    assert lower_bound(0.186, 8, 1) == pytest.approx(0.744)
    assert lower_bound(0.161, 10, 1) == pytest.approx(0.805)
    assert lower_bound(0.0, 3, 1) == 0.0
    with pytest.raises(ValueError):
        lower_bound(0.1, 1, 2)


def test_degenerate_spreading_scan(example):
    block, _ = example
    s0 = spread(block, {(c, p): 0 for c in range(2) for p in range(7)})
    res = scan(block, s0, [0, 1], tolerance=0.01, step=0.02)
    bad, good = res
    assert isinstance(bad, FreeDistanceBounds) and bad.error and bad.lower is None
    block_rate = find_growth_rate(block, step=0.02).delta_min
    assert good.error is None and good.coincide
    assert good.upper == pytest.approx(block_rate, abs=1e-9)
    assert good.lower == pytest.approx(block_rate, abs=1e-9)
    assert good.delta_free == pytest.approx(block_rate, abs=1e-9) and good.half_gap == 0.0


def test_scan_rejects_foreign_spreading(example):
    block, s = example
    s0 = spread(block, {(c, p): 0 for c in range(2) for p in range(7)})
    with pytest.raises(ValueError):
        scan(s0.block, s, [])
