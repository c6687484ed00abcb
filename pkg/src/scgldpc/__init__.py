"""Weight-spectrum analysis of protograph GLDPC ensembles and their spatially coupled chains."""

from .coupling import EdgeSpreading, spread, tailbite, terminate
from .enumerators import finite_count, node_exponent
from .freedist import FreeDistanceBounds, lower_bound, scan, upper_bound
from .gf2 import ConstraintCode, enumerate_codewords, hamming_7_4, rank, shorten
from .protograph import ConstraintNode, Protograph, design_rate, validate
from .spectral import (
    GrowthRateReport,
    SpectralShape,
    find_growth_rate,
    growth_rate,
    objective,
    random_coding_shape,
    spectral_shape,
)

__all__ = [
    "ConstraintCode", "ConstraintNode", "EdgeSpreading", "FreeDistanceBounds", "GrowthRateReport",
    "Protograph", "SpectralShape", "design_rate", "enumerate_codewords", "find_growth_rate",
    "finite_count", "growth_rate", "hamming_7_4", "lower_bound", "node_exponent", "objective",
    "random_coding_shape", "rank", "scan", "shorten", "spectral_shape", "spread", "tailbite",
    "terminate", "upper_bound", "validate",
]
