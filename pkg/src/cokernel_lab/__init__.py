"""Cokernels of random matrices over Z/p^d and sandpile groups of random graphs.

Exact limit laws (``universal``), seeded sampling (``models``), Smith forms
(``linalg``), group combinatorics (``groups``) and brute-force cross-checks
(``oracle``).
"""

from .groups import Partition, PGroupType, aut_order, ext_square_order, pgroup, sym_square_order
from .linalg import CokernelClass, ModMatrix, cokernel_class, smith_normal_form
from .models import EntryDistribution, GraphModel, MatrixModel, sample_matrix, spike01, spike_uniform
from .universal import cokernel_limit, cokernel_limit_prob, moment_limit, rank_limit, truncated_product

__version__ = "0.1.0"

__all__ = [
    "CokernelClass",
    "EntryDistribution",
    "GraphModel",
    "MatrixModel",
    "ModMatrix",
    "PGroupType",
    "Partition",
    "aut_order",
    "cokernel_class",
    "cokernel_limit",
    "cokernel_limit_prob",
    "ext_square_order",
    "moment_limit",
    "pgroup",
    "rank_limit",
    "sample_matrix",
    "smith_normal_form",
    "spike01",
    "spike_uniform",
    "sym_square_order",
    "truncated_product",
]
