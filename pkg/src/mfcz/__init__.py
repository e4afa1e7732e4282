"""Multi-frequency Calderon-Zygmund operators on the torus.

Discretized decompositions, sparse domination and A_p weight experiments
on the grid ``{k / M}`` with ``M = 2**K``.
"""

from .czd import CZDecomposition, PropertyReport, mf_czd, verify_czd
from .dyadic import Arc, CubeSet, DyadicInterval, average, maximal_function, stopping_cubes
from .grid import (
    ConfigurationError,
    Grid,
    GridMismatchError,
    SampledFunction,
    Spectrum,
    forward_transform,
    inverse_transform,
    lp_norm,
    make_grid,
    weak_l1_quasinorm,
)
from .mfczo import (
    DiniModulus,
    FrequencySet,
    MultiFrequencyOperator,
    apply,
    apply_truncated,
    build_multiplier_operator,
    dini_norm,
    dini_regularity_probe,
    dirichlet_function,
    kernel_slice,
    random_multiplier_operator,
    random_sign_operator,
)
from .sparse import (
    DominationParams,
    SparseFamily,
    check_domination,
    check_eta_sparse,
    check_mt_pointwise_bound,
    grand_maximal,
    sparse_apply,
    sparse_dominate,
)
from .weights import Weight, ap_characteristic, power_weight, random_ap_weight, rh_characteristic

__version__ = "0.1.0"
