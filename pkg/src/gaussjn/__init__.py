"""Numerical laboratory for oscillation spaces under the Gaussian measure.

The package is organized along the objects it computes with:

- :mod:`gaussjn.kernels`   -- numba/numpy backends for error functions and sums
- :mod:`gaussjn.geometry`  -- cubes, balls, admissibility, Gaussian measure
- :mod:`gaussjn.covering`  -- global coverings by admissible cubes, chains
- :mod:`gaussjn.fields`    -- scalar fields, adaptive quadrature, distributions
- :mod:`gaussjn.jnp`       -- disjoint-family oscillation functionals and fits
- :mod:`gaussjn.hardy`     -- atoms, polymers, dual atoms, pairing bounds
- :mod:`gaussjn.cli`       -- batch driver over JSON configs
"""

from .kernels import BACKEND, HAVE_NUMBA, USE_NUMBA, gauss1d, warmup
from .geometry import (
    Ball,
    Cube,
    comparability_ratio,
    cubes_disjoint,
    gaussian_measure,
    is_admissible,
    lebesgue_measure,
    m_weight,
)
from .covering import (
    Covering,
    MChain,
    RadiusSequence,
    build_covering,
    coverage_report,
    covering_admissibility,
    k_chain,
    radius_sequence,
)
from .fields import (
    DistributionProfile,
    QuadratureError,
    QuadratureSpec,
    ScalarField,
    StepField,
    average_gamma,
    corpus,
    corpus_by_id,
    gauss_average,
    integral_gamma,
    lq_norm,
    make_random_step,
    oscillation,
    tail_profile,
    weak_lp_norm,
)
from .jnp import (
    BmoEstimate,
    CandidateSet,
    JnpEstimate,
    TailFitReport,
    bmo_norm_estimate,
    jn_tail_fit,
    jnp_sum,
    make_candidates,
    max_weight_antichain,
    maximize_jnp,
    maximize_jnp_pool,
    p_limit_scan,
    tail_fit_sweep,
    validate_family,
)
from .hardy import (
    Atom,
    DualAtomReport,
    DualityReport,
    HardyElement,
    Polymer,
    conjugate_exponent,
    dual_atom,
    duality_check,
    hardy_norm_upper,
    holder_check,
    make_atom,
    make_polymer,
    pairing,
    pairing_direct,
    polymer_lp_norm,
    polymer_norm,
    subdivide_atom,
    subdivision_depth,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "USE_NUMBA",
    "gauss1d",
    "warmup",
    "Ball",
    "Cube",
    "comparability_ratio",
    "cubes_disjoint",
    "gaussian_measure",
    "is_admissible",
    "lebesgue_measure",
    "m_weight",
    "Covering",
    "MChain",
    "RadiusSequence",
    "build_covering",
    "coverage_report",
    "covering_admissibility",
    "k_chain",
    "radius_sequence",
    "DistributionProfile",
    "QuadratureError",
    "QuadratureSpec",
    "ScalarField",
    "StepField",
    "average_gamma",
    "corpus",
    "corpus_by_id",
    "gauss_average",
    "integral_gamma",
    "lq_norm",
    "make_random_step",
    "oscillation",
    "tail_profile",
    "weak_lp_norm",
    "BmoEstimate",
    "CandidateSet",
    "JnpEstimate",
    "TailFitReport",
    "bmo_norm_estimate",
    "jn_tail_fit",
    "jnp_sum",
    "make_candidates",
    "max_weight_antichain",
    "maximize_jnp",
    "maximize_jnp_pool",
    "p_limit_scan",
    "tail_fit_sweep",
    "validate_family",
    "Atom",
    "DualAtomReport",
    "DualityReport",
    "HardyElement",
    "Polymer",
    "conjugate_exponent",
    "dual_atom",
    "duality_check",
    "hardy_norm_upper",
    "holder_check",
    "make_atom",
    "make_polymer",
    "pairing",
    "pairing_direct",
    "polymer_lp_norm",
    "polymer_norm",
    "subdivide_atom",
    "subdivision_depth",
    "__version__",
]
