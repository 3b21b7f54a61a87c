"""Bilocal hidden-variable models for the entanglement-swapping network."""
from .certify import (
    CertReport,
    IEValues,
    NoThresholdError,
    check_biloc_inequality,
    compute_IE,
    critical_visibility,
    export_slice,
    find_bilocal_decomposition,
    is_local,
    separable_demo,
)
from .quantum import born_correlations, quantum_point, separable_mix, singlet
from .scenario import (
    DEFAULT_SCENARIO,
    Correlation,
    RelabelOp,
    Scenario,
    SignalingError,
    check_nosignaling,
    conditional_ac,
    mix,
    relabel,
    white_noise,
)
from .strategies import (
    SymmetricParams,
    WeightVector,
    build_symmetric_weights,
    depolarize,
    extract_symmetric_params,
    is_bilocal_weights,
    marginals,
    pc_weights,
    pcbar_weights,
    synthesize,
)

__version__ = "0.1.0"
