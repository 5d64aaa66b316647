"""Moment-based ground-state estimation for quantum spin models.

The package splits into:

* :mod:`qcmoments.pauli`    Pauli-string algebra with symbolic coefficients
* :mod:`qcmoments.models`   Heisenberg-type Hamiltonian/observable builders
* :mod:`qcmoments.states`   statevector/density-matrix engine and exact oracle
* :mod:`qcmoments.moments`  cumulants, fourth-order energy, observable estimator
* :mod:`qcmoments.measure`  Pauli-string census, TPB grouping, shot sampling
* :mod:`qcmoments.cli`      ``qcm`` experiment runner and CSV/JSON output
"""

from .pauli import (
    ParamPoly,
    PauliString,
    PauliSum,
    bind,
    mul_strings,
    sum_multiply,
    sum_power,
)
from .models import (
    LatticeSpec,
    build_staggered_afm,
    build_staggered_magnetisation,
    build_xxz,
    build_zz_correlation,
)
from .states import (
    DensityMatrix,
    HermitianMatrix,
    StateVector,
    depolarize,
    depolarize_global,
    exact_ground_state,
    expectation,
    expectation_table,
    fidelity,
    random_gue_hermitian,
    rotate_trial,
    tune_theta_for_fidelity,
)
from .moments import (
    CumulantSet,
    MomentSet,
    QcmResult,
    compute_moments,
    cumulants,
    lanczos_energy,
    observable_estimate,
    qcm_sweep,
)
from .measure import TpbGroup, census, group_tpb, qubitwise_commutes, sample_shots

__version__ = "0.1.0"

__all__ = [
    "ParamPoly", "PauliString", "PauliSum",
    "bind", "mul_strings", "sum_multiply", "sum_power",
    "LatticeSpec", "build_xxz", "build_zz_correlation",
    "build_staggered_afm", "build_staggered_magnetisation",
    "StateVector", "DensityMatrix", "HermitianMatrix",
    "exact_ground_state", "expectation", "expectation_table",
    "depolarize", "depolarize_global", "fidelity",
    "random_gue_hermitian", "rotate_trial", "tune_theta_for_fidelity",
    "MomentSet", "CumulantSet", "QcmResult",
    "compute_moments", "cumulants", "lanczos_energy",
    "observable_estimate", "qcm_sweep",
    "TpbGroup", "qubitwise_commutes", "group_tpb", "census", "sample_shots",
]
