"""Robust simultaneous state estimation for families of unstable LTI plants.

The package synthesizes a single observer that estimates the
unmeasured states of every member of a finite plant family within a
certified H-infinity error level (a minimum-error robust simultaneous,
or MERS, estimator), optionally preceded by gap-reducing input/output
compensators that pull the family's members closer in the nu-gap
metric (the gap-reduced, or GR, variant). Closed-loop simulation and
comparison tooling evaluates the designs against per-plant H-infinity
filters.
"""

from .errors import (
    DimensionError,
    DomainError,
    GrmersError,
    NumericError,
    SimulationError,
    SolvabilityError,
    SynthesisError,
    ValidationError,
)
from .kernels import active_backend
from .linalg import (
    SchurForm,
    eigenvalues,
    schur_form,
    singular_values,
    solve_care,
    solve_lyapunov,
)
from .statespace import (
    CompensatorBank,
    ErrorSystem,
    FirstOrderSection,
    PlantSet,
    StateSpaceModel,
    augment_plant,
    augment_plant_set,
    build_error_system,
    error_system,
    frequency_response,
    identity_bank,
    invert_bank,
    realize_bank,
    series,
)
from .norms import NormResult, grid_norm, hinf_norm, make_log_grid, worst_case_gain_matrix
from .nugap import CoprimeFactors, GapResult, max_gap, normalized_rcf, nu_gap
from .lmi import (
    CertificateReport,
    LmiCertificate,
    ObserverLmiProblem,
    solve_observer_lmi,
    synth_hinf_filter,
    verify_certificate,
)
from .ga import GaConfig, GaResult, ga_optimize
from .synthesis import (
    GrcResult,
    MersResult,
    MersSelection,
    decode_grc_banks,
    grc_search,
    mers_synthesis,
    merse_fitness,
    merse_search,
    select_mers,
    worst_plant_index,
)
from .sim import (
    ClosedLoop,
    SimResult,
    SimulationScenario,
    build_grmers_loop,
    build_hinf_loop,
    build_mers_loop,
    compare_estimators,
    design_state_feedback,
    improvement_summary,
    nrmse,
    rms_gain_estimate,
    simulate,
)
from .io import (
    RunConfig,
    load_plant_set,
    plant_set_from_dict,
    plant_set_to_dict,
    save_plant_set,
)
from .statespace import scalar_bank

__version__ = "0.1.0"
