"""parasol: a simulation laboratory for a nonlocal 1-D parabolic equation.

Spectral mild-solution solvers on the Dirichlet sine basis, the
solution-dependent time reparameterization between the quasilinear and
semilinear forms, comparison/positivity audits, and pullback-attractor
estimation, all behind one CLI.
"""

__version__ = "0.1.0"

from .basis import (
    Basis,
    SpectralField,
    apply_resolvent_shifted,
    from_values,
    operator_constants,
    semigroup_apply,
    to_values,
)
from .clock import ClockMap, RoundtripReport, build_clock, roundtrip_check, to_quasilinear
from .errors import ConfigError, EnsembleBlowUpError, NonConvergenceError, OrderViolationError
from .ordering import (
    BarrierReport,
    ComparisonReport,
    PositivityReport,
    SandwichScan,
    barrier_check,
    compare_ordered,
    monotone_iterate,
    positivity_check,
    sandwich_scan,
    sandwich_specs,
    shifted_fixed_point,
)
from .attractor import (
    AttractorReport,
    ProcessAxiomsReport,
    absorbing_radius,
    hausdorff_distance,
    process_axioms_check,
    pullback_sweep,
    sample_ball,
)
from .problems import (
    Diffusion,
    Forcing,
    ProblemSpec,
    Reaction,
    SpatialFunctional,
    StructuralCertificate,
    certify_spec,
    check_modulus,
    check_structural,
    default_spec,
    embedding_constant,
    modulus_integral_exact,
    monotonicity_shift,
    phi_closed_form,
    phi_sup,
    solve_phi,
)
from .solver import (
    LocalExistenceCert,
    Trajectory,
    continue_solution,
    forcing_g,
    holder_probe,
    local_existence_certificate,
    march,
    march_ensemble,
    mild_solve,
    picard_solve,
    trajectory_defect,
)
