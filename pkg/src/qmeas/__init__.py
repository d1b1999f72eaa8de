"""Information gain, disturbance and reversibility of quantum measurements.

The three contents are closed-form functions of the singular values of the
measurement operators. The package evaluates them, builds optimal
reversing operations, checks the trade-off relations between them and
cross-checks every closed form against Haar-average oracles.
"""

from .catalog import CatalogFamily, all_families, family, reversal_for
from .errors import (
    DimensionError,
    ImpossibleOutcomeError,
    InvalidMeasurementError,
    ModelError,
    NoSuccessBranchError,
    NotPSDError,
    NumericError,
    QMeasError,
    RangeError,
)
from .info import (
    ErrorModel,
    InfoContents,
    average_operation_fidelity,
    depolarizing_channel,
    disturbance,
    info_contents,
    information_gain,
    operation_fidelity,
    overall_fidelity,
    reversibility,
    reversibility_with_errors,
    uniform_error_model,
)
from .measurement import (
    CanonicalMeasurement,
    Measurement,
    SingularTable,
    canonicalize,
    outcome_probability,
    post_measurement_state,
    random_measurement,
    singular_table,
    validate_completeness,
)
from .oracle import OracleEstimate, mc_average, schur_pair_average
from .reversal import (
    ReversalOperation,
    ReversalSingularTable,
    compose_measurements,
    optimal_reversal,
    optimal_reversal_table,
)
from .tradeoff import (
    InequalityReport,
    VennRegion,
    check_dr,
    check_gd,
    check_gdr,
    check_gr,
    check_lemma1,
    check_lemma2,
    rhs_gap_gdr_vs_gd,
    saturation_conditions,
)

__version__ = "0.1.0"
