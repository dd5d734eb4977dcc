"""Koopman operator approximation from snapshot data.

Fit finite-dimensional linear models of nonlinear dynamics by projecting the
composition operator onto a dictionary of observables, with pseudoinverse,
ridge, or prior-anchored Tikhonov solves, spectral prediction, and defect
diagnostics.
"""

from .diagnostics import DiagnosticsReport, claim_gaps, full_report, invariance_defect, projection_check
from .dictionary import BasisFunction, Dictionary, make_standard_dictionary, sample_rbf_centers
from .empirical import (
    EmpiricalGram,
    SnapshotSet,
    build_gram,
    concat_snapshots,
    empirical_norm,
    read_snapshot_csv,
    write_snapshot_csv,
)
from .errors import (
    ConfigurationError,
    CsvFormatError,
    DataValidationError,
    DivergenceError,
    EdmdError,
    InputShapeError,
    MissingOutputError,
    ModelFormatError,
    SingularSystemError,
)
from .fit import fit_koopman
from .solver import (
    RegularizerSpec,
    blockwise_tikhonov,
    koopman_matrix,
    output_weights,
    truncated_pinv,
)
from .spectral import (
    KoopmanModel,
    decompose,
    eigenfunction_values,
    load_model,
    predict,
    predict_trajectory,
    save_model,
)
from .systems import (
    OutputMap,
    ReferenceSystem,
    generate_snapshots,
    random_initial_conditions,
    simulate_trajectory,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BasisFunction",
    "Dictionary",
    "make_standard_dictionary",
    "sample_rbf_centers",
    "SnapshotSet",
    "EmpiricalGram",
    "build_gram",
    "empirical_norm",
    "concat_snapshots",
    "read_snapshot_csv",
    "write_snapshot_csv",
    "RegularizerSpec",
    "koopman_matrix",
    "output_weights",
    "blockwise_tikhonov",
    "truncated_pinv",
    "KoopmanModel",
    "decompose",
    "eigenfunction_values",
    "predict",
    "predict_trajectory",
    "save_model",
    "load_model",
    "fit_koopman",
    "DiagnosticsReport",
    "projection_check",
    "invariance_defect",
    "claim_gaps",
    "full_report",
    "ReferenceSystem",
    "OutputMap",
    "step",
    "simulate_trajectory",
    "generate_snapshots",
    "random_initial_conditions",
    "EdmdError",
    "InputShapeError",
    "DataValidationError",
    "ConfigurationError",
    "MissingOutputError",
    "SingularSystemError",
    "DivergenceError",
    "CsvFormatError",
    "ModelFormatError",
]
