"""Data re-uploading quantum neural networks: simulation, angle synthesis and training."""
from .errors import (
    ConditionError, ConstraintViolation, DataError, DomainError, InvalidArgument, NumericalDegeneracyError,
    NumericalError,
)
from .fourier import FourierSeries, empirical_spectrum, project, spectrum_spec, truncation_error
from .laurent import LaurentPoly, PolyPair
from .models import CircuitTemplate, build_unitary, evaluate, evaluate_batch, init_params, param_count
from .qsim import Observable, StateVector, cnot_matrix, rot_gate, u3_gate
from .qsp import (
    WZW, YZY, AngleSet, complete, expectation_z, forward, peel, peel_wzw, peel_yzy, synthesize_any,
    synthesize_even,
)
from .training import (
    Dataset, TrainConfig, TrainReport, adam_step, classify_head, fit, grad_parameter_shift, mse_loss, pca_reduce,
)

__version__ = "0.1.0"

__all__ = [
    "AngleSet", "CircuitTemplate", "ConditionError", "ConstraintViolation", "DataError", "Dataset", "DomainError",
    "FourierSeries", "InvalidArgument", "LaurentPoly", "NumericalDegeneracyError", "NumericalError", "Observable",
    "PolyPair", "StateVector", "TrainConfig", "TrainReport", "WZW", "YZY", "adam_step", "build_unitary",
    "classify_head", "cnot_matrix", "complete", "empirical_spectrum", "evaluate", "evaluate_batch",
    "expectation_z", "fit", "forward", "grad_parameter_shift", "init_params", "mse_loss", "param_count",
    "pca_reduce", "peel", "peel_wzw", "peel_yzy", "project", "rot_gate", "spectrum_spec", "synthesize_any",
    "synthesize_even", "truncation_error", "u3_gate",
]
