"""Objective maximum-likelihood tomography for biased measurement schemes."""
__version__ = "0.1.0"

from ._backend import NAME as KERNEL_BACKEND
from .errors import (
    DataModelMismatch,
    DimensionPolicyError,
    GridTooCoarse,
    NonHermitianError,
    PlanError,
    ProbabilityError,
    TomographyError,
)
from .fock import (
    DensityMatrix,
    DimensionPolicy,
    displacement_operator,
    fidelity,
    hermitian_eig,
    inv_sqrt_projected,
)
from .povm import (
    PovmElement,
    Setting,
    TransferFunction,
    build_povm_element,
    build_transfer_function,
    probability,
)
from .simulate import ExperimentPlan, MeasurementRecord, expected_counts, simulate_counts
from .mle import ReconstructionConfig, ReconstructionResult, em_reconstruct, extremal_residual, log_likelihood, r_operator
from .fisher import VarianceTable, fisher_information, variance_table

__all__ = [
    "KERNEL_BACKEND",
    "DataModelMismatch", "DimensionPolicyError", "GridTooCoarse", "NonHermitianError",
    "PlanError", "ProbabilityError", "TomographyError",
    "DensityMatrix", "DimensionPolicy", "displacement_operator", "fidelity", "hermitian_eig",
    "inv_sqrt_projected",
    "PovmElement", "Setting", "TransferFunction", "build_povm_element", "build_transfer_function",
    "probability",
    "ExperimentPlan", "MeasurementRecord", "expected_counts", "simulate_counts",
    "ReconstructionConfig", "ReconstructionResult", "em_reconstruct", "extremal_residual",
    "log_likelihood", "r_operator",
    "VarianceTable", "fisher_information", "variance_table",
]
