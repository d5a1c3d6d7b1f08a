"""Turbo compressed sensing for partial-DFT measurements."""

__version__ = "0.1.0"

from .denoiser import BgPrior, DenoiserOutput, bg_denoise, denoise_vector, mmse_of_snr
from .errors import (DimensionError, InvalidConfigError, InvalidVarianceError,
                     NumericalFailureError, TurboCSError)
from .model import (VAR_MAX, VAR_MIN, GaussianMessage, ProblemInstance, SelectionPattern,
                    SystemConfig, dft, idft, sample_instance, select, select_adjoint)
from .state_evolution import (SeState, SeTrajectory, fixed_point_residual, replica_solution,
                              se_run, se_step)
from .turbo import RunOptions, extrinsic_combine, module_a, module_b, run_turbo

__all__ = [
    "BgPrior", "DenoiserOutput", "bg_denoise", "denoise_vector", "mmse_of_snr",
    "DimensionError", "InvalidConfigError", "InvalidVarianceError", "NumericalFailureError",
    "TurboCSError", "VAR_MAX", "VAR_MIN", "GaussianMessage", "ProblemInstance",
    "SelectionPattern", "SystemConfig", "dft", "idft", "sample_instance", "select",
    "select_adjoint", "SeState", "SeTrajectory", "fixed_point_residual", "replica_solution",
    "se_run", "se_step", "RunOptions", "extrinsic_combine", "module_a", "module_b", "run_turbo",
]
