"""Two-spin anisotropic XY quantum Otto engine with counterdiabatic driving."""

__version__ = "0.1.0"

from ._backend import BACKEND, COMPILED  # noqa: E402
from .cycle import CycleParams, CycleReport, run_cycle  # noqa: E402
from .dynamics import PropagatorConfig  # noqa: E402
from .errors import ContractViolation, NumericFailure  # noqa: E402
from .model import BathSpec, DriveSchedule, ModelParams, build_hamiltonian  # noqa: E402

__all__ = [
    "BACKEND", "COMPILED", "BathSpec", "ContractViolation", "CycleParams", "CycleReport",
    "DriveSchedule", "ModelParams", "NumericFailure", "PropagatorConfig", "build_hamiltonian",
    "run_cycle", "__version__",
]
