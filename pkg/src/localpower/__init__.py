"""LocalPower: distributed truncated SVD with local power iterations."""
from ._accel import BACKEND
from .data import Partition, SpectrumSpec, measured_eta, parse_libsvm, partition_uniform, synthetic_spectrum
from .engine import ConvergenceTrace, RunConfig, comm_rounds_to_reach, init_subspace, run
from .linalg_core import gram, qr_orthonormalize, reference_topk, sin_theta_k, spectral_norm, tan_theta_k
from .schedules import SyncSchedule, decay, every_p, gap, oneshot

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConvergenceTrace", "Partition", "RunConfig", "SpectrumSpec", "SyncSchedule",
    "comm_rounds_to_reach", "decay", "every_p", "gap", "gram", "init_subspace", "measured_eta",
    "oneshot", "parse_libsvm", "partition_uniform", "qr_orthonormalize", "reference_topk", "run",
    "sin_theta_k", "spectral_norm", "synthetic_spectrum", "tan_theta_k",
]
