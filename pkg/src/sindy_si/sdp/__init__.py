"""Block-diagonal semidefinite programming: problem format, solver, checks."""

from .backends import CvxpyBackend, InteriorPointBackend, SdpBackend, get_backend
from .ipm import SdpSolution, SolverOptions, SolverStatus, solve
from .problem import LmiBlock, SdpBuilder, SdpProblem, read_sdp, write_sdp
from .verify import Check, VerifyReport, verify

__all__ = [
    "LmiBlock", "SdpBuilder", "SdpProblem", "read_sdp", "write_sdp",
    "SdpSolution", "SolverOptions", "SolverStatus", "solve",
    "Check", "VerifyReport", "verify",
    "SdpBackend", "InteriorPointBackend", "CvxpyBackend", "get_backend",
]
