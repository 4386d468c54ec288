"""Self-contained dense SDP solver."""
from .ipm import compile_problem, farkas_violation, feasibility, reduce_rows, solve
from .problem import MalformedProblem, SdpProblem, SdpSolution, Settings, Status

__all__ = [
    "MalformedProblem",
    "SdpProblem",
    "SdpSolution",
    "Settings",
    "Status",
    "compile_problem",
    "farkas_violation",
    "feasibility",
    "reduce_rows",
    "solve",
]
