"""Branch-norm statistics for no-collapse repeated measurements.

Enumerates the branches of N repeated runs, applies perception kernels under
per-run and end-only observation, and checks which statistics each produces.
"""

from .branching import (
    BranchEnumeration,
    ConcentrationReport,
    concentration_analysis,
    dominant_branch,
    enumerate_branches,
    stirling_log_binomial,
)
from .consistency import CandidateLaw, ConsistencyReport, scan_power_laws, test_consistency
from .core import (
    BranchRecord,
    ComplexVector,
    ExperimentSpec,
    branch_log_weight,
    make_spec,
    unitary_audit,
)
from .kernels import BORN, CUBIC, PerceptionKernel, kernel_select, polynomial, validate
from .protocols import (
    ProtocolResult,
    ScatteringConfig,
    compare_protocols,
    run_end_only,
    run_per_run,
    simulate_waiting_times,
)

__version__ = "0.1.0"

__all__ = [
    "BORN",
    "CUBIC",
    "BranchEnumeration",
    "BranchRecord",
    "CandidateLaw",
    "ComplexVector",
    "ConcentrationReport",
    "ConsistencyReport",
    "ExperimentSpec",
    "PerceptionKernel",
    "ProtocolResult",
    "ScatteringConfig",
    "branch_log_weight",
    "compare_protocols",
    "concentration_analysis",
    "dominant_branch",
    "enumerate_branches",
    "kernel_select",
    "make_spec",
    "polynomial",
    "run_end_only",
    "run_per_run",
    "scan_power_laws",
    "simulate_waiting_times",
    "stirling_log_binomial",
    "test_consistency",
    "unitary_audit",
    "validate",
]
