"""Mixed-integer conic programs with generator subadditive dual certificates."""

from .cones import ConeBlock, ConeSpec, free, nonneg, soc, zero, product
from .core import BlockCols, ConicMip, Sense, Solution, Status, Tol
from .duality import (
    CertOrigin,
    DualFeasibilityReport,
    GeneratingSet,
    GeneratorCertificate,
    SweepRow,
    WeakDualityReport,
    alpha_star_from_hull,
    check_complementary_slackness,
    check_dual_feasibility,
    check_weak_duality,
    eval_generator,
    lagrangian_value,
    maximize_lagrangian,
    sample_generators,
    sweep_generator,
)
from .errors import (
    BoxTooSmall,
    ConeDualError,
    EmptyU,
    InfeasiblePoint,
    NodeLimitReached,
    NoStrongDuality,
    OmegaInfeasible,
    SolverFailure,
    VerificationFailed,
)
from .files import FileFormatError, read_problem, write_problem
from .mip import BnbConfig, BnbResult, feasible_rhs, solve_mip, value_function
from .solver import ContinuousProgram, KktReport, solve_continuous, solve_for_dual
from .structure import (
    BlockMip,
    ConicBlock,
    FiberHull,
    PackingVerdict,
    block_reduce,
    build_clustering_instance,
    build_fiber_hull,
    check_packing_bounded,
    eval_generator_blocked,
    hull_minimize,
)

__version__ = "0.1.0"

__all__ = [
    "BlockCols",
    "BlockMip",
    "BnbConfig",
    "BnbResult",
    "BoxTooSmall",
    "CertOrigin",
    "ConeBlock",
    "ConeDualError",
    "ConeSpec",
    "ConicBlock",
    "ConicMip",
    "ContinuousProgram",
    "DualFeasibilityReport",
    "EmptyU",
    "FiberHull",
    "FileFormatError",
    "GeneratingSet",
    "GeneratorCertificate",
    "InfeasiblePoint",
    "KktReport",
    "NodeLimitReached",
    "NoStrongDuality",
    "OmegaInfeasible",
    "PackingVerdict",
    "Sense",
    "Solution",
    "SolverFailure",
    "Status",
    "SweepRow",
    "Tol",
    "VerificationFailed",
    "WeakDualityReport",
    "alpha_star_from_hull",
    "block_reduce",
    "build_clustering_instance",
    "build_fiber_hull",
    "check_complementary_slackness",
    "check_dual_feasibility",
    "check_packing_bounded",
    "check_weak_duality",
    "eval_generator",
    "eval_generator_blocked",
    "feasible_rhs",
    "free",
    "hull_minimize",
    "lagrangian_value",
    "maximize_lagrangian",
    "nonneg",
    "product",
    "read_problem",
    "sample_generators",
    "soc",
    "solve_continuous",
    "solve_for_dual",
    "solve_mip",
    "sweep_generator",
    "value_function",
    "write_problem",
    "zero",
    "__version__",
]
