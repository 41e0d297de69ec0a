"""Decision procedure for quantifier-free integer formulas."""

from .core import (
    DEFAULT_LIMITS,
    SAT,
    UNKNOWN,
    UNSAT,
    ModelCheckFailure,
    SolverLimits,
    SolverVerdict,
    check_sat,
    check_valid,
    entails,
    goals,
    nnf,
)

__all__ = [
    "DEFAULT_LIMITS",
    "SAT",
    "UNKNOWN",
    "UNSAT",
    "ModelCheckFailure",
    "SolverLimits",
    "SolverVerdict",
    "check_sat",
    "check_valid",
    "entails",
    "goals",
    "nnf",
]
