"""Exact and Monte Carlo characteristics of X_{n+1} = a X_n + b eta_{n-1} X_{n-1}."""

__version__ = "0.1.0"

from .core import Params, Roots, ZTable, lambda_roots, state_ratio, validate_params, z_table  # noqa: E402
from .errors import (  # noqa: E402
    Degenerate, DegenerateSample, IndexOutOfRange, ModelError, NoConvergence, NonPositive,
    NoRoot, OutOfRange, SequenceOverflow, TooLarge,
)
from .lyapunov import (  # noqa: E402
    critical_epsilon, gamma, tail_exponent_series, tail_exponent_spectral,
)
from .spectral import lambda_function, perron  # noqa: E402

__all__ = [
    "Params", "Roots", "ZTable", "lambda_roots", "state_ratio", "validate_params", "z_table",
    "Degenerate", "DegenerateSample", "IndexOutOfRange", "ModelError", "NoConvergence",
    "NonPositive", "NoRoot", "OutOfRange", "SequenceOverflow", "TooLarge",
    "critical_epsilon", "gamma", "tail_exponent_series", "tail_exponent_spectral",
    "lambda_function", "perron",
]
