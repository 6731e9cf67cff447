"""Checked symbolic derivations with an independent numeric cross-check."""

from .errors import DerivkitError
from .expr import Env, eval_expr
from .formula import Theory
from .kernel import CheckResult, check_theory
from .numcheck import SamplePlan, identity_check
from .parser import parse_theories, parse_theory, print_theory
from .theories import build_pool, registry

__version__ = "0.1.0"

__all__ = [
    "DerivkitError", "Env", "eval_expr", "Theory", "CheckResult",
    "check_theory", "SamplePlan", "identity_check", "parse_theories",
    "parse_theory", "print_theory", "build_pool", "registry", "__version__",
]
