"""A batch type checker for a small dependently typed language."""
from picheck.driver import DriverConfig, check_source, new_context, run
from picheck.environment import CheckError, Context, ErrorClass, Session, StepBudget
from picheck.equal import ensure_pi, ensure_tcon, equate, unify, whnf
from picheck.parser import ParseError, parse_module, parse_term
from picheck.pretty import pretty_module, pretty_term
from picheck.syntax import aeq, fresh, fv, subst, unbind, unbind2
from picheck.typecheck import check_module, check_type, infer_type

__all__ = [
    "CheckError",
    "Context",
    "DriverConfig",
    "ErrorClass",
    "ParseError",
    "Session",
    "StepBudget",
    "aeq",
    "check_module",
    "check_source",
    "check_type",
    "ensure_pi",
    "ensure_tcon",
    "equate",
    "fresh",
    "fv",
    "infer_type",
    "new_context",
    "parse_module",
    "parse_term",
    "pretty_module",
    "pretty_term",
    "run",
    "subst",
    "unbind",
    "unbind2",
    "unify",
    "whnf",
]
