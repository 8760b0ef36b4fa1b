"""interpkit: a workbench for first-order interpretations between finite
algebraic structures."""

from .logic import (
    And,
    App,
    Const,
    Eq,
    Exists,
    FalseF,
    Forall,
    Formula,
    Iff,
    Implies,
    Language,
    Not,
    Or,
    Param,
    ParseError,
    Rel,
    SyntaxClass,
    Term,
    TrueF,
    Var,
    classify,
    free_vars,
    max_param,
    parse,
    prenex,
    print_formula,
    print_term,
    unnest,
)

__all__ = [
    "And",
    "App",
    "Const",
    "Eq",
    "Exists",
    "FalseF",
    "Forall",
    "Formula",
    "Iff",
    "Implies",
    "Language",
    "Not",
    "Or",
    "Param",
    "ParseError",
    "Rel",
    "SyntaxClass",
    "Term",
    "TrueF",
    "Var",
    "classify",
    "free_vars",
    "max_param",
    "parse",
    "prenex",
    "print_formula",
    "print_term",
    "unnest",
]

__version__ = "0.1.0"
