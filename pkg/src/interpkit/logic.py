"""First-order syntax: languages, terms, formulas, parsing and printing,
unnesting, prenex normal form, and quantifier-complexity classification.

Formulas are immutable trees built from a small set of node types.  And / Or
are n-ary and flatten themselves on construction, so `a & b & c` parses to a
single three-part conjunction no matter how it was grouped.  The concrete
syntax round-trips: `parse(print_formula(f), lang) == f` for every formula
over a declared language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import ClassVar, Iterable, Mapping, Sequence, Union


# ---------------------------------------------------------------------------
# Languages


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:#[0-9]+)?\Z")
_NUMBER_RE = re.compile(r"[0-9]+\Z")

KEYWORDS = {"forall", "exists", "true", "false"}


@dataclass
class Language:
    """A finite first-order signature.

    Constant names may be ordinary identifiers or numerals (so rings can
    declare `0` and `1`).  Function and relation names are identifiers with
    arity at least 1.  All names must be distinct across the three kinds.
    """

    name: str
    constants: tuple[str, ...] = ()
    functions: dict[str, int] = field(default_factory=dict)
    relations: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.constants = tuple(self.constants)
        seen: set[str] = set()
        for c in self.constants:
            if not (_IDENT_RE.match(c) or _NUMBER_RE.match(c)) or c in KEYWORDS:
                raise ValueError(f"bad constant name {c!r}")
            if c in seen:
                raise ValueError(f"duplicate symbol {c!r}")
            seen.add(c)
        for kind, table in (("function", self.functions), ("relation", self.relations)):
            for sym, arity in table.items():
                if not _IDENT_RE.match(sym) or sym in KEYWORDS:
                    raise ValueError(f"bad {kind} name {sym!r}")
                if sym in seen:
                    raise ValueError(f"duplicate symbol {sym!r}")
                if arity < 1:
                    raise ValueError(f"{kind} {sym!r} must have arity >= 1")
                seen.add(sym)

    def symbol_kind(self, name: str) -> str | None:
        if name in self.constants:
            return "const"
        if name in self.functions:
            return "func"
        if name in self.relations:
            return "rel"
        return None

    def validate(self, f: "Formula") -> None:
        """Check that every symbol in `f` is declared with the right arity."""
        for t in _terms_of(f):
            _validate_term(self, t)
        for sub in _walk(f):
            if isinstance(sub, Rel):
                if sub.name not in self.relations:
                    raise ValueError(f"unknown relation {sub.name!r}")
                want = self.relations[sub.name]
                if len(sub.args) != want:
                    raise ValueError(
                        f"relation {sub.name!r} expects {want} arguments, got {len(sub.args)}"
                    )


def _validate_term(lang: Language, t: "Term") -> None:
    if isinstance(t, Const):
        if t.name not in lang.constants:
            raise ValueError(f"unknown constant {t.name!r}")
    elif isinstance(t, App):
        if t.func not in lang.functions:
            raise ValueError(f"unknown function {t.func!r}")
        want = lang.functions[t.func]
        if len(t.args) != want:
            raise ValueError(
                f"function {t.func!r} expects {want} arguments, got {len(t.args)}"
            )
        for a in t.args:
            _validate_term(lang, a)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class App:
    func: str
    args: tuple["Term", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Param:
    """Placeholder for the i-th parameter of a code or descriptor, 1-based."""

    index: int

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("parameter indices start at 1")


Term = Union[Var, Const, App, Param]


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]

    def __post_init__(self) -> None:
        flat: list[Formula] = []
        for p in self.parts:
            if isinstance(p, And):
                flat.extend(p.parts)
            else:
                flat.append(p)
        object.__setattr__(self, "parts", tuple(flat))


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]

    def __post_init__(self) -> None:
        flat: list[Formula] = []
        for p in self.parts:
            if isinstance(p, Or):
                flat.extend(p.parts)
            else:
                flat.append(p)
        object.__setattr__(self, "parts", tuple(flat))


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


Formula = Union[
    Eq, Rel, Not, And, Or, Implies, Iff, Exists, Forall, TrueF, FalseF
]

TRUE = TrueF()
FALSE = FalseF()


def conj(parts: Iterable[Formula]) -> Formula:
    """Conjunction with unit folding: drops `true`, collapses to `false`."""
    kept: list[Formula] = []
    for p in parts:
        if isinstance(p, TrueF):
            continue
        if isinstance(p, FalseF):
            return FALSE
        kept.append(p)
    if not kept:
        return TRUE
    if len(kept) == 1:
        return kept[0]
    return And(tuple(kept))


def disj(parts: Iterable[Formula]) -> Formula:
    """Disjunction with unit folding: drops `false`, collapses to `true`."""
    kept: list[Formula] = []
    for p in parts:
        if isinstance(p, FalseF):
            continue
        if isinstance(p, TrueF):
            return TRUE
        kept.append(p)
    if not kept:
        return FALSE
    if len(kept) == 1:
        return kept[0]
    return Or(tuple(kept))


def tuple_var(slot: int, coord: int) -> str:
    """Conventional name for coordinate `coord` of tuple variable `slot`.

    Both indices are 1-based: slot 2, coordinate 3 is `x2_3`.
    """
    return f"x{slot}_{coord}"


def tuple_vars(slot: int, dim: int) -> list[str]:
    return [tuple_var(slot, i) for i in range(1, dim + 1)]


# ---------------------------------------------------------------------------
# Walking, free variables, substitution


def _walk(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from _walk(f.body)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from _walk(p)
    elif isinstance(f, (Implies, Iff)):
        yield from _walk(f.lhs)
        yield from _walk(f.rhs)
    elif isinstance(f, (Exists, Forall)):
        yield from _walk(f.body)


def _terms_of(f: Formula):
    for sub in _walk(f):
        if isinstance(sub, Eq):
            yield sub.lhs
            yield sub.rhs
        elif isinstance(sub, Rel):
            yield from sub.args


def _term_vars(t: Term, out: dict[str, None]) -> None:
    if isinstance(t, Var):
        out.setdefault(t.name)
    elif isinstance(t, App):
        for a in t.args:
            _term_vars(a, out)


def free_vars(f: Formula) -> list[str]:
    """Free variables of `f` in order of first occurrence, left to right."""
    out: dict[str, None] = {}

    def go(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, Eq):
            found: dict[str, None] = {}
            _term_vars(g.lhs, found)
            _term_vars(g.rhs, found)
            for v in found:
                if v not in bound:
                    out.setdefault(v)
        elif isinstance(g, Rel):
            found = {}
            for a in g.args:
                _term_vars(a, found)
            for v in found:
                if v not in bound:
                    out.setdefault(v)
        elif isinstance(g, Not):
            go(g.body, bound)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                go(p, bound)
        elif isinstance(g, (Implies, Iff)):
            go(g.lhs, bound)
            go(g.rhs, bound)
        elif isinstance(g, (Exists, Forall)):
            go(g.body, bound | {g.var})

    go(f, frozenset())
    return list(out)


def all_var_names(f: Formula) -> set[str]:
    """Every variable name occurring in `f`, free or bound."""
    out: dict[str, None] = {}
    for t in _terms_of(f):
        _term_vars(t, out)
    for sub in _walk(f):
        if isinstance(sub, (Exists, Forall)):
            out.setdefault(sub.var)
    return set(out)


def max_param(f: Formula) -> int:
    """Largest parameter index used in `f`, 0 if none."""
    best = 0

    def go(t: Term) -> None:
        nonlocal best
        if isinstance(t, Param):
            best = max(best, t.index)
        elif isinstance(t, App):
            for a in t.args:
                go(a)

    for t in _terms_of(f):
        go(t)
    return best


def _subst_term(t: Term, vmap: Mapping[str, Term], pmap: Mapping[int, Term]) -> Term:
    if isinstance(t, Var):
        return vmap.get(t.name, t)
    if isinstance(t, Param):
        return pmap.get(t.index, t)
    if isinstance(t, App):
        return App(t.func, tuple(_subst_term(a, vmap, pmap) for a in t.args))
    return t


def _replacement_vars(vmap: Mapping[str, Term], pmap: Mapping[int, Term]) -> set[str]:
    found: dict[str, None] = {}
    for t in vmap.values():
        _term_vars(t, found)
    for t in pmap.values():
        _term_vars(t, found)
    return set(found)


def _subst(
    f: Formula,
    vmap: Mapping[str, Term],
    pmap: Mapping[int, Term],
    fresh: "FreshNames",
) -> Formula:
    if isinstance(f, Eq):
        return Eq(_subst_term(f.lhs, vmap, pmap), _subst_term(f.rhs, vmap, pmap))
    if isinstance(f, Rel):
        return Rel(f.name, tuple(_subst_term(a, vmap, pmap) for a in f.args))
    if isinstance(f, Not):
        return Not(_subst(f.body, vmap, pmap, fresh))
    if isinstance(f, And):
        return conj(_subst(p, vmap, pmap, fresh) for p in f.parts)
    if isinstance(f, Or):
        return disj(_subst(p, vmap, pmap, fresh) for p in f.parts)
    if isinstance(f, Implies):
        return Implies(_subst(f.lhs, vmap, pmap, fresh), _subst(f.rhs, vmap, pmap, fresh))
    if isinstance(f, Iff):
        return Iff(_subst(f.lhs, vmap, pmap, fresh), _subst(f.rhs, vmap, pmap, fresh))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in vmap.items() if k != f.var}
        var = f.var
        body = f.body
        if inner or pmap:
            clashes = _replacement_vars(inner, pmap)
            if var in clashes:
                var = fresh.make(f.var)
                body = _subst(body, {f.var: Var(var)}, {}, fresh)
        body = _subst(body, inner, pmap, fresh)
        return Exists(var, body) if isinstance(f, Exists) else Forall(var, body)
    return f


class FreshNames:
    """Fresh-variable supply for one transformation call.

    New names carry a `#k` suffix; the counter starts past every suffix
    already present in the seed formulas, so freshness is global within the
    call even across repeated substitutions.
    """

    def __init__(self, *seeds: Formula):
        top = 0
        for f in seeds:
            for name in all_var_names(f):
                if "#" in name:
                    top = max(top, int(name.rsplit("#", 1)[1]))
        self.counter = top

    def make(self, base: str) -> str:
        self.counter += 1
        stem = base.split("#", 1)[0]
        return f"{stem}#{self.counter}"


def subst_vars(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Capture-avoiding substitution of terms for free variables."""
    if not mapping:
        return f
    fresh = FreshNames(f)
    return _subst(f, dict(mapping), {}, fresh)


def subst_params(f: Formula, mapping: Mapping[int, Term]) -> Formula:
    """Capture-avoiding substitution of terms for parameter placeholders."""
    if not mapping:
        return f
    fresh = FreshNames(f)
    return _subst(f, {}, dict(mapping), fresh)


def params_to_vars(f: Formula, names: Sequence[str]) -> Formula:
    """Replace parameter `$i` with a variable named `names[i-1]`."""
    return subst_params(f, {i + 1: Var(n) for i, n in enumerate(names)})


# ---------------------------------------------------------------------------
# Parsing


class ParseError(ValueError):
    """Raised on malformed input; `pos` is a character offset into the text."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*(?:\#[0-9]+)?)
  | (?P<NUMBER>[0-9]+)
  | (?P<PARAM>\$[0-9]+)
  | (?P<IFF><->)
  | (?P<IMPLIES>->)
  | (?P<OP>[=!&|(),.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup or ""
        value = m.group()
        if kind == "IDENT" and value in KEYWORDS:
            kind = value.upper()
        elif kind == "OP":
            kind = value
        if kind != "WS":
            tokens.append(_Token(kind, value, pos))
        pos = m.end()
    tokens.append(_Token("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, lang: Language):
        self.tokens = _tokenize(text)
        self.lang = lang
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {what}", tok.pos)
        return self.next()

    # Precedence, loosest first: quantifiers, <->, ->, |, &, !.
    def formula(self) -> Formula:
        left = self.implies()
        while self.peek().kind == "IFF":
            self.next()
            left = Iff(left, self.implies())
        return left

    def implies(self) -> Formula:
        left = self.or_()
        if self.peek().kind == "IMPLIES":
            self.next()
            return Implies(left, self.implies())
        return left

    def or_(self) -> Formula:
        parts = [self.and_()]
        while self.peek().kind == "|":
            self.next()
            parts.append(self.and_())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_(self) -> Formula:
        parts = [self.not_()]
        while self.peek().kind == "&":
            self.next()
            parts.append(self.not_())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def not_(self) -> Formula:
        if self.peek().kind == "!":
            self.next()
            return Not(self.not_())
        return self.base()

    def base(self) -> Formula:
        tok = self.peek()
        if tok.kind in ("FORALL", "EXISTS"):
            self.next()
            var = self.expect("IDENT", "a variable name after the quantifier")
            if self.lang.symbol_kind(var.value) is not None:
                raise ParseError(
                    f"{var.value!r} is a declared symbol and cannot be bound", var.pos
                )
            self.expect(".", "'.' after the quantified variable")
            body = self.formula()
            return (Exists if tok.kind == "EXISTS" else Forall)(var.value, body)
        if tok.kind == "TRUE":
            self.next()
            return TRUE
        if tok.kind == "FALSE":
            self.next()
            return FALSE
        if tok.kind == "(":
            self.next()
            inner = self.formula()
            self.expect(")", "')'")
            return inner
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.kind == "IDENT" and tok.value in self.lang.relations:
            self.next()
            args = self.app_args(tok, self.lang.relations[tok.value], "relation")
            return Rel(tok.value, tuple(args))
        lhs = self.term()
        self.expect("=", "'=' after a term")
        rhs = self.term()
        return Eq(lhs, rhs)

    def app_args(self, head: _Token, arity: int, kind: str) -> list[Term]:
        self.expect("(", f"'(' after {kind} {head.value!r}")
        args = [self.term()]
        while self.peek().kind == ",":
            self.next()
            args.append(self.term())
        self.expect(")", "')'")
        if len(args) != arity:
            raise ParseError(
                f"{kind} {head.value!r} expects {arity} arguments, got {len(args)}",
                head.pos,
            )
        return args

    def term(self) -> Term:
        tok = self.next()
        if tok.kind == "PARAM":
            index = int(tok.value[1:])
            if index < 1:
                raise ParseError("parameter indices start at 1", tok.pos)
            return Param(index)
        if tok.kind == "NUMBER":
            if tok.value in self.lang.constants:
                return Const(tok.value)
            raise ParseError(f"unknown symbol {tok.value!r}", tok.pos)
        if tok.kind == "IDENT":
            name = tok.value
            if name in self.lang.functions:
                args = self.app_args(tok, self.lang.functions[name], "function")
                return App(name, tuple(args))
            if name in self.lang.relations:
                raise ParseError(
                    f"relation {name!r} cannot appear inside a term", tok.pos
                )
            if self.peek().kind == "(":
                raise ParseError(f"unknown symbol {name!r}", tok.pos)
            if name in self.lang.constants:
                return Const(name)
            return Var(name)
        raise ParseError("expected a term", tok.pos)


def parse(text: str, lang: Language) -> Formula:
    """Parse `text` as a formula over `lang`.

    Raises ParseError with a character position on lexical errors, unknown
    symbols, and arity mismatches.
    """
    p = _Parser(text, lang)
    f = p.formula()
    tok = p.peek()
    if tok.kind != "EOF":
        raise ParseError(f"unexpected {tok.value!r} after formula", tok.pos)
    return f


def parse_term(text: str, lang: Language) -> Term:
    p = _Parser(text, lang)
    t = p.term()
    tok = p.peek()
    if tok.kind != "EOF":
        raise ParseError(f"unexpected {tok.value!r} after term", tok.pos)
    return t


# ---------------------------------------------------------------------------
# Printing


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Param):
        return f"${t.index}"
    if isinstance(t, App):
        return f"{t.func}({', '.join(print_term(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


_LEVEL_IFF = 1
_LEVEL_IMPLIES = 2
_LEVEL_OR = 3
_LEVEL_AND = 4
_LEVEL_ATOM = 6


def _print(f: Formula, floor: int) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Eq):
        return f"{print_term(f.lhs)} = {print_term(f.rhs)}"
    if isinstance(f, Rel):
        return f"{f.name}({', '.join(print_term(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"!({_print(f.body, 0)})"
    if isinstance(f, (Exists, Forall)):
        word = "exists" if isinstance(f, Exists) else "forall"
        text = f"{word} {f.var}. {_print(f.body, 0)}"
        return f"({text})" if floor > 0 else text
    if isinstance(f, And):
        text = " & ".join(_print(p, _LEVEL_AND + 1) for p in f.parts)
        return f"({text})" if floor > _LEVEL_AND else text
    if isinstance(f, Or):
        text = " | ".join(_print(p, _LEVEL_OR + 1) for p in f.parts)
        return f"({text})" if floor > _LEVEL_OR else text
    if isinstance(f, Implies):
        text = f"{_print(f.lhs, _LEVEL_IMPLIES + 1)} -> {_print(f.rhs, _LEVEL_IMPLIES)}"
        return f"({text})" if floor > _LEVEL_IMPLIES else text
    if isinstance(f, Iff):
        text = f"{_print(f.lhs, _LEVEL_IFF)} <-> {_print(f.rhs, _LEVEL_IFF + 1)}"
        return f"({text})" if floor > _LEVEL_IFF else text
    raise TypeError(f"not a formula: {f!r}")


def print_formula(f: Formula) -> str:
    return _print(f, 0)


# ---------------------------------------------------------------------------
# Unnesting


def _flatten_term(t: Term, fresh: FreshNames, defs: list[tuple[str, Formula]]) -> Term:
    """Reduce `t` to a variable, constant, or parameter leaf.

    Composite subterms get fresh variables; `defs` collects their defining
    atoms in dependency order.
    """
    if isinstance(t, (Var, Param)):
        return t
    if isinstance(t, Const):
        v = fresh.make("t")
        defs.append((v, Eq(Var(v), t)))
        return Var(v)
    if isinstance(t, App):
        args = [_leaf_arg(a, fresh, defs) for a in t.args]
        v = fresh.make("t")
        defs.append((v, Eq(App(t.func, tuple(args)), Var(v))))
        return Var(v)
    raise TypeError(f"not a term: {t!r}")


def _leaf_arg(t: Term, fresh: FreshNames, defs: list[tuple[str, Formula]]) -> Term:
    if isinstance(t, (Var, Param)):
        return t
    return _flatten_term(t, fresh, defs)


def _wrap_defs(defs: list[tuple[str, Formula]], core: Formula) -> Formula:
    body = conj([d for _, d in defs] + [core])
    for v, _ in reversed(defs):
        body = Exists(v, body)
    return body


def _unnest_atom(f: Formula, fresh: FreshNames) -> Formula:
    defs: list[tuple[str, Formula]] = []
    if isinstance(f, Rel):
        args = [_leaf_arg(a, fresh, defs) for a in f.args]
        return _wrap_defs(defs, Rel(f.name, tuple(args)))
    assert isinstance(f, Eq)
    lhs, rhs = f.lhs, f.rhs
    # Put the application on the left of a function atom, the constant on
    # the right of a variable-constant atom.
    if isinstance(rhs, App) and not isinstance(lhs, App):
        lhs, rhs = rhs, lhs
    if isinstance(lhs, Const) and not isinstance(rhs, Const):
        lhs, rhs = rhs, lhs
    if isinstance(lhs, App):
        args = [_leaf_arg(a, fresh, defs) for a in lhs.args]
        out = rhs if isinstance(rhs, (Var, Param)) else _flatten_term(rhs, fresh, defs)
        return _wrap_defs(defs, Eq(App(lhs.func, tuple(args)), out))
    if isinstance(lhs, (Var, Param)) and isinstance(rhs, (Var, Param, Const)):
        return f if (lhs, rhs) == (f.lhs, f.rhs) else Eq(lhs, rhs)
    # Only constants on both sides reach here: name the left one.
    left = _flatten_term(lhs, fresh, defs)
    return _wrap_defs(defs, Eq(left, rhs))


def _unnest(f: Formula, fresh: FreshNames) -> Formula:
    if isinstance(f, (Eq, Rel)):
        return _unnest_atom(f, fresh)
    if isinstance(f, Not):
        return Not(_unnest(f.body, fresh))
    if isinstance(f, And):
        return conj(_unnest(p, fresh) for p in f.parts)
    if isinstance(f, Or):
        return disj(_unnest(p, fresh) for p in f.parts)
    if isinstance(f, Implies):
        return Implies(_unnest(f.lhs, fresh), _unnest(f.rhs, fresh))
    if isinstance(f, Iff):
        return Iff(_unnest(f.lhs, fresh), _unnest(f.rhs, fresh))
    if isinstance(f, Exists):
        return Exists(f.var, _unnest(f.body, fresh))
    if isinstance(f, Forall):
        return Forall(f.var, _unnest(f.body, fresh))
    return f


def unnest(f: Formula) -> Formula:
    """Flatten every atom to one of the basic shapes.

    After unnesting, atoms are `R(v1, .., vn)`, `f(v1, .., vn) = v0`,
    `v = w`, or `v = c`, where the `v`s are variables (or parameter
    placeholders) and `c` is a constant.  Composite arguments are pulled out
    through fresh existentially bound variables, so the result is equivalent
    over every structure.
    """
    return _unnest(f, FreshNames(f))


def is_unnested(f: Formula) -> bool:
    def leaf(t: Term) -> bool:
        return isinstance(t, (Var, Param))

    for sub in _walk(f):
        if isinstance(sub, Rel):
            if not all(leaf(a) for a in sub.args):
                return False
        elif isinstance(sub, Eq):
            lhs, rhs = sub.lhs, sub.rhs
            if isinstance(lhs, App):
                if not (all(leaf(a) for a in lhs.args) and leaf(rhs)):
                    return False
            elif not (leaf(lhs) and (leaf(rhs) or isinstance(rhs, Const))):
                return False
    return True


# ---------------------------------------------------------------------------
# Prenex normal form


def eliminate_implications(f: Formula) -> Formula:
    """Rewrite `->` and `<->` in terms of `!`, `&`, `|`; nothing else moves."""
    if isinstance(f, Not):
        return Not(eliminate_implications(f.body))
    if isinstance(f, And):
        return And(tuple(eliminate_implications(p) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(eliminate_implications(p) for p in f.parts))
    if isinstance(f, Implies):
        return Or((Not(eliminate_implications(f.lhs)), eliminate_implications(f.rhs)))
    if isinstance(f, Iff):
        a = eliminate_implications(f.lhs)
        b = eliminate_implications(f.rhs)
        return And((Or((Not(a), b)), Or((Not(b), a))))
    if isinstance(f, Exists):
        return Exists(f.var, eliminate_implications(f.body))
    if isinstance(f, Forall):
        return Forall(f.var, eliminate_implications(f.body))
    return f


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, TrueF):
        return FALSE if neg else TRUE
    if isinstance(f, FalseF):
        return TRUE if neg else FALSE
    if isinstance(f, (Eq, Rel)):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.body, not neg)
    if isinstance(f, And):
        if neg:
            return disj(_nnf(p, True) for p in f.parts)
        return conj(_nnf(p, False) for p in f.parts)
    if isinstance(f, Or):
        if neg:
            return conj(_nnf(p, True) for p in f.parts)
        return disj(_nnf(p, False) for p in f.parts)
    if isinstance(f, Implies):
        if neg:
            return conj([_nnf(f.lhs, False), _nnf(f.rhs, True)])
        return disj([_nnf(f.lhs, True), _nnf(f.rhs, False)])
    if isinstance(f, Iff):
        a, b = f.lhs, f.rhs
        if neg:
            return disj(
                [
                    conj([_nnf(a, False), _nnf(b, True)]),
                    conj([_nnf(a, True), _nnf(b, False)]),
                ]
            )
        return disj(
            [
                conj([_nnf(a, False), _nnf(b, False)]),
                conj([_nnf(a, True), _nnf(b, True)]),
            ]
        )
    if isinstance(f, Exists):
        body = _nnf(f.body, neg)
        return Forall(f.var, body) if neg else Exists(f.var, body)
    if isinstance(f, Forall):
        body = _nnf(f.body, neg)
        return Exists(f.var, body) if neg else Forall(f.var, body)
    raise TypeError(f"not a formula: {f!r}")


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form (of `!f` when `negate` is set).

    Implications and equivalences are expanded and negations pushed down to
    the atoms; quantifiers and variable names are untouched.
    """
    return _nnf(f, negate)


def _rename_apart(f: Formula, used: set[str], fresh: FreshNames) -> Formula:
    if isinstance(f, (Exists, Forall)):
        var, body = f.var, f.body
        if var in used:
            var = fresh.make(f.var)
            body = subst_vars(body, {f.var: Var(var)})
        used.add(var)
        body = _rename_apart(body, used, fresh)
        return Exists(var, body) if isinstance(f, Exists) else Forall(var, body)
    if isinstance(f, Not):
        return Not(_rename_apart(f.body, used, fresh))
    if isinstance(f, And):
        return conj(_rename_apart(p, used, fresh) for p in f.parts)
    if isinstance(f, Or):
        return disj(_rename_apart(p, used, fresh) for p in f.parts)
    return f


def _pull(f: Formula) -> tuple[list[tuple[str, str]], Formula]:
    if isinstance(f, Exists):
        prefix, matrix = _pull(f.body)
        return [("exists", f.var)] + prefix, matrix
    if isinstance(f, Forall):
        prefix, matrix = _pull(f.body)
        return [("forall", f.var)] + prefix, matrix
    if isinstance(f, And):
        prefix = []
        matrices = []
        for p in f.parts:
            pre, m = _pull(p)
            prefix.extend(pre)
            matrices.append(m)
        return prefix, conj(matrices)
    if isinstance(f, Or):
        prefix = []
        matrices = []
        for p in f.parts:
            pre, m = _pull(p)
            prefix.extend(pre)
            matrices.append(m)
        return prefix, disj(matrices)
    return [], f


def _dnf_clauses(f: Formula) -> list[list[Formula]]:
    if isinstance(f, TrueF):
        return [[]]
    if isinstance(f, FalseF):
        return []
    if isinstance(f, Or):
        out: list[list[Formula]] = []
        for p in f.parts:
            out.extend(_dnf_clauses(p))
        return out
    if isinstance(f, And):
        acc: list[list[Formula]] = [[]]
        for p in f.parts:
            branch = _dnf_clauses(p)
            acc = [c + d for c in acc for d in branch]
            if not acc:
                return []
        return acc
    return [[f]]


def prenex(f: Formula) -> Formula:
    """Prenex normal form with a disjunctive-normal-form matrix.

    Implications and equivalences are eliminated, negations pushed to the
    atoms, bound variables renamed apart, and quantifiers pulled to the front
    in source order.  No quantifier reordering or scope-shrinking is done,
    so the quantifier pattern follows the input text.  Expects unnested input
    when the caller cares about matrix atom shapes.
    """
    fresh = FreshNames(f)
    g = _nnf(f, False)
    g = _rename_apart(g, set(free_vars(g)), fresh)
    prefix, matrix = _pull(g)
    matrix = disj(conj(clause) for clause in _dnf_clauses(matrix))
    live = all_var_names(matrix)
    for kind, var in reversed(prefix):
        if var not in live:
            continue
        matrix = Exists(var, matrix) if kind == "exists" else Forall(var, matrix)
    return matrix


def split_prenex(f: Formula) -> tuple[list[tuple[str, str]], Formula]:
    """Split a formula into its leading quantifier block and the rest."""
    prefix: list[tuple[str, str]] = []
    while isinstance(f, (Exists, Forall)):
        prefix.append(("exists" if isinstance(f, Exists) else "forall", f.var))
        f = f.body
    return prefix, f


def is_literal(f: Formula) -> bool:
    if isinstance(f, Not):
        f = f.body
    return isinstance(f, (Eq, Rel, TrueF, FalseF))


def is_dnf_matrix(f: Formula) -> bool:
    """True when `f` is a disjunction of conjunctions of literals.

    Degenerate cases count: a single literal, a bare conjunction, or a bare
    disjunction of literals are all acceptable matrices.
    """
    if isinstance(f, Or):
        clauses = f.parts
    else:
        clauses = (f,)
    for c in clauses:
        parts = c.parts if isinstance(c, And) else (c,)
        if not all(is_literal(p) for p in parts):
            return False
    return True


def is_prenex(f: Formula) -> bool:
    _, matrix = split_prenex(f)
    return all(
        not isinstance(sub, (Exists, Forall)) for sub in _walk(matrix)
    )


# ---------------------------------------------------------------------------
# Quantifier-complexity classification


@dataclass(frozen=True)
class SyntaxClass:
    """Position of a formula in the quantifier-alternation hierarchy.

    One of Diophantine, Sigma(n), Pi(n), or General (the tag for
    quantifier-free formulas that are not Diophantine).
    """

    kind: str
    level: int = 0

    DIOPHANTINE: ClassVar["SyntaxClass"]
    GENERAL: ClassVar["SyntaxClass"]

    @staticmethod
    def sigma(n: int) -> "SyntaxClass":
        return SyntaxClass("sigma", n)

    @staticmethod
    def pi(n: int) -> "SyntaxClass":
        return SyntaxClass("pi", n)

    def __str__(self) -> str:
        if self.kind == "diophantine":
            return "Diophantine"
        if self.kind == "general":
            return "General"
        return f"{self.kind.capitalize()}({self.level})"


SyntaxClass.DIOPHANTINE = SyntaxClass("diophantine")
SyntaxClass.GENERAL = SyntaxClass("general")


def is_diophantine(f: Formula) -> bool:
    """Existentially quantified conjunction of atoms, up to nesting."""
    if isinstance(f, (Eq, Rel, TrueF)):
        return True
    if isinstance(f, And):
        return all(is_diophantine(p) for p in f.parts)
    if isinstance(f, Exists):
        return is_diophantine(f.body)
    return False


def _levels(f: Formula) -> tuple[int, int]:
    """Minimal (sigma, pi) levels achievable by safe quantifier placement.

    The pair means: the formula can be written as a Sigma-sigma formula and
    as a Pi-pi formula using only connective elimination, renaming apart,
    and quantifier pulling (never reordering independent blocks).
    """
    if isinstance(f, (Eq, Rel, TrueF, FalseF)):
        return 0, 0
    if isinstance(f, Not):
        s, p = _levels(f.body)
        return p, s
    if isinstance(f, (And, Or)):
        s = p = 0
        for part in f.parts:
            ps, pp = _levels(part)
            s = max(s, ps)
            p = max(p, pp)
        return s, p
    if isinstance(f, Implies):
        ls, lp = _levels(f.lhs)
        rs, rp = _levels(f.rhs)
        return max(lp, rs), max(ls, rp)
    if isinstance(f, Iff):
        ls, lp = _levels(f.lhs)
        rs, rp = _levels(f.rhs)
        top = max(ls, lp, rs, rp)
        return top, top
    if isinstance(f, Exists):
        s, p = _levels(f.body)
        sig = min(max(s, 1), p + 1)
        return sig, sig + 1
    if isinstance(f, Forall):
        s, p = _levels(f.body)
        pi = min(max(p, 1), s + 1)
        return pi + 1, pi
    raise TypeError(f"not a formula: {f!r}")


def classify(f: Formula) -> SyntaxClass:
    """Best syntax class of `f` in the alternation hierarchy.

    Diophantine beats everything; otherwise the class is the smaller side of
    the minimal (sigma, pi) pair, with ties going to Sigma.  Quantifier-free
    formulas that are not Diophantine report General.
    """
    if is_diophantine(f):
        return SyntaxClass.DIOPHANTINE
    s, p = _levels(f)
    if s == 0 and p == 0:
        return SyntaxClass.GENERAL
    if s <= p:
        return SyntaxClass.sigma(s)
    return SyntaxClass.pi(p)
