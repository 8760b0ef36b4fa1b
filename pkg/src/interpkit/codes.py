"""Interpretation codes between first-order languages.

A code presents one language inside another: a membership formula U carves an
n-tuple domain out of the host structure, an equivalence formula E glues
tuples into abstract elements, and one defining formula per source symbol
pins down the induced structure on the quotient.  This module provides the
code type itself, the formula translations it induces, the admissibility
conditions that make a code's quotient well-defined, standard code rewrites,
and composition of codes.

Formulas inside a code use positional tuple variables: coordinate j of slot
i is the variable `x<i>_<j>`.  A constant occupies one slot, a relation one
slot per argument, and a function one slot per argument plus a final slot
for the output.  Host-side parameters appear as `$1 .. $k`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .logic import (
    And,
    App,
    Const,
    Eq,
    Exists,
    FalseF,
    Forall,
    Formula,
    FreshNames,
    Iff,
    Implies,
    Language,
    Not,
    Or,
    Param,
    Rel,
    Term,
    TRUE,
    TrueF,
    Var,
    classify,
    conj,
    eliminate_implications,
    free_vars,
    max_param,
    params_to_vars,
    subst_params,
    subst_vars,
    tuple_var,
    tuple_vars,
    unnest,
)


class CodeError(ValueError):
    pass


class ShapeError(CodeError):
    """A formula does not match the form an operation requires."""


def param_names(k: int) -> list[str]:
    """Variable names standing in for parameter slots 1..k."""
    return [f"y{i}" for i in range(1, k + 1)]


def exists_tuple(names, body: Formula) -> Formula:
    """Existential chain over `names`; a tautological body collapses."""
    if isinstance(body, TrueF):
        return TRUE
    for v in reversed(list(names)):
        body = Exists(v, body)
    return body


def forall_tuple(names, body: Formula) -> Formula:
    if isinstance(body, TrueF):
        return TRUE
    for v in reversed(list(names)):
        body = Forall(v, body)
    return body


def rename_slots(f: Formula, mapping: dict[int, int], dim: int) -> Formula:
    """Simultaneously rename tuple slots, e.g. {1: 2, 2: 1} swaps two slots."""
    vmap: dict[str, Term] = {}
    for a, b in mapping.items():
        if a == b:
            continue
        for j in range(1, dim + 1):
            vmap[tuple_var(a, j)] = Var(tuple_var(b, j))
    return subst_vars(f, vmap)


def fill_slots(f: Formula, assignment: dict[int, tuple[Term, ...]], dim: int) -> Formula:
    """Substitute whole term tuples for tuple slots."""
    vmap: dict[str, Term] = {}
    for s, terms in assignment.items():
        if len(terms) != dim:
            raise CodeError(f"slot {s} needs {dim} terms, got {len(terms)}")
        for j, t in enumerate(terms, 1):
            vmap[tuple_var(s, j)] = t
    return subst_vars(f, vmap)


def equality_formula(dim: int, a: int = 1, b: int = 2) -> Formula:
    """Coordinatewise equality of two tuple slots."""
    return conj(
        Eq(Var(tuple_var(a, j)), Var(tuple_var(b, j))) for j in range(1, dim + 1)
    )


# ---------------------------------------------------------------------------
# The code type


@dataclass
class InterpretationCode:
    """Definable presentation of `source`-structures inside `target`-structures.

    `U` is over slot 1, `E` over slots 1 and 2, and `interp[Q]` over the slot
    count of the symbol Q (function outputs take the last slot).  All three
    may mention parameters `$1 .. $par_dim`.  Treat instances as immutable.
    """

    source: Language
    target: Language
    dim: int
    par_dim: int
    U: Formula
    E: Formula
    interp: dict[str, Formula] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise CodeError("dimension must be at least 1")
        if self.par_dim < 0:
            raise CodeError("parameter dimension cannot be negative")
        want = (
            set(self.source.constants)
            | set(self.source.functions)
            | set(self.source.relations)
        )
        for sym in self.interp:
            if sym not in want:
                raise CodeError(f"{sym!r} is not a symbol of {self.source.name!r}")
        for sym in sorted(want):
            if sym not in self.interp:
                raise CodeError(f"symbol {sym!r} has no defining formula")
        self._check("U", self.U, 1)
        self._check("E", self.E, 2)
        for sym, f in self.interp.items():
            self._check(sym, f, self.slots(sym))

    def _check(self, label: str, f: Formula, nslots: int) -> None:
        try:
            self.target.validate(f)
        except ValueError as e:
            raise CodeError(f"formula for {label!r}: {e}") from None
        allowed = {
            tuple_var(s, j)
            for s in range(1, nslots + 1)
            for j in range(1, self.dim + 1)
        }
        for v in free_vars(f):
            if v not in allowed:
                raise CodeError(
                    f"formula for {label!r} uses {v!r} outside its {nslots} tuple slots"
                )
        if max_param(f) > self.par_dim:
            raise CodeError(
                f"formula for {label!r} mentions ${max_param(f)} "
                f"but the code has {self.par_dim} parameters"
            )

    def slots(self, symbol: str) -> int:
        """Number of tuple slots in the defining formula of `symbol`."""
        kind = self.source.symbol_kind(symbol)
        if kind == "const":
            return 1
        if kind == "func":
            return self.source.functions[symbol] + 1
        if kind == "rel":
            return self.source.relations[symbol]
        raise CodeError(f"{symbol!r} is not a symbol of {self.source.name!r}")

    @property
    def absolute(self) -> bool:
        return self.par_dim == 0

    @property
    def injective(self) -> bool:
        """True when E is literally coordinatewise equality."""
        return self.E == equality_formula(self.dim)

    def u_at(self, slot: int) -> Formula:
        """The membership formula transported to another slot."""
        return rename_slots(self.U, {1: slot}, self.dim)

    def u_and(self, slots) -> Formula:
        """Conjunction of membership over several slots."""
        return conj(self.u_at(s) for s in slots)

    def all_formulas(self) -> list[tuple[str, Formula]]:
        out = [("U", self.U), ("E", self.E)]
        out.extend(sorted(self.interp.items()))
        return out


@dataclass
class RegularCode:
    """A code together with a descriptor formula selecting good parameters.

    The descriptor is written over the variables `y1 .. yk` matching the
    code's parameter slots.
    """

    code: InterpretationCode
    descriptor: Formula

    def __post_init__(self) -> None:
        if max_param(self.descriptor) > 0:
            raise CodeError("descriptors use y-variables, not parameter slots")
        try:
            self.code.target.validate(self.descriptor)
        except ValueError as e:
            raise CodeError(f"descriptor: {e}") from None
        allowed = set(param_names(self.code.par_dim))
        for v in free_vars(self.descriptor):
            if v not in allowed:
                raise CodeError(
                    f"descriptor variable {v!r} has no matching parameter slot"
                )


def identity_code(lang: Language) -> InterpretationCode:
    """The dimension-1 code presenting a language inside itself unchanged."""
    x, x2 = Var(tuple_var(1, 1)), Var(tuple_var(2, 1))
    interp: dict[str, Formula] = {}
    for c in lang.constants:
        interp[c] = Eq(Const(c), x)
    for f, arity in lang.functions.items():
        args = tuple(Var(tuple_var(i, 1)) for i in range(1, arity + 1))
        interp[f] = Eq(App(f, args), Var(tuple_var(arity + 1, 1)))
    for r, arity in lang.relations.items():
        interp[r] = Rel(r, tuple(Var(tuple_var(i, 1)) for i in range(1, arity + 1)))
    return InterpretationCode(lang, lang, 1, 0, Eq(x, x), Eq(x, x2), interp)


# ---------------------------------------------------------------------------
# Admissibility conditions


@dataclass(frozen=True)
class AdmissibilityCondition:
    label: str
    formula: Formula


def _congruence(code: InterpretationCode, symbol: str) -> Formula:
    """The defining formula respects E in every slot."""
    t = code.slots(symbol)
    f = code.interp[symbol]
    premise = [code.u_and(range(1, 2 * t + 1)), f]
    premise.extend(
        rename_slots(code.E, {1: i, 2: t + i}, code.dim) for i in range(1, t + 1)
    )
    shifted = rename_slots(f, {i: t + i for i in range(1, t + 1)}, code.dim)
    names = [
        tuple_var(s, j)
        for s in range(1, 2 * t + 1)
        for j in range(1, code.dim + 1)
    ]
    return forall_tuple(names, Implies(conj(premise), shifted))


def admissibility_conditions(code: InterpretationCode) -> list[AdmissibilityCondition]:
    """Everything that must hold for the code's quotient to be a structure.

    The list is deterministic: the four domain/equivalence conditions, a
    congruence condition per relation, existence and uniqueness per constant,
    then congruence, totality, and single-valuedness per function.
    """
    n = code.dim
    x1, x2, x3 = (tuple_vars(s, n) for s in (1, 2, 3))
    e12 = code.E
    e11 = rename_slots(code.E, {2: 1}, n)
    e21 = rename_slots(code.E, {1: 2, 2: 1}, n)
    e23 = rename_slots(code.E, {1: 2, 2: 3}, n)
    e13 = rename_slots(code.E, {2: 3}, n)
    out = [
        AdmissibilityCondition("nonempty", exists_tuple(x1, code.U)),
        AdmissibilityCondition(
            "reflexive", forall_tuple(x1, Implies(code.U, e11))
        ),
        AdmissibilityCondition(
            "symmetric",
            forall_tuple(x1 + x2, Implies(conj([code.u_and((1, 2)), e12]), e21)),
        ),
        AdmissibilityCondition(
            "transitive",
            forall_tuple(
                x1 + x2 + x3,
                Implies(conj([code.u_and((1, 2, 3)), e12, e23]), e13),
            ),
        ),
    ]
    for r in code.source.relations:
        out.append(AdmissibilityCondition(f"congruence[{r}]", _congruence(code, r)))
    for c in code.source.constants:
        cf = code.interp[c]
        out.append(
            AdmissibilityCondition(
                f"defined[{c}]", exists_tuple(x1, conj([code.U, cf]))
            )
        )
        out.append(
            AdmissibilityCondition(
                f"unique[{c}]",
                forall_tuple(
                    x1 + x2,
                    Implies(
                        conj([code.u_and((1, 2)), cf, rename_slots(cf, {1: 2}, n)]),
                        e12,
                    ),
                ),
            )
        )
    for fname, arity in code.source.functions.items():
        ff = code.interp[fname]
        args = [
            tuple_var(s, j) for s in range(1, arity + 1) for j in range(1, n + 1)
        ]
        out.append(
            AdmissibilityCondition(f"congruence[{fname}]", _congruence(code, fname))
        )
        out.append(
            AdmissibilityCondition(
                f"total[{fname}]",
                forall_tuple(
                    args,
                    Implies(
                        code.u_and(range(1, arity + 1)),
                        exists_tuple(
                            tuple_vars(arity + 1, n),
                            conj([code.u_at(arity + 1), ff]),
                        ),
                    ),
                ),
            )
        )
        out.append(
            AdmissibilityCondition(
                f"functional[{fname}]",
                forall_tuple(
                    args + tuple_vars(arity + 1, n) + tuple_vars(arity + 2, n),
                    Implies(
                        conj(
                            [
                                code.u_and(range(1, arity + 3)),
                                ff,
                                rename_slots(ff, {arity + 1: arity + 2}, n),
                            ]
                        ),
                        rename_slots(code.E, {1: arity + 1, 2: arity + 2}, n),
                    ),
                ),
            )
        )
    return out


def admissibility(code: InterpretationCode) -> list[Formula]:
    return [c.formula for c in admissibility_conditions(code)]


def admissibility_single(code: InterpretationCode) -> Formula:
    """All conditions folded into one formula over the parameter slots."""
    return conj(admissibility(code))


def admissibility_regular(rc: RegularCode) -> list[AdmissibilityCondition]:
    """Sentences asserting the conditions for every parameter tuple the
    descriptor selects, plus satisfiability of the descriptor itself."""
    ys = param_names(rc.code.par_dim)
    out = []
    for cond in admissibility_conditions(rc.code):
        body = params_to_vars(cond.formula, ys)
        out.append(
            AdmissibilityCondition(
                cond.label, forall_tuple(ys, Implies(rc.descriptor, body))
            )
        )
    out.append(
        AdmissibilityCondition(
            "descriptor-satisfiable", exists_tuple(ys, rc.descriptor)
        )
    )
    return out


# ---------------------------------------------------------------------------
# Translation


@dataclass(frozen=True)
class TranslationResult:
    """A source formula rendered in the target language.

    `var_map` sends each free source variable to its tuple of target
    variables; `normalized` is the implication-free unnested rendering of the
    input that was actually translated.
    """

    formula: Formula
    var_map: dict[str, tuple[str, ...]]
    syntax_class: object
    normalized: Formula


class _Translator:
    """Shared state for one translation pass: the slot counter."""

    def __init__(self, code: InterpretationCode):
        self.code = code
        self.n = code.dim
        self.next_slot = 1

    def alloc(self) -> int:
        s = self.next_slot
        self.next_slot += 1
        return s

    def tuple_terms(self, slot: int) -> tuple[Term, ...]:
        return tuple(Var(v) for v in tuple_vars(slot, self.n))

    def u_at(self, slot: int) -> Formula:
        return self.code.u_at(slot)

    def atom(self, f: Formula, env: dict[str, int]) -> Formula:
        code = self.code
        if isinstance(f, Rel):
            assignment = {}
            for i, a in enumerate(f.args, 1):
                if not isinstance(a, Var):
                    raise CodeError(f"atom {f!r} is not in unnested form")
                assignment[i] = self.tuple_terms(env[a.name])
            return fill_slots(code.interp[f.name], assignment, self.n)
        lhs, rhs = f.lhs, f.rhs
        if isinstance(rhs, App):
            lhs, rhs = rhs, lhs
        if isinstance(lhs, Const):
            lhs, rhs = rhs, lhs
        if isinstance(lhs, App):
            if not (all(isinstance(a, Var) for a in lhs.args) and isinstance(rhs, Var)):
                raise CodeError(f"atom {f!r} is not in unnested form")
            assignment = {
                i: self.tuple_terms(env[a.name]) for i, a in enumerate(lhs.args, 1)
            }
            assignment[len(lhs.args) + 1] = self.tuple_terms(env[rhs.name])
            return fill_slots(code.interp[lhs.func], assignment, self.n)
        if isinstance(lhs, Var) and isinstance(rhs, Const):
            return fill_slots(
                code.interp[rhs.name], {1: self.tuple_terms(env[lhs.name])}, self.n
            )
        if isinstance(lhs, Var) and isinstance(rhs, Var):
            return fill_slots(
                code.E,
                {
                    1: self.tuple_terms(env[lhs.name]),
                    2: self.tuple_terms(env[rhs.name]),
                },
                self.n,
            )
        raise CodeError(f"atom {f!r} is not in unnested form")

    def star(self, f: Formula, env: dict[str, int]) -> Formula:
        if isinstance(f, (TrueF, FalseF)):
            return f
        if isinstance(f, (Eq, Rel)):
            return self.atom(f, env)
        if isinstance(f, Not):
            return Not(self.star(f.body, env))
        if isinstance(f, And):
            return And(tuple(self.star(p, env) for p in f.parts))
        if isinstance(f, Or):
            return Or(tuple(self.star(p, env) for p in f.parts))
        if isinstance(f, Exists):
            s = self.alloc()
            body = self.star(f.body, {**env, f.var: s})
            return exists_tuple(
                tuple_vars(s, self.n), conj([self.code.u_at(s), body])
            )
        if isinstance(f, Forall):
            s = self.alloc()
            body = self.star(f.body, {**env, f.var: s})
            if isinstance(body, TrueF):
                return TRUE
            return forall_tuple(
                tuple_vars(s, self.n), Implies(self.code.u_at(s), body)
            )
        raise CodeError(f"unexpected node {f!r} after normalization")


def _translate_core(
    normalized: Formula, code: InterpretationCode, variables
) -> tuple[Formula, dict[str, tuple[str, ...]]]:
    """Translate a normalized formula with an explicit free-variable list.

    Every listed variable gets a slot and a membership guard, whether or not
    it occurs; unlisted free variables are an error.
    """
    variables = list(variables)
    stray = [v for v in free_vars(normalized) if v not in variables]
    if stray:
        raise CodeError(f"variable {stray[0]!r} is not in the translation list")
    tr = _Translator(code)
    env = {v: tr.alloc() for v in variables}
    star = tr.star(normalized, env)
    guards = [tr.u_at(env[v]) for v in variables]
    formula = conj([star, *guards])
    var_map = {v: tuple(tuple_vars(env[v], code.dim)) for v in variables}
    return formula, var_map


def translate(
    psi: Formula, code: InterpretationCode, variables=None
) -> TranslationResult:
    """Render a source formula over the target language via the code.

    Each source variable becomes a tuple of target variables, atoms are
    replaced by the code's defining formulas, quantifiers relativize to the
    membership formula, and the result is guarded by membership of every
    free tuple.  Implications are eliminated and atoms unnested first; the
    preprocessed input is recorded on the result.  `variables` fixes the
    free-variable list explicitly (it may list variables that do not occur,
    which still get slots and guards); by default the occurring free
    variables are used in order of first occurrence.
    """
    if max_param(psi) > 0:
        raise CodeError("the formula being translated cannot use parameter slots")
    try:
        code.source.validate(psi)
    except ValueError as e:
        raise CodeError(str(e)) from None
    normalized = unnest(eliminate_implications(psi))
    if variables is None:
        variables = free_vars(normalized)
    formula, var_map = _translate_core(normalized, code, variables)
    return TranslationResult(formula, var_map, classify(formula), normalized)


def translate_forall_phi(psi: Formula, rc: RegularCode) -> Formula:
    """Sentence meaning: under every descriptor-selected parameter tuple,
    the translated sentence holds."""
    return _phi_translation(psi, rc, universal=True)


def translate_exists_phi(psi: Formula, rc: RegularCode) -> Formula:
    """Sentence meaning: some descriptor-selected parameter tuple makes the
    translated sentence hold."""
    return _phi_translation(psi, rc, universal=False)


def _phi_translation(psi: Formula, rc: RegularCode, universal: bool) -> Formula:
    if free_vars(psi):
        raise CodeError("descriptor translations require a sentence")
    base = translate(psi, rc.code).formula
    if rc.code.absolute:
        return base
    ys = param_names(rc.code.par_dim)
    body = params_to_vars(base, ys)
    if universal:
        return forall_tuple(ys, Implies(rc.descriptor, body))
    return exists_tuple(ys, conj([rc.descriptor, body]))


def _param_indices(f: Formula) -> list[int]:
    found: set[int] = set()

    def scan(t) -> None:
        if isinstance(t, Param):
            found.add(t.index)
        elif isinstance(t, App):
            for a in t.args:
                scan(a)

    def go(g) -> None:
        if isinstance(g, Eq):
            scan(g.lhs)
            scan(g.rhs)
        elif isinstance(g, Rel):
            for a in g.args:
                scan(a)
        elif isinstance(g, Not):
            go(g.body)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                go(p)
        elif isinstance(g, (Implies, Iff)):
            go(g.lhs)
            go(g.rhs)
        elif isinstance(g, (Exists, Forall)):
            go(g.body)

    go(f)
    return sorted(found)


@dataclass(frozen=True)
class GroundTranslation:
    """A translation pinned to concrete target elements.

    `formula` is evaluated with `params` as its parameter tuple; `var_map`
    covers the remaining genuinely free source variables.
    """

    formula: Formula
    params: tuple[int, ...]
    var_map: dict[str, tuple[str, ...]]


def translate_with_params(
    psi: Formula,
    code: InterpretationCode,
    params,
    mu_inverse,
    literals=None,
    variables=None,
) -> GroundTranslation:
    """Translate a formula that may mention source elements directly.

    Element mentions are written as parameter slots in `psi` and resolved by
    `literals` (slot index -> source element); each element is replaced by
    its fixed preimage tuple from `mu_inverse`.  The code's own parameter
    slots are filled with `params`.  The result references only target
    elements, so it can be evaluated on the target structure by itself.
    """
    params = tuple(params)
    if len(params) != code.par_dim:
        raise CodeError(
            f"expected {code.par_dim} parameter values, got {len(params)}"
        )
    literals = dict(literals or {})
    used = _param_indices(psi)
    for i in used:
        if i not in literals:
            raise CodeError(f"parameter ${i} of the formula has no literal binding")
    fresh = FreshNames(psi)
    lit_var = {i: fresh.make("lit") for i in used}
    psi2 = subst_params(psi, {i: Var(v) for i, v in lit_var.items()})
    if variables is not None:
        variables = list(variables) + [
            v for v in free_vars(unnest(eliminate_implications(psi2)))
            if v not in variables
        ]
    result = translate(psi2, code, variables)
    lit_names = set(lit_var.values())
    order = [v for v in result.var_map if v in lit_names]
    by_name = {v: i for i, v in lit_var.items()}
    n = code.dim
    formula = result.formula
    if order and code.par_dim:
        formula = subst_params(
            formula,
            {j: Param(len(order) * n + j) for j in range(1, code.par_dim + 1)},
        )
    vmap: dict[str, Term] = {}
    full_params: list[int] = []
    for j, v in enumerate(order):
        elem = literals[by_name[v]]
        if elem not in mu_inverse:
            raise CodeError(f"element {elem!r} has no preimage recorded")
        pre = tuple(mu_inverse[elem])
        if len(pre) != n:
            raise CodeError(f"preimage of {elem!r} must be a {n}-tuple")
        full_params.extend(int(b) for b in pre)
        for c, name in enumerate(result.var_map[v], 1):
            vmap[name] = Param(j * n + c)
    formula = subst_vars(formula, vmap)
    full_params.extend(params)
    var_map = {v: t for v, t in result.var_map.items() if v not in lit_names}
    return GroundTranslation(formula, tuple(full_params), var_map)


def translate_pi_form(psi: Formula, code: InterpretationCode) -> Formula:
    """Leaner translation for formulas shaped `forall .. (premises -> exists
    .. conclusions)`.

    The quantifier prefixes stay bare; each premise and conclusion is
    translated in full, and only the outer free tuples get a closing
    membership guard.  Anything not of that shape is rejected.
    """
    if max_param(psi) > 0:
        raise CodeError("the formula being translated cannot use parameter slots")
    try:
        code.source.validate(psi)
    except ValueError as e:
        raise CodeError(str(e)) from None
    t_bound: list[str] = []
    g = psi
    while isinstance(g, Forall):
        t_bound.append(g.var)
        g = g.body
    if isinstance(g, Implies):
        phis = list(g.lhs.parts) if isinstance(g.lhs, And) else [g.lhs]
        rest = g.rhs
    elif isinstance(g, Exists) or t_bound:
        phis = []
        rest = g
    else:
        raise ShapeError(
            "expected a universally quantified implication or an existential formula"
        )
    z_bound: list[str] = []
    while isinstance(rest, Exists):
        z_bound.append(rest.var)
        rest = rest.body
    thetas = list(rest.parts) if isinstance(rest, And) else [rest]

    outer = free_vars(psi)
    tr = _Translator(code)
    env = {v: tr.alloc() for v in outer}
    for v in t_bound:
        env[v] = tr.alloc()
    t_slots = [env[v] for v in t_bound]
    for v in z_bound:
        env[v] = tr.alloc()
    z_slots = [env[v] for v in z_bound]

    def piece(p: Formula) -> Formula:
        norm = unnest(eliminate_implications(p))
        star = tr.star(norm, env)
        slots = sorted(env[v] for v in free_vars(norm))
        return conj([star, *[tr.u_at(s) for s in slots]])

    premise = conj(piece(p) for p in phis)
    conclusion = exists_tuple(
        [v for s in z_slots for v in tuple_vars(s, code.dim)],
        conj(piece(p) for p in thetas),
    )
    body = conclusion if isinstance(premise, TrueF) else Implies(premise, conclusion)
    head = forall_tuple(
        [v for s in t_slots for v in tuple_vars(s, code.dim)], body
    )
    return conj([head, *[tr.u_at(env[v]) for v in outer]])


# ---------------------------------------------------------------------------
# Composition


def compose(g: InterpretationCode, d: InterpretationCode) -> InterpretationCode:
    """Chain two codes: present `g.source` inside `d.target`.

    Every formula of the outer code is pushed through the inner one; the
    outer parameters expand into inner-dimension tuples of fresh parameter
    slots placed before the inner code's own parameters.
    """
    if g.target != d.source:
        raise CodeError(
            f"codes do not chain: {g.target.name!r} is not {d.source.name!r}"
        )
    n, m = g.dim, d.dim
    kg, kd = g.par_dim, d.par_dim

    def push(f: Formula, nslots: int) -> Formula:
        ys = param_names(kg)
        inner = params_to_vars(f, ys) if kg else f
        ordered = [
            tuple_var(s, j) for s in range(1, nslots + 1) for j in range(1, n + 1)
        ] + ys
        normalized = unnest(eliminate_implications(inner))
        out, _ = _translate_core(normalized, d, ordered)
        if kd:
            out = subst_params(
                out, {j: Param(kg * m + j) for j in range(1, kd + 1)}
            )
        vmap: dict[str, Term] = {}
        for s in range(1, nslots + 1):
            for j in range(1, n + 1):
                inner_slot = (s - 1) * n + j
                for l in range(1, m + 1):
                    vmap[tuple_var(inner_slot, l)] = Var(
                        tuple_var(s, (j - 1) * m + l)
                    )
        for i in range(1, kg + 1):
            inner_slot = nslots * n + i
            for l in range(1, m + 1):
                vmap[tuple_var(inner_slot, l)] = Param((i - 1) * m + l)
        return subst_vars(out, vmap)

    interp = {sym: push(f, g.slots(sym)) for sym, f in g.interp.items()}
    return InterpretationCode(
        g.source,
        d.target,
        n * m,
        kg * m + kd,
        push(g.U, 1),
        push(g.E, 2),
        interp,
    )


# ---------------------------------------------------------------------------
# Code rewrites


def normalize_restrict(code: InterpretationCode) -> InterpretationCode:
    """Conjoin membership into E and every defining formula, and re-derive
    the membership formula from the restricted E.

    The result presents the same quotient on every structure.
    """
    new_e = conj([code.E, code.u_at(1), code.u_at(2)])
    interp = {
        sym: conj([f, code.u_and(range(1, code.slots(sym) + 1))])
        for sym, f in code.interp.items()
    }
    # E'(x, x) would repeat the slot-1 membership conjunct; collapse it.
    new_u = conj([rename_slots(code.E, {2: 1}, code.dim), code.u_at(1)])
    return replace(code, U=new_u, E=new_e, interp=interp)


def normalize_total_E(code: InterpretationCode) -> InterpretationCode:
    """Extend E to an equivalence on all tuples: inside the domain it is
    unchanged, and every tuple outside is equivalent only to itself."""
    uu = code.u_and((1, 2))
    eqs = equality_formula(code.dim)
    new_e = And((Implies(uu, code.E), Implies(Not(eqs), uu)))
    return replace(code, E=new_e)


def to_injective(code: InterpretationCode) -> InterpretationCode:
    """Replace E with coordinatewise equality.

    Only sound when every class of the original E is a singleton on the
    structures of interest; this rewrite does not check that.
    """
    return replace(code, E=equality_formula(code.dim))


def close_full_preimage(code: InterpretationCode) -> InterpretationCode:
    """Close every defining formula under E in each slot, so it holds on all
    representatives whenever it holds on some."""
    interp = {}
    for sym, f in code.interp.items():
        t = code.slots(sym)
        primed = rename_slots(f, {i: t + i for i in range(1, t + 1)}, code.dim)
        links = [
            rename_slots(code.E, {1: i, 2: t + i}, code.dim) for i in range(1, t + 1)
        ]
        names = [
            v for s in range(t + 1, 2 * t + 1) for v in tuple_vars(s, code.dim)
        ]
        interp[sym] = exists_tuple(names, conj([primed, *links]))
    return replace(code, interp=interp)


# ---------------------------------------------------------------------------
# Regular codes: absolutization and parameter extension


def absolutize(rc: RegularCode) -> InterpretationCode:
    """Fold the descriptor into every formula, quantifying the parameters
    away.

    Sound only when all descriptor-selected parameter tuples present the
    same quotient; this rewrite does not check that.
    """
    code = rc.code
    if code.absolute:
        return code
    ys = param_names(code.par_dim)

    def ab(f: Formula) -> Formula:
        return exists_tuple(ys, conj([rc.descriptor, params_to_vars(f, ys)]))

    return replace(
        code,
        par_dim=0,
        U=ab(code.U),
        E=ab(code.E),
        interp={sym: ab(f) for sym, f in code.interp.items()},
    )


def parameter_extend(obj, extra: int, delta: Formula) -> RegularCode:
    """Add fictitious parameter slots, restricted by `delta` over the full
    slot list `y1 .. y(k+extra)`."""
    if extra < 0:
        raise CodeError("cannot extend by a negative number of slots")
    rc = obj if isinstance(obj, RegularCode) else None
    code = rc.code if rc else obj
    new_code = replace(code, par_dim=code.par_dim + extra)
    descriptor = conj([rc.descriptor, delta]) if rc else delta
    return RegularCode(new_code, descriptor)


def extension_is_split(delta: Formula, base_par_dim: int) -> bool:
    """True when `delta` constrains only the newly added parameter slots."""
    old = set(param_names(base_par_dim))
    return not (set(free_vars(delta)) & old)


def simple_reg(code: InterpretationCode) -> RegularCode:
    """Turn an absolute code into a regular one with a single fictitious
    parameter accepted by every element."""
    if not code.absolute:
        raise CodeError("only absolute codes have a simple regularization")
    y = Var("y1")
    return RegularCode(replace(code, par_dim=1), Eq(y, y))


# ---------------------------------------------------------------------------
# Added constants


@dataclass(frozen=True)
class ConstantExpansion:
    """A code enlarged with one constant per chosen source element.

    `params` is the full parameter tuple the new code should be used with:
    the original parameters followed by the recorded preimage tuples.
    """

    code: InterpretationCode
    params: tuple[int, ...]
    constant_names: dict[int, str]


def with_constants(
    code: InterpretationCode, params, mu_inverse, elements
) -> ConstantExpansion:
    """Name chosen source elements as fresh constants.

    Each new constant is defined as E-equivalence to the element's fixed
    preimage tuple; the tuples enter as additional parameter slots whose
    values are returned alongside the code.
    """
    params = tuple(params)
    if len(params) != code.par_dim:
        raise CodeError(
            f"expected {code.par_dim} parameter values, got {len(params)}"
        )
    xs = sorted(elements)
    n, k = code.dim, code.par_dim
    names: dict[int, str] = {}
    interp = dict(code.interp)
    full = [int(p) for p in params]
    for idx, a in enumerate(xs):
        name = f"el{a}"
        if code.source.symbol_kind(name) is not None or name in names.values():
            raise CodeError(f"constant name {name!r} is already taken")
        if a not in mu_inverse:
            raise CodeError(f"element {a!r} has no preimage recorded")
        pre = tuple(mu_inverse[a])
        if len(pre) != n:
            raise CodeError(f"preimage of {a!r} must be a {n}-tuple")
        names[a] = name
        full.extend(int(b) for b in pre)
        terms = tuple(Param(k + idx * n + j) for j in range(1, n + 1))
        interp[name] = fill_slots(code.E, {2: terms}, n)
    source = Language(
        name=f"{code.source.name}+{len(xs)}c",
        constants=code.source.constants + tuple(names[a] for a in xs),
        functions=dict(code.source.functions),
        relations=dict(code.source.relations),
    )
    new_code = InterpretationCode(
        source, code.target, n, k + n * len(xs), code.U, code.E, interp
    )
    return ConstantExpansion(new_code, tuple(full), names)
