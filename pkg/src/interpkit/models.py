"""Finite structures: truth evaluation, definable sets, equivalence-relation
checking, and isomorphism search.

Two evaluation paths share the same semantics.  `eval` is a direct recursive
truth evaluator for a single assignment.  `Evaluator.definable` computes the
whole solution set of a formula at once with numpy: each subformula becomes a
boolean array over its free variables, conjunctions under a quantifier block
are contracted with einsum so bound variables never materialize as full joint
dimensions, and per-variable domain restrictions keep hot loops small.  Both
paths are cross-checked in the test suite, and results are cached per
structure keyed on the formula and the parameter values it mentions; the
cache is an optimization only and never changes answers.
"""

from __future__ import annotations

import itertools
import re as _re
import string
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

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
    Rel,
    TrueF,
    Var,
    free_vars,
    max_param,
    nnf,
    tuple_vars,
)


class EvalError(ValueError):
    pass


class UnboundVariableError(EvalError):
    pass


class ParamRangeError(EvalError):
    pass


@dataclass
class Assignment:
    """Variable bindings plus a tuple of parameter values for `$i` terms."""

    vars: dict[str, int] = field(default_factory=dict)
    params: tuple[int, ...] = ()


@dataclass(frozen=True)
class DefinableSet:
    """Solution set of a formula over a finite structure."""

    arity: int
    tuples: frozenset[tuple[int, ...]]
    defining: Formula
    params: tuple[int, ...] = ()
    variables: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Structures


@dataclass(repr=False)
class FiniteStructure:
    """A finite algebraic structure with universe {0, .., size-1}.

    `func_interp` holds total operation tables as nested lists, one level per
    argument; `rel_interp` holds sets of tuples.  Treat instances as
    immutable once built.
    """

    lang: Language
    size: int
    const_interp: dict[str, int] = field(default_factory=dict)
    func_interp: dict[str, list] = field(default_factory=dict)
    rel_interp: dict[str, set] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("universe must be nonempty")
        for c in self.lang.constants:
            if c not in self.const_interp:
                raise ValueError(f"constant {c!r} has no interpretation")
            if not 0 <= self.const_interp[c] < self.size:
                raise ValueError(f"constant {c!r} maps outside the universe")
        for f, arity in self.lang.functions.items():
            if f not in self.func_interp:
                raise ValueError(f"function {f!r} has no table")
            self._check_table(f, self.func_interp[f], arity)
        for r, arity in self.lang.relations.items():
            if r not in self.rel_interp:
                raise ValueError(f"relation {r!r} has no interpretation")
            tuples = {tuple(t) for t in self.rel_interp[r]}
            for t in tuples:
                if len(t) != arity or not all(0 <= x < self.size for x in t):
                    raise ValueError(f"bad tuple {t} in relation {r!r}")
            self.rel_interp[r] = tuples

    def _check_table(self, name: str, table, depth: int) -> None:
        if depth == 0:
            if not isinstance(table, (int, np.integer)) or not 0 <= table < self.size:
                raise ValueError(f"function {name!r} table has bad entry {table!r}")
            return
        if len(table) != self.size:
            raise ValueError(f"function {name!r} table has wrong shape")
        for sub in table:
            self._check_table(name, sub, depth - 1)

    @classmethod
    def from_callables(cls, lang, size, consts=None, funcs=None, rels=None):
        """Build tables by evaluating python callables on every argument tuple."""
        funcs = funcs or {}
        rels = rels or {}
        func_interp = {}
        for f, arity in lang.functions.items():
            fn = funcs[f]

            def build(prefix, depth, fn=fn):
                if depth == 0:
                    return int(fn(*prefix))
                return [build(prefix + (i,), depth - 1) for i in range(size)]

            func_interp[f] = build((), arity)
        rel_interp = {}
        for r, arity in lang.relations.items():
            fn = rels[r]
            rel_interp[r] = {
                t
                for t in itertools.product(range(size), repeat=arity)
                if fn(*t)
            }
        return cls(lang, size, dict(consts or {}), func_interp, rel_interp)

    def __repr__(self) -> str:
        return f"FiniteStructure({self.lang.name}, size={self.size})"

    @property
    def evaluator(self) -> "Evaluator":
        ev = self.__dict__.get("_evaluator")
        if ev is None:
            ev = Evaluator(self)
            self.__dict__["_evaluator"] = ev
        return ev

    def eval(self, formula: Formula, assignment=None, params=()) -> bool:
        return eval_formula(self, formula, assignment, params)


def eval_formula(struct: FiniteStructure, formula: Formula, assignment=None, params=()):
    """Truth of `formula` in `struct` under an assignment, by direct recursion.

    Raises UnboundVariableError for a free variable without a binding and
    ParamRangeError when the formula mentions `$i` beyond the given tuple.
    """
    if isinstance(assignment, Assignment):
        env = dict(assignment.vars)
        params = tuple(assignment.params)
    else:
        env = dict(assignment or {})
        params = tuple(params)
    for v in free_vars(formula):
        if v not in env:
            raise UnboundVariableError(f"unbound variable {v!r}")
    top = max_param(formula)
    if top > len(params):
        raise ParamRangeError(
            f"formula mentions ${top} but only {len(params)} parameters given"
        )
    for v, e in env.items():
        if not 0 <= e < struct.size:
            raise EvalError(f"assignment sends {v!r} outside the universe")
    for e in params:
        if not 0 <= e < struct.size:
            raise EvalError("parameter value outside the universe")

    def term(t):
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Const):
            return struct.const_interp[t.name]
        if isinstance(t, Param):
            return params[t.index - 1]
        table = struct.func_interp[t.func]
        for a in t.args:
            table = table[term(a)]
        return table

    def go(f):
        if isinstance(f, TrueF):
            return True
        if isinstance(f, FalseF):
            return False
        if isinstance(f, Eq):
            return term(f.lhs) == term(f.rhs)
        if isinstance(f, Rel):
            return tuple(term(a) for a in f.args) in struct.rel_interp[f.name]
        if isinstance(f, Not):
            return not go(f.body)
        if isinstance(f, And):
            return all(go(p) for p in f.parts)
        if isinstance(f, Or):
            return any(go(p) for p in f.parts)
        if isinstance(f, Implies):
            return (not go(f.lhs)) or go(f.rhs)
        if isinstance(f, Iff):
            return go(f.lhs) == go(f.rhs)
        if isinstance(f, (Exists, Forall)):
            want = isinstance(f, Exists)
            saved = env.get(f.var)
            had = f.var in env
            hit = not want
            for e in range(struct.size):
                env[f.var] = e
                if go(f.body) == want:
                    hit = want
                    break
            if had:
                env[f.var] = saved
            else:
                del env[f.var]
            return hit
        raise TypeError(f"not a formula: {f!r}")

    return go(formula)


# ---------------------------------------------------------------------------
# Vectorized set evaluation


class _TooBig(Exception):
    pass


_LETTERS = string.ascii_letters


class Evaluator:
    """Per-structure engine computing formula solution sets as numpy arrays.

    Size guard: any materialized array is capped at `CAP` cells; oversize
    requests fall back to slicing one output variable at a time.  Cached
    results are evicted least-recently-used once `CACHE_CELLS` total cells
    are held.
    """

    CAP = 1 << 23
    CACHE_CELLS = 1 << 26

    def __init__(self, struct: FiniteStructure):
        self.struct = struct
        self.size = struct.size
        self.consts = dict(struct.const_interp)
        self.funcs = {
            f: np.asarray(t, dtype=np.int64) for f, t in struct.func_interp.items()
        }
        self.rels = {}
        for r, arity in struct.lang.relations.items():
            arr = np.zeros((struct.size,) * arity, dtype=bool)
            for t in struct.rel_interp[r]:
                arr[t] = True
            self.rels[r] = arr
        self._arange = np.arange(struct.size, dtype=np.int64)
        self._cache: OrderedDict = OrderedDict()
        self._cache_cells = 0
        self._freevars: dict = {}
        self._params_in: dict = {}
        self._negated: dict = {}

    # -- public entry points

    def definable(self, formula, variables, params=(), domains=None):
        """Boolean array of solutions over `variables`.

        Axis i indexes values of `variables[i]`; when `domains` restricts a
        variable, positions index into its (sorted) domain array instead of
        the whole universe.  Free variables of the formula must all be listed.
        """
        variables = tuple(variables)
        params = tuple(params)
        top = max_param(formula)
        if top > len(params):
            raise ParamRangeError(
                f"formula mentions ${top} but only {len(params)} parameters given"
            )
        for e in params:
            if not 0 <= e < self.size:
                raise EvalError("parameter value outside the universe")
        missing = [v for v in free_vars(formula) if v not in variables]
        if missing:
            raise UnboundVariableError(
                f"free variable {missing[0]!r} is not among the set variables"
            )
        dom = {}
        for v, vals in (domains or {}).items():
            arr = np.asarray(vals, dtype=np.int64)
            if arr.ndim != 1:
                raise ValueError("domains must be flat value arrays")
            if len(arr) != self.size or not np.array_equal(arr, self._arange):
                dom[v] = arr
        return self._definable_arr(nnf(formula), variables, params, dom)

    def holds(self, formula, params=()) -> bool:
        """Truth value of a sentence."""
        return bool(self.definable(formula, (), params))

    # -- helpers

    def _len(self, v, dom):
        return len(dom[v]) if v in dom else self.size

    def _vals(self, v, dom):
        return dom[v] if v in dom else self._arange

    def _fv(self, f):
        out = self._freevars.get(f)
        if out is None:
            out = tuple(sorted(free_vars(f)))
            self._freevars[f] = out
        return out

    def _pidx(self, f):
        out = self._params_in.get(f)
        if out is None:
            idx = set()

            def scan_term(t):
                if isinstance(t, Param):
                    idx.add(t.index)
                elif isinstance(t, App):
                    for a in t.args:
                        scan_term(a)

            stack = [f]
            while stack:
                g = stack.pop()
                if isinstance(g, Eq):
                    scan_term(g.lhs)
                    scan_term(g.rhs)
                elif isinstance(g, Rel):
                    for a in g.args:
                        scan_term(a)
                elif isinstance(g, Not):
                    stack.append(g.body)
                elif isinstance(g, (And, Or)):
                    stack.extend(g.parts)
                elif isinstance(g, (Implies, Iff)):
                    stack.append(g.lhs)
                    stack.append(g.rhs)
                elif isinstance(g, (Exists, Forall)):
                    stack.append(g.body)
            out = tuple(sorted(idx))
            self._params_in[f] = out
        return out

    def _definable_arr(self, g, variables, params, dom):
        try:
            vars_, arr = self._set(g, params, dom)
        except _TooBig:
            v0 = next(
                (v for v in variables if self._len(v, dom) > 1), None
            )
            if v0 is None:
                raise RuntimeError(
                    "formula is too large to evaluate over this structure"
                ) from None
            axis = variables.index(v0)
            parts = []
            for e in self._vals(v0, dom):
                sub = dict(dom)
                sub[v0] = np.asarray([e], dtype=np.int64)
                parts.append(self._definable_arr(g, variables, params, sub))
            return np.concatenate(parts, axis=axis)
        full = tuple(self._len(v, dom) for v in variables)
        view = _expand(vars_, arr, variables)
        return np.broadcast_to(view, full)

    def _set(self, f, params, dom):
        """Array of satisfying assignments over the sorted free variables."""
        if isinstance(f, TrueF):
            return (), np.asarray(True)
        if isinstance(f, FalseF):
            return (), np.asarray(False)
        pkey = tuple((i, params[i - 1]) for i in self._pidx(f))
        dkey = tuple(
            (v, tuple(map(int, dom[v]))) for v in self._fv(f) if v in dom
        )
        key = (f, pkey, dkey)
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        if isinstance(f, (Eq, Rel)):
            val = self._atom_set(f, params, dom)
        elif isinstance(f, Not):
            vars_, arr = self._set(f.body, params, dom)
            val = (vars_, ~arr)
        elif isinstance(f, And):
            parts = [self._set(p, params, dom) for p in f.parts]
            out = tuple(sorted({v for vs, _ in parts for v in vs}))
            val = (out, self._contract(parts, out, dom))
        elif isinstance(f, Or):
            parts = [self._set(p, params, dom) for p in f.parts]
            out = tuple(sorted({v for vs, _ in parts for v in vs}))
            full = tuple(self._len(v, dom) for v in out)
            if _cells(full) > self.CAP:
                raise _TooBig
            acc = np.zeros(full, dtype=bool)
            for vs, arr in parts:
                acc |= _expand(vs, arr, out)
            val = (out, acc)
        elif isinstance(f, Exists):
            val = self._chain(f, params, dom, negate=False)
        elif isinstance(f, Forall):
            val = self._chain(f, params, dom, negate=True)
        else:
            raise TypeError(f"unexpected node in normalized formula: {f!r}")
        self._remember(key, val)
        return val

    def _chain(self, f, params, dom, negate):
        kind = Forall if negate else Exists
        bound = []
        g = f
        while isinstance(g, kind):
            bound.append(g.var)
            g = g.body
        if negate:
            core = self._negated.get(g)
            if core is None:
                core = nnf(g, True)
                self._negated[g] = core
        else:
            core = g
        inner_dom = {k: v for k, v in dom.items() if k not in bound}
        bset = set(bound)
        if isinstance(core, And):
            parts = [self._set(p, params, inner_dom) for p in core.parts]
            out = tuple(
                sorted({v for vs, _ in parts for v in vs} - bset)
            )
            arr = self._contract(parts, out, inner_dom)
        else:
            vars_, arr = self._set(core, params, inner_dom)
            axes = tuple(i for i, v in enumerate(vars_) if v in bset)
            if axes:
                arr = arr.any(axis=axes)
            out = tuple(v for v in vars_ if v not in bset)
        if negate:
            arr = ~arr if arr.ndim else np.asarray(not bool(arr))
        return out, arr

    def _atom_set(self, f, params, dom):
        names: dict[str, None] = {}

        def scan(t):
            if isinstance(t, Var):
                names.setdefault(t.name)
            elif isinstance(t, App):
                for a in t.args:
                    scan(a)

        if isinstance(f, Eq):
            scan(f.lhs)
            scan(f.rhs)
        else:
            for a in f.args:
                scan(a)
        vars_ = tuple(sorted(names))
        k = len(vars_)
        grids = {}
        for i, v in enumerate(vars_):
            vals = self._vals(v, dom)
            shape = [1] * k
            shape[i] = len(vals)
            grids[v] = vals.reshape(shape)

        def tval(t):
            if isinstance(t, Var):
                return grids[t.name]
            if isinstance(t, Const):
                return self.consts[t.name]
            if isinstance(t, Param):
                return params[t.index - 1]
            return self.funcs[t.func][tuple(tval(a) for a in t.args)]

        if isinstance(f, Eq):
            res = np.asarray(tval(f.lhs) == tval(f.rhs))
        else:
            res = np.asarray(self.rels[f.name][tuple(tval(a) for a in f.args)])
        full = tuple(self._len(v, dom) for v in vars_)
        if _cells(full) > self.CAP:
            raise _TooBig
        return vars_, np.broadcast_to(res, full)

    def _contract(self, parts, out, dom):
        """Conjoin boolean arrays, eliminating variables not in `out`."""
        full = tuple(self._len(v, dom) for v in out)
        if _cells(full) > self.CAP:
            raise _TooBig
        live = []
        for vs, arr in parts:
            if arr.ndim == 0:
                if not bool(arr):
                    return np.zeros(full, dtype=bool)
                continue
            live.append((vs, arr))
        if not live:
            return np.ones(full, dtype=bool)
        seen = {v for vs, _ in live for v in vs}
        letters = {}
        for v in sorted(seen | set(out)):
            if len(letters) >= len(_LETTERS):
                raise _TooBig
            letters[v] = _LETTERS[len(letters)]
        ops = [arr.astype(np.float64) for _, arr in live]
        subs = [
            "".join(letters[v] for v in vs) for vs, _ in live
        ]
        for v in out:
            if v not in seen:
                ops.append(np.ones(self._len(v, dom)))
                subs.append(letters[v])
        spec = ",".join(subs) + "->" + "".join(letters[v] for v in out)
        path, info = np.einsum_path(spec, *ops, optimize="greedy")
        m = _re.search(r"Largest intermediate:\s*([0-9.e+]+)", info)
        if m and float(m.group(1)) > self.CAP:
            raise _TooBig
        res = np.einsum(spec, *ops, optimize=path)
        return np.asarray(res > 0.5)

    def _remember(self, key, val):
        arr = val[1]
        self._cache[key] = val
        self._cache_cells += arr.size
        while self._cache_cells > self.CACHE_CELLS and len(self._cache) > 1:
            _, (_, old) = self._cache.popitem(last=False)
            self._cache_cells -= old.size


def _cells(shape) -> int:
    out = 1
    for s in shape:
        out *= s
    return out


def _expand(vars_, arr, target):
    """View `arr` (axes = vars_) as broadcastable over the `target` tuple."""
    if not vars_:
        return arr
    pos = [target.index(v) for v in vars_]
    order = sorted(range(len(pos)), key=pos.__getitem__)
    if order != list(range(len(pos))):
        arr = np.transpose(arr, order)
        pos = [pos[i] for i in order]
    shape = [1] * len(target)
    for axis, p in enumerate(pos):
        shape[p] = arr.shape[axis]
    return arr.reshape(shape)


# ---------------------------------------------------------------------------
# Definable sets


def definable_set(struct, formula, params=(), variables=None) -> DefinableSet:
    """Solution set of `formula` over the structure's universe.

    Variables default to the formula's free variables in first-occurrence
    order; pass `variables` to fix the tuple layout (extra variables pad the
    arity with unconstrained coordinates).
    """
    if variables is None:
        variables = tuple(free_vars(formula))
    else:
        variables = tuple(variables)
    arr = struct.evaluator.definable(formula, variables, params)
    tuples = frozenset(map(tuple, np.argwhere(arr).tolist()))
    if not variables:
        tuples = frozenset({()}) if bool(arr) else frozenset()
    return DefinableSet(
        arity=len(variables),
        tuples=tuples,
        defining=formula,
        params=tuple(params),
        variables=variables,
    )


# ---------------------------------------------------------------------------
# Equivalence relations


@dataclass(frozen=True)
class EquivalenceCheck:
    ok: bool
    kind: str | None = None
    witness: tuple | None = None


def check_equivalence_relation(
    struct, u_formula, e_formula, dim, params=()
) -> EquivalenceCheck:
    """Is the binary relation on dim-tuples an equivalence on the domain set?

    `u_formula` is over x1_1..x1_dim; `e_formula` over the same plus
    x2_1..x2_dim.  The first failure in a deterministic ascending scan is
    reported: kind is reflexivity, symmetry, or transitivity, and the witness
    is the offending tuple, pair, or triple.
    """
    v1 = tuple(tuple_vars(1, dim))
    v2 = tuple(tuple_vars(2, dim))
    ev = struct.evaluator
    u_arr = ev.definable(u_formula, v1, params)
    members = sorted(map(tuple, np.argwhere(u_arr).tolist()))
    e_arr = ev.definable(e_formula, v1 + v2, params)

    def related(a, b):
        return bool(e_arr[a + b])

    for a in members:
        if not related(a, a):
            return EquivalenceCheck(False, "reflexivity", (a,))
    for a in members:
        for b in members:
            if related(a, b) and not related(b, a):
                return EquivalenceCheck(False, "symmetry", (a, b))
    for a in members:
        for b in members:
            if not related(a, b):
                continue
            for c in members:
                if related(b, c) and not related(a, c):
                    return EquivalenceCheck(False, "transitivity", (a, b, c))
    return EquivalenceCheck(True)


# ---------------------------------------------------------------------------
# Isomorphism search


def _refine_colors(struct):
    n = struct.size
    colors = _canon(
        [
            tuple(struct.const_interp[c] == x for c in struct.lang.constants)
            for x in range(n)
        ]
    )
    for _ in range(n):
        nxt = []
        for x in range(n):
            sig = [colors[x]]
            for f, arity in sorted(struct.lang.functions.items()):
                table = struct.func_interp[f]
                if arity == 1:
                    sig.append(("f1", f, colors[table[x]]))
                elif arity == 2:
                    sig.append(
                        (
                            "f2",
                            f,
                            tuple(
                                sorted(
                                    (colors[y], colors[table[x][y]], colors[table[y][x]])
                                    for y in range(n)
                                )
                            ),
                        )
                    )
            for r, arity in sorted(struct.lang.relations.items()):
                tuples = struct.rel_interp[r]
                if arity == 1:
                    sig.append(("r1", r, (x,) in tuples))
                elif arity == 2:
                    sig.append(
                        (
                            "r2",
                            r,
                            tuple(
                                sorted(
                                    (colors[y], (x, y) in tuples, (y, x) in tuples)
                                    for y in range(n)
                                )
                            ),
                        )
                    )
            nxt.append(tuple(sig))
        nxt = _canon(nxt)
        if nxt == colors:
            break
        colors = nxt
    return colors


def _canon(colors):
    # Class ids come from sorting the signature values themselves so that the
    # same signature gets the same id in both structures being compared.
    order = {c: i for i, c in enumerate(sorted(set(colors)))}
    return [order[c] for c in colors]


def _compatible(a, b):
    return (
        a.size == b.size
        and set(a.lang.constants) == set(b.lang.constants)
        and a.lang.functions == b.lang.functions
        and a.lang.relations == b.lang.relations
    )


def iter_isomorphisms(a: FiniteStructure, b: FiniteStructure):
    """Yield all isomorphisms a -> b as tuples, in lexicographic order.

    Candidates are pruned with an iterated invariant coloring before the
    backtracking search; consistency of constants, operation tables, and
    relations is enforced on the mapped fragment at every extension step.
    """
    if not _compatible(a, b):
        return
    ca = _refine_colors(a)
    cb = _refine_colors(b)
    if sorted(ca) != sorted(cb):
        return
    n = a.size
    funcs = [(a.func_interp[f], b.func_interp[f], arity)
             for f, arity in a.lang.functions.items()]
    rels = [(a.rel_interp[r], b.rel_interp[r], arity)
            for r, arity in a.lang.relations.items()]
    consts = [(a.const_interp[c], b.const_interp[c]) for c in a.lang.constants]
    image = [-1] * n
    used = [False] * n

    def consistent(x, t):
        # Every (arguments, output) combination is verified at the step where
        # its last element becomes mapped: combinations containing x now, and
        # older combinations whose output turns out to be x.
        if cb[t] != ca[x]:
            return False
        for av, bv in consts:
            if (av == x) != (bv == t):
                return False
        for fa, fb, arity in funcs:
            for args in itertools.product(range(x + 1), repeat=arity):
                va = fa
                for y in args:
                    va = va[y]
                if x not in args and va != x:
                    continue
                if va > x:
                    continue
                vb = fb
                for y in args:
                    vb = vb[t if y == x else image[y]]
                if vb != (t if va == x else image[va]):
                    return False
        for ra, rb, arity in rels:
            for args in itertools.product(range(x + 1), repeat=arity):
                if x not in args:
                    continue
                timg = tuple(t if y == x else image[y] for y in args)
                if (args in ra) != (timg in rb):
                    return False
        return True

    def extend(x):
        if x == n:
            yield tuple(image)
            return
        for t in range(n):
            if used[t]:
                continue
            image[x] = t
            if consistent(x, t):
                used[t] = True
                yield from extend(x + 1)
                used[t] = False
        image[x] = -1

    yield from extend(0)


def find_isomorphism(a: FiniteStructure, b: FiniteStructure):
    """Lexicographically least isomorphism a -> b, or None."""
    return next(iter_isomorphisms(a, b), None)
