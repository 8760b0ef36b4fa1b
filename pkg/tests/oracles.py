"""Independent reference implementations used to cross-check the package.

Everything here is written straight from the textbook definitions with no
shared code paths: a plain Tarskian evaluator, brute-force definable sets,
permutation-search isomorphism, and a from-scratch quotient builder.  Tests
compare package output against these.
"""

from __future__ import annotations

import itertools

from interpkit.logic import (
    And,
    App,
    Const,
    Eq,
    Exists,
    FalseF,
    Forall,
    Iff,
    Implies,
    Language,
    Not,
    Or,
    Param,
    Rel,
    TrueF,
    Var,
)


def naive_eval(struct, formula, env=None, params=()):
    """Directly recursive truth evaluation over a finite structure.

    `struct` only needs `.size`, `.const_interp`, `.func_interp` (nested
    lists), and `.rel_interp` (sets of tuples).  `env` maps variable names to
    elements; `params` is a tuple of elements for `$i` placeholders.
    """
    env = dict(env or {})

    def term(t):
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Const):
            return struct.const_interp[t.name]
        if isinstance(t, Param):
            return params[t.index - 1]
        if isinstance(t, App):
            table = struct.func_interp[t.func]
            for a in t.args:
                table = table[term(a)]
            return table
        raise TypeError(t)

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
        if isinstance(f, Exists):
            saved = env.get(f.var, _MISSING)
            for e in range(struct.size):
                env[f.var] = e
                if go(f.body):
                    _restore(env, f.var, saved)
                    return True
            _restore(env, f.var, saved)
            return False
        if isinstance(f, Forall):
            saved = env.get(f.var, _MISSING)
            for e in range(struct.size):
                env[f.var] = e
                if not go(f.body):
                    _restore(env, f.var, saved)
                    return False
            _restore(env, f.var, saved)
            return True
        raise TypeError(f)

    return go(formula)


_MISSING = object()


def _restore(env, var, saved):
    if saved is _MISSING:
        env.pop(var, None)
    else:
        env[var] = saved


def brute_definable(struct, formula, var_names, params=()):
    """All tuples over the universe satisfying `formula` on `var_names`."""
    out = set()
    for tup in itertools.product(range(struct.size), repeat=len(var_names)):
        env = dict(zip(var_names, tup))
        if naive_eval(struct, formula, env, params):
            out.add(tup)
    return out


def perm_isomorphisms(a, b):
    """Yield every isomorphism between two finite structures, brute force."""
    if a.size != b.size:
        return
    if set(a.lang.constants) != set(b.lang.constants):
        return
    if a.lang.functions != b.lang.functions or a.lang.relations != b.lang.relations:
        return
    for perm in itertools.permutations(range(b.size), a.size):
        if _is_hom(a, b, perm):
            yield perm


def _is_hom(a, b, perm):
    for c in a.lang.constants:
        if perm[a.const_interp[c]] != b.const_interp[c]:
            return False
    for f, n in a.lang.functions.items():
        for args in itertools.product(range(a.size), repeat=n):
            left = a.func_interp[f]
            for x in args:
                left = left[x]
            right = b.func_interp[f]
            for x in args:
                right = right[perm[x]]
            if perm[left] != right:
                return False
    for r, n in a.lang.relations.items():
        for args in itertools.product(range(a.size), repeat=n):
            if (args in a.rel_interp[r]) != (
                tuple(perm[x] for x in args) in b.rel_interp[r]
            ):
                return False
    return True


# ---------------------------------------------------------------------------
# Languages and structures used across the test suite


def ring_language():
    return Language(
        name="ring",
        constants=("0", "1"),
        functions={"add": 2, "mul": 2},
        relations={},
    )


def group_language():
    return Language(
        name="group",
        constants=("e",),
        functions={"mul": 2, "inv": 1},
        relations={},
    )


def tiny_language():
    """One unary function, one constant, one unary relation."""
    return Language(
        name="tiny",
        constants=("c",),
        functions={"f": 1},
        relations={"R": 1},
    )


def mod_ring_tables(n):
    """Constant, function, and relation tables of the ring of integers mod n."""
    add = [[(i + j) % n for j in range(n)] for i in range(n)]
    mul = [[(i * j) % n for j in range(n)] for i in range(n)]
    return {"0": 0, "1": 1 % n}, {"add": add, "mul": mul}, {}


def heisenberg_elements(n):
    """Upper unitriangular 3x3 matrices over the integers mod n, as coordinate
    triples (a, b, c) for rows (1 a c / 0 1 b / 0 0 1)."""
    return list(itertools.product(range(n), repeat=3))


def heisenberg_mul(n, x, y):
    a1, b1, c1 = x
    a2, b2, c2 = y
    return ((a1 + a2) % n, (b1 + b2) % n, (c1 + c2 + a1 * b2) % n)


def heisenberg_inv(n, x):
    a, b, c = x
    return (-a % n, -b % n, (-c + a * b) % n)
