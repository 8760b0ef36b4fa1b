import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

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
    Not,
    Or,
    Param,
    Rel,
    TrueF,
    Var,
    parse,
    prenex,
    tuple_vars,
    unnest,
)
from interpkit.models import (
    Assignment,
    EvalError,
    FiniteStructure,
    ParamRangeError,
    UnboundVariableError,
    check_equivalence_relation,
    definable_set,
    eval_formula,
    find_isomorphism,
    iter_isomorphisms,
)
from oracles import (
    brute_definable,
    group_language,
    mod_ring_tables,
    naive_eval,
    perm_isomorphisms,
    ring_language,
    tiny_language,
)

RING = ring_language()
GROUP = group_language()
TINY = tiny_language()


def mod_ring(n):
    consts, funcs, rels = mod_ring_tables(n)
    return FiniteStructure(RING, n, consts, funcs, rels)


def cyclic_group(n):
    return FiniteStructure.from_callables(
        GROUP,
        n,
        consts={"e": 0},
        funcs={"mul": lambda a, b: (a + b) % n, "inv": lambda a: (-a) % n},
    )


def klein_group():
    return FiniteStructure.from_callables(
        GROUP,
        4,
        consts={"e": 0},
        funcs={"mul": lambda a, b: a ^ b, "inv": lambda a: a},
    )


Z5 = mod_ring(5)
Z6 = mod_ring(6)


# ---------------------------------------------------------------------------
# Construction and validation


def test_structure_rejects_empty_universe():
    with pytest.raises(ValueError):
        FiniteStructure(RING, 0, {"0": 0, "1": 0}, {"add": [], "mul": []}, {})


def test_structure_rejects_missing_constant():
    with pytest.raises(ValueError, match="constant '1'"):
        consts, funcs, rels = mod_ring_tables(3)
        del consts["1"]
        FiniteStructure(RING, 3, consts, funcs, rels)


def test_structure_rejects_bad_table_entry():
    consts, funcs, rels = mod_ring_tables(3)
    funcs["add"][0][0] = 7
    with pytest.raises(ValueError, match="bad entry"):
        FiniteStructure(RING, 3, consts, funcs, rels)


def test_structure_rejects_bad_relation_tuple():
    with pytest.raises(ValueError, match="bad tuple"):
        FiniteStructure(TINY, 2, {"c": 0}, {"f": [0, 1]}, {"R": {(9,)}})


# ---------------------------------------------------------------------------
# Pointwise evaluation


def test_eval_ring_facts():
    f = parse("add(x, y) = 0", RING)
    assert Z5.eval(f, {"x": 2, "y": 3})
    assert not Z5.eval(f, {"x": 2, "y": 2})
    assert Z5.eval(parse("exists y. mul(x, y) = 1", RING), {"x": 3})
    assert not Z6.eval(parse("exists y. mul(x, y) = 1", RING), {"x": 3})


def test_eval_quantifier_shadowing():
    f = parse("exists x. mul(x, x) = x & x = y", RING)
    assert Z5.eval(f, {"x": 3, "y": 0})


def test_eval_with_assignment_and_params():
    f = parse("add(x, $1) = $2", RING)
    assert Z5.eval(f, Assignment({"x": 2}, (1, 3)))


def test_eval_unbound_variable():
    with pytest.raises(UnboundVariableError, match="'y'"):
        Z5.eval(parse("x = y", RING), {"x": 0})


def test_eval_param_out_of_range():
    with pytest.raises(ParamRangeError, match=r"\$2"):
        Z5.eval(parse("x = $2", RING), {"x": 0}, params=(1,))


def test_eval_element_out_of_range():
    with pytest.raises(EvalError):
        Z5.eval(parse("x = x", RING), {"x": 9})


# ---------------------------------------------------------------------------
# Cross-checks against the independent oracle


def _random_tiny_structure(seed):
    rng = random.Random(seed)
    size = rng.randint(1, 3)
    return FiniteStructure(
        TINY,
        size,
        {"c": rng.randrange(size)},
        {"f": [rng.randrange(size) for _ in range(size)]},
        {
            "R": {
                (i,)
                for i in range(size)
                if rng.random() < 0.5
            }
        },
    )


_term_st = st.deferred(
    lambda: st.one_of(
        st.sampled_from([Var("x"), Var("y"), Var("z"), Const("c")]),
        st.builds(lambda a: App("f", (a,)), _term_st),
    )
)

_formula_st = st.recursive(
    st.one_of(
        st.builds(Eq, _term_st, _term_st),
        st.builds(lambda a: Rel("R", (a,)), _term_st),
        st.just(TrueF()),
        st.just(FalseF()),
    ),
    lambda inner: st.one_of(
        st.builds(Not, inner),
        st.builds(lambda a, b: And((a, b)), inner, inner),
        st.builds(lambda a, b: Or((a, b)), inner, inner),
        st.builds(Implies, inner, inner),
        st.builds(Iff, inner, inner),
        st.builds(Exists, st.sampled_from(["x", "y"]), inner),
        st.builds(Forall, st.sampled_from(["x", "y"]), inner),
    ),
    max_leaves=10,
)


@given(_formula_st, st.integers(0, 200))
@settings(max_examples=150, deadline=None)
def test_eval_matches_oracle(f, seed):
    struct = _random_tiny_structure(seed)
    fv = sorted({"x", "y", "z"})
    for env_vals in itertools.product(range(struct.size), repeat=3):
        env = dict(zip(fv, env_vals))
        assert struct.eval(f, env) == naive_eval(struct, f, env)


@given(_formula_st, st.integers(0, 200))
@settings(max_examples=100, deadline=None)
def test_definable_matches_brute_force(f, seed):
    struct = _random_tiny_structure(seed)
    names = ("x", "y", "z")
    ds = definable_set(struct, f, variables=names)
    assert ds.tuples == frozenset(brute_definable(struct, f, names))


@given(_formula_st, st.integers(0, 200))
@settings(max_examples=80, deadline=None)
def test_unnest_and_prenex_preserve_truth(f, seed):
    struct = _random_tiny_structure(seed)
    names = ("x", "y", "z")
    want = brute_definable(struct, f, names)
    assert brute_definable(struct, unnest(f), names) == want
    assert brute_definable(struct, prenex(f), names) == want


def test_definable_set_union_property():
    a = parse("exists y. mul(x, y) = 1", RING)
    b = parse("x = 0", RING)
    da = definable_set(Z6, a)
    db = definable_set(Z6, b)
    dor = definable_set(Z6, Or((a, b)))
    assert dor.tuples == da.tuples | db.tuples


def test_definable_set_fields():
    f = parse("mul(x, x) = y", RING)
    ds = definable_set(Z5, f)
    assert ds.arity == 2
    assert ds.variables == ("x", "y")
    assert (2, 4) in ds.tuples
    assert ds.defining is f


def test_definable_rejects_unlisted_free_variable():
    with pytest.raises(UnboundVariableError):
        definable_set(Z5, parse("x = y", RING), variables=("x",))


def test_memo_does_not_change_results():
    f = parse("exists y. mul(x, y) = 1", RING)
    g = parse("forall y. exists z. add(y, z) = x", RING)
    fresh = mod_ring(6)
    first = definable_set(fresh, f).tuples
    for _ in range(3):
        assert definable_set(fresh, f).tuples == first
    warmed = definable_set(fresh, g).tuples
    assert definable_set(mod_ring(6), g).tuples == warmed


def test_definable_with_domain_restriction():
    ev = Z6.evaluator
    f = parse("exists y. mul(x, y) = 1", RING)
    arr = ev.definable(f, ("x",), domains={"x": np.array([1, 4, 5])})
    assert arr.tolist() == [True, False, True]


def test_sentence_evaluation():
    ev = Z5.evaluator
    assert ev.holds(parse("forall x. exists y. add(x, y) = 0", RING))
    assert ev.holds(parse("exists x. forall y. mul(x, y) = x", RING))
    assert not ev.holds(parse("forall x. exists y. mul(x, y) = 1", RING))


def test_vectorized_params():
    ev = Z5.evaluator
    f = parse("mul($1, x) = 1", RING)
    assert ev.definable(f, ("x",), params=(2,)).tolist() == [
        False,
        False,
        False,
        True,
        False,
    ]


# ---------------------------------------------------------------------------
# Equivalence-relation checking


FRAC_U = parse("!(x1_2 = 0)", RING)
FRAC_E = parse("mul(x1_1, x2_2) = mul(x2_1, x1_2)", RING)


def test_fraction_relation_is_equivalence_over_field():
    out = check_equivalence_relation(Z5, FRAC_U, FRAC_E, dim=2)
    assert out.ok


def test_fraction_relation_fails_transitivity_over_z6():
    out = check_equivalence_relation(Z6, FRAC_U, FRAC_E, dim=2)
    assert not out.ok
    assert out.kind == "transitivity"
    assert out.witness == ((0, 1), (0, 2), (3, 1))
    # The witness genuinely breaks transitivity.
    names = tuple(tuple_vars(1, 2)) + tuple(tuple_vars(2, 2))
    a, b, c = out.witness
    env_ab = dict(zip(names, a + b))
    env_bc = dict(zip(names, b + c))
    env_ac = dict(zip(names, a + c))
    assert Z6.eval(FRAC_E, env_ab)
    assert Z6.eval(FRAC_E, env_bc)
    assert not Z6.eval(FRAC_E, env_ac)


def test_reflexivity_failure_reported_first():
    u = parse("x1_1 = x1_1", RING)
    bad = parse("false", RING)
    out = check_equivalence_relation(Z5, u, bad, dim=1)
    assert out.kind == "reflexivity"
    assert out.witness == ((0,),)


# ---------------------------------------------------------------------------
# Isomorphism search


def test_find_isomorphism_identity_is_lex_least():
    assert find_isomorphism(Z5, Z5) == tuple(range(5))


def test_find_isomorphism_recovers_permutation():
    # Relabel Z5 by x -> (x * 2) mod 5 and check the search undoes it.
    perm = [(2 * x) % 5 for x in range(5)]
    inv = [perm.index(i) for i in range(5)]
    moved = FiniteStructure.from_callables(
        RING,
        5,
        consts={"0": perm[0], "1": perm[1]},
        funcs={
            "add": lambda a, b: perm[(inv[a] + inv[b]) % 5],
            "mul": lambda a, b: perm[(inv[a] * inv[b]) % 5],
        },
    )
    found = find_isomorphism(Z5, moved)
    assert found == tuple(perm)


def test_no_isomorphism_z4_vs_klein():
    assert find_isomorphism(cyclic_group(4), klein_group()) is None


def test_no_isomorphism_different_sizes():
    assert find_isomorphism(cyclic_group(3), cyclic_group(4)) is None


def test_iter_isomorphisms_counts_automorphisms():
    # The Klein four group has the full symmetric group on its three
    # involutions as automorphisms.
    assert len(list(iter_isomorphisms(klein_group(), klein_group()))) == 6
    # A cyclic group of order 4 has two automorphisms.
    assert len(list(iter_isomorphisms(cyclic_group(4), cyclic_group(4)))) == 2


def test_iter_isomorphisms_lex_order():
    isos = list(iter_isomorphisms(klein_group(), klein_group()))
    assert isos == sorted(isos)
    assert isos[0] == (0, 1, 2, 3)


@given(st.integers(0, 300), st.integers(0, 300))
@settings(max_examples=60, deadline=None)
def test_iter_isomorphisms_matches_brute_force(seed_a, seed_b):
    a = _random_tiny_structure(seed_a)
    b = _random_tiny_structure(seed_b)
    assert set(iter_isomorphisms(a, b)) == set(perm_isomorphisms(a, b))
