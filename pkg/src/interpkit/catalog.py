"""Stock languages, structures, codes, and runnable worked examples.

Every catalog entry bundles a construction with the report it is known to
produce, so the catalog doubles as an end-to-end regression suite:
``run_all()`` replays each entry and compares the result against the stored
report.  The same constructions are exported as workspace files under
``examples/`` through the block DSL.
"""

from __future__ import annotations

import dataclasses
from functools import lru_cache, partial
from importlib import resources
from typing import Callable

from . import dsl
from .codes import InterpretationCode, RegularCode, compose, identity_code
from .logic import Formula, Language, classify, is_diophantine, parse
from .models import Evaluator, FiniteStructure
from .quotient import audit_composition, check_interpretation, check_regular
from .verify import BiCertificate, HomotopyCertificate, check_bi, check_homotopy

__all__ = [
    "CODES",
    "FORMULAS",
    "GENERATORS",
    "STRUCTURES",
    "BSGROUP",
    "GROUP",
    "RING",
    "CatalogEntry",
    "admissibility_triples",
    "centered_pair_code",
    "centralizer_ring_code",
    "code",
    "commutator_ring_code",
    "corner_connector",
    "entry",
    "entry_names",
    "formula",
    "four_squares_code",
    "fraction_code",
    "fraction_identity_bi",
    "example_names",
    "example_text",
    "load_example",
    "make_field",
    "make_heisenberg",
    "make_ring",
    "reduction_triples",
    "robinson_integer_formula",
    "run_all",
    "structure",
    "twisted_unitriangular_code",
    "unitriangular_code",
    "write_examples",
]


RING = Language("ring", constants=("0", "1"), functions={"add": 2, "mul": 2}, relations={})
GROUP = Language("group", constants=("e",), functions={"mul": 2, "inv": 1}, relations={})

# Group language extended with a ternary relation naming an externally
# supplied multiplication; see centralizer_ring_code.
BSGROUP = Language(
    "bsgroup",
    constants=("e",),
    functions={"mul": 2, "inv": 1},
    relations={"otimes": 3},
)


# ---------------------------------------------------------------------------
# Structures


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _mod_add(n: int) -> list[list[int]]:
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def _mod_mul(n: int) -> list[list[int]]:
    return [[(i * j) % n for j in range(n)] for i in range(n)]


@lru_cache(maxsize=None)
def make_ring(n: int) -> FiniteStructure:
    """The ring of integers mod n."""
    if n < 2:
        raise ValueError(f"modulus must be at least 2, got {n}")
    return FiniteStructure(
        RING,
        n,
        {"0": 0, "1": 1 % n},
        {"add": _mod_add(n), "mul": _mod_mul(n)},
        {},
    )


@lru_cache(maxsize=None)
def make_field(p: int) -> FiniteStructure:
    """The prime field with p elements; rejects composite moduli."""
    if not _is_prime(p):
        raise ValueError(f"field order must be prime, got {p}")
    return make_ring(p)


def _heis_enc(n: int, a: int, b: int, c: int) -> int:
    return (a % n) * n * n + (b % n) * n + (c % n)


def _heis_dec(n: int, t: int) -> tuple[int, int, int]:
    return t // (n * n), (t // n) % n, t % n


def _heis_mul(n: int) -> list[list[int]]:
    size = n**3
    table = []
    for s in range(size):
        a1, b1, c1 = _heis_dec(n, s)
        row = []
        for t in range(size):
            a2, b2, c2 = _heis_dec(n, t)
            row.append(_heis_enc(n, a1 + a2, b1 + b2, c1 + c2 + a1 * b2))
        table.append(row)
    return table


def _heis_inv(n: int) -> list[int]:
    out = []
    for t in range(n**3):
        a, b, c = _heis_dec(n, t)
        out.append(_heis_enc(n, -a, -b, -c + a * b))
    return out


@lru_cache(maxsize=None)
def make_heisenberg(n: int) -> FiniteStructure:
    """Unitriangular 3x3 matrices over Z_n, packed as a*n^2 + b*n + c.

    The triple (a, b, c) stands for the matrix with first row (1 a c),
    second row (0 1 b), third row (0 0 1).
    """
    if n < 2:
        raise ValueError(f"modulus must be at least 2, got {n}")
    return FiniteStructure(
        GROUP,
        n**3,
        {"e": 0},
        {"mul": _heis_mul(n), "inv": _heis_inv(n)},
        {},
    )


#: Table generators accepted in workspace files, keyed by the name written in
#: the generator-call shorthand.
GENERATORS: dict[str, Callable] = {
    "mod_add": _mod_add,
    "mod_mul": _mod_mul,
    "heis_mul": _heis_mul,
    "heis_inv": _heis_inv,
}


# ---------------------------------------------------------------------------
# Codes


@lru_cache(maxsize=None)
def fraction_code() -> InterpretationCode:
    """Pairs (a, b) with b nonzero, read as formal fractions a/b.

    Over a field the quotient is the field itself; over Z_n with n composite
    the equivalence fails to be transitive.
    """
    return InterpretationCode(
        RING,
        RING,
        2,
        0,
        U=parse("!(x1_2 = 0)", RING),
        E=parse("mul(x1_1, x2_2) = mul(x2_1, x1_2)", RING),
        interp={
            "0": parse("x1_1 = 0", RING),
            "1": parse("x1_1 = x1_2", RING),
            "add": parse(
                "exists u. exists v. (mul(x1_1, x2_2) = u & mul(x2_1, x1_2) = v"
                " & mul(x3_1, mul(x1_2, x2_2)) = mul(add(u, v), x3_2))",
                RING,
            ),
            "mul": parse(
                "mul(x3_1, mul(x1_2, x2_2)) = mul(mul(x1_1, x2_1), x3_2)", RING
            ),
        },
    )


def _triple_group_code(mul_third: str, inv_third: str) -> InterpretationCode:
    return InterpretationCode(
        GROUP,
        RING,
        3,
        0,
        U=parse("x1_1 = x1_1", RING),
        E=parse("x1_1 = x2_1 & x1_2 = x2_2 & x1_3 = x2_3", RING),
        interp={
            "e": parse("x1_1 = 0 & x1_2 = 0 & x1_3 = 0", RING),
            "mul": parse(
                "x3_1 = add(x1_1, x2_1) & x3_2 = add(x1_2, x2_2) & " + mul_third, RING
            ),
            "inv": parse(
                "add(x1_1, x2_1) = 0 & add(x1_2, x2_2) = 0 & " + inv_third, RING
            ),
        },
    )


@lru_cache(maxsize=None)
def unitriangular_code() -> InterpretationCode:
    """The unitriangular group over a ring, on coordinate triples (a, b, c)."""
    return _triple_group_code(
        "x3_3 = add(add(x1_3, x2_3), mul(x1_1, x2_2))",
        "add(x1_3, x2_3) = mul(x1_1, x1_2)",
    )


@lru_cache(maxsize=None)
def twisted_unitriangular_code() -> InterpretationCode:
    """The same group on triples carrying the corner entry c + ab."""
    return _triple_group_code(
        "add(x3_3, mul(x2_1, x1_2)) = add(x1_3, x2_3)",
        "add(add(x1_3, mul(x1_1, x1_2)), x2_3) = 0",
    )


def _cm(a: str, b: str) -> str:
    """The commutator word a^-1 b^-1 a b."""
    return f"mul(mul(inv({a}), inv({b})), mul({a}, {b}))"


def _central(v: str) -> str:
    """v lies in the set of commutator values.

    Only pass a plain variable: keeping every atom at three variables or
    fewer is what keeps evaluation over the larger bases affordable.
    """
    return f"(exists cu. exists cv. {v} = {_cm('cu', 'cv')})"


def _same_class(a: str, b: str) -> str:
    """a and b agree modulo the commutator values."""
    return f"(exists cd. (mul(inv({a}), {b}) = cd & {_central('cd')}))"


@lru_cache(maxsize=None)
def commutator_ring_code() -> InterpretationCode:
    """A ring on the commutator values of a group, against two parameters.

    The carrier is the set of commutators, addition is the group product,
    and multiplication pairs each carrier element x1 with the witnesses that
    centralize the parameters.  Over the unitriangular group with the two
    standard off-diagonal generators as parameters the quotient is the base
    ring of scalars.
    """
    mul_entry = (
        "exists u. exists v. ("
        + _cm("$1", "u")
        + " = e & "
        + _cm("$2", "v")
        + " = e & x1_1 = "
        + _cm("u", "$2")
        + " & x2_1 = "
        + _cm("$1", "v")
        + " & x3_1 = "
        + _cm("u", "v")
        + ")"
    )
    return InterpretationCode(
        RING,
        GROUP,
        1,
        2,
        U=parse("exists u. exists v. x1_1 = " + _cm("u", "v"), GROUP),
        E=parse("x1_1 = x2_1", GROUP),
        interp={
            "0": parse("x1_1 = e", GROUP),
            "1": parse("x1_1 = " + _cm("$1", "$2"), GROUP),
            "add": parse("mul(x1_1, x2_1) = x3_1", GROUP),
            "mul": parse(mul_entry, GROUP),
        },
    )


def _descriptor_text() -> str:
    cond1 = f"!({_cm('y1', 'y2')} = e)"
    cond2 = (
        "(forall z. ((mul(z, y1) = mul(y1, z) & mul(z, y2) = mul(y2, z))"
        f" <-> {_central('z')}))"
    )
    half1 = (
        "(exists z1. (mul(z1, y1) = mul(y1, z1)"
        f" & {_cm('z1', 'y2')} = z"
        " & (forall w. ((mul(w, y1) = mul(y1, w)"
        f" & {_cm('w', 'y2')} = z)"
        f" -> {_same_class('w', 'z1')}))))"
    )
    half2 = (
        "(exists z2. (mul(z2, y2) = mul(y2, z2)"
        f" & {_cm('y1', 'z2')} = z"
        " & (forall w. ((mul(w, y2) = mul(y2, w)"
        f" & {_cm('y1', 'w')} = z)"
        f" -> {_same_class('w', 'z2')}))))"
    )
    cond3 = f"(forall z. ({_central('z')} -> ({half1} & {half2})))"
    return f"{cond1} & {cond2} & {cond3}"


@lru_cache(maxsize=None)
def centered_pair_code() -> RegularCode:
    """The commutator-ring code made regular over all well-placed pairs.

    The descriptor asks that the two parameters do not commute, that their
    common centralizer is exactly the set of commutator values, and that
    every central element is a commutator against each parameter in a way
    that is unique modulo the center.
    """
    return RegularCode(commutator_ring_code(), parse(_descriptor_text(), GROUP))


@lru_cache(maxsize=None)
def four_squares_code() -> InterpretationCode:
    """The subring of sums of four squares, with the inherited operations.

    Over the rings of integers mod n the carrier is the whole universe, so
    the quotient is just the base ring; the defining formula is kept anyway.
    """
    shell = "exists a. exists b. exists c. exists d. x1_1 = "
    sums = "add(add(mul(a, a), mul(b, b)), add(mul(c, c), mul(d, d)))"
    return InterpretationCode(
        RING,
        RING,
        1,
        0,
        U=parse(shell + sums, RING),
        E=parse("x1_1 = x2_1", RING),
        interp={
            "0": parse("x1_1 = 0", RING),
            "1": parse("x1_1 = 1", RING),
            "add": parse("add(x1_1, x2_1) = x3_1", RING),
            "mul": parse("mul(x1_1, x2_1) = x3_1", RING),
        },
    )


@lru_cache(maxsize=None)
def centralizer_ring_code() -> InterpretationCode:
    """A ring on the centralizer of one group parameter.

    Addition is the group product and multiplication is deferred to the
    ternary relation ``otimes`` of the extended group language, standing for
    a multiplication defined outside the group operations (for instance by
    conjugation identities in the groups this code is meant for).  No finite
    structure in the catalog realizes ``otimes``, so the code ships for
    parsing and translation work only.
    """
    return InterpretationCode(
        RING,
        BSGROUP,
        1,
        1,
        U=parse("mul(x1_1, $1) = mul($1, x1_1)", BSGROUP),
        E=parse("x1_1 = x2_1", BSGROUP),
        interp={
            "0": parse("x1_1 = e", BSGROUP),
            "1": parse("x1_1 = $1", BSGROUP),
            "add": parse("mul(x1_1, x2_1) = x3_1", BSGROUP),
            "mul": parse("otimes(x1_1, x2_1, x3_1)", BSGROUP),
        },
    )


def _phi(t: str) -> str:
    lhs = f"add(add(mul(mul(y, z), mul({t}, {t})), add(1, 1)), mul(z, mul(c, c)))"
    rhs = "add(mul(a, a), mul(y, mul(b, b)))"
    return f"(exists a. exists b. exists c. {lhs} = {rhs})"


@lru_cache(maxsize=None)
def robinson_integer_formula() -> Formula:
    """The ring formula defining the integers inside the rationals.

    An induction shell over a quadratic-form membership predicate: x is an
    integer when x belongs to every set that contains 0 and is closed under
    adding 1, with membership expressed by solvability of the form.  Kept
    for syntactic work; nothing in the catalog evaluates it.
    """
    text = (
        "forall y. forall z. (("
        + _phi("0")
        + " & (forall w. ("
        + _phi("w")
        + " -> "
        + _phi("add(w, 1)")
        + "))) -> "
        + _phi("x")
        + ")"
    )
    return parse(text, RING)


# ---------------------------------------------------------------------------
# Certificates


def corner_connector() -> HomotopyCertificate:
    """Connector between the two unitriangular codes: fix a and b, shift c."""
    return HomotopyCertificate(
        parse("x2_1 = x1_1 & x2_2 = x1_2 & add(x2_3, mul(x1_1, x1_2)) = x1_3", RING)
    )


FRACTION_THETA = "mul(x2_1, x1_2) = x1_1 & !(x1_2 = 0)"


def fraction_identity_bi(mode: str = "strong") -> BiCertificate:
    """Bi-interpretation between the fraction code and the identity code.

    Over a field a/b corresponds to the ring element a*b^-1, and the same
    connector works in both directions.
    """
    theta = parse(FRACTION_THETA, RING)
    return BiCertificate(fraction_code(), identity_code(RING), theta, theta, mode=mode)


# ---------------------------------------------------------------------------
# Name registries


CODES: dict[str, Callable[[], InterpretationCode | RegularCode]] = {
    "identity": lambda: identity_code(RING),
    "frac": fraction_code,
    "ut3": unitriangular_code,
    "ut3_twisted": twisted_unitriangular_code,
    "commutator_ring": commutator_ring_code,
    "commutator_ring_regular": centered_pair_code,
    "four_squares": four_squares_code,
    "centralizer_ring": centralizer_ring_code,
}

STRUCTURES: dict[str, Callable[[], FiniteStructure]] = {
    **{f"z{n}": partial(make_ring, n) for n in range(2, 14)},
    **{f"f{p}": partial(make_field, p) for p in (2, 3, 5, 7, 11, 13)},
    **{f"ut3_z{n}": partial(make_heisenberg, n) for n in (2, 3, 5)},
}

FORMULAS: dict[str, Callable[[], Formula]] = {
    "robinson": robinson_integer_formula,
    "invertible": lambda: parse("exists u. mul(u, x) = 1", RING),
    "idempotent": lambda: parse("mul(x, x) = x", RING),
}


def _lookup(registry: dict, name: str, what: str):
    found = registry.get(name.lower())
    if found is None:
        known = ", ".join(sorted(registry))
        raise ValueError(f"unknown {what} {name!r} (known: {known})")
    return found()


def code(name: str) -> InterpretationCode | RegularCode:
    return _lookup(CODES, name, "code")


def structure(name: str) -> FiniteStructure:
    return _lookup(STRUCTURES, name, "structure")


def formula(name: str) -> Formula:
    return _lookup(FORMULAS, name, "formula")


# ---------------------------------------------------------------------------
# Entries


@dataclasses.dataclass(frozen=True)
class CatalogEntry:
    """One worked example: a runnable check and the report it should give."""

    name: str
    notes: str
    expected: dict
    runner: Callable[[], dict]

    def run(self) -> dict:
        return self.runner()


ENTRIES: dict[str, CatalogEntry] = {}


def _register(name: str, notes: str, expected: dict):
    def wrap(fn: Callable[[], dict]) -> Callable[[], dict]:
        ENTRIES[name] = CatalogEntry(name, notes, expected, fn)
        return fn

    return wrap


def _listify(value):
    if isinstance(value, tuple):
        return [_listify(v) for v in value]
    return value


def _run_fraction(p: int) -> dict:
    rep = check_interpretation(fraction_code(), make_field(p), (), make_field(p))
    return {
        "status": rep.status,
        "classes": rep.class_count,
        "isomorphic": rep.mu_bar is not None,
    }


for _p in (2, 3, 5, 7, 11, 13):
    _register(
        f"frac_field_{_p}",
        "Formal fractions over a prime field collapse back to the field.",
        {"status": "ok", "classes": _p, "isomorphic": True},
    )(partial(_run_fraction, _p))


@_register(
    "frac_z6",
    "Over a composite modulus the fraction equivalence is not transitive.",
    {
        "status": "ac_failed",
        "condition": "transitive",
        "witness": [[0, 1], [0, 2], [3, 1]],
    },
)
def _run_frac_z6() -> dict:
    rep = check_interpretation(fraction_code(), make_ring(6), (), make_ring(6))
    return {
        "status": rep.status,
        "condition": rep.ac_failure[0],
        "witness": _listify(rep.ac_failure[1]),
    }


def _run_commutator(n: int) -> dict:
    base = make_heisenberg(n)
    rep = check_interpretation(commutator_ring_code(), base, (n * n, n), make_ring(n))
    return {
        "status": rep.status,
        "classes": rep.class_count,
        "labels": list(rep.mu_bar) if rep.mu_bar is not None else None,
    }


for _n in (2, 3, 5):
    _register(
        f"commutator_ut3_z{_n}",
        "The commutator-ring code recovers the scalars from the "
        "unitriangular group, with the standard generator pair as parameters.",
        {"status": "ok", "classes": _n, "labels": list(range(_n))},
    )(partial(_run_commutator, _n))


def _run_centered_pairs(n: int) -> dict:
    base = make_heisenberg(n)
    ev = Evaluator(base)
    rc = centered_pair_code()
    rep = check_regular(rc, base, make_ring(n), evaluator=ev)
    sols = ev.definable(rc.descriptor, ("y1", "y2"))
    return {
        "status": rep.status,
        "descriptors": rep.descriptor_count,
        "standard_pair": bool(sols[n * n, n]),
    }


for _n, _count in ((2, 24), (3, 432), (5, 12000)):
    _register(
        f"centered_pairs_z{_n}",
        "Every descriptor-selected parameter pair gives the scalar ring.",
        {"status": "ok", "descriptors": _count, "standard_pair": True},
    )(partial(_run_centered_pairs, _n, _count))


def _run_corner_homotopy(n: int) -> dict:
    rep = check_homotopy(
        unitriangular_code(),
        twisted_unitriangular_code(),
        make_ring(n),
        corner_connector(),
    )
    return {"status": rep.status, "classes": len(rep.class_map)}


for _n in (2, 3, 4, 5, 6):
    _register(
        f"corner_homotopy_z{_n}",
        "The two unitriangular codes differ by a definable change of corner.",
        {"status": "ok", "classes": _n**3},
    )(partial(_run_corner_homotopy, _n))


def _run_composition(n: int) -> dict:
    group_in_group = compose(unitriangular_code(), commutator_ring_code())
    ring_in_ring = compose(commutator_ring_code(), unitriangular_code())
    audit_g = audit_composition(
        unitriangular_code(),
        commutator_ring_code(),
        make_heisenberg(n),
        (),
        (n * n, n),
    )
    audit_r = audit_composition(
        commutator_ring_code(),
        unitriangular_code(),
        make_ring(n),
        ((1, 0, 0), (0, 1, 0)),
        (),
    )
    rep = check_interpretation(
        ring_in_ring, make_ring(n), (1, 0, 0, 0, 1, 0), make_ring(n)
    )
    return {
        "status": rep.status,
        "group_in_group": [group_in_group.dim, group_in_group.par_dim],
        "ring_in_ring": [ring_in_ring.dim, ring_in_ring.par_dim],
        "audit_group": audit_g.ok,
        "audit_ring": audit_r.ok,
        "classes": rep.class_count,
        "isomorphic": rep.mu_bar is not None,
    }


for _n in (3, 5):
    _register(
        f"composition_z{_n}",
        "Composing the unitriangular and commutator-ring codes in both "
        "orders: shapes, staged-quotient audits, and the ring-in-ring "
        "round trip back to the scalars.",
        {
            "status": "ok",
            "group_in_group": [3, 2],
            "ring_in_ring": [3, 6],
            "audit_group": True,
            "audit_ring": True,
            "classes": _n,
            "isomorphic": True,
        },
    )(partial(_run_composition, _n))


@_register(
    "four_squares_z7",
    "Sums of four squares cover all of Z_7, so the code is degenerate there.",
    {"status": "ok", "classes": 7, "isomorphic": True, "carrier_is_everything": True},
)
def _run_four_squares() -> dict:
    rep = check_interpretation(four_squares_code(), make_ring(7), (), make_ring(7))
    full = all(len(cls) == 1 for cls in rep.quotient.carrier) if rep.quotient else False
    return {
        "status": rep.status,
        "classes": rep.class_count,
        "isomorphic": rep.mu_bar is not None,
        "carrier_is_everything": full and rep.class_count == 7,
    }


@_register(
    "robinson_integers",
    "Induction shell over a quadratic form; parsed and classified only.",
    {"status": "parse_only", "syntax_class": "Pi(3)"},
)
def _run_robinson() -> dict:
    f = robinson_integer_formula()
    return {"status": "parse_only", "syntax_class": str(classify(f))}


@_register(
    "centralizer_ring",
    "Ring on a centralizer with externally supplied multiplication; "
    "no finite base realizes the extended language, so parse only.",
    {"status": "parse_only", "dim": 1, "par": 1, "diophantine": True},
)
def _run_centralizer() -> dict:
    c = centralizer_ring_code()
    plain = all(
        is_diophantine(f)
        for f in (c.U, c.E, *c.interp.values())
    )
    return {
        "status": "parse_only",
        "dim": c.dim,
        "par": c.par_dim,
        "diophantine": plain,
    }


@_register(
    "bi_frac_field_5",
    "Fractions over F_5 are bi-interpretable with the field itself.",
    {"status": "ok", "clauses": ["1a", "1b", "2a", "2b", "3"]},
)
def _run_bi_fraction() -> dict:
    rep = check_bi(fraction_identity_bi("strong"), make_field(5), make_field(5))
    return {"status": rep.status, "clauses": [c.label for c in rep.clauses]}


def entry(name: str) -> CatalogEntry:
    found = ENTRIES.get(name.lower())
    if found is None:
        known = ", ".join(ENTRIES)
        raise ValueError(f"unknown entry {name!r} (known: {known})")
    return found


def entry_names() -> list[str]:
    return list(ENTRIES)


def run_all(names=None) -> dict:
    """Replay entries and compare against their stored reports.

    Returns {"ok": bool, "entries": {name: {"ok", "report", "expected"}}}.
    """
    picked = [entry(n) for n in names] if names is not None else list(ENTRIES.values())
    results = {}
    for e in picked:
        report = e.run()
        results[e.name] = {
            "ok": report == e.expected,
            "report": report,
            "expected": e.expected,
        }
    return {"ok": all(r["ok"] for r in results.values()), "entries": results}


# ---------------------------------------------------------------------------
# Named triples for sweep-style checks


def reduction_triples():
    """(name, code, base, params, reference) tuples whose quotients are the
    reference structures; used for translation-against-quotient sweeps."""
    return [
        ("identity_z5", identity_code(RING), make_ring(5), (), make_ring(5)),
        ("frac_f5", fraction_code(), make_field(5), (), make_field(5)),
        ("frac_f7", fraction_code(), make_field(7), (), make_field(7)),
        (
            "commutator_ut3_z3",
            commutator_ring_code(),
            make_heisenberg(3),
            (9, 3),
            make_ring(3),
        ),
        ("ut3_z4", unitriangular_code(), make_ring(4), (), make_heisenberg(4)),
        ("four_squares_z7", four_squares_code(), make_ring(7), (), make_ring(7)),
    ]


def admissibility_triples():
    """The reduction triples plus the known admissibility failure."""
    return reduction_triples() + [
        ("frac_z6", fraction_code(), make_ring(6), (), make_ring(6)),
    ]


# ---------------------------------------------------------------------------
# Workspace files


def _ring_structure_block(name: str, n: int) -> str:
    return (
        f"structure {name} : ring {{\n"
        f"  universe {n};\n"
        "  const 0 = 0;\n"
        f"  const 1 = {1 % n};\n"
        f"  fn add = mod_add({n});\n"
        f"  fn mul = mod_mul({n});\n"
        "}\n"
    )


def _group_structure_block(name: str, n: int) -> str:
    return (
        f"structure {name} : group {{\n"
        f"  universe {n**3};\n"
        "  const e = 0;\n"
        f"  fn mul = heis_mul({n});\n"
        f"  fn inv = heis_inv({n});\n"
        "}\n"
    )


_RING_LANG_BLOCK = (
    "language ring {\n"
    "  const 0;\n"
    "  const 1;\n"
    "  fn add/2;\n"
    "  fn mul/2;\n"
    "}\n"
)

_GROUP_LANG_BLOCK = (
    "language group {\n"
    "  const e;\n"
    "  fn mul/2;\n"
    "  fn inv/1;\n"
    "}\n"
)


def _code_block(name: str, c: InterpretationCode | RegularCode) -> str:
    doc = dsl.Document()
    inner = c.code if isinstance(c, RegularCode) else c
    doc.languages[inner.source.name] = inner.source
    doc.languages[inner.target.name] = inner.target
    doc.codes[name] = c
    doc.order.append(("code", name))
    return dsl.dumps(doc)


def _example_sources() -> dict[str, str]:
    frac_block = _code_block("frac", fraction_code())
    sources = {
        "fractions.ikit": "\n".join(
            [
                _RING_LANG_BLOCK,
                _ring_structure_block("f5", 5),
                frac_block,
                _code_block("identity", identity_code(RING)),
                "formula invertible : ring := exists u. mul(u, x) = 1;\n",
                "homotopy {\n"
                "  codes frac identity;\n"
                f"  theta := {FRACTION_THETA};\n"
                "  mode with_params;\n"
                "}\n",
                "bi {\n"
                "  gamma frac;\n"
                "  delta identity;\n"
                f"  thetaA := {FRACTION_THETA};\n"
                f"  thetaB := {FRACTION_THETA};\n"
                "  mode strong;\n"
                "}\n",
            ]
        ),
        "unitriangular.ikit": "\n".join(
            [
                _RING_LANG_BLOCK,
                _ring_structure_block("z3", 3),
                _code_block("ut3", unitriangular_code()),
                _code_block("ut3_twisted", twisted_unitriangular_code()),
                "homotopy {\n"
                "  codes ut3 ut3_twisted;\n"
                "  theta := x2_1 = x1_1 & x2_2 = x1_2"
                " & add(x2_3, mul(x1_1, x1_2)) = x1_3;\n"
                "  mode with_params;\n"
                "}\n",
            ]
        ),
        "commutator.ikit": "\n".join(
            [
                _GROUP_LANG_BLOCK,
                _group_structure_block("ut3_z2", 2),
                _code_block("commutator_ring", commutator_ring_code()),
                _code_block("commutator_ring_regular", centered_pair_code()),
            ]
        ),
        "four_squares.ikit": "\n".join(
            [
                _RING_LANG_BLOCK,
                _ring_structure_block("z7", 7),
                _code_block("four_squares", four_squares_code()),
            ]
        ),
        "robinson.ikit": "\n".join(
            [
                _RING_LANG_BLOCK,
                "formula robinson : ring := "
                + dsl.print_formula(robinson_integer_formula())
                + ";\n",
            ]
        ),
        "centralizer.ikit": "\n".join(
            [
                "language bsgroup {\n"
                "  const e;\n"
                "  fn mul/2;\n"
                "  fn inv/1;\n"
                "  rel otimes/3;\n"
                "}\n",
                _RING_LANG_BLOCK,
                _code_block("centralizer_ring", centralizer_ring_code()),
            ]
        ),
    }
    return sources


def example_names() -> list[str]:
    return list(_example_sources())


def example_text(name: str) -> str:
    """The canonical text of one packaged workspace file, regenerated."""
    sources = _example_sources()
    if name not in sources:
        known = ", ".join(sources)
        raise ValueError(f"unknown example {name!r} (known: {known})")
    return dsl.dumps(dsl.loads(sources[name], generators=GENERATORS))


def load_example(name: str) -> dsl.Document:
    """Parse one packaged workspace file."""
    path = resources.files(__package__) / "examples" / name
    return dsl.loads(path.read_text(), generators=GENERATORS)


def write_examples(directory) -> list[str]:
    """Regenerate every workspace file under the given directory."""
    from pathlib import Path

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in example_names():
        (out / name).write_text(example_text(name))
        written.append(name)
    return written
