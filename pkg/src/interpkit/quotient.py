"""Interpreted structures over finite bases.

`build` materializes the structure a code presents over a concrete finite
structure and parameter tuple: the membership set, its partition into
equivalence classes, and the induced operation tables.  Everything the
admissibility conditions demand is checked along the way, in the order the
conditions are emitted, and the first failure aborts the build with a
witness.  The checks run on evaluated truth arrays restricted to the
membership support, so they stay cheap even when the one-sentence
admissibility formulas would be too large to evaluate directly.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .codes import (
    CodeError,
    InterpretationCode,
    RegularCode,
    compose,
    param_names,
    translate_with_params,
)
from .logic import Formula, Language, free_vars, max_param, tuple_var, tuple_vars
from .models import Evaluator, FiniteStructure, find_isomorphism


class AdmissibilityViolation(Exception):
    """A condition required for the quotient to be well-defined fails.

    `condition` is the label of the failing condition and `witness` the
    tuple of membership tuples exhibiting the failure, first in ascending
    order (empty for failed existence conditions).
    """

    def __init__(self, condition: str, witness: tuple):
        self.condition = condition
        self.witness = witness
        super().__init__(f"admissibility condition {condition!r} fails"
                         + (f"; witness {witness}" if witness else ""))


@dataclass
class QuotientStructure:
    """The structure a code presents over a finite base.

    `carrier[i]` is the set of base tuples forming abstract element i;
    classes are numbered by their lexicographically least member.  `tables`
    is the induced finite structure over the code's source language, with
    universe indices matching `carrier`.  `mu` sends each membership tuple
    to its class index.
    """

    source_lang: Language
    base: FiniteStructure
    code: InterpretationCode
    params: tuple[int, ...]
    carrier: tuple[frozenset, ...]
    tables: FiniteStructure
    mu: dict

    @property
    def representatives(self) -> tuple:
        """Lexicographically least member of each class."""
        return tuple(min(cls) for cls in self.carrier)

    def class_of(self, tup) -> int:
        return self.mu[tuple(int(v) for v in tup)]

    def __repr__(self) -> str:
        return (
            f"QuotientStructure({self.source_lang.name!r}, classes={len(self.carrier)},"
            f" tuples={len(self.mu)})"
        )


def build(
    code: InterpretationCode,
    base: FiniteStructure,
    params=(),
    evaluator: Evaluator | None = None,
) -> QuotientStructure:
    """Construct the interpreted structure, or raise AdmissibilityViolation.

    Pass `evaluator` to share one evaluation cache across many builds over
    the same base.
    """
    params = tuple(int(p) for p in params)
    if len(params) != code.par_dim:
        raise CodeError(
            f"expected {code.par_dim} parameter values, got {len(params)}"
        )
    ev = evaluator if evaluator is not None else Evaluator(base)
    n = code.dim

    u_arr = ev.definable(code.U, tuple_vars(1, n), params)
    coords = np.argwhere(u_arr)
    if coords.shape[0] == 0:
        raise AdmissibilityViolation("nonempty", ())
    utuples = [tuple(int(v) for v in row) for row in coords]
    m = len(utuples)
    supports = [np.unique(coords[:, j]) for j in range(n)]
    positions = [{int(v): k for k, v in enumerate(s)} for s in supports]
    # per-coordinate support positions of every membership tuple
    posidx = np.array(
        [[positions[j][t[j]] for j in range(n)] for t in utuples], dtype=np.intp
    )

    def on_membership(formula: Formula, nslots: int) -> np.ndarray:
        """Truth array of a slot formula restricted to membership tuples."""
        domains = {}
        names = []
        for s in range(1, nslots + 1):
            for j in range(1, n + 1):
                name = tuple_var(s, j)
                names.append(name)
                domains[name] = supports[j - 1]
        arr = ev.definable(formula, names, params, domains=domains)
        idx = []
        for s in range(nslots):
            shape = [1] * nslots
            shape[s] = m
            for j in range(n):
                idx.append(posidx[:, j].reshape(shape))
        return arr[tuple(idx)]

    e_u = on_membership(code.E, 2)

    diag = np.diagonal(e_u)
    if not diag.all():
        i = int(np.argmin(diag))
        raise AdmissibilityViolation("reflexive", (utuples[i],))

    asym = e_u & ~e_u.T
    if asym.any():
        i, j = (int(v) for v in np.argwhere(asym)[0])
        raise AdmissibilityViolation("symmetric", (utuples[i], utuples[j]))

    closure = (e_u.astype(np.uint8) @ e_u.astype(np.uint8)).astype(bool)
    if (closure & ~e_u).any():
        witness = None
        for i in range(m):
            for j in np.nonzero(e_u[i])[0]:
                ks = np.nonzero(e_u[j] & ~e_u[i])[0]
                if ks.size:
                    witness = (utuples[i], utuples[int(j)], utuples[int(ks[0])])
                    break
            if witness:
                break
        raise AdmissibilityViolation("transitive", witness)

    # rows of a verified equivalence are its classes; scanning ascending
    # numbers them by least member
    cls = np.full(m, -1, dtype=np.intp)
    members_of = []
    for i in range(m):
        if cls[i] < 0:
            members = np.nonzero(e_u[i])[0]
            cls[members] = len(members_of)
            members_of.append(members)
    k = len(members_of)
    rep_idx = np.array([int(mem[0]) for mem in members_of], dtype=np.intp)
    canon = rep_idx[cls]

    def check_congruence(symbol: str, q_u: np.ndarray, nslots: int) -> None:
        sel = []
        for s in range(nslots):
            shape = [1] * nslots
            shape[s] = m
            sel.append(canon.reshape(shape))
        mismatch = q_u != q_u[tuple(sel)]
        if mismatch.any():
            first = [int(v) for v in np.argwhere(mismatch)[0]]
            witness = tuple(utuples[i] for i in first) + tuple(
                utuples[int(canon[i])] for i in first
            )
            raise AdmissibilityViolation(f"congruence[{symbol}]", witness)

    def table_slice(q_u: np.ndarray, nslots: int) -> np.ndarray:
        return q_u[np.ix_(*([rep_idx] * nslots))]

    rel_interp = {}
    for r, arity in code.source.relations.items():
        q_u = on_membership(code.interp[r], arity)
        check_congruence(r, q_u, arity)
        rel_interp[r] = {
            tuple(int(v) for v in row) for row in np.argwhere(table_slice(q_u, arity))
        }

    const_interp = {}
    for c in code.source.constants:
        c_u = on_membership(code.interp[c], 1)
        hits = np.nonzero(c_u)[0]
        if hits.size == 0:
            raise AdmissibilityViolation(f"defined[{c}]", ())
        first_cls = int(cls[hits[0]])
        strays = hits[cls[hits] != first_cls]
        if strays.size:
            raise AdmissibilityViolation(
                f"unique[{c}]",
                (utuples[int(hits[0])], utuples[int(strays[0])]),
            )
        const_interp[c] = first_cls

    func_interp = {}
    for fname, arity in code.source.functions.items():
        q_u = on_membership(code.interp[fname], arity + 1)
        check_congruence(fname, q_u, arity + 1)
        has_output = q_u.any(axis=-1)
        if not has_output.all():
            first = [int(v) for v in np.argwhere(~has_output)[0]]
            raise AdmissibilityViolation(
                f"total[{fname}]", tuple(utuples[i] for i in first)
            )
        out_shape = (1,) * arity + (m,)
        out_hi = np.where(q_u, cls.reshape(out_shape), -1).max(axis=-1)
        out_lo = np.where(q_u, cls.reshape(out_shape), k).min(axis=-1)
        split = out_hi != out_lo
        if split.any():
            first = [int(v) for v in np.argwhere(split)[0]]
            outputs = np.nonzero(q_u[tuple(first)])[0]
            o1 = int(outputs[0])
            o2 = int(outputs[cls[outputs] != cls[o1]][0])
            raise AdmissibilityViolation(
                f"functional[{fname}]",
                tuple(utuples[i] for i in first) + (utuples[o1], utuples[o2]),
            )
        func_interp[fname] = table_slice(out_hi, arity).tolist()

    tables = FiniteStructure(code.source, k, const_interp, func_interp, rel_interp)
    carrier = tuple(
        frozenset(utuples[int(i)] for i in mem) for mem in members_of
    )
    mu = {utuples[i]: int(cls[i]) for i in range(m)}
    return QuotientStructure(code.source, base, code, params, carrier, tables, mu)


# ---------------------------------------------------------------------------
# Interpretation checking


@dataclass
class InterpretationReport:
    """Outcome of checking one (code, base, params) triple against a
    reference structure."""

    status: str  # "ok" | "ac_failed" | "not_isomorphic"
    params: tuple[int, ...]
    quotient: QuotientStructure | None
    ac_failure: tuple[str, tuple] | None
    mu_bar: tuple | None  # class index -> reference element
    coordinate_map: dict | None  # base tuple -> reference element
    seconds: dict[str, float]

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def class_count(self) -> int | None:
        return len(self.quotient.carrier) if self.quotient else None

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "params": list(self.params),
            "class_count": self.class_count,
            "ac_failures": (
                []
                if self.ac_failure is None
                else [
                    {
                        "condition": self.ac_failure[0],
                        "witness": [list(t) for t in self.ac_failure[1]],
                    }
                ]
            ),
            "isomorphism": (
                None
                if self.mu_bar is None
                else {str(i): int(v) for i, v in enumerate(self.mu_bar)}
            ),
            "timings": self.seconds,
        }


def check_interpretation(
    code: InterpretationCode,
    base: FiniteStructure,
    params,
    reference: FiniteStructure,
    evaluator: Evaluator | None = None,
) -> InterpretationReport:
    """Build the quotient and match it against a reference structure.

    Admissibility failures become report content; no isomorphism search is
    attempted in that case.
    """
    params = tuple(int(p) for p in params)
    t0 = time.perf_counter()
    try:
        q = build(code, base, params, evaluator=evaluator)
    except AdmissibilityViolation as bad:
        return InterpretationReport(
            "ac_failed",
            params,
            None,
            (bad.condition, bad.witness),
            None,
            None,
            {"build": time.perf_counter() - t0},
        )
    t1 = time.perf_counter()
    iso = find_isomorphism(q.tables, reference)
    seconds = {"build": t1 - t0, "isomorphism": time.perf_counter() - t1}
    if iso is None:
        return InterpretationReport(
            "not_isomorphic", params, q, None, None, None, seconds
        )
    coord = {t: iso[c] for t, c in q.mu.items()}
    return InterpretationReport("ok", params, q, None, iso, coord, seconds)


@dataclass
class RegularReport:
    """Outcome of checking a regular code: every parameter tuple the
    descriptor selects must give a valid interpretation."""

    status: str  # "ok" | "empty_descriptor" | "failed"
    descriptor_count: int
    failures: tuple  # (params, status, detail) triples
    seconds: float

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "descriptor_count": self.descriptor_count,
            "failures": [
                {"params": list(p), "status": s, "detail": d}
                for p, s, d in self.failures
            ],
            "timings": {"total": self.seconds},
        }


def check_regular(
    rc: RegularCode,
    base: FiniteStructure,
    reference: FiniteStructure,
    evaluator: Evaluator | None = None,
) -> RegularReport:
    t0 = time.perf_counter()
    ev = evaluator if evaluator is not None else Evaluator(base)
    kk = rc.code.par_dim
    if kk == 0:
        sols = [()] if ev.holds(rc.descriptor) else []
    else:
        arr = ev.definable(rc.descriptor, param_names(kk))
        sols = [tuple(int(v) for v in row) for row in np.argwhere(arr)]
    if not sols:
        return RegularReport(
            "empty_descriptor", 0, (), time.perf_counter() - t0
        )
    failures = []
    for p in sols:
        report = check_interpretation(rc.code, base, p, reference, evaluator=ev)
        if not report.ok:
            detail = (
                report.ac_failure[0]
                if report.status == "ac_failed"
                else "quotient not isomorphic to the reference"
            )
            failures.append((p, report.status, detail))
    status = "ok" if not failures else "failed"
    return RegularReport(status, len(sols), tuple(failures), time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Composition coherence


@dataclass
class CompositionAudit:
    """Whether quotienting by a composed code agrees with quotienting in two
    stages, class by class."""

    ok: bool
    composite_classes: int
    iterated_classes: int
    detail: str

    @property
    def class_count(self) -> int:
        return self.composite_classes


def audit_composition(
    outer: InterpretationCode,
    inner: InterpretationCode,
    base: FiniteStructure,
    outer_param_tuples=(),
    inner_params=(),
    evaluator: Evaluator | None = None,
) -> CompositionAudit:
    """Check the two ways of interpreting through a chain of codes agree.

    `outer_param_tuples` gives each outer parameter as an inner-dimension
    tuple over the base; the composed code is built with those flattened in
    front of `inner_params`, while the staged build maps them through the
    inner quotient first.  The audit verifies the chunk-by-chunk class map
    is well-defined, bijective, and a full isomorphism of the two results.
    """
    outer_param_tuples = tuple(tuple(int(v) for v in t) for t in outer_param_tuples)
    inner_params = tuple(int(p) for p in inner_params)
    composite = compose(outer, inner)
    flat = tuple(v for t in outer_param_tuples for v in t) + inner_params
    qc = build(composite, base, flat, evaluator=evaluator)
    qd = build(inner, base, inner_params, evaluator=evaluator)
    staged_params = tuple(qd.mu[t] for t in outer_param_tuples)
    qg = build(outer, qd.tables, staged_params)

    m = inner.dim
    induced: dict[int, int] = {}
    for tup, ci in qc.mu.items():
        chunks = [tup[j * m : (j + 1) * m] for j in range(outer.dim)]
        if any(chunk not in qd.mu for chunk in chunks):
            return CompositionAudit(
                False, len(qc.carrier), len(qg.carrier),
                f"composite tuple {tup} leaves the inner domain",
            )
        image = tuple(qd.mu[chunk] for chunk in chunks)
        if image not in qg.mu:
            return CompositionAudit(
                False, len(qc.carrier), len(qg.carrier),
                f"image {image} of {tup} leaves the staged domain",
            )
        target = qg.mu[image]
        if induced.setdefault(ci, target) != target:
            return CompositionAudit(
                False, len(qc.carrier), len(qg.carrier),
                f"class {ci} maps to both {induced[ci]} and {target}",
            )
    if len(qc.carrier) != len(qg.carrier) or sorted(induced.values()) != list(
        range(len(qg.carrier))
    ):
        return CompositionAudit(
            False, len(qc.carrier), len(qg.carrier), "class map is not a bijection"
        )

    perm = [induced[i] for i in range(len(qc.carrier))]
    a, b = qc.tables, qg.tables
    for c in a.lang.constants:
        if perm[a.const_interp[c]] != b.const_interp[c]:
            return CompositionAudit(
                False, len(qc.carrier), len(qg.carrier),
                f"constant {c!r} disagrees",
            )
    for fname, arity in a.lang.functions.items():
        for args in itertools.product(range(a.size), repeat=arity):
            lhs = a.func_interp[fname]
            rhs = b.func_interp[fname]
            for v in args:
                lhs = lhs[v]
            for v in args:
                rhs = rhs[perm[v]]
            if perm[lhs] != rhs:
                return CompositionAudit(
                    False, len(qc.carrier), len(qg.carrier),
                    f"function {fname!r} disagrees at {args}",
                )
    for rname, arity in a.lang.relations.items():
        mapped = {
            tuple(perm[v] for v in tup) for tup in a.rel_interp[rname]
        }
        if mapped != b.rel_interp[rname]:
            return CompositionAudit(
                False, len(qc.carrier), len(qg.carrier),
                f"relation {rname!r} disagrees",
            )
    return CompositionAudit(True, len(qc.carrier), len(qg.carrier), "")


# ---------------------------------------------------------------------------
# Definable-set transfer


@dataclass
class PushforwardReport:
    """Comparison of a set defined in the quotient with the base-side set
    its translation defines."""

    ok: bool
    quotient_set: tuple  # tuples of class indices
    preimage: tuple  # flattened base tuples expected from the classes
    translated: tuple  # flattened base tuples the translated formula defines

    def as_dict(self) -> dict:
        return {
            "status": "ok" if self.ok else "mismatch",
            "quotient_set_size": len(self.quotient_set),
            "preimage_size": len(self.preimage),
            "translated_size": len(self.translated),
        }


def pushforward_set(
    q: QuotientStructure,
    psi: Formula,
    variables=None,
    literals=None,
    mu_inverse=None,
) -> PushforwardReport:
    """Check that translating a quotient-side definition yields exactly the
    union of the defined classes, read as base tuples.

    `variables` fixes the free-variable list of psi (needed when psi does
    not mention some of them); element literals in psi resolve through
    `literals`, with preimages drawn from `mu_inverse` (default: the class
    representatives).
    """
    if variables is None:
        variables = free_vars(psi)
    variables = list(variables)

    literals = dict(literals or {})
    if mu_inverse is None:
        mu_inverse = {i: rep for i, rep in enumerate(q.representatives)}
    g = translate_with_params(
        psi, q.code, q.params, mu_inverse, literals=literals, variables=variables
    )

    top = max_param(psi)
    tab_params = tuple(literals.get(i, 0) for i in range(1, top + 1))
    ev_q = Evaluator(q.tables)
    arr = ev_q.definable(psi, variables, tab_params)
    if variables:
        quotient_set = [tuple(int(v) for v in row) for row in np.argwhere(arr)]
    else:
        quotient_set = [()] if bool(arr) else []
    ev_b = Evaluator(q.base)
    flat_names = [name for v in variables for name in g.var_map[v]]
    if flat_names:
        t_arr = ev_b.definable(g.formula, flat_names, g.params)
        translated = {tuple(int(v) for v in row) for row in np.argwhere(t_arr)}
    else:
        translated = {()} if ev_b.holds(g.formula, g.params) else set()

    expected = set()
    for classes in quotient_set:
        combos = [()]
        for c in classes:
            combos = [pre + t for pre in combos for t in sorted(q.carrier[c])]
        expected.update(combos)

    return PushforwardReport(
        expected == translated,
        tuple(sorted(quotient_set)),
        tuple(sorted(expected)),
        tuple(sorted(translated)),
    )
