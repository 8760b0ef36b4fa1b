"""Certificate checking for definable isomorphisms between interpreted copies.

Two codes evaluated over the same finite base each present a structure; a
connector formula theta(x-bar-1, x-bar-2) claims that relating membership
tuples of the first to membership tuples of the second induces an isomorphism
of the two quotients.  This module checks such claims by enumeration: a
connector certificate either passes, or fails at a named condition with a
concrete witness.

Beyond the single-pair check there are family versions (every parameter pair
a descriptor admits, with an optional inner descriptor selecting auxiliary
elements), algebra on certificates (composition along a chain, reversal),
and the two derived notions built from connectors: a code being a right
inverse of another, and a full bi-interpretation certificate between two
finite structures.

Grounding convention: when a connector is evaluated, its parameter slots are
filled with the first code's parameters, then the second code's, then any
extra elements the certificate carries, in that order.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .codes import (
    CodeError,
    InterpretationCode,
    RegularCode,
    compose,
    exists_tuple,
    identity_code,
    param_names,
    translate,
)
from .logic import (
    Formula,
    Param,
    Var,
    conj,
    free_vars,
    max_param,
    params_to_vars,
    subst_params,
    subst_vars,
    tuple_var,
    tuple_vars,
)
from .models import FiniteStructure, find_isomorphism, iter_isomorphisms
from .quotient import QuotientStructure, build, check_regular

HOMOTOPY_MODES = ("with_params", "strong", "regular", "descriptor_free")
BI_MODES = ("weak", "strong", "regular", "regular_strong")


def _plain(value):
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    return value


@dataclass(frozen=True)
class CheckResult:
    """One named condition with its outcome and, on failure, a witness."""

    label: str
    ok: bool
    witness: tuple | None = None

    def as_dict(self) -> dict:
        return {"label": self.label, "ok": self.ok, "witness": _plain(self.witness)}


@dataclass(frozen=True)
class HomotopyCertificate:
    """A claimed definable isomorphism between two interpreted copies.

    `theta` relates slot-1 tuples of the first code to slot-2 tuples of the
    second.  `extras` supplies values for any parameter slots beyond the two
    codes' own blocks.  Strong mode compares the induced map against the two
    supplied coordinate maps `mu1` and `mu2` (membership tuple -> label).
    In the family modes `delta` selects the extra elements from the two
    parameter tuples; its free variables must be w1 .. wl.
    """

    theta: Formula
    delta: Formula | None = None
    mode: str = "with_params"
    extras: tuple[int, ...] = ()
    mu1: dict | None = None
    mu2: dict | None = None

    def __post_init__(self) -> None:
        if self.mode not in HOMOTOPY_MODES:
            raise CodeError(f"unknown homotopy mode {self.mode!r}")
        object.__setattr__(self, "extras", tuple(int(v) for v in self.extras))


@dataclass(frozen=True)
class HomotopyReport:
    status: str  # "ok" | "failed"
    checks: tuple[CheckResult, ...]
    class_map: tuple[int, ...] | None
    seconds: dict[str, float]

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def failure(self) -> CheckResult | None:
        return next((c for c in self.checks if not c.ok), None)

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "checks": [c.as_dict() for c in self.checks],
            "class_map": list(self.class_map) if self.class_map is not None else None,
            "timings": {k: round(v, 6) for k, v in self.seconds.items()},
        }


# ---------------------------------------------------------------------------
# Connector construction helpers


def _shift_params(f: Formula, by: int) -> Formula:
    if by == 0:
        return f
    top = max_param(f)
    if top == 0:
        return f
    return subst_params(f, {i: Param(i + by) for i in range(1, top + 1)})


def self_connector(code: InterpretationCode) -> HomotopyCertificate:
    """The connector relating a copy to itself (or to any equivalent copy):
    both tuples are members and the first code's E holds between them.

    With parameters, the first membership conjunct reads the first block and
    the second the second block, so the certificate also connects the same
    code at two parameter tuples presenting equal copies.
    """
    k = code.par_dim
    u2 = _shift_params(code.u_at(2), k)
    theta = conj([code.U, u2, code.E])
    return HomotopyCertificate(theta)


def automorphism_connector(
    code: InterpretationCode, theta_aut: Formula
) -> HomotopyCertificate:
    """Connector induced by a definable automorphism of the base.

    `theta_aut` must define the automorphism's graph on single elements,
    written over the free variables v1 and v2; its own parameter slots are
    shifted past the two code parameter blocks, so their values go in the
    certificate's extras.  The connector relates x-bar-1 to x-bar-2 exactly
    when some member tuple equivalent to x-bar-1 is mapped coordinatewise to
    a member tuple equivalent to x-bar-2.
    """
    stray = [v for v in free_vars(theta_aut) if v not in ("v1", "v2")]
    if stray:
        raise CodeError(f"automorphism formula uses {stray[0]!r}, not v1/v2")
    n, k = code.dim, code.par_dim
    vnames = {i: [f"v{i}_{j}" for j in range(1, n + 1)] for i in (1, 2)}
    parts = []
    for i in (1, 2):
        shift = (i - 1) * k
        to_v = {tuple_var(1, j): Var(vnames[i][j - 1]) for j in range(1, n + 1)}
        e_map = {}
        for j in range(1, n + 1):
            e_map[tuple_var(1, j)] = Var(tuple_var(i, j))
            e_map[tuple_var(2, j)] = Var(vnames[i][j - 1])
        parts.append(_shift_params(code.u_at(i), shift))
        parts.append(_shift_params(subst_vars(code.U, to_v), shift))
        parts.append(_shift_params(subst_vars(code.E, e_map), shift))
    moved = _shift_params(theta_aut, 2 * k)
    for j in range(1, n + 1):
        parts.append(
            subst_vars(
                moved, {"v1": Var(vnames[1][j - 1]), "v2": Var(vnames[2][j - 1])}
            )
        )
    theta = exists_tuple(vnames[1] + vnames[2], conj(parts))
    return HomotopyCertificate(theta)


# ---------------------------------------------------------------------------
# The connector check engine


def _mu_labels(q: QuotientStructure, mu, label: str):
    """Validate that `mu` is constant on classes and separates them."""
    if mu is None:
        return CheckResult(label, False, ("missing",)), None
    if set(mu) != set(q.mu):
        t = min(set(mu) ^ set(q.mu))
        return CheckResult(label, False, ("domain", t)), None
    labels = [None] * len(q.carrier)
    for t in sorted(mu):
        c = q.mu[t]
        if labels[c] is None:
            labels[c] = mu[t]
        elif labels[c] != mu[t]:
            return (
                CheckResult(label, False, ("class_constant", min(q.carrier[c]), t)),
                None,
            )
    owner: dict = {}
    for c, v in enumerate(labels):
        if v in owner:
            w = (min(q.carrier[owner[v]]), min(q.carrier[c]))
            return CheckResult(label, False, ("injective",) + w), None
        owner[v] = c
    return CheckResult(label, True), labels


def _mapped_structure_checks(t1, lam: np.ndarray, t2) -> list[CheckResult]:
    """Compare two finite structures along a class relabeling, symbol by
    symbol, stopping at the first discrepancy."""
    out: list[CheckResult] = []
    lang = t1.lang
    for c in lang.constants:
        got, want = int(lam[t1.const_interp[c]]), int(t2.const_interp[c])
        ok = got == want
        out.append(CheckResult(f"constant {c}", ok, None if ok else (got, want)))
        if not ok:
            return out
    for fname in lang.functions:
        ta = np.asarray(t1.func_interp[fname])
        tb = np.asarray(t2.func_interp[fname])
        grids = np.indices(ta.shape)
        lhs = lam[ta]
        rhs = tb[tuple(lam[g] for g in grids)]
        neq = lhs != rhs
        witness = None
        if neq.any():
            w = tuple(int(v) for v in np.argwhere(neq)[0])
            witness = (w, int(lhs[w]), int(rhs[w]))
        out.append(CheckResult(f"function {fname}", witness is None, witness))
        if witness is not None:
            return out
    for rname in lang.relations:
        image = {tuple(int(lam[i]) for i in tp) for tp in t1.rel_interp[rname]}
        other = {tuple(int(i) for i in tp) for tp in t2.rel_interp[rname]}
        ok = image == other
        witness = None if ok else min(image ^ other)
        out.append(CheckResult(f"relation {rname}", ok, witness))
        if not ok:
            return out
    return out


def _connector_checks(
    q1: QuotientStructure,
    q2: QuotientStructure,
    ev,
    theta: Formula,
    params,
    mu1=None,
    mu2=None,
    strong: bool = False,
):
    """Run the full condition ladder for one grounded connector.

    Returns the list of results (stopping at the first failure) and, once
    the relation is known to be a bijection on classes, the class map.
    """
    if q1.source_lang != q2.source_lang:
        raise CodeError("the two interpretations present different languages")
    n1, n2 = q1.code.dim, q2.code.dim
    names = tuple(tuple_vars(1, n1) + tuple_vars(2, n2))
    allowed = set(names)
    stray = [v for v in free_vars(theta) if v not in allowed]
    if stray:
        raise CodeError(f"connector uses {stray[0]!r} outside the two tuple slots")
    arr = ev.definable(theta, names, tuple(params))
    size = ev.size
    checks: list[CheckResult] = []

    members1 = sorted(q1.mu)
    members2 = sorted(q2.mu)
    m1 = np.array(members1, dtype=np.intp)
    m2 = np.array(members2, dtype=np.intp)

    # Every solution must pair a member of the first domain with a member of
    # the second; a connector true off the domains does not define anything.
    u1 = np.zeros((size,) * n1, dtype=bool)
    u1[tuple(m1.T)] = True
    u2 = np.zeros((size,) * n2, dtype=bool)
    u2[tuple(m2.T)] = True
    dom = u1.reshape(u1.shape + (1,) * n2) & u2.reshape((1,) * n1 + u2.shape)
    outside = arr & ~dom
    if outside.any():
        w = np.argwhere(outside)[0]
        witness = (
            tuple(int(v) for v in w[:n1]),
            tuple(int(v) for v in w[n1:]),
        )
        checks.append(CheckResult("domain", False, witness))
        return checks, None
    checks.append(CheckResult("domain", True))

    idx = tuple(m1[:, None, j] for j in range(n1)) + tuple(
        m2[None, :, j] for j in range(n2)
    )
    rel = arr[idx]
    cls1 = np.array([q1.mu[t] for t in members1], dtype=np.intp)
    cls2 = np.array([q2.mu[t] for t in members2], dtype=np.intp)
    c1, c2 = len(q1.carrier), len(q2.carrier)

    # The relation must not split classes: within one class pair it is all
    # true or all false.
    cnt = np.zeros((c1, c2), dtype=np.int64)
    np.add.at(
        cnt,
        (
            np.broadcast_to(cls1[:, None], rel.shape),
            np.broadcast_to(cls2[None, :], rel.shape),
        ),
        rel.astype(np.int64),
    )
    full = np.outer(np.bincount(cls1, minlength=c1), np.bincount(cls2, minlength=c2))
    mixed = (cnt > 0) & (cnt < full)
    if mixed.any():
        a, bb = (int(v) for v in np.argwhere(mixed)[0])
        rows = np.flatnonzero(cls1 == a)
        cols = np.flatnonzero(cls2 == bb)
        block = rel[np.ix_(rows, cols)]
        ri, ci = np.argwhere(block)[0]
        rj, cj = np.argwhere(~block)[0]
        witness = (
            (members1[rows[ri]], members2[cols[ci]]),
            (members1[rows[rj]], members2[cols[cj]]),
        )
        checks.append(CheckResult("saturation", False, witness))
        return checks, None
    checks.append(CheckResult("saturation", True))

    link = cnt > 0
    reps1 = q1.representatives
    reps2 = q2.representatives
    row = link.sum(axis=1)
    col = link.sum(axis=0)

    bad = np.flatnonzero(row > 1)
    if bad.size:
        a = int(bad[0])
        b1, b2 = (int(v) for v in np.flatnonzero(link[a])[:2])
        checks.append(
            CheckResult("functional", False, (reps1[a], reps2[b1], reps2[b2]))
        )
        return checks, None
    checks.append(CheckResult("functional", True))

    bad = np.flatnonzero(row == 0)
    if bad.size:
        checks.append(CheckResult("total", False, (reps1[int(bad[0])],)))
        return checks, None
    checks.append(CheckResult("total", True))

    bad = np.flatnonzero(col > 1)
    if bad.size:
        bb = int(bad[0])
        a1, a2 = (int(v) for v in np.flatnonzero(link[:, bb])[:2])
        checks.append(
            CheckResult("injective", False, (reps1[a1], reps1[a2], reps2[bb]))
        )
        return checks, None
    checks.append(CheckResult("injective", True))

    bad = np.flatnonzero(col == 0)
    if bad.size:
        checks.append(CheckResult("surjective", False, (reps2[int(bad[0])],)))
        return checks, None
    checks.append(CheckResult("surjective", True))

    lam = np.argmax(link, axis=1)
    structural = _mapped_structure_checks(q1.tables, lam, q2.tables)
    checks.extend(structural)
    if structural and not structural[-1].ok:
        return checks, None

    if strong:
        res1, _ = _mu_labels(q1, mu1, "coordinate_map_1")
        checks.append(res1)
        if not res1.ok:
            return checks, lam
        res2, _ = _mu_labels(q2, mu2, "coordinate_map_2")
        checks.append(res2)
        if not res2.ok:
            return checks, lam
        l1 = np.array([mu1[t] for t in members1], dtype=object)
        l2 = np.array([mu2[t] for t in members2], dtype=object)
        target = l1[:, None] == l2[None, :]
        diff = rel != target
        witness = None
        if diff.any():
            i, j = (int(v) for v in np.argwhere(diff)[0])
            witness = (members1[i], members2[j])
        checks.append(CheckResult("strong_graph", witness is None, witness))
    return checks, lam


# ---------------------------------------------------------------------------
# Single-pair check


def _code_params(obj):
    if isinstance(obj, InterpretationCode):
        return obj, ()
    if isinstance(obj, RegularCode):
        raise CodeError(
            "pass (code, params) here; regular codes go through "
            "check_regular_homotopy"
        )
    code, params = obj
    if isinstance(code, RegularCode):
        code = code.code
    return code, tuple(int(p) for p in params)


def check_homotopy(first, second, base: FiniteStructure, cert) -> HomotopyReport:
    """Check a connector between two grounded interpretations over one base.

    `first` and `second` are codes or (code, params) pairs.  The connector
    is evaluated over the whole universe, so solutions outside the two
    membership domains are failures, not noise.  In strong mode the induced
    map must additionally be the composite of the certificate's two
    coordinate maps.  Admissibility failures of either build propagate.
    """
    if cert.mode not in ("with_params", "strong"):
        raise CodeError(f"mode {cert.mode!r} needs check_regular_homotopy")
    strong = cert.mode == "strong"
    if strong and (cert.mu1 is None or cert.mu2 is None):
        raise CodeError("strong mode needs both coordinate maps on the certificate")
    code1, p1 = _code_params(first)
    code2, p2 = _code_params(second)
    ev = base.evaluator
    t0 = time.perf_counter()
    q1 = build(code1, base, p1, ev)
    q2 = build(code2, base, p2, ev)
    t1 = time.perf_counter()
    checks, lam = _connector_checks(
        q1, q2, ev, cert.theta, p1 + p2 + cert.extras, cert.mu1, cert.mu2, strong
    )
    seconds = {"build": t1 - t0, "connector": time.perf_counter() - t1}
    ok = all(c.ok for c in checks)
    return HomotopyReport(
        "ok" if ok else "failed",
        tuple(checks),
        tuple(int(v) for v in lam) if lam is not None else None,
        seconds,
    )


# ---------------------------------------------------------------------------
# Descriptor-quantified families


@dataclass(frozen=True)
class RegularHomotopyReport:
    """Outcome over every parameter pair two descriptors admit.

    `removable` records whether, pair by pair, all admitted extra tuples
    induced the same class map; it is None when some check failed."""

    status: str  # "ok" | "empty_descriptor" | "failed"
    count1: int
    count2: int
    connectors: int
    failures: tuple
    removable: bool | None
    seconds: dict[str, float]

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "count1": self.count1,
            "count2": self.count2,
            "connectors": self.connectors,
            "failures": [
                {
                    "params1": list(p1),
                    "params2": list(p2),
                    "extras": list(r) if r is not None else None,
                    "label": label,
                }
                for p1, p2, r, label in self.failures
            ],
            "removable": self.removable,
            "timings": {k: round(v, 6) for k, v in self.seconds.items()},
        }


def _descriptor_tuples(rc: RegularCode, ev) -> list[tuple[int, ...]]:
    k = rc.code.par_dim
    if k == 0:
        return [()] if ev.holds(rc.descriptor) else []
    arr = ev.definable(rc.descriptor, param_names(k))
    return [tuple(int(v) for v in row) for row in np.argwhere(arr)]


def _extra_names(delta: Formula) -> list[str]:
    names = free_vars(delta)
    want = [f"w{i}" for i in range(1, len(names) + 1)]
    if sorted(names) != sorted(want):
        raise CodeError("descriptor variables must be w1 .. wl")
    return want


def _ground_tuples(ev, delta, wnames, params) -> list[tuple[int, ...]]:
    arr = ev.definable(delta, wnames, params)
    if not wnames:
        return [()] if bool(arr) else []
    return [tuple(int(v) for v in row) for row in np.argwhere(arr)]


def check_regular_homotopy(
    rc1: RegularCode, rc2: RegularCode, base: FiniteStructure, cert
) -> RegularHomotopyReport:
    """Check a connector family over all descriptor-admitted parameter pairs.

    For every pair the certificate's descriptor must be solvable, and every
    solution must ground a passing connector.  Descriptor-free certificates
    skip the solvability step and ground the connector once per pair.
    """
    if not isinstance(rc1, RegularCode) or not isinstance(rc2, RegularCode):
        raise CodeError("both sides must be regular codes")
    if cert.mode == "descriptor_free":
        if cert.delta is not None:
            raise CodeError("descriptor-free certificates cannot carry a descriptor")
        wnames: list[str] = []
    elif cert.mode == "regular":
        if cert.delta is None:
            raise CodeError("regular mode needs a descriptor on the certificate")
        wnames = _extra_names(cert.delta)
        k12 = rc1.code.par_dim + rc2.code.par_dim
        if max_param(cert.delta) > k12:
            raise CodeError("descriptor parameters exceed the two parameter blocks")
    else:
        raise CodeError(f"mode {cert.mode!r} is not a family mode")
    t0 = time.perf_counter()
    ev = base.evaluator
    first = _descriptor_tuples(rc1, ev)
    second = _descriptor_tuples(rc2, ev)
    if not first or not second:
        return RegularHomotopyReport(
            "empty_descriptor",
            len(first),
            len(second),
            0,
            (),
            None,
            {"total": time.perf_counter() - t0},
        )
    failures = []
    connectors = 0
    varying = False
    builds2: dict[tuple, QuotientStructure] = {}
    for p1 in first:
        q1 = build(rc1.code, base, p1, ev)
        for p2 in second:
            q2 = builds2.get(p2)
            if q2 is None:
                q2 = builds2[p2] = build(rc2.code, base, p2, ev)
            if cert.delta is None:
                grounds = [()]
            else:
                grounds = _ground_tuples(ev, cert.delta, wnames, p1 + p2)
                if not grounds:
                    failures.append((p1, p2, None, "descriptor_unsolvable"))
                    continue
            maps = []
            for r in grounds:
                connectors += 1
                checks, lam = _connector_checks(
                    q1, q2, ev, cert.theta, p1 + p2 + r
                )
                bad = next((c for c in checks if not c.ok), None)
                if bad is not None:
                    failures.append((p1, p2, r, bad.label))
                else:
                    maps.append(tuple(int(v) for v in lam))
            if any(m != maps[0] for m in maps[1:]):
                varying = True
    status = "ok" if not failures else "failed"
    removable = None if failures else not varying
    return RegularHomotopyReport(
        status,
        len(first),
        len(second),
        connectors,
        tuple(failures),
        removable,
        {"total": time.perf_counter() - t0},
    )


# ---------------------------------------------------------------------------
# Certificate algebra


def _dims(obj) -> tuple[int, int]:
    code = obj.code if isinstance(obj, RegularCode) else obj
    return code.dim, code.par_dim


def invert_homotopy(cert, rc1, rc2) -> HomotopyCertificate:
    """Certificate for the reverse direction: the same connector read
    backwards, with the two slot blocks and parameter blocks swapped."""
    n1, k1 = _dims(rc1)
    n2, k2 = _dims(rc2)
    vmap: dict[str, Var] = {}
    for j in range(1, n1 + 1):
        vmap[tuple_var(1, j)] = Var(tuple_var(2, j))
    for j in range(1, n2 + 1):
        vmap[tuple_var(2, j)] = Var(tuple_var(1, j))
    pmap: dict[int, Param] = {}
    for i in range(1, k1 + 1):
        pmap[i] = Param(k2 + i)
    for i in range(1, k2 + 1):
        pmap[k1 + i] = Param(i)
    theta = subst_params(subst_vars(cert.theta, vmap), pmap)
    delta = None if cert.delta is None else subst_params(cert.delta, pmap)
    return HomotopyCertificate(theta, delta, cert.mode, cert.extras, cert.mu2, cert.mu1)


def compose_homotopies(cert12, cert23, rc1, rc2: RegularCode, rc3) -> HomotopyCertificate:
    """Chain two connector families through a shared middle interpretation.

    The middle tuple is quantified away inside the new connector, and the
    middle parameters move into the descriptor block: the result's extra
    elements are the first certificate's, then the second's, then a middle
    parameter tuple admitted by `rc2`'s descriptor.
    """
    for cert in (cert12, cert23):
        if cert.mode not in ("regular", "descriptor_free"):
            raise CodeError("only family certificates compose")
    if not isinstance(rc2, RegularCode):
        raise CodeError("the middle interpretation must carry its descriptor")
    n1, k1 = _dims(rc1)
    n2, k2 = _dims(rc2)
    n3, k3 = _dims(rc3)
    l12 = len(_extra_names(cert12.delta)) if cert12.delta is not None else 0
    l23 = len(_extra_names(cert23.delta)) if cert23.delta is not None else 0
    mid = [f"xm_{j}" for j in range(1, n2 + 1)]

    t12 = subst_vars(
        cert12.theta,
        {tuple_var(2, j): Var(mid[j - 1]) for j in range(1, n2 + 1)},
    )
    pmap12: dict[int, Param] = {}
    for i in range(1, k2 + 1):
        pmap12[k1 + i] = Param(k1 + k3 + l12 + l23 + i)
    for i in range(1, l12 + 1):
        pmap12[k1 + k2 + i] = Param(k1 + k3 + i)
    t12 = subst_params(t12, pmap12)

    t23 = subst_vars(
        cert23.theta,
        {tuple_var(1, j): Var(mid[j - 1]) for j in range(1, n2 + 1)},
    )
    pmap23: dict[int, Param] = {}
    for i in range(1, k2 + 1):
        pmap23[i] = Param(k1 + k3 + l12 + l23 + i)
    for i in range(1, k3 + 1):
        pmap23[k2 + i] = Param(k1 + i)
    for i in range(1, l23 + 1):
        pmap23[k2 + k3 + i] = Param(k1 + k3 + l12 + i)
    t23 = subst_params(t23, pmap23)

    theta = exists_tuple(mid, conj([t12, t23]))

    parts = []
    if cert12.delta is not None:
        parts.append(
            subst_params(
                cert12.delta,
                {k1 + i: Var(f"w{l12 + l23 + i}") for i in range(1, k2 + 1)},
            )
        )
    if cert23.delta is not None:
        d23 = subst_vars(
            cert23.delta,
            {f"w{i}": Var(f"w{l12 + i}") for i in range(1, l23 + 1)},
        )
        pmap: dict[int, object] = {
            i: Var(f"w{l12 + l23 + i}") for i in range(1, k2 + 1)
        }
        for i in range(1, k3 + 1):
            pmap[k2 + i] = Param(k1 + i)
        parts.append(subst_params(d23, pmap))
    parts.append(
        subst_vars(
            rc2.descriptor,
            {f"y{i}": Var(f"w{l12 + l23 + i}") for i in range(1, k2 + 1)},
        )
    )
    return HomotopyCertificate(theta, conj(parts), "regular")


# ---------------------------------------------------------------------------
# Right inverses


def _unpack3(obj):
    parts = tuple(obj)
    if len(parts) == 2:
        code, params = parts
        mu = None
    elif len(parts) == 3:
        code, params, mu = parts
    else:
        raise CodeError("expected (code, params) or (code, params, mu)")
    if isinstance(code, RegularCode):
        code = code.code
    return code, tuple(int(p) for p in params), mu


def _lex_preimage(mu, value) -> tuple[int, ...]:
    best = min((t for t, v in mu.items() if v == value), default=None)
    if best is None:
        raise CodeError(f"no preimage of {value!r} recorded in the coordinate map")
    return best


def _mu_onto_structure(q: QuotientStructure, mu, target: FiniteStructure, label: str):
    """A coordinate map must label classes bijectively with the target's
    elements and carry the quotient's tables onto the target's."""
    res, labels = _mu_labels(q, mu, label)
    if not res.ok:
        return res, None
    if sorted(labels) != list(range(target.size)):
        return CheckResult(label, False, ("bijection",)), None
    lam = np.array(labels, dtype=np.intp)
    found = _mapped_structure_checks(q.tables, lam, target)
    if found and not found[-1].ok:
        bad = found[-1]
        return CheckResult(label, False, (bad.label,) + tuple(bad.witness or ())), None
    return CheckResult(label, True), lam


def _chunked(t: tuple, m: int):
    return tuple(t[i * m : (i + 1) * m] for i in range(len(t) // m))


@dataclass(frozen=True)
class RightInverseReport:
    """Whether one interpretation undoes another up to definable isomorphism.

    Clause `composite_isomorphic`: the composed code builds over the first
    structure and its quotient is isomorphic to it.  Clause
    `identity_homotopy`: the supplied connector defines a coordinate map
    from the composite onto the structure itself (checked against the
    identity presentation).  Strong mode adds validation of the two
    coordinate maps and equality of the connector's graph with their
    composite."""

    status: str
    clauses: tuple[CheckResult, ...]
    connector: tuple[CheckResult, ...]
    iso: tuple[int, ...] | None
    composite_params: tuple[int, ...]
    classes: int
    seconds: dict[str, float]

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def failure(self) -> CheckResult | None:
        bad = next((c for c in self.clauses if not c.ok), None)
        if bad is not None and bad.label == "identity_homotopy":
            inner = next((c for c in self.connector if not c.ok), None)
            return inner if inner is not None else bad
        return bad

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "clauses": [c.as_dict() for c in self.clauses],
            "connector": [c.as_dict() for c in self.connector],
            "iso": list(self.iso) if self.iso is not None else None,
            "composite_params": list(self.composite_params),
            "classes": self.classes,
            "timings": {k: round(v, 6) for k, v in self.seconds.items()},
        }


def check_right_inverse(
    gamma,
    delta,
    a: FiniteStructure,
    b: FiniteStructure,
    theta: Formula,
    extras=(),
    preimage=None,
    strong: bool = False,
) -> RightInverseReport:
    """Check that `delta` is a right inverse of `gamma` between `a` and `b`.

    `gamma` presents `a`'s language in `b`'s and `delta` the reverse; each
    is a (code, params) or (code, params, mu) tuple.  The composite code is
    built over `a` with the outer parameters replaced by their preimage
    tuples: given explicitly via `preimage`, or as the lexicographically
    least preimages under delta's coordinate map.  `theta` relates composite
    membership tuples (slot 1) to single elements of `a` (slot 2, one
    variable); its parameters are the composite's followed by `extras`.
    """
    gcode, gparams, gmu = _unpack3(gamma)
    dcode, dparams, dmu = _unpack3(delta)
    comp = compose(gcode, dcode)
    ev = a.evaluator
    m = dcode.dim
    if gcode.par_dim == 0:
        chunks: tuple = ()
    elif preimage is not None:
        chunks = tuple(tuple(int(v) for v in c) for c in preimage)
        if len(chunks) != gcode.par_dim or any(len(c) != m for c in chunks):
            raise CodeError("preimage must give one inner tuple per outer parameter")
    elif dmu is not None:
        chunks = tuple(_lex_preimage(dmu, v) for v in gparams)
    else:
        raise CodeError(
            "outer parameters need explicit preimages or an inner coordinate map"
        )
    flat = tuple(v for c in chunks for v in c) + dparams
    extras = tuple(int(v) for v in extras)

    t0 = time.perf_counter()
    qc = build(comp, a, flat, ev)
    qid = build(identity_code(a.lang), a, (), ev)
    t1 = time.perf_counter()
    iso = find_isomorphism(qc.tables, a)
    clauses = [CheckResult("composite_isomorphic", iso is not None)]
    t2 = time.perf_counter()

    run_strong = False
    mu_comp: dict | None = None
    if strong:
        if gmu is None or dmu is None:
            raise CodeError("strong mode needs coordinate maps for both codes")
        qd = build(dcode, a, dparams, ev)
        res_d, _ = _mu_onto_structure(qd, dmu, b, "mu_delta")
        clauses.append(res_d)
        qg = build(gcode, b, gparams, b.evaluator)
        res_g, _ = _mu_onto_structure(qg, gmu, a, "mu_gamma")
        clauses.append(res_g)
        if chunks:
            consistent = all(dmu.get(c) == v for c, v in zip(chunks, gparams))
            clauses.append(CheckResult("preimage_consistent", consistent))
        else:
            consistent = True
        if res_d.ok and res_g.ok and consistent:
            mu_comp = {}
            problem = None
            for t in qc.mu:
                try:
                    mid = tuple(dmu[c] for c in _chunked(t, m))
                    mu_comp[t] = gmu[mid]
                except KeyError:
                    problem = t
                    break
            if problem is not None:
                clauses.append(CheckResult("strong_graph", False, ("unmapped", problem)))
            else:
                run_strong = True

    if run_strong:
        mu_id = {(x,): x for x in range(a.size)}
        connector, _ = _connector_checks(
            qc, qid, ev, theta, flat + extras, mu_comp, mu_id, strong=True
        )
    else:
        connector, _ = _connector_checks(qc, qid, ev, theta, flat + extras)
    clauses.append(CheckResult("identity_homotopy", all(c.ok for c in connector)))
    seconds = {
        "build": t1 - t0,
        "isomorphism": t2 - t1,
        "connector": time.perf_counter() - t2,
    }
    status = "ok" if all(c.ok for c in clauses) else "failed"
    return RightInverseReport(
        status,
        tuple(clauses),
        tuple(connector),
        iso,
        flat,
        len(qc.carrier),
        seconds,
    )


# ---------------------------------------------------------------------------
# Bi-interpretation certificates


@dataclass(frozen=True)
class BiCertificate:
    """Everything needed to audit a claimed bi-interpretation.

    `gamma` presents the first structure's language in the second's and
    `delta` the reverse.  `theta_a` relates composite tuples over the first
    structure to its single elements, `theta_b` the same over the second.
    The preimage fields fix how outer parameters are pulled back through the
    inner code (lexicographically least through the matching coordinate map
    when omitted).  The family modes replace grounded parameters by regular
    codes with the two extra-element descriptors `delta_a` and `delta_b`.
    """

    gamma: InterpretationCode | RegularCode
    delta: InterpretationCode | RegularCode
    theta_a: Formula
    theta_b: Formula
    gamma_params: tuple[int, ...] = ()
    delta_params: tuple[int, ...] = ()
    delta_a: Formula | None = None
    delta_b: Formula | None = None
    mode: str = "weak"
    preimage_p: tuple | None = None
    preimage_q: tuple | None = None
    mu_gamma: dict | None = None
    mu_delta: dict | None = None
    extras_a: tuple[int, ...] = ()
    extras_b: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in BI_MODES:
            raise CodeError(f"unknown bi-interpretation mode {self.mode!r}")
        object.__setattr__(self, "gamma_params", tuple(int(v) for v in self.gamma_params))
        object.__setattr__(self, "delta_params", tuple(int(v) for v in self.delta_params))
        object.__setattr__(self, "extras_a", tuple(int(v) for v in self.extras_a))
        object.__setattr__(self, "extras_b", tuple(int(v) for v in self.extras_b))
        if self.mode in ("regular", "regular_strong"):
            if not isinstance(self.gamma, RegularCode) or not isinstance(
                self.delta, RegularCode
            ):
                raise CodeError("family modes need regular codes on both sides")
            if self.delta_a is None or self.delta_b is None:
                raise CodeError("family modes need both extra-element descriptors")


@dataclass(frozen=True)
class BiReport:
    """Clause-by-clause outcome of a bi-interpretation audit.

    Clause labels: 1a/1b are the two composite-isomorphic-to-base checks,
    2a/2b the two connector checks, 3 the common-coordinate-map-pair check
    of strong mode.  Family modes use Ia/Ib (each side regularly
    interprets), IIa/IIb (every admitted grounding passes), and III.
    `details` keeps the underlying condition ladders per clause.
    """

    status: str
    clauses: tuple[CheckResult, ...]
    details: dict[str, tuple[CheckResult, ...]] = field(default_factory=dict)
    mu_gamma: dict | None = None
    mu_delta: dict | None = None
    y_vs_x_divergence: bool | None = None
    seconds: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def failure(self) -> CheckResult | None:
        return next((c for c in self.clauses if not c.ok), None)

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "clauses": [c.as_dict() for c in self.clauses],
            "details": {
                k: [c.as_dict() for c in v] for k, v in self.details.items()
            },
            "mu_gamma": (
                sorted((list(k), v) for k, v in self.mu_gamma.items())
                if self.mu_gamma is not None
                else None
            ),
            "mu_delta": (
                sorted((list(k), v) for k, v in self.mu_delta.items())
                if self.mu_delta is not None
                else None
            ),
            "y_vs_x_divergence": self.y_vs_x_divergence,
            "timings": {k: round(v, 6) for k, v in self.seconds.items()},
        }


def _bi_chunks(k: int, m: int, explicit, mu, values) -> tuple:
    if k == 0:
        return ()
    if explicit is not None:
        chunks = tuple(tuple(int(v) for v in c) for c in explicit)
        if len(chunks) != k or any(len(c) != m for c in chunks):
            raise CodeError("preimage must give one inner tuple per outer parameter")
        return chunks
    if mu is not None:
        return tuple(_lex_preimage(mu, v) for v in values)
    raise CodeError(
        "outer parameters need explicit preimages or a coordinate map"
    )


def _member_element_matrix(q: QuotientStructure, ev, theta: Formula, params):
    """Solutions of a composite-to-element connector, rows indexed by sorted
    membership tuples and columns by base elements."""
    n = q.code.dim
    names = tuple(tuple_vars(1, n) + tuple_vars(2, 1))
    stray = [v for v in free_vars(theta) if v not in set(names)]
    if stray:
        raise CodeError(f"connector uses {stray[0]!r} outside the two tuple slots")
    arr = ev.definable(theta, names, tuple(params))
    members = sorted(q.mu)
    mm = np.array(members, dtype=np.intp)
    idx = tuple(mm[:, None, j] for j in range(n)) + (
        np.arange(ev.size)[None, :],
    )
    return members, arr[idx]


def _graph_matches(members, rel, label_of, size: int) -> bool:
    try:
        lab = np.array([label_of(t) for t in members], dtype=np.intp)
    except KeyError:
        return False
    want = lab[:, None] == np.arange(size)[None, :]
    return bool((rel == want).all())


def _iso_maps(q: QuotientStructure, target: FiniteStructure) -> list[dict]:
    """All coordinate maps the quotient admits onto the target, as dicts."""
    out = []
    for tau in iter_isomorphisms(q.tables, target):
        out.append({t: int(tau[c]) for t, c in q.mu.items()})
    return out


def check_bi(cert: BiCertificate, a: FiniteStructure, b: FiniteStructure) -> BiReport:
    """Audit a bi-interpretation certificate between two finite structures.

    Weak mode checks that both composites rebuild their own structure
    (clauses 1a and 1b) and that each connector defines a coordinate map
    onto it (2a and 2b).  Strong mode additionally looks for one common
    pair of coordinate maps whose two composites are exactly the graphs of
    the connectors (clause 3); candidate pairs come from the certificate or
    from enumerating all relabelings consistent with the fixed preimages.
    """
    if cert.mode in ("regular", "regular_strong"):
        return _check_bi_family(cert, a, b)
    gcode = cert.gamma.code if isinstance(cert.gamma, RegularCode) else cert.gamma
    dcode = cert.delta.code if isinstance(cert.delta, RegularCode) else cert.delta
    gp, dq = cert.gamma_params, cert.delta_params
    eva, evb = a.evaluator, b.evaluator
    t0 = time.perf_counter()

    chunks_p = _bi_chunks(gcode.par_dim, dcode.dim, cert.preimage_p, cert.mu_delta, gp)
    chunks_q = _bi_chunks(dcode.par_dim, gcode.dim, cert.preimage_q, cert.mu_gamma, dq)
    flat_a = tuple(v for c in chunks_p for v in c) + dq
    flat_b = tuple(v for c in chunks_q for v in c) + gp
    qa = build(compose(gcode, dcode), a, flat_a, eva)
    qb = build(compose(dcode, gcode), b, flat_b, evb)
    qid_a = build(identity_code(a.lang), a, (), eva)
    qid_b = build(identity_code(b.lang), b, (), evb)
    t1 = time.perf_counter()

    clauses = []
    details: dict[str, tuple[CheckResult, ...]] = {}
    iso_a = find_isomorphism(qa.tables, a)
    clauses.append(CheckResult("1a", iso_a is not None))
    iso_b = find_isomorphism(qb.tables, b)
    clauses.append(CheckResult("1b", iso_b is not None))

    conn_a, _ = _connector_checks(qa, qid_a, eva, cert.theta_a, flat_a + cert.extras_a)
    bad = next((c for c in conn_a if not c.ok), None)
    clauses.append(
        CheckResult("2a", bad is None, None if bad is None else (bad.label, bad.witness))
    )
    details["2a"] = tuple(conn_a)
    conn_b, _ = _connector_checks(qb, qid_b, evb, cert.theta_b, flat_b + cert.extras_b)
    bad = next((c for c in conn_b if not c.ok), None)
    clauses.append(
        CheckResult("2b", bad is None, None if bad is None else (bad.label, bad.witness))
    )
    details["2b"] = tuple(conn_b)
    t2 = time.perf_counter()

    found_g = found_d = None
    if cert.mode == "strong":
        qg = build(gcode, b, gp, evb)
        qd = build(dcode, a, dq, eva)
        members_a, rel_a = _member_element_matrix(
            qa, eva, cert.theta_a, flat_a + cert.extras_a
        )
        members_b, rel_b = _member_element_matrix(
            qb, evb, cert.theta_b, flat_b + cert.extras_b
        )
        if cert.mu_gamma is not None and cert.mu_delta is not None:
            gs = [dict(cert.mu_gamma)]
            ds = [dict(cert.mu_delta)]
        else:
            gs = _iso_maps(qg, a)
            ds = _iso_maps(qd, b)
        gs = [g for g in gs if all(g.get(c) == v for c, v in zip(chunks_q, dq))]
        ds = [d for d in ds if all(d.get(c) == v for c, v in zip(chunks_p, gp))]
        md, mg = dcode.dim, gcode.dim
        for mu_d, mu_g in itertools.product(ds, gs):
            ok_a = _graph_matches(
                members_a,
                rel_a,
                lambda t: mu_g[tuple(mu_d[c] for c in _chunked(t, md))],
                a.size,
            )
            if not ok_a:
                continue
            ok_b = _graph_matches(
                members_b,
                rel_b,
                lambda t: mu_d[tuple(mu_g[c] for c in _chunked(t, mg))],
                b.size,
            )
            if ok_b:
                found_g, found_d = mu_g, mu_d
                break
        clauses.append(CheckResult("3", found_g is not None))
    seconds = {
        "build": t1 - t0,
        "connectors": t2 - t1,
        "strong": time.perf_counter() - t2,
    }
    status = "ok" if all(c.ok for c in clauses) else "failed"
    return BiReport(status, tuple(clauses), details, found_g, found_d, None, seconds)


def _delta_holds(ev, delta: Formula, wnames, flat, extra) -> bool:
    """Whether the extra-element descriptor accepts one grounding."""
    if extra is None:
        return False
    sub = subst_vars(
        delta, {w: Param(len(flat) + i) for i, w in enumerate(wnames, 1)}
    )
    return ev.holds(sub, tuple(flat) + tuple(extra))


def _translated_pairs(outer_rc: RegularCode, inner: InterpretationCode,
                      inner_rc: RegularCode, base: FiniteStructure):
    """Joint solutions of the outer descriptor translated through the inner
    code together with the inner descriptor, as (chunk tuple, params) pairs."""
    ev = base.evaluator
    k_out = outer_rc.code.par_dim
    k_in = inner.par_dim
    m = inner.dim
    phi = translate(outer_rc.descriptor, inner, variables=param_names(k_out)).formula
    znames = [f"z{i}" for i in range(1, k_in + 1)]
    phi = params_to_vars(phi, znames)
    psi = subst_vars(
        inner_rc.descriptor,
        {f"y{i}": Var(znames[i - 1]) for i in range(1, k_in + 1)},
    )
    ynames = [tuple_var(i, j) for i in range(1, k_out + 1) for j in range(1, m + 1)]
    names = ynames + znames
    joint = conj([phi, psi])
    if not names:
        return [((), ())] if ev.holds(joint) else []
    arr = ev.definable(joint, names)
    out = []
    for row in np.argwhere(arr):
        vals = tuple(int(v) for v in row)
        chunks = _chunked(vals[: k_out * m], m)
        out.append((chunks, vals[k_out * m :]))
    return out


def _check_bi_family(cert: BiCertificate, a: FiniteStructure, b: FiniteStructure) -> BiReport:
    """Family-mode audit: quantify over everything the descriptors admit."""
    rcg, rcd = cert.gamma, cert.delta
    gcode, dcode = rcg.code, rcd.code
    eva, evb = a.evaluator, b.evaluator
    w_a = _extra_names(cert.delta_a)
    w_b = _extra_names(cert.delta_b)
    t0 = time.perf_counter()

    clauses = []
    details: dict[str, tuple[CheckResult, ...]] = {}
    reg_a = check_regular(rcg, b, a, evb)
    clauses.append(CheckResult("Ia", reg_a.ok, None if reg_a.ok else (reg_a.status,)))
    reg_b = check_regular(rcd, a, b, eva)
    clauses.append(CheckResult("Ib", reg_b.ok, None if reg_b.ok else (reg_b.status,)))

    comp_a = compose(gcode, dcode)
    comp_b = compose(dcode, gcode)
    qid_a = build(identity_code(a.lang), a, (), eva)
    qid_b = build(identity_code(b.lang), b, (), evb)
    builds_a: dict[tuple, QuotientStructure] = {}
    builds_b: dict[tuple, QuotientStructure] = {}

    def composite_a(flat):
        q = builds_a.get(flat)
        if q is None:
            q = builds_a[flat] = build(comp_a, a, flat, eva)
        return q

    def composite_b(flat):
        q = builds_b.get(flat)
        if q is None:
            q = builds_b[flat] = build(comp_b, b, flat, evb)
        return q

    pairs_a = _translated_pairs(rcg, dcode, rcd, a)
    pairs_b = _translated_pairs(rcd, gcode, rcg, b)

    def side(label, pairs, composite, qid, ev, theta, delta, wnames, extras_seen):
        failures = []
        for chunks, inner_params in pairs:
            flat = tuple(v for c in chunks for v in c) + inner_params
            grounds = _ground_tuples(ev, delta, wnames, flat)
            if not grounds:
                failures.append((flat, None, "descriptor_unsolvable"))
                continue
            qc = composite(flat)
            for r in grounds:
                extras_seen.add(r)
                checks, _ = _connector_checks(qc, qid, ev, theta, flat + r)
                bad = next((c for c in checks if not c.ok), None)
                if bad is not None:
                    failures.append((flat, r, bad.label))
        ok = not failures
        witness = None if ok else failures[0]
        return CheckResult(label, ok, witness), failures

    extras_a_seen: set = set()
    extras_b_seen: set = set()
    res_iia, _ = side(
        "IIa", pairs_a, composite_a, qid_a, eva, cert.theta_a, cert.delta_a,
        w_a, extras_a_seen,
    )
    clauses.append(res_iia)
    res_iib, _ = side(
        "IIb", pairs_b, composite_b, qid_b, evb, cert.theta_b, cert.delta_b,
        w_b, extras_b_seen,
    )
    clauses.append(res_iib)
    t1 = time.perf_counter()

    divergence = None
    if cert.mode == "regular_strong":
        phi_b = _descriptor_tuples(rcg, evb)
        psi_a = _descriptor_tuples(rcd, eva)
        md, mg = dcode.dim, gcode.dim
        fails3 = []
        covered_a: set = set()
        for p in phi_b:
            qg = build(gcode, b, p, evb)
            cand_g = _iso_maps(qg, a)
            for q in psi_a:
                qd = build(dcode, a, q, eva)
                cand_d = _iso_maps(qd, b)
                if not cand_g or not cand_d:
                    fails3.append((p, q, None, None, "no_coordinate_map"))
                    continue
                pool_r = sorted(extras_a_seen) or [None]
                pool_s = sorted(extras_b_seen) or [None]
                for r, s in itertools.product(pool_r, pool_s):
                    hit = None
                    for mu_d, mu_g in itertools.product(cand_d, cand_g):
                        inv_p = [
                            [t for t, v in mu_d.items() if v == pv] for pv in p
                        ]
                        inv_q = [
                            [t for t, v in mu_g.items() if v == qv] for qv in q
                        ]
                        good = True
                        used_a = set()
                        for combo in itertools.product(*inv_p):
                            flat = tuple(v for c in combo for v in c) + q
                            if not _delta_holds(eva, cert.delta_a, w_a, flat, r):
                                continue
                            used_a.add(flat)
                            qc = composite_a(flat)
                            members, rel = _member_element_matrix(
                                qc, eva, cert.theta_a, flat + r
                            )
                            if not _graph_matches(
                                members,
                                rel,
                                lambda t: mu_g[
                                    tuple(mu_d[c] for c in _chunked(t, md))
                                ],
                                a.size,
                            ):
                                good = False
                                break
                        if good:
                            for combo in itertools.product(*inv_q):
                                flat = tuple(v for c in combo for v in c) + p
                                if not _delta_holds(evb, cert.delta_b, w_b, flat, s):
                                    continue
                                qc = composite_b(flat)
                                members, rel = _member_element_matrix(
                                    qc, evb, cert.theta_b, flat + s
                                )
                                if not _graph_matches(
                                    members,
                                    rel,
                                    lambda t: mu_d[
                                        tuple(mu_g[c] for c in _chunked(t, mg))
                                    ],
                                    b.size,
                                ):
                                    good = False
                                    break
                        if good:
                            hit = (mu_d, mu_g, used_a)
                            break
                    if hit is None:
                        fails3.append((p, q, r, s, "no_common_pair"))
                    else:
                        covered_a.update(hit[2])
        clauses.append(
            CheckResult("III", not fails3, None if not fails3 else fails3[0])
        )
        # The definition quantifies preimages through the chosen coordinate
        # maps; the translated descriptor can admit more tuples.  Record the
        # discrepancy without treating it as a failure.
        admitted = {
            tuple(v for c in chunks for v in c) + inner
            for chunks, inner in pairs_a
        }
        divergence = not fails3 and bool(admitted - covered_a)

    seconds = {"family": t1 - t0, "strong": time.perf_counter() - t1}
    status = "ok" if all(c.ok for c in clauses) else "failed"
    return BiReport(status, tuple(clauses), details, None, None, divergence, seconds)
