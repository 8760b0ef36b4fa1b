import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from interpkit.logic import Language, Var, conj, parse, subst_vars
from interpkit.models import FiniteStructure, definable_set, find_isomorphism
from interpkit.codes import (
    CodeError,
    InterpretationCode,
    RegularCode,
    exists_tuple,
    identity_code,
    simple_reg,
    translate,
)
from interpkit.quotient import build
from interpkit.verify import (
    BiCertificate,
    HomotopyCertificate,
    automorphism_connector,
    check_bi,
    check_homotopy,
    check_regular_homotopy,
    check_right_inverse,
    compose_homotopies,
    invert_homotopy,
    self_connector,
)
from oracles import ring_language, tiny_language
from test_codes import frac_code, mod_ring, rescale_code, unit_descriptor

RING = ring_language()
TINY = tiny_language()
GROUP = Language("group", constants=("e",), functions={"mul": 2, "inv": 1}, relations={})

Z3 = mod_ring(3)
Z4 = mod_ring(4)
Z5 = mod_ring(5)

FRAC_THETA = "mul(x2_1, x1_2) = x1_1 & !(x1_2 = 0)"


def heisenberg(n):
    """Unitriangular 3x3 matrices over Z_n, packed as a*n^2 + b*n + c."""

    def enc(a, b, c):
        return (a % n) * n * n + (b % n) * n + (c % n)

    def dec(t):
        return t // (n * n), (t // n) % n, t % n

    def mul(s, t):
        a1, b1, c1 = dec(s)
        a2, b2, c2 = dec(t)
        return enc(a1 + a2, b1 + b2, c1 + c2 + a1 * b2)

    def inv(s):
        a, b, c = dec(s)
        return enc(-a, -b, -c + a * b)

    return FiniteStructure.from_callables(
        GROUP, n**3, {"e": 0}, {"mul": mul, "inv": inv}, {}
    )


def triple_code(mul_third, inv_third):
    """Group-in-ring code on coordinate triples, varying only the corner entry."""
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


def entry_triple_code():
    return triple_code(
        "x3_3 = add(add(x1_3, x2_3), mul(x1_1, x2_2))",
        "add(x1_3, x2_3) = mul(x1_1, x1_2)",
    )


def transvection_code():
    return triple_code(
        "add(x3_3, mul(x2_1, x1_2)) = add(x1_3, x2_3)",
        "add(add(x1_3, mul(x1_1, x1_2)), x2_3) = 0",
    )


TRIPLE_CONN = "x2_1 = x1_1 & x2_2 = x1_2 & add(x2_3, mul(x1_1, x1_2)) = x1_3"


def pair_code():
    """The product ring R x R on coordinate pairs."""
    return InterpretationCode(
        RING,
        RING,
        2,
        0,
        U=parse("x1_1 = x1_1", RING),
        E=parse("x1_1 = x2_1 & x1_2 = x2_2", RING),
        interp={
            "0": parse("x1_1 = 0 & x1_2 = 0", RING),
            "1": parse("x1_1 = 1 & x1_2 = 1", RING),
            "add": parse("add(x1_1, x2_1) = x3_1 & add(x1_2, x2_2) = x3_2", RING),
            "mul": parse("mul(x1_1, x2_1) = x3_1 & mul(x1_2, x2_2) = x3_2", RING),
        },
    )


class TestGroundConnectors:
    def test_self_connector_is_identity(self):
        rep = check_homotopy(frac_code(), frac_code(), Z5, self_connector(frac_code()))
        assert rep.status == "ok"
        assert rep.class_map == (0, 1, 2, 3, 4)
        assert rep.ok
        assert rep.failure is None

    def test_rescale_connector(self):
        # x/1 = y/2 exactly when 2x = y, so class t goes to 2t.
        cert = HomotopyCertificate(parse("mul(x2_1, $1) = mul(x1_1, $2)", RING))
        rep = check_homotopy((rescale_code(), (1,)), (rescale_code(), (2,)), Z5, cert)
        assert rep.status == "ok"
        assert rep.class_map == (0, 2, 4, 1, 3)

    def test_check_labels_in_ladder_order(self):
        rep = check_homotopy(frac_code(), frac_code(), Z5, self_connector(frac_code()))
        labels = [c.label for c in rep.checks]
        assert labels[:6] == [
            "domain",
            "saturation",
            "functional",
            "total",
            "injective",
            "surjective",
        ]
        assert all(c.ok for c in rep.checks)

    def test_timings_present(self):
        rep = check_homotopy(frac_code(), frac_code(), Z5, self_connector(frac_code()))
        assert set(rep.seconds) == {"build", "connector"}
        assert all(v >= 0 for v in rep.seconds.values())

    def test_report_serializes(self):
        rep = check_homotopy(frac_code(), frac_code(), Z5, self_connector(frac_code()))
        data = json.loads(json.dumps(rep.as_dict()))
        assert data["status"] == "ok"
        assert data["class_map"] == [0, 1, 2, 3, 4]

    def test_regular_code_rejected(self):
        rr = RegularCode(rescale_code(), unit_descriptor())
        cert = HomotopyCertificate(parse("x1_1 = x2_1", RING))
        with pytest.raises(CodeError, match="check_regular_homotopy"):
            check_homotopy(rr, frac_code(), Z5, cert)

    def test_family_modes_rejected(self):
        cert = HomotopyCertificate(parse("x1_1 = x2_1", RING), mode="regular")
        with pytest.raises(CodeError, match="regular"):
            check_homotopy(frac_code(), frac_code(), Z5, cert)

    def test_unknown_mode_rejected(self):
        with pytest.raises(CodeError, match="nope"):
            HomotopyCertificate(parse("x1_1 = x2_1", RING), mode="nope")


class TestConnectorFailures:
    """Each engine condition failing on its own, with the exact first witness."""

    def test_domain(self):
        # Plain equality relates pairs with zero denominator.
        cert = HomotopyCertificate(parse("x1_1 = x2_1 & x1_2 = x2_2", RING))
        rep = check_homotopy(frac_code(), frac_code(), Z5, cert)
        assert rep.status == "failed"
        assert rep.failure.label == "domain"
        assert rep.failure.witness == ((0, 0), (0, 0))

    def test_saturation(self):
        # Literal equality is finer than the fraction classes.
        cert = HomotopyCertificate(
            parse("!(x1_2 = 0) & !(x2_2 = 0) & x1_1 = x2_1 & x1_2 = x2_2", RING)
        )
        rep = check_homotopy(frac_code(), frac_code(), Z5, cert)
        assert rep.failure.label == "saturation"
        assert rep.failure.witness == (((0, 1), (0, 1)), ((0, 1), (0, 2)))

    def test_functional(self):
        # 2y^2 = x has two solutions y for x = 3 (y = 2 and y = 3).
        cert = HomotopyCertificate(
            parse("mul(x2_1, mul(x2_1, $1)) = mul(x1_1, $2)", RING)
        )
        rep = check_homotopy((rescale_code(), (1,)), (rescale_code(), (2,)), Z5, cert)
        assert rep.failure.label == "functional"
        assert rep.failure.witness == ((2,), (2,), (3,))

    def test_total(self):
        cert = HomotopyCertificate(parse("x2_1 = x1_1 & !(x1_1 = 1)", RING))
        rep = check_homotopy((rescale_code(), (1,)), (rescale_code(), (1,)), Z5, cert)
        assert rep.failure.label == "total"
        assert rep.failure.witness == ((1,),)

    def test_injective(self):
        # 2y = x^2 collapses x and -x.
        cert = HomotopyCertificate(
            parse("mul(x2_1, $1) = mul(mul(x1_1, x1_1), $2)", RING)
        )
        rep = check_homotopy((rescale_code(), (1,)), (rescale_code(), (2,)), Z5, cert)
        assert rep.failure.label == "injective"
        assert rep.failure.witness == ((1,), (4,), (2,))

    def test_surjective(self):
        # The diagonal misses every off-diagonal pair class.
        cert = HomotopyCertificate(parse("x2_1 = x1_1 & x2_2 = x1_1", RING))
        rep = check_homotopy(identity_code(RING), pair_code(), Z5, cert)
        assert rep.failure.label == "surjective"
        assert rep.failure.witness == ((0, 1),)

    def test_constant_mismatch(self):
        # The literal identity is a bijection but sends 1/1 to 1/2.
        cert = HomotopyCertificate(parse("x2_1 = x1_1", RING))
        rep = check_homotopy((rescale_code(), (1,)), (rescale_code(), (2,)), Z5, cert)
        assert rep.failure.label == "constant 1"
        assert rep.failure.witness == (1, 2)

    def test_function_mismatch(self):
        doubled = replace(
            identity_code(RING),
            interp={
                **identity_code(RING).interp,
                "mul": parse("x3_1 = mul(add(1, 1), mul(x1_1, x2_1))", RING),
            },
        )
        cert = HomotopyCertificate(parse("x2_1 = x1_1", RING))
        rep = check_homotopy(identity_code(RING), doubled, Z5, cert)
        assert rep.failure.label == "function mul"
        assert rep.failure.witness == ((1, 1), 1, 2)

    def test_relation_mismatch(self):
        base = FiniteStructure(TINY, 4, {"c": 0}, {"f": [1, 0, 3, 2]}, {"R": {(0,), (2,)}})
        wide = replace(
            identity_code(TINY),
            interp={
                **identity_code(TINY).interp,
                "R": parse("R(x1_1) | x1_1 = f(c)", TINY),
            },
        )
        cert = HomotopyCertificate(parse("x2_1 = x1_1", TINY))
        rep = check_homotopy(identity_code(TINY), wide, base, cert)
        assert rep.failure.label == "relation R"
        assert rep.failure.witness == (1,)

    def test_checks_stop_at_first_failure(self):
        cert = HomotopyCertificate(parse("x1_1 = x2_1 & x1_2 = x2_2", RING))
        rep = check_homotopy(frac_code(), frac_code(), Z5, cert)
        assert [c.ok for c in rep.checks] == [False]
        assert rep.class_map is None


class TestStrongMode:
    THETA = "mul(x2_1, $1) = mul(x1_1, $2)"

    def mu1(self):
        return {(t,): t for t in range(5)}

    def mu2(self):
        # x/2 = (3x)/1, so the coordinate map divides by 2.
        return {(s,): (3 * s) % 5 for s in range(5)}

    def cert(self, mu1, mu2):
        return HomotopyCertificate(
            parse(self.THETA, RING), mode="strong", mu1=mu1, mu2=mu2
        )

    def test_matching_maps_pass(self):
        rep = check_homotopy(
            (rescale_code(), (1,)),
            (rescale_code(), (2,)),
            Z5,
            self.cert(self.mu1(), self.mu2()),
        )
        assert rep.status == "ok"
        labels = [c.label for c in rep.checks]
        assert labels[-3:] == ["coordinate_map_1", "coordinate_map_2", "strong_graph"]

    def test_mismatched_maps_fail_on_graph(self):
        rep = check_homotopy(
            (rescale_code(), (1,)),
            (rescale_code(), (2,)),
            Z5,
            self.cert(self.mu1(), {(s,): s for s in range(5)}),
        )
        assert rep.status == "failed"
        assert rep.failure.label == "strong_graph"
        assert rep.failure.witness == ((1,), (1,))

    def test_graph_failure_is_repairable(self):
        # Pull the second map back through the connector to rebuild the first.
        bad = {(s,): s for s in range(5)}
        rep = check_homotopy(
            (rescale_code(), (1,)), (rescale_code(), (2,)), Z5, self.cert(self.mu1(), bad)
        )
        assert not rep.ok
        lam = rep.class_map
        assert lam is not None
        fixed = {(t,): bad[(lam[t],)] for t in range(5)}
        rep = check_homotopy(
            (rescale_code(), (1,)), (rescale_code(), (2,)), Z5, self.cert(fixed, bad)
        )
        assert rep.status == "ok"

    def test_missing_domain_key(self):
        short = self.mu1()
        del short[(4,)]
        rep = check_homotopy(
            (rescale_code(), (1,)), (rescale_code(), (2,)), Z5, self.cert(short, self.mu2())
        )
        assert rep.failure.label == "coordinate_map_1"
        assert rep.failure.witness == ("domain", (4,))

    def test_collision_across_classes(self):
        squashed = self.mu1()
        squashed[(4,)] = 0
        rep = check_homotopy(
            (rescale_code(), (1,)), (rescale_code(), (2,)), Z5, self.cert(squashed, self.mu2())
        )
        assert rep.failure.label == "coordinate_map_1"
        assert rep.failure.witness == ("injective", (0,), (4,))

    def test_strong_needs_both_maps(self):
        cert = HomotopyCertificate(parse(self.THETA, RING), mode="strong", mu1=self.mu1())
        with pytest.raises(CodeError, match="both coordinate maps"):
            check_homotopy((rescale_code(), (1,)), (rescale_code(), (2,)), Z5, cert)


class TestUnitriangular:
    """Two coordinatizations of the unitriangular group and the corner-shift
    connector between them."""

    @pytest.mark.parametrize("n,base", [(3, Z3), (4, Z4)])
    def test_both_codes_build_the_group(self, n, base):
        H = heisenberg(n)
        qg = build(entry_triple_code(), base)
        qd = build(transvection_code(), base)
        assert len(qg.carrier) == n**3
        # The packing of the quotient classes matches the packing of heisenberg.
        assert find_isomorphism(qg.tables, H) == tuple(range(n**3))
        assert find_isomorphism(qd.tables, H) is not None
        assert find_isomorphism(qd.tables, H) != tuple(range(n**3))

    @pytest.mark.parametrize("n,base", [(3, Z3), (4, Z4)])
    def test_corner_shift_connector(self, n, base):
        cert = HomotopyCertificate(parse(TRIPLE_CONN, RING))
        rep = check_homotopy(entry_triple_code(), transvection_code(), base, cert)
        assert rep.status == "ok"
        # (a, b, c) in entry coordinates is (a, b, c - ab) in transvection ones.
        qd = build(transvection_code(), base)
        expected = tuple(
            qd.class_of((a, b, (c - a * b) % n))
            for a in range(n)
            for b in range(n)
            for c in range(n)
        )
        assert rep.class_map == expected

    @pytest.mark.parametrize(
        "n,base,witness",
        [(3, Z3, ((3, 9), 12, 14)), (4, Z4, ((4, 16), 20, 23))],
    )
    def test_plain_equality_is_not_a_connector(self, n, base, witness):
        cert = HomotopyCertificate(
            parse("x2_1 = x1_1 & x2_2 = x1_2 & x2_3 = x1_3", RING)
        )
        rep = check_homotopy(entry_triple_code(), transvection_code(), base, cert)
        assert rep.status == "failed"
        assert rep.failure.label == "function mul"
        assert rep.failure.witness == witness
        # The witness is genuine: the two multiplication tables disagree there.
        (s, t), got, want = witness
        qg = build(entry_triple_code(), base)
        qd = build(transvection_code(), base)
        assert qg.tables.func_interp["mul"][s][t] == got
        assert qd.tables.func_interp["mul"][s][t] == want
        assert got != want


class TestAutomorphismConnector:
    def test_identity_automorphism(self):
        cert = automorphism_connector(frac_code(), parse("v1 = v2", RING))
        rep = check_homotopy(frac_code(), frac_code(), Z5, cert)
        assert rep.status == "ok"
        assert rep.class_map == (0, 1, 2, 3, 4)

    def test_rejects_stray_variables(self):
        with pytest.raises(CodeError, match="v3"):
            automorphism_connector(frac_code(), parse("v1 = v3", RING))


class TestRegularFamilies:
    def reg(self):
        return RegularCode(rescale_code(), unit_descriptor())

    def conn(self):
        return HomotopyCertificate(
            parse("mul(x2_1, $1) = mul(x1_1, $2)", RING), mode="descriptor_free"
        )

    def test_descriptor_free_family(self):
        rep = check_regular_homotopy(self.reg(), self.reg(), Z5, self.conn())
        assert rep.status == "ok"
        assert (rep.count1, rep.count2) == (4, 4)
        assert rep.connectors == 16
        assert rep.failures == ()
        assert rep.removable is True

    def test_swap_family_is_not_removable(self):
        # Over the product ring both the identity and the coordinate swap are
        # connectors, picked by the extra element, so the family does not
        # collapse to a single class map.
        rp = simple_reg(pair_code())
        theta = parse(
            "($3 = 0 & x2_1 = x1_1 & x2_2 = x1_2)"
            " | (!($3 = 0) & x2_1 = x1_2 & x2_2 = x1_1)",
            RING,
        )
        cert = HomotopyCertificate(theta, parse("w1 = 0 | w1 = 1", RING), mode="regular")
        rep = check_regular_homotopy(rp, rp, Z5, cert)
        assert rep.status == "ok"
        assert (rep.count1, rep.count2) == (5, 5)
        assert rep.connectors == 50
        assert rep.removable is False

    def test_empty_descriptor(self):
        empty = RegularCode(rescale_code(), parse("y1 = add(1, y1)", RING))
        rep = check_regular_homotopy(empty, empty, Z5, self.conn())
        assert rep.status == "empty_descriptor"
        assert (rep.count1, rep.count2) == (0, 0)
        assert rep.connectors == 0
        assert rep.removable is None

    def test_unsolvable_grounding(self):
        cert = HomotopyCertificate(
            parse("mul(x2_1, $1) = mul(x1_1, $2)", RING),
            parse("w1 = add(1, w1)", RING),
            mode="regular",
        )
        rep = check_regular_homotopy(self.reg(), self.reg(), Z5, cert)
        assert rep.status == "failed"
        assert rep.failures[0] == ((1,), (1,), None, "descriptor_unsolvable")
        assert rep.removable is None

    def test_plain_codes_rejected(self):
        with pytest.raises(CodeError, match="regular codes"):
            check_regular_homotopy(frac_code(), frac_code(), Z5, self.conn())

    def test_regular_mode_needs_descriptor(self):
        cert = HomotopyCertificate(parse("x1_1 = x2_1", RING), mode="regular")
        with pytest.raises(CodeError, match="descriptor"):
            check_regular_homotopy(self.reg(), self.reg(), Z5, cert)

    def test_descriptor_free_forbids_descriptor(self):
        cert = HomotopyCertificate(
            parse("x1_1 = x2_1", RING),
            parse("w1 = w1", RING),
            mode="descriptor_free",
        )
        with pytest.raises(CodeError, match="descriptor"):
            check_regular_homotopy(self.reg(), self.reg(), Z5, cert)


class TestComposeInvert:
    def reg(self):
        return RegularCode(rescale_code(), unit_descriptor())

    def conn(self):
        return HomotopyCertificate(
            parse("mul(x2_1, $1) = mul(x1_1, $2)", RING), mode="descriptor_free"
        )

    def test_inverse_family_passes(self):
        inv = invert_homotopy(self.conn(), self.reg(), self.reg())
        assert inv.mode == "descriptor_free"
        rep = check_regular_homotopy(self.reg(), self.reg(), Z5, inv)
        assert rep.status == "ok"
        assert rep.removable is True

    def test_inverse_ground_instance(self):
        # Forward: class t of x/1 goes to 2t of x/2.  Backward: t goes to 3t.
        inv = invert_homotopy(self.conn(), self.reg(), self.reg())
        cert = HomotopyCertificate(inv.theta)
        rep = check_homotopy((rescale_code(), (2,)), (rescale_code(), (1,)), Z5, cert)
        assert rep.status == "ok"
        assert rep.class_map == (0, 3, 1, 4, 2)

    def test_composite_family_passes(self):
        both = compose_homotopies(self.conn(), self.conn(), self.reg(), self.reg(), self.reg())
        assert both.mode == "regular"
        rep = check_regular_homotopy(self.reg(), self.reg(), Z5, both)
        assert rep.status == "ok"
        assert rep.connectors == 64
        assert rep.removable is True

    def test_composite_ground_instance_ignores_middle(self):
        both = compose_homotopies(self.conn(), self.conn(), self.reg(), self.reg(), self.reg())
        for middle in (2, 4):
            cert = HomotopyCertificate(both.theta, extras=(middle,))
            rep = check_homotopy(
                (rescale_code(), (1,)), (rescale_code(), (3,)), Z5, cert
            )
            assert rep.status == "ok"
            # 3/1 = 3, and the route through the middle unit cancels out.
            assert rep.class_map == (0, 3, 1, 4, 2)

    def test_only_families_compose(self):
        ground = HomotopyCertificate(parse("x1_1 = x2_1", RING))
        with pytest.raises(CodeError, match="family"):
            compose_homotopies(ground, ground, self.reg(), self.reg(), self.reg())


class TestRightInverse:
    def test_fraction_code_splits_off_the_field(self):
        rep = check_right_inverse(
            (frac_code(), ()),
            (identity_code(RING), ()),
            Z5,
            Z5,
            parse(FRAC_THETA, RING),
        )
        assert rep.status == "ok"
        assert rep.classes == 5
        assert [c.label for c in rep.clauses] == [
            "composite_isomorphic",
            "identity_homotopy",
        ]
        assert rep.iso is not None

    def test_strong_clauses(self):
        mu_frac = {
            (m, n): (m * pow(n, 3, 5)) % 5 for m in range(5) for n in range(1, 5)
        }
        mu_id = {(x,): x for x in range(5)}
        rep = check_right_inverse(
            (frac_code(), (), mu_frac),
            (identity_code(RING), (), mu_id),
            Z5,
            Z5,
            parse(FRAC_THETA, RING),
            strong=True,
        )
        assert rep.status == "ok"
        assert [c.label for c in rep.clauses] == [
            "composite_isomorphic",
            "mu_delta",
            "mu_gamma",
            "identity_homotopy",
        ]

    def test_preimage_through_coordinate_map(self):
        # gamma has a parameter, so its value must be pulled back through the
        # inner code before composing.
        mu_id = {(x,): x for x in range(5)}
        rep = check_right_inverse(
            (rescale_code(), (2,)),
            (identity_code(RING), (), mu_id),
            Z5,
            Z5,
            parse("mul(x2_1, $1) = x1_1", RING),
        )
        assert rep.status == "ok"
        assert rep.composite_params == (2,)
        assert rep.classes == 5

    def test_wrong_direction_theta(self):
        rep = check_right_inverse(
            (frac_code(), ()),
            (identity_code(RING), ()),
            Z5,
            Z5,
            parse("mul(x1_1, x2_1) = x1_2 & !(x1_2 = 0)", RING),
        )
        assert rep.status == "failed"
        assert rep.failure.label == "total"
        assert rep.failure.witness == ((0, 1),)

    def test_parameters_without_preimage_rejected(self):
        with pytest.raises(CodeError, match="preimage"):
            check_right_inverse(
                (rescale_code(), (2,)),
                (identity_code(RING), ()),
                Z5,
                Z5,
                parse("mul(x2_1, $1) = x1_1", RING),
            )


class TestDefinabilityTransfer:
    """Rebuilding a base-structure definition from its translated form and the
    connector to the identity code."""

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("exists y. mul(y, x) = 1", (1, 2, 3, 4)),
            ("x = 0", (0,)),
            ("mul(x, x) = x", (0, 1)),
            ("exists y. mul(y, y) = x", (0, 1, 4)),
        ],
    )
    def test_pullback_matches(self, text, expected):
        psi = parse(text, RING)
        chi = translate(psi, frac_code()).formula
        chi = subst_vars(chi, {"x1_1": Var("u"), "x1_2": Var("v")})
        theta = subst_vars(
            parse(FRAC_THETA, RING),
            {"x1_1": Var("u"), "x1_2": Var("v"), "x2_1": Var("x")},
        )
        pulled = exists_tuple(["u", "v"], conj([chi, theta]))
        assert sorted(definable_set(Z5, pulled, variables=("x",)).tuples) == [
            (e,) for e in expected
        ]
        assert sorted(definable_set(Z5, psi, variables=("x",)).tuples) == [
            (e,) for e in expected
        ]


class TestBi:
    def cert(self, mode="weak", **kw):
        theta = parse(FRAC_THETA, RING)
        return BiCertificate(
            frac_code(), identity_code(RING), theta, theta, mode=mode, **kw
        )

    def test_weak(self):
        rep = check_bi(self.cert(), Z5, Z5)
        assert rep.status == "ok"
        assert [c.label for c in rep.clauses] == ["1a", "1b", "2a", "2b"]
        assert rep.y_vs_x_divergence is None

    def test_strong_finds_coordinate_maps(self):
        rep = check_bi(self.cert("strong"), Z5, Z5)
        assert rep.status == "ok"
        assert [c.label for c in rep.clauses] == ["1a", "1b", "2a", "2b", "3"]
        assert rep.mu_gamma == {
            (m, n): (m * pow(n, 3, 5)) % 5 for m in range(5) for n in range(1, 5)
        }
        assert rep.mu_delta == {(x,): x for x in range(5)}
        json.dumps(rep.as_dict())

    def test_corrupted_return_connector(self):
        theta = parse(FRAC_THETA, RING)
        wrong = parse("mul(x2_1, x1_1) = x1_2 & !(x1_1 = 0)", RING)
        cert = BiCertificate(frac_code(), identity_code(RING), theta, wrong)
        rep = check_bi(cert, Z5, Z5)
        assert rep.status == "failed"
        assert rep.failure.label == "2b"
        assert rep.failure.witness == ("domain", ((1, 0), (0,)))
        assert [c.label for c in rep.details["2b"]] == ["domain"]

    def test_family_round_trip(self):
        rid = simple_reg(identity_code(RING))
        same = parse("x1_1 = x2_1", RING)
        free = parse("w1 = w1", RING)
        cert = BiCertificate(
            rid, rid, same, same, delta_a=free, delta_b=free, mode="regular_strong"
        )
        rep = check_bi(cert, Z3, Z3)
        assert rep.status == "ok"
        assert [c.label for c in rep.clauses] == ["Ia", "Ib", "IIa", "IIb", "III"]
        assert rep.y_vs_x_divergence is False

    def test_family_bad_theta(self):
        rid = simple_reg(identity_code(RING))
        free = parse("w1 = w1", RING)
        cert = BiCertificate(
            rid,
            rid,
            parse("add(x1_1, 1) = x2_1", RING),
            parse("x1_1 = x2_1", RING),
            delta_a=free,
            delta_b=free,
            mode="regular",
        )
        rep = check_bi(cert, Z3, Z3)
        assert rep.status == "failed"
        assert rep.failure.label == "IIa"
        assert rep.failure.witness == ((0, 0), (0,), "constant 0")

    def test_family_unsolvable_delta(self):
        rid = simple_reg(identity_code(RING))
        same = parse("x1_1 = x2_1", RING)
        cert = BiCertificate(
            rid,
            rid,
            same,
            same,
            delta_a=parse("w1 = add(1, w1)", RING),
            delta_b=parse("w1 = w1", RING),
            mode="regular",
        )
        rep = check_bi(cert, Z3, Z3)
        assert rep.status == "failed"
        assert rep.failure.witness == ((0, 0), None, "descriptor_unsolvable")

    def test_mode_validation(self):
        theta = parse(FRAC_THETA, RING)
        with pytest.raises(CodeError, match="sideways"):
            BiCertificate(frac_code(), identity_code(RING), theta, theta, mode="sideways")
        with pytest.raises(CodeError, match="regular codes"):
            BiCertificate(frac_code(), identity_code(RING), theta, theta, mode="regular")


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, 2, 3, 4]), st.sampled_from([1, 2, 3, 4]))
def test_rescale_connector_property(p, q):
    """x/p = y/q exactly when y = (q/p) x, for any pair of units."""
    cert = HomotopyCertificate(parse("mul(x2_1, $1) = mul(x1_1, $2)", RING))
    rep = check_homotopy((rescale_code(), (p,)), (rescale_code(), (q,)), Z5, cert)
    assert rep.status == "ok"
    ratio = (q * pow(p, 3, 5)) % 5
    assert rep.class_map == tuple((ratio * t) % 5 for t in range(5))
