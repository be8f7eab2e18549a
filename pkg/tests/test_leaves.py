from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from wtransfer.errors import DomainError, RangeError
from wtransfer.leaves import (
    COUNTEREXAMPLE,
    HYPOTHESES_FAIL,
    VERIFIED,
    FamilyParams,
    Magnitude,
    SigmaPoint,
    check_prop4,
    doubling_constant,
    find_two_point_leaf,
    leaf,
    leaf_cover,
    leaves_campaign,
    main_lemma_trial,
    node,
    producer,
    produces,
    q_r_box,
    uniform_constant,
    uniform_implication_trial,
    uniform_parameters,
    wedge_bound_check,
)
from wtransfer.powers import PowerProduct
from wtransfer.weights import ProblemInstance, Weights

ONE = Weights.parse(["1"])
P = FamilyParams(4, 3, 2)


def pp(x):
    return PowerProduct.of(x)


def widths(box):
    return box.half_widths


def test_family_derived_values():
    assert P.S == pp(8) and P.sS == pp(32)
    assert P.middle ** 2 == pp(32)
    with pytest.raises(DomainError):
        FamilyParams(1, 3, 2)
    with pytest.raises(DomainError):
        FamilyParams(4, 2, 3)


def test_worked_boxes():
    assert widths(node(P, 4, ONE, ONE).box) == (pp(F(1, 64)), pp(4))
    assert widths(leaf(P, 4, ONE, ONE)) == (pp(F(1, 16)), pp(4))
    assert widths(leaf(P, 8, ONE, ONE)) == (pp(F(1, 64)), pp(8))
    assert widths(node(P, 8, ONE, ONE, family="anti-stem").box) == (pp(F(1, 16)), pp(8))
    # the root node is Q(s, delta) and the anti-node is Q(8, 4/3)
    assert widths(q_r_box(P, pp(4), ONE, ONE)) == (pp(4) ** -3, pp(4))
    assert widths(q_r_box(P, pp(8), ONE, ONE)) == (pp(8) ** F(-4, 3), pp(8))


def test_range_errors():
    with pytest.raises(RangeError):
        node(P, 7, ONE, ONE)
    with pytest.raises(RangeError):
        node(P, 5, ONE, ONE, family="anti-stem")
    with pytest.raises(RangeError):
        leaf(P, 9, ONE, ONE)
    with pytest.raises(ValueError):
        node(P, 4, ONE, ONE, family="branch")


def test_produces():
    assert produces(P, 4, 4) and produces(P, 4, 8)
    assert not produces(P, 4, 6)
    assert produces(P, P.middle, P.middle)
    assert producer(P, 8) == pp(4) and producer(P, 5) == pp(5)


def test_prop4_worked_example():
    grid = [4, 5, P.middle, 7, 8]
    rep = check_prop4(P, grid, ONE, ONE)
    assert rep["passed"], rep["checks"]
    first = rep["table"][0]
    assert first["node"] == ["1/64", "4"]
    assert first["leaves"] == [["1/16", "4"], ["1/64", "8"]]
    assert first["anti_node"] == ["1/16", "8"]


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=F(3, 2), max_value=20, max_denominator=8),
       st.fractions(min_value=1, max_value=5, max_denominator=6), st.data())
def test_prop4_random_parameters(s, delta, data):
    alpha = data.draw(st.fractions(min_value=1, max_value=delta, max_denominator=6))
    params = FamilyParams(s, delta, alpha)
    sigma = Weights.parse(["7/10", "3/10"])
    rho = Weights.parse(["1"])
    grid = [params.s_pp, params.middle, params.S]
    for k in range(1, 4):
        grid.append(params.s_pp * (params.S / params.s_pp) ** F(k, 4))
    assert check_prop4(params, grid, sigma, rho)["passed"]


def test_degenerate_alpha_equals_delta():
    params = FamilyParams(4, 2, 2)
    assert params.S == pp(4) == params.middle
    assert check_prop4(params, [4], ONE, ONE)["passed"]
    with pytest.raises(DomainError):
        find_two_point_leaf(params, [])


def test_magnitude():
    a = Magnitude.of(F(1, 36))
    assert a ** F(-1, 2) == Magnitude.of(6)
    assert Magnitude.of(2) < Magnitude.of(pp(2) ** F(1, 2) * 2)
    assert Magnitude.of(pp(3) ** F(1, 2)).compare(Magnitude.of(F(173, 100))) == 1
    assert str(Magnitude.of(F(1, 2))) == "1/2"


def _synthetic():
    # leaf intervals [4, 6] and [5, 8] cover [s, S] = [4, 8]; neither point lies in the root node
    a = SigmaPoint.make(("a",), 4, F(1, 36))
    b = SigmaPoint.make(("b",), 5, F(1, 64))
    return a, b


def test_synthetic_two_point_leaf():
    a, b = _synthetic()
    assert leaf_cover(P, [a, b]) == {"covered": True}
    w = find_two_point_leaf(P, [a, b])
    assert w.found
    assert w.node_point.point == ("b",) and w.other_point.point == ("a",)
    assert w.r0 == Magnitude.of(5) and w.leaf_r == Magnitude.of(5)
    assert w.node_point.in_leaf(P, 5) and w.other_point.in_leaf(P, 5)


def test_gap_and_root_point_are_reported():
    a, b = _synthetic()
    gap = find_two_point_leaf(P, [a])
    assert not gap.found and gap.failed == ["every_leaf_nonempty"]
    root = SigmaPoint.make(("r",), 2, F(1, 100))
    bad = find_two_point_leaf(P, [a, b, root])
    assert "root_node_empty" in bad.failed


def test_constants():
    assert float(uniform_constant(3)) == pytest.approx(3.464102, abs=1e-6)
    assert float(uniform_constant(4)) == pytest.approx(2.213364, abs=1e-6)
    assert doubling_constant(3) == pp(2)
    with pytest.raises(DomainError):
        uniform_constant(2)


SQRT23 = ProblemInstance(Weights.parse(["1/2", "1/2"]), ONE, (("sqrt:2", "sqrt:3"),), name="sqrt23_uniform")


def test_uniform_parameters():
    gamma, s, delta, S = uniform_parameters(SQRT23, 17, F(6, 5))
    assert gamma == F(5, 4) and s == pp(17) and delta == F(3, 2)
    assert S == pp(17) ** F(5, 4)


def test_verified_lemma_case():
    res = main_lemma_trial(SQRT23, 17, F(6, 5))
    assert res.outcome == VERIFIED, res.as_dict()
    assert res.details["wedge_bounds"]["holds"]
    assert res.details["witness"]["found"]


def test_lemma_domain():
    with pytest.raises(DomainError):
        main_lemma_trial(SQRT23, 17, 1)
    with pytest.raises(DomainError):
        main_lemma_trial(SQRT23, 1, F(6, 5))


def test_wedge_bound_check_reports_violations():
    from wtransfer.entries import RealConst
    big = [RealConst.rational(x) for x in (100, 0, 0)]
    other = [RealConst.rational(x) for x in (0, 100, 0)]
    rep = wedge_bound_check(SQRT23, 10, 1, big, other)
    assert not rep["holds"] and rep["violations"] == ["1,2"]


def test_uniform_trial_at_alpha_one():
    res = uniform_implication_trial(SQRT23, 50, 1)
    assert res.outcome in (VERIFIED, HYPOTHESES_FAIL)
    assert res.outcome != COUNTEREXAMPLE


def test_small_campaign_is_deterministic():
    insts = [SQRT23]
    a = list(leaves_campaign(insts, 4, seed=5, mode="uniform"))
    b = list(leaves_campaign(insts, 4, seed=5, mode="uniform"))
    assert a == b
    assert all(r["outcome"] != COUNTEREXAMPLE for r in a)
    with pytest.raises(DomainError):
        list(leaves_campaign([ProblemInstance(ONE, ONE, (("golden",),))], 1, seed=1))
