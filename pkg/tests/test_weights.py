import json
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from wtransfer.errors import InstanceParseError
from wtransfer.powers import PowerProduct
from wtransfer.weights import (
    ProblemInstance,
    WeightedBox,
    Weights,
    dump_instance,
    load_instance,
    p_box,
    q_box,
    weighted_norm,
    weighted_norm_exact,
)


@st.composite
def weight_vectors(draw, max_len=4):
    k = draw(st.integers(1, max_len))
    raw = sorted((draw(st.integers(1, 20)) for _ in range(k)), reverse=True)
    total = sum(raw)
    return Weights(tuple(Fraction(r, total) for r in raw))


def test_weights_validation():
    assert Weights.parse(["7/10", "3/10"]).last == Fraction(3, 10)
    assert Weights.uniform(3).is_uniform()
    for bad in (["1/2", "1/3"], ["3/10", "7/10"], ["0", "1"], []):
        with pytest.raises(ValueError):
            Weights.parse(bad)


def test_weights_float_input_is_rationalised():
    assert Weights.parse([0.7, 0.3]).values == (Fraction(7, 10), Fraction(3, 10))


def test_weighted_norm_example():
    w = Weights.parse(["1/2", "1/2"])
    assert weighted_norm_exact((3, -2), w) == PowerProduct.of(9)
    assert weighted_norm_exact((0, 0), w) == 0
    assert abs(weighted_norm((3, -2), w) - 9) < 1e-20


@given(weight_vectors(), st.data())
def test_weighted_norm_exact_matches_float(w, data):
    v = tuple(data.draw(st.integers(-30, 30)) for _ in range(len(w)))
    exact = weighted_norm_exact(v, w)
    approx = weighted_norm(v, w, prec=113)
    if exact == 0:
        assert approx == 0
    else:
        assert abs(float(exact) - float(approx)) <= 1e-12 * float(exact)


@given(weight_vectors(), st.data())
def test_weighted_norm_homogeneity(w, data):
    # |c^sigma x|_sigma = c |x|_sigma componentwise for integer scaling by powers
    v = tuple(data.draw(st.integers(1, 9)) for _ in range(len(w)))
    base = weighted_norm_exact(v, w)
    for j in range(len(w)):
        bigger = list(v)
        bigger[j] += 1
        assert weighted_norm_exact(tuple(bigger), w) >= base


def test_weighted_norm_rejects_floats():
    with pytest.raises(TypeError):
        weighted_norm_exact((0.5,), Weights.parse(["1"]))


def _instance():
    return ProblemInstance(Weights.parse(["7/10", "3/10"]), Weights.parse(["1"]), (("sqrt:2", "sqrt:3"),))


def test_instance_roundtrip(tmp_path):
    inst = _instance()
    path = tmp_path / "inst.json"
    dump_instance(inst, path)
    assert json.loads(path.read_text()) == {"m": 2, "n": 1, "sigma": ["7/10", "3/10"], "rho": ["1"],
                                            "theta": [["sqrt:2", "sqrt:3"]], "eta": None}
    again = load_instance(path)
    assert again == inst
    dump_instance(again, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_instance_transpose():
    t = _instance().transposed()
    assert (t.m, t.n) == (1, 2)
    assert t.sigma == Weights.parse(["1"]) and t.rho == Weights.parse(["7/10", "3/10"])
    assert t.transposed() == _instance()


@pytest.mark.parametrize("data", [
    {"sigma": ["1"], "rho": ["1"]},
    {"sigma": ["1"], "rho": ["1"], "theta": [["pi"]]},
    {"sigma": ["1/2", "1/2"], "rho": ["1"], "theta": [["1"]]},
    {"m": 2, "sigma": ["1"], "rho": ["1"], "theta": [["1"]]},
])
def test_instance_parse_errors(data):
    with pytest.raises(InstanceParseError):
        ProblemInstance.from_dict(data)


def test_load_instance_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InstanceParseError):
        load_instance(bad)
    with pytest.raises(InstanceParseError):
        load_instance(tmp_path / "missing.json")


def test_boxes():
    inst = _instance()
    P = p_box(8, Fraction(3, 2), inst)
    assert P.half_widths[0] == PowerProduct.of(8) ** Fraction(7, 10)
    assert P.half_widths[2] == PowerProduct.of(8) ** Fraction(-3, 2)
    Q = q_box(4, 3, inst)
    assert Q.half_widths[2] == PowerProduct.of(4)
    assert Q.half_widths[1] == PowerProduct.of(4) ** Fraction(-9, 10)
    with pytest.raises(ValueError):
        p_box(1, 2, inst)


def test_box_contains():
    box = WeightedBox.from_lambdas([Fraction(1, 2), 2])
    assert box.contains((Fraction(1, 2), -2))
    assert not box.contains((Fraction(3, 4), 0))
    assert box.is_subset_of(box.scaled(2))
    assert box.volume_factor() == PowerProduct.of(1)


@given(weight_vectors(3), st.fractions(min_value=2, max_value=50), st.fractions(min_value=1, max_value=3))
def test_p_box_volume(w, t, gamma):
    rho = Weights.parse(["1"])
    inst = ProblemInstance(w, rho, (tuple("sqrt:2" for _ in range(len(w))),))
    P = p_box(t, gamma, inst)
    # product of half-widths is t^(1 - gamma)
    assert P.volume_factor() == PowerProduct.of(t) ** (1 - gamma)
    with mpmath.workdps(30):
        assert P.floats()[0] > 0
