import json
import math

import mpmath

import pytest

from wtransfer.corpus import (
    CorpusEntry,
    Expectation,
    builtin_corpus,
    corpus_dir,
    generate_entries,
    liouville_instance,
    load_corpus,
    seeded_decimal_entries,
    write_corpus,
)
from wtransfer.entries import EntrySpec
from wtransfer.errors import DomainError, InstanceParseError
from wtransfer.exponents import ExponentEstimate, estimate_exponents, record_scan


def test_shipped_files_match_generator(tmp_path):
    write_corpus(tmp_path)
    fresh = sorted(p.name for p in tmp_path.glob("*.json"))
    shipped = sorted(p.name for p in corpus_dir().glob("*.json"))
    assert fresh == shipped
    for name in fresh:
        assert (tmp_path / name).read_bytes() == (corpus_dir() / name).read_bytes()


def test_entry_round_trip():
    for entry in generate_entries():
        again = CorpusEntry.from_json(json.loads(entry.dumps()))
        assert again == entry


def test_builtin_corpus_contents():
    ids = {e.id for e in builtin_corpus()}
    for want in ("golden", "rational_scalar", "rational_square", "sqrt23_uniform", "sqrt23_weighted",
                 "liouville_10_3", "column_sqrt2_half", "column_half_sqrt2"):
        assert want in ids
    assert len(ids) == 17


def test_seeded_entries_are_reproducible():
    a, b = seeded_decimal_entries(7), seeded_decimal_entries(7)
    assert [e.dumps() for e in a] == [e.dumps() for e in b]
    assert [e.dumps() for e in a] != [e.dumps() for e in seeded_decimal_entries(8)]


def test_liouville_instance_shapes():
    scalar = liouville_instance(10, 3)
    assert scalar.to_dict()["theta"] == [["liouville:10:3"]]
    row, col = liouville_instance(10, 3, "row"), liouville_instance(10, 3, "column")
    assert (row.m, row.n, col.m, col.n) == (2, 1, 1, 2)
    with pytest.raises(DomainError):
        liouville_instance(10, 1)
    with pytest.raises(ValueError):
        liouville_instance(10, 2, "cube")


def test_liouville_instance_digits():
    # ratio 2 places ones at positions 1, 2, 4, 8, 16, ...
    val = EntrySpec.parse("liouville:10:2").value
    scaled = (val * 10**17).interval(200)
    assert int(mpmath.floor(scaled.a)) == int(mpmath.floor(scaled.b)) == 11010001000000010


def test_liouville_regular_exponent_oracle(oracle_records):
    # the frozen oracle gives an exponent of exactly 2 at height 1000 for ratio 3
    case = oracle_records["liouville_10_3"]
    assert case["window_regular_max"] == pytest.approx(2.0, abs=1e-12)


def test_expectation_logic():
    inf = Expectation("omega", "approx", math.inf, 0, "analytic")
    assert inf.check(5, math.inf) and not inf.check(5, 6)
    cap = Expectation("omega_hat", "at_most", 4 / 3, 0.1, "analytic")
    assert cap.check(1.0, 1.4) and not cap.check(1.0, 1.5)
    near = Expectation("omega", "approx", 1.0, 0.2, "analytic")
    assert near.check(1.1, 1.15) and not near.check(1.3, 1.4)
    with pytest.raises(ValueError):
        Expectation("omega", "approx", 1, 0, "guess")
    assert Expectation.from_json(cap.to_json()) == Expectation("omega_hat", "at_most", 4 / 3, 0.1, "analytic")


def test_check_expected_uses_the_right_side():
    entry = next(e for e in builtin_corpus() if e.id == "golden")
    good = ExponentEstimate(1.0, 1.05, 1.0, 1.02, 10)
    verdicts = entry.check_expected(good, good)
    assert len(verdicts) == 4 and all(v["passed"] for v in verdicts)
    assert len(entry.check_expected(good)) == 2


def test_load_rejects_bad_entry(tmp_path):
    (tmp_path / "bad.json").write_text(json.dumps({"id": "x", "instance": {"sigma": ["1"]}}))
    with pytest.raises(InstanceParseError):
        load_corpus(tmp_path)


@pytest.mark.parametrize("entry_id", ["golden", "rational_row", "column_sqrt2_half", "column_half_sqrt2"])
def test_fast_expectations(entry_id):
    entry = next(e for e in builtin_corpus() if e.id == entry_id)
    est = estimate_exponents(record_scan(entry.instance, 10**5))
    est_t = estimate_exponents(record_scan(entry.instance.transposed(), 10**5))
    assert all(v["passed"] for v in entry.check_expected(est, est_t))
