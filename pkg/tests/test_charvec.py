import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fuscat import charvec
from fuscat.charvec import CharSeriesData, LinearForm


@pytest.fixture(scope="module")
def haagerup():
    return charvec.load_series("haagerup-c8")


@pytest.fixture(scope="module")
def nonunitary():
    return charvec.load_series("nonunitary-c8")


def test_shapes(haagerup, nonunitary):
    assert haagerup.dim == nonunitary.dim == 12
    assert haagerup.parameters == ["beta"]
    assert nonunitary.parameters == ["alpha", "beta", "gamma", "delta", "epsilon"]
    assert len(haagerup.Lambda) == 12 and len(haagerup.Xi1) == 12


def test_unknown_dataset():
    with pytest.raises(charvec.UnknownDataset):
        charvec.load_series("no-such-data")


def test_checksum_mismatch(tmp_path):
    src = charvec._data_path("haagerup-c8").read_text()
    bad = tmp_path / "h.json"
    bad.write_text(src.replace('"-5/39"', '"-7/39"'))
    with pytest.raises(charvec.ChecksumMismatch):
        charvec.load_series("haagerup-c8", bad)
    assert charvec.load_series("haagerup-c8", bad, verify=False).Lambda[8] == Fraction(-7, 39)


def test_haagerup_bounds(haagerup):
    cons = charvec.derive_constraints(haagerup)
    d3 = [c for c in cons if c.kind == "nonneg-integer" and c.form == LinearForm.make(0, {"beta": 1})]
    d4 = [c for c in cons if c.kind == "nonneg-integer" and c.form == LinearForm.make(5, {"beta": -3})]
    assert d3 and d4


def test_haagerup_enumeration(haagerup):
    assert charvec.enumerate_admissible(haagerup).assignments == [{"beta": 0}, {"beta": 1}]


def test_haagerup_vacuum_at_beta_zero(haagerup):
    series = charvec.evaluate_series(haagerup, {"beta": 0})["0"]
    assert series[0] == (Fraction(-1, 3), 1)
    assert series[1][1] == 6


def test_nonunitary_constraints(nonunitary):
    result = charvec.enumerate_admissible(nonunitary, fixed={"alpha": 1}, bound=4)
    text = "\n".join(result.diagnostics)
    assert "1 + β - γ - δ = 0" in text
    assert "even-coefficient obstruction" in text
    plain = [c.describe() for c in charvec.derive_constraints(nonunitary) if c.kind == "parity"]
    assert any("α ≡ β (mod 2)" in p for p in plain)


def test_nonunitary_relation_holds_on_solutions(nonunitary):
    for point in charvec.enumerate_admissible(nonunitary, fixed={"alpha": 1}, bound=4).assignments:
        assert 1 + point["beta"] == point["gamma"] + point["delta"]
        assert (1 + point["beta"]) % 2 == 0


def test_depth_beyond_printed(haagerup):
    with pytest.raises(ValueError):
        charvec.enumerate_admissible(haagerup, depth=haagerup.printed_depth() + 1)


def _toy(series):
    return CharSeriesData(id="toy", labels=["0", "x"], Lambda=[Fraction(0)] * 2, Xi1=[[0, 0], [0, 0]],
                          series=series, positive_row=0, parameters=["p", "q"])


def test_degenerate_input_gives_full_grid():
    toy = _toy({"0": [(Fraction(0), LinearForm.make(1))], "x": [(Fraction(0), LinearForm.make(2))]})
    result = charvec.enumerate_admissible(toy, bound=3)
    assert len(result.assignments) == 16


def test_lambda_and_xi1_consistency(haagerup, nonunitary):
    lam = charvec.check_lambda_offsets(haagerup)
    assert not lam.ok
    assert [c.indices for c in lam.failures()] == [("d3", "-5/39", "-7/39")]
    assert charvec.check_lambda_offsets(nonunitary).ok
    assert charvec.check_xi1(nonunitary).ok


def test_aliases(haagerup):
    assert haagerup.component("c0") == haagerup.component("a")


forms = st.builds(lambda c, a, b: LinearForm.make(Fraction(c), {"alpha": Fraction(a), "beta": Fraction(b)}),
                  st.integers(-20, 20), st.integers(-20, 20), st.integers(-20, 20))


@settings(max_examples=100)
@given(forms, forms, st.integers(-5, 5), st.integers(-5, 5))
def test_linear_form_algebra(f, g, a, b):
    values = {"alpha": a, "beta": b}
    assert (f + g).evaluate(values) == f.evaluate(values) + g.evaluate(values)
    assert (f - f).is_zero()
    assert f.scale(3).evaluate(values) == 3 * f.evaluate(values)
    assert LinearForm.from_json(json.loads(json.dumps(
        {"coeff_const": str(f.const), **{f"coeff_{k}": str(v) for k, v in f.terms.items()}}))) == f
