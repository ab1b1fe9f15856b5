import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from helpers import modular_result, small
from fuscat import modular, scalars


def _md(name):
    return modular_result(name).artifacts["md"]


def test_z1_plus_T():
    md = _md("Z1+")
    expected = [1, 1, cmath.exp(4j * math.pi / 5), cmath.exp(6j * math.pi / 5)]
    assert np.allclose(md.T_np(), expected, atol=1e-14)


def test_y_for_nu3():
    d = small()["Z3+1"]
    assert abs(3 / math.sqrt(d.mu) - 3 / math.sqrt(13)) < 1e-15


def test_twelve_primaries_for_nu3():
    md = _md("Z3+1")
    assert md.size == 12 == 2 + 1 + 3 + 6
    assert len(modular.primary_labels(small()["Z3-1"])) == 12


@pytest.mark.parametrize("name", ["Z1+", "Z1-", "Z3+1", "Z3-2"])
def test_axioms(name):
    assert modular.check_axioms(_md(name)).ok


@pytest.mark.parametrize("name", ["Z1+", "Z3+2"])
def test_verlinde_independent(name):
    md = _md(name)
    S = md.S_np()
    N = oracles.verlinde_numpy(S)
    assert np.abs(N - np.round(N.real)).max() < 1e-8
    assert (np.round(N.real) >= 0).all()
    n = md.size
    assert np.array_equal(np.round(N[0].real), np.eye(n))


def test_unitary_positive_column_is_vacuum():
    data = modular_result("Z3+1").data
    assert data["positive_columns"] == ["0"]


def test_z3_minus_positive_row_is_b():
    data = modular_result("Z3-1").data
    assert data["positive_columns"] == ["b"]


def test_class_ii_twist_is_one():
    md = _md("Z3+1")
    assert scalars.close(md.T[md.index(("b",))], 1, 1e-20)


@pytest.mark.parametrize("mu,H_list", [(5, [(5,), (5,)]), (13, [(13,), (13,)])])
def test_enumerate_small(mu, H_list):
    forms = modular.enumerate_forms(mu)
    assert [f.H for f in forms] == H_list
    # two classes: square and non-square multipliers
    squares = {x * x % mu for x in range(1, mu)}
    us = [int(f.gram[0][0] * mu) for f in forms]
    assert (us[0] in squares) != (us[1] in squares)


def test_enumerate_125():
    Hs = {f.H for f in modular.enumerate_forms(125)}
    assert (125,) in Hs and (25, 5) in Hs


@pytest.mark.parametrize("mu", [5, 13, 29, 53])
def test_pm_orbits_count(mu):
    for form in modular.enumerate_forms(mu):
        assert len(modular.pm_orbits(form)) == (mu - 1) // 2


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([5, 13, 29, 53, 85]), st.integers(min_value=1, max_value=84))
def test_cyclic_form_properties(mu, u):
    if math.gcd(u, mu) != 1:
        return
    form = modular.cyclic_form(mu, u)
    assert form.is_symmetric() and form.is_nondegenerate()
    for k in range(mu):
        assert form.beta((k,), (k,)) == Fraction(u * k * k % mu, mu)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([5, 13, 29]), st.integers(min_value=1, max_value=28), st.integers(min_value=1, max_value=28))
def test_isomorphism_is_square_class(mu, u1, u2):
    if u1 % mu == 0 or u2 % mu == 0:
        return
    iso = modular.forms_isomorphic(modular.cyclic_form(mu, u1 % mu), modular.cyclic_form(mu, u2 % mu))
    assert iso == oracles.same_square_class(mu, u1 % mu, u2 % mu)


@pytest.mark.parametrize("name,u", [("Z1+", 1), ("Z1-", 2), ("Z3-1", 2), ("Z3+1", 1)])
def test_fits(name, u):
    d = small()[name]
    fits = modular.fit_bilinear_form(_md(name), d.mu, d.sign)
    assert fits
    assert any(f.form.H == (d.mu,) and oracles.same_square_class(d.mu, int(f.form.gram[0][0] * d.mu), u)
               for f in fits)
    twists = {Fraction(oracles.angle_fraction(complex(_md(name).T[i]), d.mu)) for i in _md(name).block("d")}
    assert twists == oracles.cyclic_form_twists(d.mu, u)


def test_galois_twists():
    assert modular.galois_twist_check(_md("Z3+1"), _md("Z3-2"), 13)


def test_diagonal_alternative_is_informational():
    result = modular_result("Z1+")
    assert "diagonal-s-n3-form" in {r.name for r in result.informational}
    assert result.ok
