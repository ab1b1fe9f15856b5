import cmath
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from helpers import small, tube_algebra, tube_result
from fuscat import scalars, tube


@pytest.mark.parametrize("nu", [1, 3, 5, 7])
def test_dimension_formula(nu):
    assert tube.tube_dimension(nu) == oracles.tube_dim(nu)
    assert sum(s * s for s in oracles.tube_block_sizes(nu)) == oracles.tube_dim(nu)
    assert sorted(tube.expected_block_sizes(nu)) == sorted(oracles.tube_block_sizes(nu))


def test_small_dimensions():
    assert oracles.tube_dim(1) == 7
    assert oracles.tube_dim(3) == 1 + 16 + 25 + 75 + 54


@pytest.mark.parametrize("name", ["Z1+", "Z3+1"])
def test_basis_size(name):
    T = tube_algebra(name)
    assert T.dim == len(tube.basis_labels(T.d.group)) == tube.tube_dimension(T.d.nu)


@pytest.mark.parametrize("name", ["Z1+", "Z1-", "Z3+1"])
def test_corrected_printed_products(name):
    rep = tube.check_printed_products(tube_algebra(name), corrected=True)
    assert rep.ok, rep.summary()


def test_literal_printed_products_fail_on_z3():
    # the printed D.G family carries a typo; the literal reading is expected to fail
    rep = tube.check_printed_products(tube_algebra("Z3-1"), corrected=False)
    assert not rep.ok


def _random_element(T, rng, k=4):
    labels = tube.basis_labels(T.d.group)
    out = tube.TubeElement()
    for _ in range(k):
        out = out + tube.TubeElement.basis(rng.choice(labels), complex(rng.gauss(0, 1), rng.gauss(0, 1)))
    return out


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_associativity_z1(seed):
    T = tube_algebra("Z1+")
    rng = random.Random(seed)
    X, Y, Z = (_random_element(T, rng) for _ in range(3))
    lhs = T.mul(T.mul(X, Y), Z)
    rhs = T.mul(X, T.mul(Y, Z))
    assert (lhs - rhs).norm() < scalars.tolerances().tol_report


@pytest.mark.parametrize("name", ["Z1+", "Z3+1"])
def test_known_matrix_units(name):
    T = tube_algebra(name)
    rep = tube.check_matrix_units(T, tube.matrix_units_known(T.d))
    assert rep.ok, rep.summary()


def test_central_idempotents_are_idempotent():
    T = tube_algebra("Z1+")
    for unit in tube.matrix_units_known(T.d):
        z = unit.central()
        assert (T.mul(z, z) - z).norm() < 1e-25


def test_unit_is_computed_not_assumed():
    T = tube_algebra("Z1+")
    table = tube.table_arrays(T, tube.structure_table(T))
    u, residual, rank = tube.solve_unit(T, table)
    assert residual < 1e-12  # float64 least squares
    assert rank == T.dim
    candidate = T.candidate_unit()
    labels = tube.basis_labels(T.d.group)
    vec = np.array([complex(candidate.coeffs.get(lab, 0)) for lab in labels])
    assert np.abs(vec - u).max() < 1e-12


def test_z1_class_v_roots():
    result = tube_result("Z1+")
    ws = sorted(cmath.phase(complex(*map(float, h["w"]))) % (2 * cmath.pi)
                for h in result.data["half_braidings"])
    expected = sorted(2 * cmath.pi * k / 5 for k in (2, 3))
    assert np.allclose(ws, expected, atol=1e-12)


def test_z1_minus_class_v_roots():
    result = tube_result("Z1-")
    fracs = sorted(round(oracles.angle_fraction(complex(*map(float, h["w"])), 5) * 5) % 5
                   for h in result.data["half_braidings"])
    assert fracs == [1, 4]


@pytest.mark.parametrize("name", ["Z1+", "Z3+1"])
def test_decomposition_blocks(name):
    result = tube_result(name)
    assert result.ok, [r.summary() for r in result.reports]
    nu = small()[name].nu
    assert sorted(result.data["block_sizes"]) == sorted(oracles.tube_block_sizes(nu))


def test_class_v_sum_rule_z3():
    d = small()["Z3+1"]
    hbs = tube_result("Z3+1").artifacts["half_braidings"]
    inv = 1 / scalars.scalar(d.delta)
    for hb in hbs:
        total = sum(hb.C[0][g] for g in range(d.nu))
        assert abs(total - (hb.w - hb.w.conjugate() * inv)) < 1e-15
    assert tube.check_class_v_equations(d, hbs).ok


@pytest.mark.parametrize("name", ["Z1+", "Z1-", "Z3+1", "Z3-2", "Z5+1", "Z5-2"])
def test_printed_corner_matches_engine(name):
    d = small()[name]
    engine = tube.corner_from_engine(tube_algebra(name))
    printed = tube.corner_from_printed(d)
    assert engine.labels == printed.labels
    worst = 0.0
    for a in range(engine.dim):
        for b in range(engine.dim):
            e, p = engine.table[a][b], printed.table[a][b]
            for k in set(e) | set(p):
                worst = max(worst, float(abs(e.get(k, 0) - p.get(k, 0))))
    assert worst < 1e-15
