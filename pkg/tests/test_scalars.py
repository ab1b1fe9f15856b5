import mpmath
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from fuscat import scalars
from fuscat.scalars import AlgebraicSpec


def test_golden_root():
    x = scalars.refine_root(AlgebraicSpec([-1, 1, 1], 0.618))
    assert abs(scalars.to_mp(x) - (mpmath.sqrt(5) - 1) / 2) < 1e-60


def test_linear_root():
    assert scalars.close(scalars.refine_root(AlgebraicSpec([-1, 1], 1.0)), 1)


def test_quartic_root_d1():
    # 9x^4 - 15x^3 + 7x^2 + x - 1, the root near -0.321
    x = scalars.refine_root(AlgebraicSpec([-1, 1, 7, -15, 9], -0.321))
    assert abs(scalars.to_complex(x) - (-0.3214)) < 1e-3
    assert abs(scalars.poly_eval([-1, 1, 7, -15, 9], x)) < 1e-50


def test_ambiguous_root():
    with pytest.raises(scalars.AmbiguousRoot):
        scalars.refine_root(AlgebraicSpec([-1, 0, 1], 0.0, radius=2.0))


@pytest.mark.parametrize("nu,sign", [(1, "+"), (3, "+"), (3, "-"), (5, "-"), (9, "+")])
def test_delta_matches_formula(nu, sign):
    assert abs(scalars.to_mp(scalars.delta_pm(nu, sign)) - oracles.delta(nu, sign)) < 1e-70


def test_delta_values():
    assert abs(float(scalars.delta_pm(1, "+")) - 1.61803) < 1e-5
    assert abs(float(scalars.delta_pm(3, "+")) - 3.30278) < 1e-5
    assert abs(float(scalars.delta_pm(3, "-")) + 0.30278) < 1e-5


def test_delta_rejects_even():
    with pytest.raises(ValueError):
        scalars.delta_pm(2, "+")


@given(st.sampled_from([1, 3, 5, 7, 9, 11, 13]))
def test_delta_pair_relations(nu):
    p, m = scalars.delta_pm(nu, "+"), scalars.delta_pm(nu, "-")
    assert abs(p * m + 1) < 1e-60
    assert abs(p + m - nu) < 1e-60


@settings(max_examples=30)
@given(st.floats(min_value=-3, max_value=3).filter(lambda v: abs(v) > 0.05))
def test_refine_is_idempotent(approx):
    # x^3 - 2x - 1 has three well separated real roots
    roots = [-1.0, (1 - 5 ** 0.5) / 2, (1 + 5 ** 0.5) / 2]
    nearest = min(roots, key=lambda r: abs(r - approx))
    spec = AlgebraicSpec([-1, -2, 0, 1], nearest, radius=0.3)
    x = scalars.refine_root(spec)
    again = scalars.refine_root(AlgebraicSpec([-1, -2, 0, 1], scalars.to_complex(x), radius=0.3))
    assert abs(x - again) < scalars.tolerances().tol_zero


def test_b_branch():
    for label in ("1", "w", "wbar"):
        for sign in "+-":
            delta = scalars.delta_pm(3, sign)
            b = scalars.b_parameter(scalars.omega(label), delta)
            assert abs(b * b * scalars.omega(label) * delta - 1) < 1e-60
            arg = mpmath.arg(scalars.to_mp(b))
            assert -1e-30 <= arg < mpmath.pi


def test_roots_of_unity_certificate():
    assert scalars.certify_root_of_unity(scalars.root_of_unity(2, 5), 20) == 5
    assert scalars.certify_root_of_unity(scalars.scalar(complex(0.6, 0.8)), 50) is None


def test_precision_roundtrip():
    with scalars.precision(300):
        assert scalars.get_precision() == 300
    assert scalars.get_precision() == 256
    x = scalars.sqrt(2)
    assert scalars.close(scalars.from_pair(scalars.to_pair(x)), x, 1e-70)
