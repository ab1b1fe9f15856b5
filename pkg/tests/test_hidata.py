import json

import mpmath
import numpy as np
import pytest

import oracles
from helpers import qsystem, small
from fuscat import hidata, scalars
from fuscat.groups import GroupSpec


def test_z1_solutions():
    gold = oracles.golden_pair()
    for sign in "+-":
        d = hidata.solve_Z1(sign)
        # A is the negative of the s-coefficient a in rho(s)
        assert abs(scalars.to_mp(d.A[0][0]) + gold[sign]) < 1e-70
        assert abs(scalars.to_mp(d.A[0][0]) + 1 / oracles.delta(1, sign)) < 1e-70
        assert hidata.verify_equations(d).ok
    assert hidata.classify(hidata.solve_Z1("+")) == "unitary"


def test_z3_column_sum():
    # the printed constants c1 + d1 + d2, summed with mpmath from their definitions
    d1, d2 = (mpmath.findroot(lambda x: 9 * x**4 - 15 * x**3 + 7 * x**2 + x - 1, x0) for x0 in (-0.321, 0.554))
    c1 = (2 - mpmath.sqrt(13)) / 3
    oracle = c1 + d1 + d2
    assert abs(oracle + 1 / oracles.delta(3, "+")) < 1e-60
    d = small()["Z3+1"]
    column = sum(d.A[h][0] for h in range(3))
    assert abs(scalars.to_mp(column) - oracle) < 1e-60


def test_random_A_fails():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    d = hidata.make_datum(GroupSpec((3,)), "+", A)
    assert not hidata.verify_equations(d).ok


@pytest.mark.parametrize("nu,count", [(1, 1), (3, 2), (5, 2)])
def test_counts_per_sign(nu, count):
    for sign in "+-":
        assert len(hidata.solve_small(GroupSpec((nu,)), sign)) == count


def test_catalog_total():
    assert [len([d for d in small().values() if d.nu == nu]) for nu in (1, 3, 5)] == [2, 4, 4]


def test_z5_minus_leading_constant():
    d = small()["Z5-1"]
    assert abs(scalars.to_mp(d.A[0][0]) - (13 + mpmath.sqrt(29)) / 10) < 1e-70


def test_equivalence_under_negation():
    names = ("c1", "d1", "d2", "f5", "f5")
    vals = [hidata.Z3_CONSTANTS[n].value() for n in names]
    c, d, e, f, g = vals
    one = hidata.make_datum(GroupSpec((3,)), "+", hidata.z3_pattern(c, d, e, f, g))
    two = hidata.make_datum(GroupSpec((3,)), "+", hidata.z3_pattern(c, e, d, g, f))
    assert hidata.equivalence(one, two) == (0, 2, 1)


def test_equivalence_trivial_and_distinct():
    d1, d2 = small()["Z3+1"], small()["Z3+2"]
    assert hidata.equivalence(d1, d1) == (0, 1, 2)
    assert hidata.equivalence(d1, d2) is None


def test_classify_rules():
    assert hidata.classify(small()["Z3+1"]) == "unitary"
    fake = hidata.make_datum(GroupSpec((3,)), "+", [[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    assert hidata.classify(fake) == "neither"


def test_minus_data_are_not_hermitian():
    # recorded deviation: the printed '-' tuples give non-hermitian matrices
    assert hidata.classify(small()["Z3-1"]) == "neither"


@pytest.mark.parametrize("name", ["Z3+1", "Z3+2", "Z3-1", "Z3-2", "Z5+1", "Z5-2"])
def test_cubic_and_quartic_checked_separately(name):
    rep = hidata.verify_equations(small()[name])
    names = {c.check for c in rep.checks}
    assert rep.ok
    assert {"cubic", "quart"} <= names


@pytest.mark.parametrize("plus,minus", [("Z3+1", "Z3-2"), ("Z3+2", "Z3-1"), ("Z5+1", "Z5-1"), ("Z5+2", "Z5-2")])
def test_galois_partners(plus, minus):
    assert hidata.galois_partner_check(small()[plus], small()[minus])


def test_json_roundtrip():
    d = small()["Z5+2"]
    back = hidata.HIDatum.from_json(json.loads(json.dumps(d.to_json())))
    assert hidata.equivalence(d, back) is not None
    with pytest.raises(ValueError):
        hidata.HIDatum.from_json({"group": [3], "sign": "+"})


def test_qsystem_j7():
    d = qsystem("QS-j7")
    assert d.nu == 7
    assert hidata.verify_equations(d).ok
    A = d.A_np()
    assert np.allclose(A, A.conj().T, atol=1e-40)
    assert scalars.close(d.delta, scalars.delta_pm(7, "+"))


def test_qsystem_j9_pair_inequivalent():
    assert hidata.equivalence(qsystem("QS-j9"), qsystem("QS-j9p")) is None


def test_degenerate_qsystem_fails():
    d = hidata.from_qsystem_j(hidata.QSystemJSpec(3, (0.0,)), refine=False)
    assert not hidata.verify_equations(d).ok


def test_extension_rule_violation():
    with pytest.raises(hidata.ExtensionRuleViolation):
        hidata.extend_j(7, (2.471228, 0.51685555, 0.2137724, 99.0))


def test_newton_search_finds_z1():
    sols = hidata.newton_search(GroupSpec((1,)), "+", restarts=5, seed=0)
    assert sols
    assert abs(complex(sols[0].ravel()[0]) - float(-oracles.golden_pair()["+"])) < 1e-8


@pytest.mark.parametrize("sign", "+-")
def test_newton_search_reproduces_z3_catalog(sign):
    found = hidata.newton_search(GroupSpec((3,)), sign, restarts=60, seed=0)
    printed = [d for d in small().values() if d.nu == 3 and d.sign == sign]
    matched = set()
    for A in found:
        d = hidata.make_datum(GroupSpec((3,)), sign, A.tolist())
        hits = [p.name for p in printed if hidata.equivalence(d, p, tol=1e-8) is not None]
        assert len(hits) == 1
        matched.update(hits)
    assert matched == {p.name for p in printed}
