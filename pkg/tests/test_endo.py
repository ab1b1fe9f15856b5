import copy

import pytest

import oracles
from helpers import small
from fuscat import endo, scalars
from fuscat.leavitt import t_letter


def test_alpha_shifts_t_labels():
    d = small()["Z3+1"]
    alpha1 = endo.build_alpha(d, 1)
    alg = d.algebra
    assert alpha1.apply(alg.t(0)).equal(alg.t(2))
    assert alpha1.apply(alg.s).equal(alg.s)


def test_alpha_is_group_action():
    d = small()["Z5+1"]
    for g in range(5):
        for h in range(5):
            lhs = endo.compose(endo.build_alpha(d, g), endo.build_alpha(d, h))
            assert endo.endo_equal(lhs, endo.build_alpha(d, (g + h) % 5))


@pytest.mark.parametrize("name", ["Z1+", "Z1-", "Z3+1", "Z3-2"])
def test_rho_preserves_relations(name):
    d = small()[name]
    assert endo.check_cuntz_preservation(endo.build_rho(d)).ok


def test_perturbed_A_breaks_rho():
    d = small()["Z3+1"]
    A = copy.deepcopy(d.A)
    A[0][1] += scalars.scalar(1e-3)
    bad = d.with_A(A)
    rep = endo.check_cuntz_preservation(endo.build_rho(bad))
    assert not rep.ok
    assert rep.max_residual > 1e-6


def test_rho_tilde_agrees_with_star():
    d = small()["Z3+1"]
    assert endo.endo_equal(endo.build_rho_tilde(d), endo.rho_tilde_by_star(endo.build_rho(d)))


@pytest.mark.parametrize("name", ["Z1+", "Z3+1", "Z3-1"])
def test_rho_squared_and_equivariance(name):
    d = small()[name]
    assert endo.check_rho2_decomposition(d).ok
    assert endo.check_equivariance(d).ok


@pytest.mark.parametrize("name", ["Z1+", "Z3+2"])
def test_end_rho2_dimension(name):
    d = small()[name]
    assert endo.hom_dimension(d, (0, 2), (0, 2)) == d.nu + 1


def test_simple_objects_are_simple():
    assert endo.check_simplicity(small()["Z3+1"]).ok


def test_uv_depth_cap():
    d = small()["Z1+"]
    with pytest.raises(endo.DepthExceeded):
        endo.uv_system(d.group, 0, 7)


@pytest.mark.parametrize("name", ["Z1+", "Z1-", "Z3+1", "Z3-1"])
def test_fusion_ring_matches_oracle(name):
    d = small()[name]
    ring = endo.fusion_ring(d)
    expected = oracles.hi_fusion(d.nu)
    for i, x in enumerate(ring.labels):
        for j, y in enumerate(ring.labels):
            got = {("a" if z[1] == 0 else "r", z[0]): v for z, v in ring.product(i, j).items()}
            key = (("a" if x[1] == 0 else "r", x[0]), ("a" if y[1] == 0 else "r", y[0]))
            assert got == expected[key]


@pytest.mark.parametrize("name", ["Z1+", "Z3+1", "Z3-1"])
def test_categorical_dimensions(name):
    d = small()[name]
    for g in d.group.elements:
        assert scalars.close(endo.categorical_dim(d, (g, 0)), 1)
        assert scalars.close(endo.categorical_dim(d, (g, 1)), d.delta)
        assert endo.check_zigzag(d, (g, 1)).ok


def test_tensor_object_rule():
    d = small()["Z3+1"]
    assert endo.tensor_object(d, (1, 1), (2, 0)) == (2, 1)
    assert endo.tensor_object(d, (1, 0), (2, 1)) == (0, 1)


def test_generator_letters_are_distinct():
    d = small()["Z3+1"]
    assert len({t_letter(g) for g in d.group.elements}) == 3
