"""The ten acceptance criteria, each at its stated tolerance.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; either way one
PASS/FAIL line per criterion is printed at the end.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

import numpy as np
import pytest

import oracles
from helpers import ACCEPTANCE, modular_result, qsystem_modular, report, small, small_by_nu, tube_result

from fuscat import charvec, endo, hidata, leavitt, scalars
from fuscat.groups import GroupSpec
from fuscat.leavitt import S


def record(k: int, checks: list[tuple[str, bool]], extra: str = "") -> None:
    failed = [name for name, ok in checks if not ok]
    detail = (f"{len(checks)} checks passed" if not failed
              else f"{len(failed)}/{len(checks)} failed: " + "; ".join(failed[:4]))
    if extra:
        detail += f" ({extra})"
    ACCEPTANCE[k] = (not failed, detail)
    print(f"criterion {k}: {'PASS' if not failed else 'FAIL'} {detail}")
    assert not failed, detail


def test_criterion_01_z1_classification():
    checks = []
    t0 = time.time()
    datums = [hidata.solve_Z1(sign) for sign in ("+", "-")]
    elapsed = time.time() - t0
    gold = oracles.golden_pair()
    checks.append(("exactly two datums", len(datums) == 2))
    for d in datums:
        rho = endo.build_rho(d)
        a = rho.images[(S, False)].coeff(((S,), ()))
        err = abs(scalars.to_mp(a) - gold[d.sign])
        checks.append((f"{d.name} a = (-1{'+' if d.sign == '+' else '-'}sqrt5)/2 to 1e-30", err < 1e-30))
        for rep in (hidata.verify_equations(d, tol=1e-20), endo.check_cuntz_preservation(rho, tol=1e-20),
                    endo.check_rho2_decomposition(d, tol=1e-20), endo.check_simplicity(d, tol=1e-20)):
            checks.append((f"{d.name} {rep.name} < 1e-20", rep.ok and rep.max_residual < 1e-20))
    checks.append(("solve runtime < 1 s", elapsed < 1.0))
    record(1, checks, f"solve {elapsed:.3f} s")


def test_criterion_02_catalog_counts():
    checks = []
    t0 = time.time()
    for nu, expected, unitary_expected in ((1, 2, 1), (3, 4, 2), (5, 4, 2)):
        found = [d for sign in "+-" for d in hidata.solve_small(GroupSpec((nu,)), sign)]
        checks.append((f"nu={nu}: {expected} datums", len(found) == expected))
        kinds = [hidata.classify(d) for d in found]
        checks.append((f"nu={nu}: {unitary_expected} unitary",
                       sum(k == "unitary" for k in kinds) == unitary_expected))
        for d, k in zip(found, kinds):
            if d.sign == "-":
                checks.append((f"{d.name} hermitian non-unitary (got {k})", k == "hermitian-nonunitary"))
    elapsed = time.time() - t0
    checks.append(("runtime < 1 min", elapsed < 60))
    record(2, checks, f"{elapsed:.1f} s")


def test_criterion_03_fusion_ring():
    checks = []
    t0 = time.time()
    for d in small_by_nu(1) + small_by_nu(3):
        ring = endo.fusion_ring(d)
        oracle = oracles.hi_fusion(d.nu)
        names = [("a" if n == 0 else "r", g) for g, n in ring.labels]
        ok = True
        for i, x in enumerate(names):
            for j, y in enumerate(names):
                got = {names[k]: int(ring.N[i, j, k]) for k in range(len(names)) if ring.N[i, j, k]}
                ok &= got == oracle[(x, y)]
        checks.append((f"{d.name} multiplicities", ok and ring.N.dtype.kind == "i"))
    elapsed = time.time() - t0
    checks.append(("runtime < 5 min", elapsed < 300))
    record(3, checks, f"{elapsed:.1f} s")


def test_criterion_04_tube_oracle():
    checks = []
    notes = []
    t0 = time.time()
    for d in small_by_nu(1) + small_by_nu(3):
        res = tube_result(d.name)
        literal = report(res, "printed-products (literal)")
        corrected = report(res, "printed-products (corrected)")
        n_fail = len([c for c in literal.checks if c.residual >= 1e-15])
        checks.append((f"{d.name} literal printed products 100% ({n_fail} of {len(literal.checks)} off)",
                       n_fail == 0))
        notes.append(f"{d.name} corrected {'ok' if corrected.ok else 'FAIL'}")
        checks.append((f"{d.name} tube dimension {res.data['dimension']}",
                       res.data["dimension"] == oracles.tube_dim(d.nu)))
        assoc = report(res, "tube-associativity")
        checks.append((f"{d.name} associativity on {len(assoc.checks)} triples",
                       len(assoc.checks) >= 500 and assoc.max_residual < 1e-15))
    elapsed = time.time() - t0
    checks.append(("runtime < 10 min", elapsed < 600))
    record(4, checks, ", ".join(notes))


@pytest.mark.parametrize("nu", [1, 3, 5])
def test_criterion_05_decomposition(nu):
    checks = []
    for d in small_by_nu(nu):
        rep = report(tube_result(d.name), "tube-decomposition")
        sizes = rep.meta["block_sizes"]
        checks.append((f"{d.name} block sizes", sorted(sizes) == oracles.tube_block_sizes(nu)))
        checks.append((f"{d.name} sum of squares", sum(s * s for s in sizes) == oracles.tube_dim(nu)))
        central = [c for c in rep.checks if c.check == "central projections sum to the unit"]
        checks.append((f"{d.name} central projections sum to unit < 1e-12",
                       bool(central) and central[0].residual < 1e-12))
        if nu <= 3:
            checks.append((f"{d.name} independent block sizes",
                           rep.meta.get("independent_block_sizes") == oracles.tube_block_sizes(nu)))
            indep = [c for c in rep.checks if c.check == "independent central projections sum to unit"]
            checks.append((f"{d.name} independent projections < 1e-12", indep[0].residual < 1e-12))
    prev_ok, prev = ACCEPTANCE.get(5, (True, ""))
    try:
        record(5, checks, f"nu={nu}")
    finally:
        ok, detail = ACCEPTANCE[5]
        ACCEPTANCE[5] = (ok and prev_ok, (prev + "; " if prev else "") + detail)


@pytest.mark.parametrize("nu", [1, 3, 5])
def test_criterion_06_half_braidings(nu):
    checks = []
    m = (nu * nu + 3) // 2
    for d in small_by_nu(nu):
        res = tube_result(d.name)
        hbs = res.artifacts["half_braidings"]
        checks.append((f"{d.name} m = {m} (got {len(hbs)})", len(hbs) == m))
        checks.append((f"{d.name} w certified roots of unity", all(h.w_order is not None for h in hbs)))
        eq = report(res, "class-v-equations")
        checks.append((f"{d.name} class-v equations < 1e-12", eq.ok and eq.max_residual < 1e-12))
    prev_ok, prev = ACCEPTANCE.get(6, (True, ""))
    try:
        record(6, checks, f"nu={nu}")
    finally:
        ok, detail = ACCEPTANCE[6]
        ACCEPTANCE[6] = (ok and prev_ok, (prev + "; " if prev else "") + detail)


def _axiom_checks(name: str, md, unitary: bool, z3_minus: bool) -> list[tuple[str, bool]]:
    S = md.S_np()
    T = np.diag(md.T_np())
    n = len(S)
    st3 = np.linalg.matrix_power(S @ T, 3)
    checks = [(f"{name} (ST)^3 = S^2", np.abs(st3 - S @ S).max() < 1e-10),
              (f"{name} S unitary", np.abs(S @ S.conj().T - np.eye(n)).max() < 1e-10)]
    N = oracles.verlinde_numpy(S, 0)
    checks.append((f"{name} Verlinde near nonnegative integers",
                   np.abs(N - np.round(N.real)).max() < 1e-6 and np.round(N.real).min() >= 0))
    positive = [j for j in range(n) if np.all(S[:, j].real > 1e-12) and np.abs(S[:, j].imag).max() < 1e-12]
    checks.append((f"{name} has a strictly positive column", bool(positive)))
    if unitary:
        checks.append((f"{name} column 0 positive", 0 in positive))
    if z3_minus:
        checks.append((f"{name} column b positive", md.labels.index(("b",)) in positive))
    return checks


def test_criterion_07_modular_axioms():
    checks = []
    for d in small().values():
        md = modular_result(d.name).artifacts["md"]
        checks += _axiom_checks(d.name, md, hidata.classify(d) == "unitary", d.nu == 3 and d.sign == "-")
    for q in ("QS-j7", "QS-j9", "QS-j9p"):
        md = qsystem_modular(q).artifacts["md"]
        checks += _axiom_checks(q, md, True, False)
    record(7, checks)


REFERENCE_FITS = {1: (5, {"+": 1, "-": 2}), 3: (13, {"+": 1, "-": 2}), 5: (29, {"+": 1, "-": 2})}
REFERENCE_QS_FITS = {"QS-j7": (53, 1), "QS-j9": (85, 1), "QS-j9p": (85, 12)}


def _fit_matches(fits, N: int, u: int, md) -> bool:
    if not fits or fits[0]["H"] != [N]:
        return False
    got_u = Fraction(fits[0]["gram"][0][0]) * N
    if not oracles.same_square_class(N, int(got_u), u):
        return False
    # the reference form reproduces the d-block twists exactly
    d_idx = md.block("d")
    tw = {oracles.angle_fraction(complex(scalars.to_complex(md.T[i])), N) for i in d_idx}
    return tw == oracles.cyclic_form_twists(N, u)


def test_criterion_08_bilinear_fits():
    checks = []
    for d in small().values():
        res = modular_result(d.name)
        N, us = REFERENCE_FITS[d.nu]
        checks.append((f"{d.name} (Z{N}, {us[d.sign]}kl/{N})",
                       _fit_matches(res.data.get("fits"), N, us[d.sign], res.artifacts["md"])))
    for q, (N, u) in REFERENCE_QS_FITS.items():
        res = qsystem_modular(q)
        checks.append((f"{q} (Z{N}, {u}kl/{N})", _fit_matches(res.data.get("fits"), N, u, res.artifacts["md"])))
    record(8, checks)


def test_criterion_09_character_vectors():
    checks = []
    hg = charvec.load_series("haagerup-c8")
    result = charvec.enumerate_admissible(hg, bound=50)
    checks.append(("haagerup-c8 admissible = {beta=0, beta=1}",
                   sorted(a["beta"] for a in result.assignments) == [0, 1]))
    nu = charvec.load_series("nonunitary-c8")
    res = charvec.enumerate_admissible(nu, bound=6, fixed={"alpha": 1})
    log = [c.describe() for c in charvec.derive_constraints(nu)] + res.diagnostics
    checks.append(("constraint log has α ≡ β (mod 2)", any("α ≡ β (mod 2)" in s for s in log)))
    checks.append(("constraint log has α+β = γ+δ", any("α + β - γ - δ = 0" in s for s in log)))
    checks.append(("even-coefficient obstruction logged with α=1",
                   any("even-coefficient obstruction" in s for s in res.diagnostics)))
    record(9, checks)


def test_criterion_10_property_suites():
    checks = []
    rng = random.Random(10)
    for nu in (1, 3):
        alg = leavitt.LeavittAlgebra(nu)
        left = leavitt.RewriteReducer(alg, "leftmost")
        right = leavitt.RewriteReducer(alg, "rightmost")
        agree = 0
        for _ in range(10_000 if nu == 3 else 2_000):
            w = leavitt.random_free_word(alg, rng, 8)
            a = leavitt.reduce(alg, {w: 1})
            agree += a.equal(left.reduce({w: 1})) and a.equal(right.reduce({w: 1}))
        total = 10_000 if nu == 3 else 2_000
        checks.append((f"nu={nu}: normal forms agree on {agree}/{total} words", agree == total))
        inv = all(x.star().star().equal(x) for x in (alg.random_element(rng, 4, 5) for _ in range(300)))
        checks.append((f"nu={nu}: star involution", inv))
    for d in small_by_nu(3):
        rep = endo.check_hom_equality(d, depth=3)
        checks.append((f"{d.name} rho / rho~ Hom equality at depth 3", rep.ok))
    record(10, checks)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
