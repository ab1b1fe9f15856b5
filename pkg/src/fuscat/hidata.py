"""Haagerup-Izumi data (G; sign, omega, b, A): equations, catalog assembly, Q-systems, equivalence."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import gmpy2
import mpmath
import numpy as np

from . import scalars
from .groups import GroupSpec
from .leavitt import LeavittAlgebra
from .report import Report


class CatalogMismatch(RuntimeError):
    pass


class ExtensionRuleViolation(ValueError):
    pass


OMEGA_NAMES = {0: "1", 1: "w", 2: "wbar"}


@dataclass
class HIDatum:
    group: GroupSpec
    sign: str
    omega_label: str
    b: gmpy2.mpc
    A: list[list[gmpy2.mpc]]
    meta: dict = field(default_factory=dict)

    @property
    def nu(self) -> int:
        return self.group.nu

    @property
    def omega(self) -> gmpy2.mpc:
        return scalars.omega(self.omega_label)

    @cached_property
    def delta(self) -> gmpy2.mpfr:
        return scalars.delta_pm(self.nu, self.sign)

    @property
    def lam(self) -> gmpy2.mpfr:
        """Global dimension nu (1 + delta^2) of the fusion category."""
        return self.nu * (1 + self.delta ** 2)

    @property
    def mu(self) -> int:
        return self.nu ** 2 + 4

    @property
    def m(self) -> int:
        return (self.mu - 1) // 2

    @property
    def n(self) -> int:
        return (self.nu - 1) // 2

    @cached_property
    def algebra(self) -> LeavittAlgebra:
        return LeavittAlgebra(self.nu)

    @property
    def name(self) -> str:
        return self.meta.get("id", f"{self.group.name}{self.sign}")

    def A_np(self) -> np.ndarray:
        return np.array([[scalars.to_complex(x) for x in row] for row in self.A])

    def with_A(self, A, **meta) -> "HIDatum":
        return HIDatum(self.group, self.sign, self.omega_label, self.b,
                       [[scalars.scalar(x) for x in row] for row in A], {**self.meta, **meta})

    def to_json(self, digits: int | None = None) -> dict:
        return {
            "group": list(self.group.cyclic_factors),
            "sign": self.sign,
            "omega": self.omega_label,
            "b": scalars.to_pair(self.b, digits),
            "A": [[scalars.to_pair(x, digits) for x in row] for row in self.A],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "HIDatum":
        for key in ("group", "sign", "A"):
            if key not in data:
                raise ValueError(f"datum JSON is missing {key!r}")
        group = GroupSpec(tuple(data["group"]))
        sign = data["sign"]
        if sign not in ("+", "-"):
            raise ValueError(f"bad sign {sign!r}")
        omega_label = str(data.get("omega", "1"))
        if omega_label not in scalars.OMEGA_LABELS:
            raise ValueError(f"bad omega {omega_label!r}")
        A = [[scalars.from_pair(x) for x in row] for row in data["A"]]
        if len(A) != group.nu or any(len(row) != group.nu for row in A):
            raise ValueError("A has the wrong shape")
        delta = scalars.delta_pm(group.nu, sign)
        b = scalars.from_pair(data["b"]) if "b" in data else scalars.b_parameter(scalars.omega(omega_label), delta)
        return cls(group, sign, omega_label, b, A, dict(data.get("meta", {})))


def make_datum(group: GroupSpec, sign: str, A, omega_label: str = "1", **meta) -> HIDatum:
    delta = scalars.delta_pm(group.nu, sign)
    b = scalars.b_parameter(scalars.omega(omega_label), delta)
    return HIDatum(group, sign, omega_label, b, [[scalars.scalar(x) for x in row] for row in A], dict(meta))


def dumps(datums: Sequence[HIDatum]) -> str:
    return json.dumps([d.to_json() for d in datums], indent=1)


# ---- equations ---------------------------------------------------------------

def _eq_residuals(d: HIDatum):
    """Yield (equation name, indices, residual) for the core identities."""
    G = d.group
    A = d.A
    els = list(G.elements)
    add, neg, sub = G.add, G.neg, G.sub
    w = d.omega
    wb = w.conjugate()
    inv = 1 / scalars.scalar(d.delta)
    b2 = d.b * d.b

    yield "b^2 omega delta = 1", (), abs(b2 * w * d.delta - 1)
    yield "b^4 + nu omega b^2 = 1", (), abs(b2 * b2 + d.nu * w * b2 - 1)

    for g in els:
        for h in els:
            x = A[g][h]
            r1 = abs(x - w * A[neg(h)][sub(g, h)])
            r2 = abs(x - wb * A[sub(h, g)][neg(g)])
            yield "order3sym", (g, h), max(r1, r2)

    yield "lin1", (), abs(sum((A[h][0] for h in els), scalars.ZERO) + wb * inv)
    yield "lin2", (), abs(sum((A[0][g] for g in els), scalars.ZERO) + w * inv)

    for h in els:
        for k in els:
            total = sum((A[add(h, g)][k] * A[k][g] for g in els), scalars.ZERO)
            rhs = (1 if h == 0 else 0) - (inv if k == 0 else 0)
            yield "quad1", (h, k), abs(total - rhs)

    # quart, reorganised as sum_l A[l+g][h] (sum_m A[l][m] A[h+m][l+i] A[i][k+m])
    for h in els:
        for i in els:
            inner = [[sum((A[l][m] * A[add(h, m)][add(l, i)] * A[i][add(k, m)] for m in els), scalars.ZERO)
                      for k in els] for l in els]
            for g in els:
                for k in els:
                    total = sum((A[add(l, g)][h] * inner[l][k] for l in els), scalars.ZERO)
                    rhs = (A[sub(h, g)][sub(i, g)] if k == g else 0) \
                        - (wb * inv * A[i][k] if h == 0 else 0) \
                        - (w * inv * A[g][h] if i == 0 else 0)
                    yield "quart", (g, h, i, k), abs(total - rhs)

    for g in els:
        for h in els:
            gh = add(g, h)
            for k in els:
                for l in els:
                    total = sum((A[m][gh] * A[g][add(m, k)] * A[h][add(m, l)] for m in els), scalars.ZERO)
                    rhs = A[add(g, l)][k] * A[add(h, k)][l] - (inv if g == 0 and h == 0 else 0)
                    yield "cubic", (g, h, k, l), abs(wb * total - rhs)


def _aux_residuals(d: HIDatum):
    """Identities the proofs derive from quad1 and order3sym along the way."""
    G = d.group
    A = d.A
    els = list(G.elements)
    add, neg = G.add, G.neg
    w = d.omega
    wb = w.conjugate()
    b2 = d.b * d.b
    nu = d.nu
    total = sum((A[h][k] * A[k][h] for h in els for k in els), scalars.ZERO)
    # summing quad1 over k at h = 0 gives nu - 1/delta (= nu - omega b^2)
    yield "sum A_hk A_kh = nu - omega b^2", (), abs(total - (nu - w * b2))
    for h in els:
        for k in els:
            s = sum((A[l][m] * A[m][add(l, h)] * A[h][add(k, m)] for l in els for m in els), scalars.ZERO)
            yield "AAA(l,m)=-w b^2 A - wbar b^2 delta", (h, k), abs(s + w * b2 * A[h][k] + (wb * b2 if h == 0 else 0))
    for g in els:
        for k in els:
            s = sum((A[l][m] * A[add(l, g)][k] * A[add(k, m)][l] for l in els for m in els), scalars.ZERO)
            yield "AAA(l,m)=-b^2 delta - w b^2 A", (g, k), abs(s + (b2 if k == 0 else 0) + w * b2 * A[g][k])
    for g in els:
        for h in els:
            s = sum((A[add(k, g)][h] * A[k][neg(h)] for k in els), scalars.ZERO)
            rhs = (w if h == g else 0) - (wb * b2 if h == 0 else 0)
            yield "AAskew", (g, h), abs(s - rhs)
    for g in els:
        for k in els:
            s = sum((A[g][add(m, g)] * A[neg(g)][add(m, k)] for m in els), scalars.ZERO)
            rhs = (wb if k == 0 else 0) - (b2 if g == 0 else 0)
            yield "AA(g,m+g)", (g, k), abs(s - rhs)


CORE_EQUATIONS = ("b^2 omega delta = 1", "b^4 + nu omega b^2 = 1", "order3sym", "lin1", "lin2",
                  "quad1", "quart", "cubic")


def verify_equations(d: HIDatum, tol: float | None = None, auxiliary: bool = True,
                     skip: Sequence[str] = ()) -> Report:
    """Residuals of every identity; the auxiliary ones are recorded in ``meta``."""
    tol = scalars.tolerances().tol_report if tol is None else tol
    rep = Report(f"equations[{d.name}]", tol)
    for name, idx, res in _eq_residuals(d):
        if name in skip:
            continue
        rep.add(name, idx, res)
    if auxiliary:
        aux = Report("auxiliary", tol)
        for name, idx, res in _aux_residuals(d):
            aux.add(name, idx, res)
        rep.meta["auxiliary"] = {"pass": aux.ok, "max_residual": aux.max_residual,
                                 "failing": sorted({c.check for c in aux.failures()})}
    worst: dict[str, float] = {}
    for c in rep.checks:
        worst[c.check] = max(worst.get(c.check, 0.0), c.residual)
    rep.meta["max_by_equation"] = worst
    return rep


def equation_passes(d: HIDatum, names: Sequence[str], tol: float) -> bool:
    for name, _, res in _eq_residuals(d):
        if name in names and res >= tol:
            return False
    return True


# ---- printed catalog constants -----------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """Either a surd (p + q sqrt(D)) / r or an isolated root of an integer polynomial."""

    name: str
    minpoly: tuple[int, ...]  # low -> high
    approx: complex = 0j
    surd: tuple[int, int, int, int] | None = None

    def value(self) -> gmpy2.mpc:
        if self.surd is not None:
            p, q, D, r = self.surd
            return scalars.scalar((p + q * gmpy2.sqrt(gmpy2.mpfr(D))) / r)
        return scalars.refine_root(scalars.AlgebraicSpec(self.minpoly, self.approx, radius=0.05, name=self.name))


def _surd(name: str, p: int, q: int, D: int, r: int) -> Constant:
    # (r x - p)^2 = q^2 D
    poly = (p * p - q * q * D, -2 * p * r, r * r)
    g = 0
    for c in poly:
        g = gmpy2.gcd(g, c)
    return Constant(name, tuple(int(c // g) for c in poly), surd=(p, q, D, r))


def _roots(names: Sequence[str], poly_high_to_low: Sequence[int], approxes: Sequence[complex]) -> list[Constant]:
    low = tuple(reversed(poly_high_to_low))
    return [Constant(n, low, a) for n, a in zip(names, approxes)]


Z3_CONSTANTS = {c.name: c for c in [
    _surd("c1", 2, -1, 13, 3), _surd("c2", 7, -1, 13, 6), _surd("c3", 7, 1, 13, 6), _surd("c4", 2, 1, 13, 3),
    *_roots(["d1", "d2", "d3", "d4"], [9, -15, 7, 1, -1], [-0.321, 0.554, 0.717 - 0.329j, 0.717 + 0.329j]),
    _surd("d5", 1, -1, 13, 6), _surd("d6", 1, 1, 13, 6),
    *_roots(["f1", "f2", "f3", "f4"], [9, 3, 1, 5, -1], [0.217 + 0.758j, 0.217 - 0.758j, -0.954, 0.186]),
    _surd("f5", 1, 1, 13, 6), _surd("f6", 1, -1, 13, 6),
]}

Z3_TUPLES = [
    ("Z3+1", "+", ("c1", "d1", "d2", "f5", "f5")),
    ("Z3+2", "+", ("c2", "d5", "d5", "f1", "f2")),
    ("Z3-1", "-", ("c3", "d6", "d6", "f3", "f4")),
    ("Z3-2", "-", ("c4", "d3", "d4", "f6", "f6")),
]


def z3_pattern(c, d, e, f, g):
    return [[c, d, e], [d, e, f], [e, g, d]]


_OCT_D = [625, -1375, 1275, 245, -654, 152, 75, -29, -1]
_QUART_H = [25, -15, -9, 7, -1]
_OCT_H = [625, -875, -525, 1110, -789, 402, -95, -3, 1]

Z5_CONSTANTS = {c.name: c for c in [
    _surd("c1", 13, 1, 29, 10), _surd("c2", 13, -1, 29, 10), _surd("c3", 7, 1, 29, 5), _surd("c4", 7, -1, 29, 5),
    _surd("d1", 3, -1, 29, 10), _surd("d2", 3, 1, 29, 10),
    *_roots([f"d{i}" for i in range(3, 11)], _OCT_D,
            [-0.537, -0.426, -0.032, 0.480, 0.400 - 0.282j, 0.400 + 0.282j, 0.957 - 0.983j, 0.957 + 0.983j]),
    *_roots(["h1", "h2", "h3", "h4"], _QUART_H, [-0.675, 0.218, 0.437, 0.620]),
    *_roots([f"h{i}" for i in range(5, 13)], _OCT_H,
            [-1.270, -0.095, 0.084 - 0.536j, 0.084 + 0.536j, 0.106, 0.534 - 0.099j, 0.534 + 0.099j, 1.420]),
]}

Z5_TUPLES = [
    ("Z5+1", "+", ("c2", "d1", "d1", "d1", "d1", "h7", "h11", "h8", "h10")),
    ("Z5+2", "+", ("c4", "d4", "d3", "d6", "d5", "h4", "h2", "h4", "h2")),
    ("Z5-1", "-", ("c1", "d2", "d2", "d2", "d2", "h5", "h12", "h9", "h6")),
    ("Z5-2", "-", ("c3", "d7", "d10", "d9", "d8", "h3", "h1", "h3", "h1")),
]


def z5_pattern(c, d, e, f, g, h, i, j, k):
    return [[c, d, e, f, g], [d, g, h, i, h], [e, j, f, i, i], [f, k, k, e, h], [g, j, k, j, d]]


EXPECTED_COUNTS = {1: 1, 3: 2, 5: 2}


def solve_Z1(sign: str) -> HIDatum:
    group = GroupSpec((1,))
    delta = scalars.delta_pm(1, sign)
    d = make_datum(group, sign, [[-1 / delta]], id=f"Z1{sign}", source="two-object solve, nu = 1")
    d.meta["minpolys"] = [[[-1, 1, 1]]]  # a = -1/delta solves a^2 + a - 1 = 0
    return d


def _assemble(group: GroupSpec, table: dict, pattern, ident: str, sign: str, names) -> HIDatum:
    values = {n: table[n].value() for n in set(names)}
    A = pattern(*(values[n] for n in names))
    polys = pattern(*(list(table[n].minpoly) for n in names))
    return make_datum(group, sign, A, id=ident, source="printed parameter tuple",
                      parameters=list(names), minpolys=polys)


def apply_automorphism(d: HIDatum, perm: Sequence[int]) -> list[list]:
    """A'_{pi g, pi h} = A_{g,h}."""
    nu = d.nu
    out = [[scalars.ZERO] * nu for _ in range(nu)]
    for g in range(nu):
        for h in range(nu):
            out[perm[g]][perm[h]] = d.A[g][h]
    return out


def equivalence(d1: HIDatum, d2: HIDatum, tol: float | None = None) -> tuple[int, ...] | None:
    """A group isomorphism pi with A1[g][h] = A2[pi g][pi h], or None."""
    tol = scalars.tolerances().tol_report if tol is None else tol
    if d1.group != d2.group or d1.sign != d2.sign or d1.omega_label != d2.omega_label:
        return None
    for perm in d1.group.automorphisms:
        if all(scalars.close(d1.A[g][h], d2.A[perm[g]][perm[h]], tol)
               for g in range(d1.nu) for h in range(d1.nu)):
            return perm
    return None


def dedupe(datums: Sequence[HIDatum]) -> list[HIDatum]:
    out: list[HIDatum] = []
    for d in datums:
        if not any(equivalence(d, e) is not None for e in out):
            out.append(d)
    return out


def classify(d: HIDatum, tol: float | None = None) -> str:
    tol = scalars.tolerances().tol_report if tol is None else tol
    hermitian = all(scalars.close(d.A[g][h], d.A[h][g].conjugate(), tol)
                    for g in range(d.nu) for h in range(d.nu))
    if not hermitian:
        return "neither"
    return "unitary" if d.sign == "+" else "hermitian-nonunitary"


def solve_small(group: GroupSpec, sign: str, check_omega: bool = False, seed: int = 0) -> list[HIDatum]:
    """Assemble the printed solutions for |G| in {1,3,5}, verify and dedupe under Aut(G)."""
    nu = group.nu
    if nu not in EXPECTED_COUNTS or len(group.cyclic_factors) != 1:
        raise ValueError("solve_small handles Z1, Z3 and Z5 only")
    if nu == 1:
        found = [solve_Z1(sign)]
    else:
        table, tuples, pattern = (Z3_CONSTANTS, Z3_TUPLES, z3_pattern) if nu == 3 else \
            (Z5_CONSTANTS, Z5_TUPLES, z5_pattern)
        found = []
        for ident, s, names in tuples:
            if s != sign:
                continue
            d = _assemble(group, table, pattern, ident, sign, names)
            if verify_equations(d, auxiliary=False).ok:
                found.append(d)
    found = dedupe(found)
    for d in found:
        d.meta["classification"] = classify(d)
    if check_omega:
        for label in ("w", "wbar"):
            sols = newton_search(group, sign, label, restarts=60, seed=seed)
            if sols:
                raise CatalogMismatch(f"unexpected omega={label} solutions for {group.name}")
    if len(found) != EXPECTED_COUNTS[nu]:
        raise CatalogMismatch(f"{group.name}{sign}: found {len(found)}, expected {EXPECTED_COUNTS[nu]}")
    return found


def catalog_small() -> list[HIDatum]:
    out = []
    for nu in (1, 3, 5):
        for sign in ("+", "-"):
            out.extend(solve_small(GroupSpec((nu,)), sign))
    return out


def galois_partner_check(plus: HIDatum, minus: HIDatum) -> bool:
    """Entrywise, both A matrices use the same minimal polynomials."""
    p, m = plus.meta.get("minpolys"), minus.meta.get("minpolys")
    if p is None or m is None:
        return False
    return all(list(p[g][h]) == list(m[g][h]) for g in range(plus.nu) for h in range(plus.nu))


# ---- polynomial-system search -----------------------------------------------

def symmetry_orbits(group: GroupSpec, omega_label: str):
    """Parametrise A by order3sym: A = M @ z with one free variable per orbit."""
    nu = group.nu
    k = scalars.OMEGA_LABELS[omega_label]
    w = np.exp(2j * np.pi * k / 3)
    M = []
    seen = {}
    for g in group.elements:
        for h in group.elements:
            if (g, h) in seen:
                continue
            orbit = [(g, h)]
            x = (g, h)
            while True:
                x = (group.neg(x[1]), group.sub(x[0], x[1]))
                if x == (g, h):
                    break
                orbit.append(x)
            if len(orbit) == 1 and k != 0:
                seen[(g, h)] = None
                continue
            col = len(M)
            M.append({})
            # A_x = w A_sigma(x) so A_sigma(x) = wbar A_x
            factor = 1 + 0j
            for y in orbit:
                seen[y] = (col, factor)
                factor *= np.conj(w)
    p = len(M)
    mat = np.zeros((nu, nu, p), dtype=complex)
    for (g, h), entry in seen.items():
        if entry is not None:
            mat[g, h, entry[0]] = entry[1]
    return mat


def _system(group: GroupSpec, sign: str, omega_label: str):
    nu = group.nu
    delta = float(scalars.delta_pm(nu, sign))
    k = scalars.OMEGA_LABELS[omega_label]
    wb = np.exp(-2j * np.pi * k / 3)
    M = symmetry_orbits(group, omega_label)
    addt = np.array([[group.add(a, b) for b in group.elements] for a in group.elements])
    H, K, Gs = np.meshgrid(np.arange(nu), np.arange(nu), np.arange(nu), indexing="ij")
    rhs = np.array([[(1.0 if h == 0 else 0.0) - (1 / delta if kk == 0 else 0.0) for kk in range(nu)]
                    for h in range(nu)])

    def F(z):
        A = M @ z
        dA = M
        lin = A[:, 0].sum() + wb / delta
        dlin = dA[:, 0, :].sum(axis=0)
        left = A[addt[H, Gs], K]
        right = A[K, Gs]
        quad = (left * right).sum(axis=2) - rhs
        dquad = (dA[addt[H, Gs], K] * right[..., None] + left[..., None] * dA[K, Gs]).sum(axis=2)
        res = np.concatenate([[lin], quad.ravel()])
        jac = np.vstack([dlin[None, :], dquad.reshape(nu * nu, -1)])
        return res, jac

    return M, F


def _quart_residual_np(group: GroupSpec, A: np.ndarray, sign: str, omega_label: str) -> float:
    nu = group.nu
    delta = float(scalars.delta_pm(nu, sign))
    k = scalars.OMEGA_LABELS[omega_label]
    w = np.exp(2j * np.pi * k / 3)
    add = np.array([[group.add(a, b) for b in range(nu)] for a in range(nu)])
    sub = np.array([[group.sub(a, b) for b in range(nu)] for a in range(nu)])
    worst = 0.0
    for g, h, i, kk in itertools.product(range(nu), repeat=4):
        total = 0j
        for l in range(nu):
            for m in range(nu):
                total += A[l, m] * A[add[l, g], h] * A[add[h, m], add[l, i]] * A[i, add[kk, m]]
        rhs = (A[sub[h, g], sub[i, g]] if kk == g else 0) - (np.conj(w) / delta * A[i, kk] if h == 0 else 0) \
            - (w / delta * A[g, h] if i == 0 else 0)
        worst = max(worst, abs(total - rhs))
    return worst


def newton_search(group: GroupSpec, sign: str, omega_label: str = "1", restarts: int = 200,
                  seed: int = 0, with_quart: bool = True, tol: float = 1e-9) -> list[np.ndarray]:
    """Random-restart complex Gauss-Newton on lin1 + quad1 (order3sym built in).

    Converged points are filtered by quart and clustered; returns distinct A matrices.
    A cross-check only: absence of solutions is not a certificate.
    """
    rng = np.random.default_rng(seed)
    M, F = _system(group, sign, omega_label)
    p = M.shape[2]
    if p == 0:
        return []
    found: list[np.ndarray] = []
    for _ in range(restarts):
        z = rng.normal(size=p) + 1j * rng.normal(size=p)
        for _ in range(80):
            res, jac = F(z)
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
            z = z + step
            if np.linalg.norm(step) < 1e-14 * (1 + np.linalg.norm(z)):
                break
            if not np.isfinite(z).all() or np.linalg.norm(z) > 1e6:
                break
        res, _ = F(z)
        if not np.isfinite(res).all() or np.linalg.norm(res) > tol:
            continue
        A = M @ z
        if with_quart and _quart_residual_np(group, A, sign, omega_label) > 1e-6:
            continue
        if not any(np.abs(A - B).max() < 1e-6 for B in found):
            found.append(A)
    return found


# ---- Q-systems ---------------------------------------------------------------

@dataclass
class QSystemJSpec:
    nu: int
    j: tuple[float, ...]  # j_2 .. j_{n+1} (extra entries are checked against the extension rule)
    name: str = ""

    @property
    def n(self) -> int:
        return (self.nu - 1) // 2


def extend_j(nu: int, j: Sequence) -> list:
    """j_0 (unused), j_1 = 0, j_2..j_{n+1} supplied, then the extension rule up to j_{nu-1}."""
    n = (nu - 1) // 2
    if len(j) < n:
        raise ValueError(f"need {n} values j_2..j_{n + 1}, got {len(j)}")
    zero = j[0] * 0
    full = [zero, zero] + list(j[:n])
    for i in range(1, n):
        full.append(full[n + 1] + full[n] - full[n - i])
    for extra_index, value in enumerate(j[n:], start=n + 2):
        if extra_index >= len(full) or abs(float(value - full[extra_index])) > 1e-6:
            raise ExtensionRuleViolation(f"j_{extra_index} = {value} conflicts with the extension rule")
    return full


def qsystem_matrix(nu: int, j: Sequence, delta) -> list[list]:
    """A for a Q-system on Z_nu from the phases j_2..j_{n+1} (entries as mpc)."""
    full = extend_j(nu, j)
    delta = scalars.scalar(delta)
    boundary = -1 / (delta - 1)
    mag = gmpy2.sqrt(delta) / (delta - 1)
    A = [[scalars.ZERO] * nu for _ in range(nu)]
    for g in range(nu):
        A[g][0] = A[0][g] = boundary + (1 if g == 0 else 0)
        if g:
            A[g][g] = boundary
    for g in range(1, nu):
        for h in range(g + 1, nu):
            phase = scalars.scalar(full[h] - full[g] - full[h - g])
            val = mag * gmpy2.exp(1j * phase)
            A[g][h] = val
            A[h][g] = val.conjugate()
    return A


def _qsystem_residual(nu: int, j_mp: list, delta) -> list:
    """Real residual vector (quad1 and order3sym) as mpmath numbers."""
    A = qsystem_matrix(nu, [scalars.from_mp(x) .real for x in j_mp], delta)
    inv = 1 / scalars.scalar(delta)
    out = []
    for h in range(nu):
        for k in range(nu):
            total = sum((A[(h + g) % nu][k] * A[k][g] for g in range(nu)), scalars.ZERO)
            r = total - ((1 if h == 0 else 0) - (inv if k == 0 else 0))
            out.extend([r.real, r.imag])
    for g in range(nu):
        for h in range(nu):
            r = A[g][h] - A[(-h) % nu][(g - h) % nu]
            out.extend([r.real, r.imag])
    return [scalars._mpfr_to_mpf(x) for x in out]


def refine_j(spec: QSystemJSpec, max_iter: int = 60, target: float = 1e-60) -> tuple[list, float]:
    """Gauss-Newton on the phases (central differences at working precision)."""
    nu, n = spec.nu, spec.n
    delta = scalars.delta_pm(nu, "+")
    x = [mpmath.mpf(v) for v in spec.j[:n]]
    eps = mpmath.mpf(2) ** (-(mpmath.mp.prec // 2))
    last = None
    for _ in range(max_iter):
        r = mpmath.matrix(_qsystem_residual(nu, x, delta))
        norm = mpmath.norm(r)
        if norm < target:
            break
        if last is not None and norm > last * 0.5 and norm < 1e-40:
            break
        last = norm
        J = mpmath.matrix(len(r), n)
        for c in range(n):
            xp = list(x)
            xm = list(x)
            xp[c] += eps
            xm[c] -= eps
            rp = _qsystem_residual(nu, xp, delta)
            rm = _qsystem_residual(nu, xm, delta)
            for row in range(len(r)):
                J[row, c] = (rp[row] - rm[row]) / (2 * eps)
        step = mpmath.lu_solve(J.T * J, -(J.T * r))
        x = [x[c] + step[c] for c in range(n)]
    final = float(mpmath.norm(mpmath.matrix(_qsystem_residual(nu, x, delta))))
    return x, final


def from_qsystem_j(spec: QSystemJSpec, refine: bool = True) -> HIDatum:
    nu = spec.nu
    if nu < 3 or nu % 2 == 0:
        raise ValueError("nu must be odd and at least 3")
    extend_j(nu, spec.j)  # validates any extra entries
    if refine:
        j, residual = refine_j(spec)
    else:
        j, residual = [mpmath.mpf(v) for v in spec.j[:spec.n]], None
    delta = scalars.delta_pm(nu, "+")
    A = qsystem_matrix(nu, [scalars.from_mp(v).real for v in j], delta)
    d = make_datum(GroupSpec((nu,)), "+", A, id=spec.name or f"QS-j{nu}", source="Q-system phases",
                   j_printed=list(spec.j), j_refined=[mpmath.nstr(v, 40) for v in j])
    if residual is not None:
        d.meta["refinement_residual"] = residual
    d.meta["classification"] = classify(d)
    return d


QSYSTEM_J = [
    QSystemJSpec(7, (2.471228, 0.51685555, 0.2137724), "QS-j7"),
    QSystemJSpec(9, (2.396976693, 2.079251103, -0.2079168419, -2.508673987), "QS-j9"),
    QSystemJSpec(9, (-2.364737070, 1.031057162, 1.569692175, 0.3383837765), "QS-j9p"),
    QSystemJSpec(11, (0.9996507, 2.7258434, -0.5714203, -1.7797340, 1.2675985), "QS-j11"),
    QSystemJSpec(11, (-2.6444397, -1.7629598, -2.6444440, 2.7572657, 0.1128260), "QS-j11p"),
    QSystemJSpec(13, (-3.1050384, 0.5993399, -0.111708, -0.969766, 1.336848, 1.00483129), "QS-j13"),
    QSystemJSpec(15, (-1.0777623, -.7748018, -2.171863, -1.6068402, -.257508, 2.092502, .72289565), "QS-j15"),
    QSystemJSpec(17, (-1.466074, .291489, 3.130735, -2.693185, 1.398153, -.611938, -1.667078, -1.754821),
                 "QS-j17"),
    QSystemJSpec(19, (-2.677465, 1.088972, -.899442, .015448, -1.240928, -.493394, 1.839879, -1.525884,
                      -2.084374), "QS-j19"),
    QSystemJSpec(19, (.896858, -.882585, -2.369855, -1.873294, -1.711620, -.119360, 2.972018, -2.460652,
                      .041334), "QS-j19p"),
]
