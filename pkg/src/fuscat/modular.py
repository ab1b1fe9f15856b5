"""Modular data of the double: block assembly, the definition-level cross-check, axioms, form fitting."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence

import gmpy2
import numpy as np

from . import scalars
from .leavitt import LElement, S as S_LETTER
from .report import Report
from .tube import MatrixUnit, TubeAlgebra, HalfBraiding

if TYPE_CHECKING:
    from .hidata import HIDatum


class NoFit(LookupError):
    pass


# ---- labels and the block formula ----------------------------------------------------

def primary_labels(d: "HIDatum") -> list[tuple]:
    grp = d.group
    out: list[tuple] = [("0",), ("b",)]
    out += [("a", a) for a in grp.pm_representatives()]
    out += [("c", h, phi) for h in grp.pm_representatives() for phi in grp.elements]
    out += [("d", j) for j in range(1, d.m + 1)]
    return out


def label_str(label: tuple) -> str:
    return label[0] if len(label) == 1 else f"{label[0]}{list(label[1:])}"


@dataclass
class ModularData:
    labels: list[tuple]
    S: list[list[gmpy2.mpc]]
    T: list[gmpy2.mpc]
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.labels)

    def S_np(self) -> np.ndarray:
        return np.array([[scalars.to_complex(x) for x in row] for row in self.S])

    def T_np(self) -> np.ndarray:
        return np.array([scalars.to_complex(x) for x in self.T])

    def index(self, label: tuple) -> int:
        return self.labels.index(label)

    def block(self, kind: str) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab[0] == kind]

    def to_json(self, digits: int = 20) -> dict:
        return {"labels": [list(lab) for lab in self.labels],
                "S": [[scalars.to_pair(x, digits) for x in row] for row in self.S],
                "T": [scalars.to_pair(x, digits) for x in self.T],
                "meta": self.meta}


def assemble_ST(d: "HIDatum", hbs: Sequence[HalfBraiding], f_scale: str = "direct") -> ModularData:
    """S and T from the 16-block form.

    ``f_scale="direct"`` (default) uses F itself as the d-block of S, which is
    what unitarity and the definition-level S require; ``"printed"`` applies
    the overall 1/nu to the F block as displayed.
    """
    grp = d.group
    nu = d.nu
    els = list(grp.elements)
    labels = primary_labels(d)
    n = len(labels)
    plus = d.sign == "+"
    y = scalars.scalar(nu) / gmpy2.sqrt(scalars.real(d.mu))
    sgn = 1 if plus else -1
    lam = scalars.scalar(d.lam)
    delta = scalars.scalar(d.delta)
    S = [[scalars.ZERO] * n for _ in range(n)]
    Tdiag = [scalars.ONE] * n
    inv_nu = scalars.ONE / nu
    hb_by_j = {hb.j: hb for hb in hbs}
    for i, li in enumerate(labels):
        for j, lj in enumerate(labels):
            S[i][j] = _block_entry(d, li, lj, y, sgn, hb_by_j, lam, delta, f_scale) * (
                inv_nu if not (li[0] == "d" and lj[0] == "d" and f_scale == "direct") else 1)
    for i, lab in enumerate(labels):
        if lab[0] == "c":
            Tdiag[i] = grp.character(lab[2], lab[1])
        elif lab[0] == "d":
            Tdiag[i] = hb_by_j[lab[1]].w
    meta = {"f_scale": f_scale, "character_convention": "psi_a(g) = exp(2 pi i <a, g>) per cyclic factor",
            "sign": d.sign}
    return ModularData(labels, S, Tdiag, meta)


def _block_entry(d, li, lj, y, sgn, hbs, lam, delta, f_scale) -> gmpy2.mpc:
    grp = d.group
    ki, kj = li[0], lj[0]
    top = {"0": 0, "b": 1}
    if ki in top and kj in top:
        same = ki == kj
        val = (1 - sgn * y) / 2 if same else (1 + sgn * y) / 2
        return scalars.scalar(val)
    if ki in top and kj in ("a", "c") or kj in top and ki in ("a", "c"):
        return scalars.ONE
    if ki in top and kj == "d":
        return scalars.scalar(sgn * y * (1 if ki == "0" else -1))
    if kj in top and ki == "d":
        return scalars.scalar(sgn * y * (1 if kj == "0" else -1))
    if ki == "a" and kj == "a":
        return scalars.scalar(2)
    if ki == "a" and kj == "c":
        v = grp.character(li[1], lj[1])
        return v + v.conjugate()
    if ki == "c" and kj == "a":
        v = grp.character(lj[1], li[1])
        return v + v.conjugate()
    if ki == "c" and kj == "c":
        (_, h, phi), (_, hp, phip) = li, lj
        v = grp.character(phip, h) * grp.character(phi, hp)
        return v + v.conjugate()
    if ki == "d" and kj == "d":
        return f_entry(d, hbs[li[1]], hbs[lj[1]], lam, delta)
    return scalars.ZERO


def f_entry(d: "HIDatum", hj: HalfBraiding, hl: HalfBraiding, lam=None, delta=None) -> gmpy2.mpc:
    """(nu/lambda)(w_j w_l + delta sum_{g,p} conj(C^j_{-g,p}) conj(C^l_{g,p+g}))."""
    grp = d.group
    lam = scalars.scalar(d.lam) if lam is None else lam
    delta = scalars.scalar(d.delta) if delta is None else delta
    tot = scalars.ZERO
    for g in grp.elements:
        for p in grp.elements:
            tot += (hj.C[grp.neg(g)][p] * hl.C[g][grp.add(p, g)]).conjugate()
    return (d.nu / lam) * (hj.w * hl.w + delta * tot)


def diagonal_s_alternative(d: "HIDatum", hb: HalfBraiding, p: int = 0) -> gmpy2.mpc:
    """The n_3 expression for S_{d_j, d_j}; the free index p is fixed by the caller."""
    grp = d.group
    A = d.A
    add, sub, neg = grp.add, grp.sub, grp.neg
    delta = scalars.scalar(d.delta)
    n3 = sum(1 for g in grp.elements if grp.order(g) in (1, 3))
    tot = scalars.ZERO
    for g, k, l in itertools.product(grp.elements, repeat=3):
        tot += (hb.C[k][l] * A[sub(sub(l, p), add(g, g))][sub(k, g)]
                * A[sub(neg(k), g)][sub(sub(l, k), g)] * A[neg(k)][sub(add(add(p, p), g), k)]).conjugate()
    # the displayed sum also runs over h, which does not occur in the summand
    tot *= d.nu
    w, om = hb.w, d.omega
    return (om * w * n3 + w * w * (1 - delta) + delta * om * w * tot) / scalars.scalar(d.lam)


# ---- the definition-level S and T --------------------------------------------------------

def _row_simple(tag: tuple, params: tuple, group) -> tuple[int, int]:
    if tag[0] in ("0", "0'"):
        return (0, 0)
    if tag[0] == "h":
        return (params[0], 0)
    if tag[0] == "-h":
        return (group.neg(params[0]), 0)
    return (tag[1], 1)


class HalfBraidingEntries:
    """E_sigma(xi)_{eta,eta} read off the diagonal matrix units."""

    def __init__(self, T: TubeAlgebra, unit: MatrixUnit):
        self.T = T
        self.unit = unit
        d = T.d
        self.delta = scalars.scalar(d.delta)
        self.lam = scalars.scalar(d.lam)
        self.rows = [(tag, _row_simple(tag, unit.params, d.group)) for (tag, col) in unit.entries if tag == col]
        self.d_sigma = sum((self.dim(s) for _, s in self.rows), scalars.ZERO)

    def dim(self, simple) -> gmpy2.mpc:
        return self.delta if simple[1] else scalars.ONE

    def entry(self, tag: tuple, xi: tuple[int, int]) -> LElement:
        eta = dict(self.rows)[tag]
        unit = self.unit.entries[(tag, tag)]
        out = self.T.alg.zero()
        for lab, c in unit.coeffs.items():
            if self.T.sector_of(lab).zeta == xi:
                out = out + self.T.element_of(lab).scale(c)
        return out.scale(self.lam * self.dim(eta) / (self.d_sigma * self.dim(xi)))


def left_inverse(T: TubeAlgebra, xi: tuple[int, int], x: LElement) -> tuple[gmpy2.mpc, float]:
    """phi_xi(x) with R = 1 for alpha_g and R = s for alpha_g rho; returns (scalar, off-scalar norm)."""
    g, r = xi
    if r == 0:
        y = T.P.alpha(T.group.neg(g)).apply(x)
    else:
        alg = T.alg
        y = alg.sp * T.endo((g, 1)).apply(x) * alg.s
    c = y.scalar_part()
    rest = y - y.alg.scalar(c)
    return c, rest.norm()


def definition_T(T: TubeAlgebra, unit: MatrixUnit) -> tuple[list[gmpy2.mpc], float]:
    """d_xi phi_xi(E(xi)_{xi,xi}) for every simple xi in sigma."""
    hb = HalfBraidingEntries(T, unit)
    vals, worst = [], 0.0
    for tag, xi in hb.rows:
        c, rest = left_inverse(T, xi, hb.entry(tag, xi))
        vals.append(hb.dim(xi) * c)
        worst = max(worst, rest)
    return vals, worst


def definition_S_entry(T: TubeAlgebra, ui: MatrixUnit, uj: MatrixUnit, eta_row: int = 0) -> tuple[gmpy2.mpc, float]:
    """S_{i,j} from conj(S) = (d_sigma/lambda) sum_xi d_xi phi_xi(E^j(eta)_{xi,xi} E^i(xi)_{eta,eta})."""
    hi, hj = HalfBraidingEntries(T, ui), HalfBraidingEntries(T, uj)
    tag_eta, eta = hi.rows[eta_row]
    tot, worst = scalars.ZERO, 0.0
    for tag_xi, xi in hj.rows:
        prod = hj.entry(tag_xi, eta) * hi.entry(tag_eta, xi)
        c, rest = left_inverse(T, xi, prod)
        tot += hj.dim(xi) * c
        worst = max(worst, rest)
    return (hi.d_sigma / hi.lam * tot).conjugate(), worst


def units_in_label_order(d: "HIDatum", units: Sequence[MatrixUnit]) -> list[MatrixUnit]:
    """Match matrix units to primary_labels order."""
    by_key = {}
    for u in units:
        by_key[(u.cls, u.params)] = u
    out = []
    for lab in primary_labels(d):
        if lab[0] == "0":
            out.append(by_key[("i", ())])
        elif lab[0] == "b":
            out.append(by_key[("ii", ())])
        elif lab[0] == "a":
            out.append(by_key[("iii", (lab[1],))])
        elif lab[0] == "c":
            out.append(by_key[("iv", (lab[1], lab[2]))])
        else:
            out.append(by_key[("v", (lab[1],))])
    return out


def definition_S(T: TubeAlgebra, units: Sequence[MatrixUnit], pairs=None) -> tuple[dict, float]:
    ordered = units_in_label_order(T.d, units)
    n = len(ordered)
    pairs = pairs if pairs is not None else [(i, j) for i in range(n) for j in range(n)]
    out, worst = {}, 0.0
    for i, j in pairs:
        val, rest = definition_S_entry(T, ordered[i], ordered[j])
        out[(i, j)] = val
        worst = max(worst, rest)
    return out, worst


def sdef_crosscheck(T: TubeAlgebra, units: Sequence[MatrixUnit], md: ModularData,
                    pairs=None, tol: float | None = None) -> Report:
    tol = scalars.tolerances().tol_report if tol is None else tol
    d = T.d
    rep = Report("sdef-crosscheck", tol, meta={"f_scale": md.meta.get("f_scale")})
    ordered = units_in_label_order(d, units)
    for idx, (lab, unit) in enumerate(zip(md.labels, ordered)):
        vals, rest = definition_T(T, unit)
        for v in vals:
            rep.add("T from definition", (label_str(lab),), abs(v - md.T[idx]))
        rep.add("phi lands in scalars (T)", (label_str(lab),), rest)
    svals, rest = definition_S(T, units, pairs)
    rep.add("phi lands in scalars (S)", (), rest)
    for (i, j), v in svals.items():
        rep.add("S from definition", (label_str(md.labels[i]), label_str(md.labels[j])), abs(v - md.S[i][j]))
    return rep


def diagonal_alternative_check(d: "HIDatum", hbs: Sequence[HalfBraiding], md: ModularData,
                               tol: float | None = None) -> Report:
    """Compare the n_3 expression for S_{d_j,d_j} with the assembled S, for every value of p."""
    tol = scalars.tolerances().tol_report if tol is None else tol
    rep = Report("diagonal-s-n3-form", tol)
    for hb in hbs:
        i = md.index(("d", hb.j))
        best = min(float(abs(diagonal_s_alternative(d, hb, p) - md.S[i][i])) for p in d.group.elements)
        rep.add("diagonal S via n3 form", (label_str(md.labels[i]),), best)
    return rep


# ---- axioms -----------------------------------------------------------------------

def verlinde(md: ModularData, unit_index: int = 0) -> np.ndarray:
    S = md.S_np()
    Sinv = np.linalg.inv(S)
    return np.einsum("il,jl,lk,l->ijk", S, S, Sinv, 1 / S[unit_index])


def check_axioms(md: ModularData, tol: float = 1e-10, tol_int: float = 1e-6) -> Report:
    """Modular data axioms in double precision."""
    rep = Report("modular-axioms", tol)
    S, T = md.S_np(), md.T_np()
    n = md.size
    I = np.eye(n)
    rep.add("S unitary", (), np.abs(S @ S.conj().T - I).max())
    rep.add("S symmetric", (), np.abs(S - S.T).max())
    D = np.diag(T)
    ST = S @ D
    S2 = S @ S
    rep.add("(ST)^3 = S^2", (), np.abs(ST @ ST @ ST - S2).max())
    perm_err = np.abs(np.abs(S2) - np.round(np.abs(S2))).max()
    is_perm = perm_err < tol and np.allclose(np.round(np.abs(S2)).sum(axis=0), 1)
    rep.flag("S^2 is a permutation", (), is_perm, perm_err)
    rep.add("S^4 = 1", (), np.abs(S2 @ S2 - I).max())
    orders = []
    for i, t in enumerate(md.T):
        k = scalars.certify_root_of_unity(t, 4 * max(1, md.meta.get("mu", 1)) * max(1, md.meta.get("nu", 1)),
                                          1e-20)
        orders.append(k)
        rep.flag("T entry is a root of unity", (label_str(md.labels[i]),), k is not None)
    if all(o is not None for o in orders):
        rep.meta["T_order"] = math.lcm(*orders)
    N = verlinde(md)
    dev = np.abs(N - np.round(N.real)).max()
    neg = float(max(0.0, -np.round(N.real).min()))
    rep.add("Verlinde integrality", (), dev, tol_int)
    rep.flag("Verlinde nonnegative", (), neg == 0, neg)
    rep.add("N_0j^k = delta", (), np.abs(N[0] - I).max(), tol_int)
    positive = [j for j in range(n) if np.all(S[:, j].real > 1e-12) and np.abs(S[:, j].imag).max() < 1e-9]
    rep.flag("strictly positive column exists", (), bool(positive))
    rep.meta["positive_columns"] = [label_str(md.labels[j]) for j in positive]
    N_int = np.round(N.real).astype(int)
    rep.meta["verlinde_consistency"] = verlinde_consistency(md, N_int)
    rep.add("rounded N diagonalised by S", (), rep.meta["verlinde_consistency"], 1e-8)
    return rep


def verlinde_consistency(md: ModularData, N_int: np.ndarray) -> float:
    """max_i || N_i S - S diag(S_il / S_0l) || with the rounded fusion matrices."""
    S = md.S_np()
    worst = 0.0
    for i in range(md.size):
        Ni = N_int[i].T  # (Ni)_{jk} = N_ij^k acting on column index
        lam = S[i] / S[0]
        worst = max(worst, float(np.abs(Ni @ S - S @ np.diag(lam)).max()))
    return worst


def verlinde_ring_checks(md: ModularData) -> Report:
    """Commutativity and associativity of the rounded Verlinde tensor."""
    rep = Report("verlinde-ring", 0.5)
    N = np.round(verlinde(md).real).astype(int)
    rep.add("commutative", (), np.abs(N - N.transpose(1, 0, 2)).max())
    left = np.einsum("ijm,mkl->ijkl", N, N)
    right = np.einsum("jkm,iml->ijkl", N, N)
    rep.add("associative", (), np.abs(left - right).max())
    return rep


# ---- bilinear forms -----------------------------------------------------------------

def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _partitions(e: int, largest: int | None = None):
    largest = e if largest is None else largest
    if e == 0:
        yield ()
        return
    for first in range(min(e, largest), 0, -1):
        for rest in _partitions(e - first, first):
            yield (first,) + rest


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _nonresidue(p: int) -> int:
    return next(a for a in range(2, p) if _legendre(a, p) == -1)


@dataclass(frozen=True)
class BilinearFormSpec:
    H: tuple[int, ...]
    gram: tuple[tuple[Fraction, ...], ...]

    @property
    def order(self) -> int:
        return math.prod(self.H)

    def elements(self):
        return itertools.product(*(range(f) for f in self.H))

    def beta(self, x, y) -> Fraction:
        tot = Fraction(0)
        for i, xi in enumerate(x):
            if xi == 0:
                continue
            for j, yj in enumerate(y):
                if yj:
                    tot += xi * yj * self.gram[i][j]
        return tot - math.floor(tot)

    def neg(self, x):
        return tuple((-a) % f for a, f in zip(x, self.H))

    def is_symmetric(self) -> bool:
        n = len(self.H)
        return all(self.gram[i][j] == self.gram[j][i] for i in range(n) for j in range(n))

    def is_nondegenerate(self) -> bool:
        gens = [tuple(1 if i == j else 0 for i in range(len(self.H))) for j in range(len(self.H))]
        for x in self.elements():
            if any(x) and all(self.beta(x, e) == 0 for e in gens):
                return False
        return True

    def describe(self) -> str:
        if len(self.H) == 1:
            u = self.gram[0][0] * self.H[0]
            return f"{u}kl/{self.H[0]}"
        terms = []
        for i, f in enumerate(self.H):
            u = self.gram[i][i] * f
            terms.append(f"{u}k{i + 1}l{i + 1}/{f}")
        return " + ".join(terms)

    def to_json(self) -> dict:
        return {"H": list(self.H), "beta": self.describe(),
                "gram": [[str(x) for x in row] for row in self.gram]}


def cyclic_form(N: int, u: int) -> BilinearFormSpec:
    return BilinearFormSpec((N,), ((Fraction(u, N),),))


def diagonal_form(H: Sequence[int], us: Sequence[int]) -> BilinearFormSpec:
    n = len(H)
    return BilinearFormSpec(tuple(H), tuple(tuple(Fraction(us[i], H[i]) if i == j else Fraction(0)
                                                  for j in range(n)) for i in range(n)))


def enumerate_forms(mu: int) -> list[BilinearFormSpec]:
    """Nondegenerate symmetric forms on abelian groups of odd order mu, one per isomorphism class.

    Each homogeneous p-component Z_{p^a}^r carries two classes, told apart by the
    square class of the determinant; cyclic groups are written as Z_mu.
    """
    primes = _factorize(mu)
    per_prime = []
    for p, e in sorted(primes.items()):
        options = []
        for part in _partitions(e):
            comps = sorted({a: part.count(a) for a in part}.items(), reverse=True)
            for classes in itertools.product((1, -1), repeat=len(comps)):
                factors, us = [], []
                for (a, r), cls in zip(comps, classes):
                    for i in range(r):
                        factors.append(p ** a)
                        us.append(_nonresidue(p) if (cls == -1 and i == r - 1) else 1)
                options.append((factors, us))
        per_prime.append((p, options))
    out = []
    for combo in itertools.product(*(opts for _, opts in per_prime)):
        factors = [f for fs, _ in combo for f in fs]
        us = [u for _, u_list in combo for u in u_list]
        if all(len(fs) == 1 for fs, _ in combo):
            out.append(_to_cyclic(factors, us))
        else:
            out.append(diagonal_form(factors, us))
    cyc = [f for f in out if len(f.H) == 1]
    rest = sorted((f for f in out if len(f.H) > 1), key=lambda f: (len(f.H), f.H, f.describe()))
    return sorted(cyc, key=lambda f: f.gram[0][0]) + rest


def _to_cyclic(factors: Sequence[int], us: Sequence[int]) -> BilinearFormSpec:
    """Smallest u with u kl/N isomorphic to the orthogonal sum of u_p kl/p^a."""
    N = math.prod(factors)
    want = [(_prime_of(f), _legendre(u, _prime_of(f))) for f, u in zip(factors, us)]
    for u in range(1, N):
        if math.gcd(u, N) != 1:
            continue
        if all(_legendre(u * (N // f), p) == cls for f, (p, cls) in zip(factors, want)):
            return cyclic_form(N, u)
    raise ValueError("no cyclic representative")


def _prime_of(q: int) -> int:
    return min(_factorize(q))


def forms_isomorphic(f1: BilinearFormSpec, f2: BilinearFormSpec) -> bool:
    """Brute-force search for a group isomorphism carrying beta_1 to beta_2."""
    if f1.order != f2.order:
        return False
    if len(f1.H) == 1 and len(f2.H) == 1:
        N = f1.H[0]
        u1, u2 = f1.gram[0][0] * N, f2.gram[0][0] * N
        return any((u1 * c * c - u2) % N == 0 for c in range(1, N) if math.gcd(c, N) == 1)
    els2 = list(f2.elements())
    order2 = {x: _element_order(x, f2.H) for x in els2}
    gens = len(f1.H)
    candidates = [[x for x in els2 if order2[x] == f] for f in f1.H]
    for images in itertools.product(*candidates):
        ok = all(f2.beta(images[i], images[j]) == f1.gram[i][j] % 1 for i in range(gens) for j in range(gens))
        if not ok:
            continue
        seen = set()
        for x in f1.elements():
            img = tuple(sum(a * v[k] for a, v in zip(x, images)) % f2.H[k] for k in range(len(f2.H)))
            seen.add(img)
        if len(seen) == f2.order:
            return True
    return False


def _element_order(x, H) -> int:
    return math.lcm(*(f // math.gcd(a, f) for a, f in zip(x, H))) if x else 1


def pm_orbits(form: BilinearFormSpec) -> list[tuple]:
    seen, out = set(), []
    for x in form.elements():
        if not any(x) or x in seen:
            continue
        seen.update({x, form.neg(x)})
        out.append(x)
    return out


# ---- bilinear-form fitting --------------------------------------------------------------

@dataclass
class Fit:
    form: BilinearFormSpec
    pairing: dict[tuple, tuple]  # primary label -> orbit representative
    max_residual: float

    def to_json(self) -> dict:
        out = self.form.to_json()
        out["pairing"] = [[label_str(k), list(v)] for k, v in self.pairing.items()]
        out["max_residual"] = self.max_residual
        return out


def _exponent(w, max_order: int) -> Fraction | None:
    k = scalars.certify_root_of_unity(w, max_order, 1e-20)
    if k is None:
        return None
    angle = float(gmpy2.atan2(w.imag, w.real)) / (2 * math.pi)
    return Fraction(round(angle * k) % k, k)


def fit_bilinear_form(md: ModularData, mu: int, sign: str, tol: float | None = None,
                    forms: Sequence[BilinearFormSpec] | None = None, all_fits: bool = True) -> list[Fit]:
    """Fits of w_l = exp(2 pi i m beta(l,l)) and F = -+(2/sqrt(mu)) cos(2 pi beta(l,l')) to the d-block."""
    tol = scalars.tolerances().tol_report if tol is None else tol
    m = (mu - 1) // 2
    d_idx = md.block("d")
    if len(d_idx) != m:
        raise NoFit(f"d-block has {len(d_idx)} entries, expected {m}")
    observed = {}
    for i in d_idx:
        e = _exponent(md.T[i], 4 * mu)
        if e is None:
            raise NoFit("a T entry of the d-block is not a certified root of unity")
        observed[i] = e
    pref = scalars.scalar(-2 if sign == "+" else 2) / gmpy2.sqrt(scalars.real(mu))
    two_pi = 2 * scalars.pi()
    fits = []
    for form in forms if forms is not None else enumerate_forms(mu):
        orbits = pm_orbits(form)
        pred_w = {o: (m * form.beta(o, o)) % 1 for o in orbits}
        if sorted(pred_w.values()) != sorted(observed.values()):
            continue
        cos_cache: dict = {}

        def F(a, b):
            key = form.beta(a, b)
            if key not in cos_cache:
                cos_cache[key] = pref * gmpy2.cos(two_pi * key.numerator / key.denominator)
            return cos_cache[key]

        order = sorted(d_idx, key=lambda i: observed[i])
        assignment: dict[int, tuple] = {}
        used: set = set()
        worst = [0.0]

        def consistent(i, o) -> float:
            r = abs(md.S[i][i] - F(o, o))
            for j, oj in assignment.items():
                r = max(r, abs(md.S[i][j] - F(o, oj)))
            return float(r)

        def search(k: int) -> bool:
            if k == len(order):
                return True
            i = order[k]
            for o in orbits:
                if o in used or pred_w[o] != observed[i]:
                    continue
                r = consistent(i, o)
                if r >= tol:
                    continue
                assignment[i] = o
                used.add(o)
                prev = worst[0]
                worst[0] = max(worst[0], r)
                if search(k + 1):
                    return True
                worst[0] = prev
                del assignment[i]
                used.discard(o)
            return False

        if search(0):
            fits.append(Fit(form, {md.labels[i]: o for i, o in assignment.items()}, worst[0]))
            if not all_fits:
                break
    if not fits:
        raise NoFit(f"no bilinear form of order {mu} reproduces the d-block")
    return fits


def galois_twist_check(md_plus: ModularData, md_minus: ModularData, mu: int) -> bool:
    """The '-' d-block twists are the '+' ones with exponent k -> 2k."""
    plus = sorted((2 * _exponent(md_plus.T[i], 4 * mu)) % 1 for i in md_plus.block("d"))
    minus = sorted(_exponent(md_minus.T[i], 4 * mu) for i in md_minus.block("d"))
    return plus == minus
