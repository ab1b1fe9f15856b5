"""The tube algebra of the system {alpha_g, alpha_g rho}: basis, products, matrix units.

A basis element is ``(xi zeta | X | zeta eta)`` with simple objects written as
``(g, r)`` for alpha_g rho^r.  Labels are tuples:

    ("A", g, h)         (g, h | 1 | h, g)
    ("B", g, h)         (g, h rho | 1 | h rho, -g)
    ("C", g, h)         (g rho, (g-h)/2 | 1 | (g-h)/2, h rho)
    ("D", g, k, h)      (g, k rho | t_{2k+g-h} | k rho, h rho)
    ("E", g, k, h)      (g rho, k rho | t'_{g-h} | k rho, h)
    ("F", g, h)         (g rho, (g+h)/2 rho | s s' | (g+h)/2 rho, h rho)
    ("G", g, h, k, l)   (g rho, k rho | t_{l-h+k} t'_{l+g-k} | k rho, h rho)

Products follow the general formula: the sum over channels nu' of zeta zeta-bar
of T' zeta(Y) X xi(T), decomposed back into the basis.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

import gmpy2
import numpy as np

from . import scalars
from .endo import Endo, RhoPowers, build_alpha, build_rho, compose
from .leavitt import EMPTY, S, LElement, t_letter
from .report import Report

if TYPE_CHECKING:
    from .hidata import HIDatum

Simple = tuple[int, int]
Label = tuple


class DecompositionFailure(ArithmeticError):
    pass


class DegenerateSpectrum(ArithmeticError):
    pass


def basis_labels(group) -> list[Label]:
    els = list(group.elements)
    out: list[Label] = []
    out += [("A", g, h) for g in els for h in els]
    out += [("B", g, h) for g in els for h in els]
    out += [("C", g, h) for g in els for h in els]
    out += [("D", g, k, h) for g in els for k in els for h in els]
    out += [("E", g, k, h) for g in els for k in els for h in els]
    out += [("F", g, h) for g in els for h in els]
    out += [("G", g, h, k, l) for g in els for h in els for k in els for l in els]
    return out


def tube_dimension(nu: int) -> int:
    return nu ** 4 + 2 * nu ** 3 + 4 * nu ** 2


@dataclass
class Sector:
    xi: Simple
    zeta: Simple
    word: tuple  # (u, p) in reduced form, or "ssp" for s s'
    eta: Simple


def sector(group, label: Label) -> Sector:
    kind = label[0]
    add, sub, neg, half = group.add, group.sub, group.neg, group.half
    t = t_letter
    if kind == "A":
        _, g, h = label
        return Sector((g, 0), (h, 0), EMPTY, (g, 0))
    if kind == "B":
        _, g, h = label
        return Sector((g, 0), (h, 1), EMPTY, (neg(g), 0))
    if kind == "C":
        _, g, h = label
        return Sector((g, 1), (half(sub(g, h)), 0), EMPTY, (h, 1))
    if kind == "D":
        _, g, k, h = label
        return Sector((g, 0), (k, 1), ((t(sub(add(add(k, k), g), h)),), ()), (h, 1))
    if kind == "E":
        _, g, k, h = label
        return Sector((g, 1), (k, 1), ((), (t(sub(g, h)),)), (h, 0))
    if kind == "F":
        _, g, h = label
        return Sector((g, 1), (half(add(g, h)), 1), "ssp", (h, 1))
    if kind == "G":
        _, g, h, k, l = label
        return Sector((g, 1), (k, 1), ((t(add(sub(l, h), k)),), (t(sub(add(l, g), k)),)), (h, 1))
    raise ValueError(label)


class TubeElement:
    """Finitely supported combination of basis labels."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict | None = None):
        tol = scalars.tolerances().tol_zero
        self.coeffs = {k: scalars.scalar(v) for k, v in (coeffs or {}).items()}
        self.coeffs = {k: v for k, v in self.coeffs.items() if abs(v) >= tol}

    @classmethod
    def basis(cls, label: Label, coeff=1) -> "TubeElement":
        return cls({label: coeff})

    def __add__(self, other: "TubeElement") -> "TubeElement":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return TubeElement(out)

    def __sub__(self, other: "TubeElement") -> "TubeElement":
        return self + other.scale(-1)

    def scale(self, c) -> "TubeElement":
        c = scalars.scalar(c)
        return TubeElement({k: v * c for k, v in self.coeffs.items()})

    def norm(self) -> float:
        return max((float(abs(v)) for v in self.coeffs.values()), default=0.0)

    def __repr__(self) -> str:
        parts = [f"{scalars.to_complex(v):.6g}*{k}" for k, v in sorted(self.coeffs.items())[:8]]
        more = "" if len(self.coeffs) <= 8 else f" + ... ({len(self.coeffs)} terms)"
        return " + ".join(parts) + more if parts else "0"


def tsum(items: Iterable[TubeElement]) -> TubeElement:
    out: dict = {}
    for x in items:
        for k, v in x.coeffs.items():
            out[k] = out[k] + v if k in out else v
    return TubeElement(out)


class TubeAlgebra:
    """Tube algebra of a datum with products computed by the Leavitt engine."""

    def __init__(self, d: "HIDatum", powers: RhoPowers | None = None):
        self.d = d
        self.group = d.group
        self.alg = d.algebra
        self.P = powers or RhoPowers(d)
        self.labels = basis_labels(self.group)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        self._sectors = {lab: sector(self.group, lab) for lab in self.labels}
        self._words = {lab: self._word_element(self._sectors[lab].word) for lab in self.labels}
        self._endos: dict[Simple, Endo] = {}
        self._cache: dict[tuple[Label, Label], dict] = {}
        self.tol_decompose = 1e-20

    @property
    def dim(self) -> int:
        return len(self.labels)

    def _word_element(self, word) -> LElement:
        if word == "ssp":
            return self.alg.word((S,), (S,))
        return self.alg.word(*word)

    def endo(self, obj: Simple) -> Endo:
        if obj not in self._endos:
            g, r = obj
            alpha = self.P.alpha(g)
            self._endos[obj] = alpha if r == 0 else compose(alpha, self.P.rho)
            self._endos[obj].name = f"{g}{'rho' if r else ''}"
        return self._endos[obj]

    def sector_of(self, label: Label) -> Sector:
        return self._sectors[label]

    def element_of(self, label: Label) -> LElement:
        return self._words[label]

    def channels(self, zeta: Simple, zeta_bar: Simple) -> list[tuple[Simple, LElement, LElement]]:
        """(nu', T, T') with T in Hom(nu', zeta zeta_bar)."""
        grp = self.group
        alg = self.alg
        (a, ra), (b, rb) = zeta, zeta_bar
        if ra == 0 and rb == 0:
            return [((grp.add(a, b), 0), alg.one(), alg.one())]
        if ra == 0:
            return [((grp.add(a, b), 1), alg.one(), alg.one())]
        if rb == 0:
            return [((grp.sub(a, b), 1), alg.one(), alg.one())]
        c = grp.sub(a, b)
        out = [((c, 0), alg.s, alg.sp)]
        for dd in grp.elements:
            letter = grp.add(dd, c)
            out.append(((dd, 1), alg.t(letter), alg.tp(letter)))
        return out

    def decompose(self, xi: Simple, nu_: Simple, eta: Simple, R: LElement) -> dict:
        """Coefficients of R in the basis of Hom(xi nu', nu' eta)."""
        grp = self.group
        tol = self.tol_decompose
        terms = {w: c for w, c in R.terms.items() if abs(c) >= tol}
        if not terms:
            return {}
        (g, rx), (k, rn), (h, re) = xi, nu_, eta
        sig = (rx, rn, re)
        out: dict = {}

        def fail(msg):
            raise DecompositionFailure(f"{msg}: sector {xi},{nu_},{eta} terms {list(terms)[:4]}")

        def scalar_only():
            if set(terms) != {EMPTY}:
                fail("expected a scalar")
            return terms[EMPTY]

        if sig == (0, 0, 0):
            if h != g:
                fail("A needs eta = xi")
            out[("A", g, k)] = scalar_only()
        elif sig == (0, 1, 0):
            if h != grp.neg(g):
                fail("B needs eta = -xi")
            out[("B", g, k)] = scalar_only()
        elif sig == (1, 0, 1):
            if k != grp.half(grp.sub(g, h)):
                fail("C needs nu' = (g-h)/2")
            out[("C", g, h)] = scalar_only()
        elif sig == (0, 1, 1):
            want = ((t_letter(grp.sub(grp.add(grp.add(k, k), g), h)),), ())
            if set(terms) != {want}:
                fail("D sector")
            out[("D", g, k, h)] = terms[want]
        elif sig == (1, 1, 0):
            want = ((), (t_letter(grp.sub(g, h)),))
            if set(terms) != {want}:
                fail("E sector")
            out[("E", g, k, h)] = terms[want]
        elif sig == (1, 1, 1):
            f_coeff = terms.get(EMPTY)
            midpoint = grp.add(k, k) == grp.add(g, h)
            if f_coeff is not None:
                if not midpoint:
                    fail("scalar term outside the F sector")
                out[("F", g, h)] = f_coeff
            for w, c in terms.items():
                if w == EMPTY:
                    continue
                u, p = w
                if len(u) != 1 or len(p) != 1 or u[0] == S or p[0] == S:
                    fail("G sector word")
                a, bb = u[0] - 1, p[0] - 1
                l = grp.sub(grp.add(a, h), k)
                if bb != grp.sub(grp.add(l, g), k):
                    fail("G sector index")
                out[("G", g, h, k, l)] = c
            if f_coeff is not None:
                for a in grp.elements:
                    l = grp.sub(grp.add(a, h), k)
                    key = ("G", g, h, k, l)
                    out[key] = out.get(key, scalars.ZERO) + f_coeff
        else:
            fail("nonzero element in an empty Hom space")
        return out

    def basis_product(self, x: Label, y: Label) -> dict:
        key = (x, y)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        sx, sy = self._sectors[x], self._sectors[y]
        out: dict = {}
        if sx.eta == sy.xi:
            X = self._words[x]
            zY = self.endo(sx.zeta).apply(self._words[y])
            xi_endo = self.endo(sx.xi)
            for nu_, T, Tp in self.channels(sx.zeta, sy.zeta):
                left = Tp * zY
                if not left.terms:
                    continue
                left = left * X
                if not left.terms:
                    continue
                R = left * xi_endo.apply(T)
                for lab, c in self.decompose(sx.xi, nu_, sy.eta, R).items():
                    out[lab] = out[lab] + c if lab in out else c
        tol = scalars.tolerances().tol_zero
        out = {k: v for k, v in out.items() if abs(v) >= tol}
        self._cache[key] = out
        return out

    def mul(self, X: TubeElement, Y: TubeElement) -> TubeElement:
        # group by sector to skip mismatched pairs quickly
        by_xi: dict[Simple, list] = {}
        for lab, c in Y.coeffs.items():
            by_xi.setdefault(self._sectors[lab].xi, []).append((lab, c))
        out: dict = {}
        for lx, cx in X.coeffs.items():
            for ly, cy in by_xi.get(self._sectors[lx].eta, ()):
                prod = cx * cy
                for lab, v in self.basis_product(lx, ly).items():
                    out[lab] = out[lab] + prod * v if lab in out else prod * v
        return TubeElement(out)

    def compatible_pairs(self) -> list[tuple[Label, Label]]:
        by_xi: dict[Simple, list] = {}
        for lab in self.labels:
            by_xi.setdefault(self._sectors[lab].xi, []).append(lab)
        return [(x, y) for x in self.labels for y in by_xi.get(self._sectors[x].eta, ())]

    def candidate_unit(self) -> TubeElement:
        els = self.group.elements
        return tsum([TubeElement.basis(("A", g, 0)) for g in els] + [TubeElement.basis(("C", g, g)) for g in els])


def tube_mul(T: TubeAlgebra, X: TubeElement, Y: TubeElement) -> TubeElement:
    return T.mul(X, Y)


# ---- structure table ------------------------------------------------------------

def _compute_rows(args):
    T, pairs = args
    return [(x, y, T.basis_product(x, y)) for x, y in pairs]


def structure_table(T: TubeAlgebra, parallel: int = 1) -> dict:
    """All nonzero basis products, keyed by label pairs."""
    pairs = T.compatible_pairs()
    if parallel > 1:
        import multiprocessing as mp
        chunks = [pairs[i::parallel] for i in range(parallel)]
        ctx = mp.get_context("fork")
        with ctx.Pool(parallel) as pool:
            for rows in pool.map(_compute_rows, [(T, c) for c in chunks]):
                for x, y, prod in rows:
                    T._cache[(x, y)] = prod
    else:
        for x, y in pairs:
            T.basis_product(x, y)
    return {pair: T._cache[pair] for pair in pairs}


def table_arrays(T: TubeAlgebra, table: dict) -> np.ndarray:
    """Dense complex128 structure constants c[a, b, :] (for numerical linear algebra)."""
    n = T.dim
    c = np.zeros((n, n, n), dtype=complex)
    for (x, y), prod in table.items():
        i, j = T.index[x], T.index[y]
        for lab, v in prod.items():
            c[i, j, T.index[lab]] = scalars.to_complex(v)
    return c


def check_associativity(T: TubeAlgebra, samples: int = 500, seed: int = 0,
                        tol: float | None = None) -> Report:
    """||(xy)z - x(yz)|| on random composable basis triples."""
    tol = scalars.tolerances().tol_report if tol is None else tol
    rng = random.Random(seed)
    rep = Report("tube-associativity", tol, meta={"seed": seed, "samples": samples})
    by_xi: dict[Simple, list] = {}
    for lab in T.labels:
        by_xi.setdefault(T.sector_of(lab).xi, []).append(lab)
    for _ in range(samples):
        x = rng.choice(T.labels)
        y = rng.choice(by_xi[T.sector_of(x).eta])
        z = rng.choice(by_xi[T.sector_of(y).eta])
        X, Y, Z = (TubeElement.basis(v) for v in (x, y, z))
        res = T.mul(T.mul(X, Y), Z) - T.mul(X, T.mul(Y, Z))
        rep.add("associativity", (x, y, z), res.norm())
    return rep


# ---- printed products ----------------------------------------------------------

@dataclass
class ProductIdentity:
    name: str
    left: Label
    right: Label
    expected: TubeElement


def _ff(d: "HIDatum", h: int) -> TubeElement:
    inv = 1 / scalars.scalar(d.delta)
    e = {("C", 0, 0): inv ** 3}
    for l in d.group.elements:
        e[("G", 0, 0, l, 0)] = d.omega * inv ** 2
    return TubeElement(e)


def _gf(d: "HIDatum", k: int, l: int, g: int) -> TubeElement:
    grp, A = d.group, d.A
    add, sub, half = grp.add, grp.sub, grp.half
    inv = 1 / scalars.scalar(d.delta)
    e = {}
    if add(k, k) == g:
        e[("C", 0, 0)] = inv ** 2
    for m in grp.elements:
        e[("G", 0, 0, m, sub(k, half(g)))] = inv * A[sub(add(l, m), half(g))][sub(add(k, k), g)]
    return TubeElement(e)


def _fg(d: "HIDatum", k: int, kp: int, l: int) -> TubeElement:
    grp, A = d.group, d.A
    add, sub, half = grp.add, grp.sub, grp.half
    inv = 1 / scalars.scalar(d.delta)
    e = {}
    if add(kp, kp) == k:
        e[("C", 0, 0)] = inv ** 2
    for m in grp.elements:
        e[("G", 0, 0, m, sub(kp, half(k)))] = inv * A[sub(add(m, l), half(k))][sub(add(kp, kp), k)]
    return TubeElement(e)


def _gg(d: "HIDatum", h: int, k: int, l: int, kp: int, lp: int) -> TubeElement:
    grp, A = d.group, d.A
    add, sub = grp.add, grp.sub
    inv = 1 / scalars.scalar(d.delta)
    e = {}
    if k == kp:
        e[("C", 0, 0)] = d.omega.conjugate() * inv * A[sub(add(l, lp), h)][sub(add(k, k), h)]
    if k == lp and kp == l:
        e[("F", 0, 0)] = d.omega
    for m in grp.elements:
        for mp in grp.elements:
            e[("G", 0, 0, m, mp)] = (A[add(m, sub(lp, k))][add(mp, sub(kp, k))]
                                     * A[add(sub(mp, kp), sub(h, k))][add(sub(lp, add(kp, k)), l)]
                                     * A[add(m, sub(l, kp))][add(mp, sub(k, kp))])
    return TubeElement(e)


def printed_products(d: "HIDatum", corrected: bool = False) -> list[ProductIdentity]:
    """Every instance of the printed product list, over all admissible indices.

    With ``corrected`` the D G family uses the hand-derived second factor
    A_{m+k+h-k', k+l-k'} in place of the printed A_{m+k+k', m+l}.
    """
    grp = d.group
    els = list(grp.elements)
    A = d.A
    add, sub, neg, half = grp.add, grp.sub, grp.neg, grp.half
    w = d.omega
    wb = w.conjugate()
    inv = 1 / scalars.scalar(d.delta)
    B = TubeElement.basis
    out: list[ProductIdentity] = []

    def rec(name, x, y, e):
        out.append(ProductIdentity(name, x, y, e))

    for g, h, l in itertools.product(els, repeat=3):
        rec("A_gh A_gl = A_g,h+l", ("A", g, h), ("A", g, l), B(("A", g, add(h, l))))
        rec("A_gh B_gl = B_g,h+l", ("A", g, h), ("B", g, l), B(("B", g, add(h, l))))
        rec("B_gl A_-g,-h = B_g,h+l", ("B", g, l), ("A", neg(g), neg(h)), B(("B", g, add(h, l))))
        e = B(("A", g, sub(h, l)))
        if g == 0:
            e = e + tsum(B(("B", 0, m)) for m in els)
        rec("B_gh B_-g,l", ("B", g, h), ("B", neg(g), l), e)
        rec("C_gh C_hk = C_gk", ("C", g, h), ("C", h, l), B(("C", g, l)))
        for hp in els:
            rec("A_gh D_gkh' = D_g,h+k,h'", ("A", g, h), ("D", g, l, hp), B(("D", g, add(h, l), hp)))
    for g, k in itertools.product(els, repeat=2):
        e = tsum(B(("D", g, l, 0), A[sub(add(l, k), g)][add(add(l, k), g)]) for l in els)
        rec("B_g0 D_-g,k,0", ("B", g, 0), ("D", neg(g), k, 0), e)
    for g, k, h, kp in itertools.product(els, repeat=4):
        rec("D_gkh C_hk'", ("D", g, k, h), ("C", h, kp), B(("D", g, add(k, half(sub(kp, h))), kp)))
        rec("E_gkh A_hl = E_g,k-l,h", ("E", g, k, h), ("A", h, kp), B(("E", g, sub(k, kp), h)))
        rec("C_gh E_hkg'", ("C", g, h), ("E", h, k, kp), B(("E", g, half(add(sub(g, h), add(k, k))), kp)))
    for k, h in itertools.product(els, repeat=2):
        e = tsum(B(("E", 0, m, neg(h)), A[sub(add(m, k), h)][add(add(m, k), h)]) for m in els)
        rec("E_0kh B_h0", ("E", 0, k, h), ("B", h, 0), e)
    for g, h, l in itertools.product(els, repeat=3):
        e = TubeElement()
        if g == l:
            e = e + B(("A", g, 0), wb)
        if g == neg(l):
            e = e + tsum(B(("B", g, m), A[add(add(m, g), h)][add(g, g)]) for m in els)
        rec("D_g0h E_h0l", ("D", g, 0, h), ("E", h, 0, l), e)
    for k, h, l in itertools.product(els, repeat=3):
        e = TubeElement()
        if l == k:
            e = e + B(("C", 0, 0), wb * inv)
        if k == add(l, h):
            e = e + B(("F", 0, 0), wb)
        terms = {}
        for g, m in itertools.product(els, repeat=2):
            c = A[add(sub(m, k), add(l, h))][add(sub(g, k), l)] * A[add(sub(m, h), sub(k, l))][add(g, sub(k, l))]
            terms[("G", 0, 0, m, g)] = c
        rec("E_0kh D_hl0", ("E", 0, k, h), ("D", h, l, 0), e + TubeElement(terms))
    for g, h, k in itertools.product(els, repeat=3):
        rec("C_gh F_hk = F_gk", ("C", g, h), ("F", h, k), B(("F", g, k)))
        rec("F_gh C_hk = F_gk", ("F", g, h), ("C", h, k), B(("F", g, k)))
    for k, h in itertools.product(els, repeat=2):
        rec("D_k0h F_h0", ("D", k, 0, h), ("F", h, 0), B(("D", k, sub(neg(k), half(h)), 0), inv))
        rec("F_0h E_h0l", ("F", 0, k), ("E", k, 0, h), B(("E", 0, sub(h, half(k)), h), inv))
    for h in els:
        rec("F_0h F_h0", ("F", 0, h), ("F", h, 0), _ff(d, h))
    for g, h, hp, k, l in itertools.product(els, repeat=5):
        rec("C_gh G^kl_hh'", ("C", g, h), ("G", h, hp, k, l),
            B(("G", g, hp, half(add(sub(g, h), add(k, k))), half(add(add(l, l), sub(g, h))))))
        rec("G^kl_hh' C_h'g'", ("G", h, hp, k, l), ("C", hp, g),
            B(("G", h, g, half(add(add(k, k), sub(g, hp))), half(add(add(l, l), sub(g, hp))))))
    for k, h, kp, l in itertools.product(els, repeat=4):
        if corrected:
            e = tsum(B(("D", k, m, 0), A[add(m, l)][add(m, add(k, kp))] * A[sub(add(m, add(k, h)), kp)][sub(add(k, l), kp)])
                     for m in els)
            rec("D_k0h G^k'l_h0 (corrected)", ("D", k, 0, h), ("G", h, 0, kp, l), e)
        else:
            e = tsum(B(("D", k, m, 0), A[add(m, l)][add(m, add(k, kp))] * A[add(m, add(k, kp))][add(m, l)])
                     for m in els)
            rec("D_k0h G^k'l_h0", ("D", k, 0, h), ("G", h, 0, kp, l), e)
    for kp, l, g, k in itertools.product(els, repeat=4):
        e = tsum(B(("E", 0, m, k),
                   A[sub(add(m, g), add(k, kp))][sub(l, add(k, kp))] * A[add(l, m)][add(sub(m, k), kp)])
                 for m in els)
        rec("G^k'l_0g E_g0k", ("G", 0, g, kp, l), ("E", g, 0, k), e)
    for k, l, g in itertools.product(els, repeat=3):
        rec("G^kl_0g F_g0", ("G", 0, g, k, l), ("F", g, 0), _gf(d, k, l, g))
    for k, kp, l in itertools.product(els, repeat=3):
        rec("F_0k G^k'l_k0", ("F", 0, k), ("G", k, 0, kp, l), _fg(d, k, kp, l))
    for h, k, l, kp, lp in itertools.product(els, repeat=5):
        rec("G^kl_0h G^k'l'_h0", ("G", 0, h, k, l), ("G", h, 0, kp, lp), _gg(d, h, k, l, kp, lp))
    return out


def check_printed_products(T: TubeAlgebra, tol: float | None = None,
                           identities: Sequence[ProductIdentity] | None = None,
                           corrected: bool = False) -> Report:
    tol = scalars.tolerances().tol_report if tol is None else tol
    rep = Report("printed-products", tol)
    per_family: dict[str, list[int]] = {}
    for ident in identities or printed_products(T.d, corrected):
        got = T.mul(TubeElement.basis(ident.left), TubeElement.basis(ident.right))
        res = (got - ident.expected).norm()
        item = rep.add(ident.name, (ident.left, ident.right), res)
        stats = per_family.setdefault(ident.name, [0, 0])
        stats[0] += 1
        stats[1] += 0 if item.passed else 1
    rep.meta["families"] = {k: {"instances": v[0], "failures": v[1]} for k, v in per_family.items()}
    return rep


# ---- matrix units ------------------------------------------------------------------

@dataclass
class MatrixUnit:
    cls: str
    params: tuple
    entries: dict  # (row simple, col simple) -> TubeElement; rows are tags like ("0",) or ("rho", g)
    size: int
    w: gmpy2.mpc | None = None
    C: list | None = None

    def diagonal(self) -> list[TubeElement]:
        return [v for (r, c), v in self.entries.items() if r == c]

    def central(self) -> TubeElement:
        return tsum(self.diagonal())


def _A_pair_sum(d: "HIDatum", g: int, h: int, shift: int, psi: Callable[[int], object] | None) -> TubeElement:
    """omega delta sum_{k,l,m} psi(m) A_{k+shift+m,l+m} A_{k-shift-m,l-m} G_{gh}^{k+g/2+h/2, l+g/2+h/2}."""
    grp = d.group
    A = d.A
    els = list(grp.elements)
    add, sub = grp.add, grp.sub
    mid = grp.half(add(g, h))
    terms: dict = {}
    for k, l, m in itertools.product(els, repeat=3):
        c = A[add(add(k, shift), m)][add(l, m)] * A[sub(sub(k, shift), m)][sub(l, m)]
        if psi is not None:
            c = c * psi(m)
        key = ("G", g, h, add(k, mid), add(l, mid))
        terms[key] = terms.get(key, scalars.ZERO) + c
    return TubeElement(terms).scale(d.omega * d.delta)


def _characters(d: "HIDatum"):
    grp = d.group
    return {a: (lambda g, a=a: grp.character(a, g)) for a in grp.elements}


def psi_representatives(group) -> list[int]:
    """Nontrivial characters modulo conjugation (character a ~ -a)."""
    return group.pm_representatives()


def matrix_units_known(d: "HIDatum") -> list[MatrixUnit]:
    """Classes i to iv from the closed-form expressions."""
    grp = d.group
    els = list(grp.elements)
    nu = d.nu
    delta = scalars.scalar(d.delta)
    lam = scalars.scalar(d.lam)
    w, wb = d.omega, d.omega.conjugate()
    B = TubeElement.basis
    units: list[MatrixUnit] = []

    z1 = tsum(B(("A", 0, g), 1 / lam) for g in els) + tsum(B(("B", 0, g), delta / lam) for g in els)
    units.append(MatrixUnit("i", (), {(("0",), ("0",)): z1}, 1))

    entries = {}
    entries[(("0",), ("0",))] = (tsum(B(("A", 0, g), delta) for g in els) - tsum(B(("B", 0, g)) for g in els)
                                 ).scale(delta / lam)
    off = wb * delta / (nu * gmpy2.sqrt(nu * delta + 2))
    for g in els:
        entries[(("0",), ("rho", g))] = tsum(B(("D", 0, k, g)) for k in els).scale(off)
        entries[(("rho", g), ("0",))] = tsum(B(("E", g, k, 0)) for k in els).scale(off)
        for h in els:
            core = B(("C", g, h)) + B(("F", g, h), delta) + _A_pair_sum(d, g, h, 0, None)
            entries[(("rho", g), ("rho", h))] = core.scale(delta / lam)
    units.append(MatrixUnit("ii", (), entries, nu + 1))

    chars = _characters(d)
    for a in psi_representatives(grp):
        psi = chars[a]
        entries = {}
        entries[(("0",), ("0",))] = tsum(B(("A", 0, g), psi(g) / nu) for g in els)
        entries[(("0'",), ("0'",))] = tsum(B(("A", 0, g), psi(g).conjugate() / nu) for g in els)
        for g in els:
            core = B(("C", g, g)) + B(("F", g, g), delta) + _A_pair_sum(d, g, g, 0, psi)
            entries[(("rho", g), ("rho", g))] = core.scale(1 / (nu * delta))
        units.append(MatrixUnit("iii", (a,), entries, nu + 2))

    for h in grp.pm_representatives():
        for a in els:
            psi = chars[a]
            entries = {}
            entries[(("h",), ("h",))] = tsum(B(("A", h, g), psi(g) / nu) for g in els)
            entries[(("-h",), ("-h",))] = tsum(B(("A", grp.neg(h), g), psi(g).conjugate() / nu) for g in els)
            for g in els:
                core = B(("C", g, g)) + B(("F", g, g), delta * psi(h).conjugate()) + _A_pair_sum(d, g, g, h, psi)
                entries[(("rho", g), ("rho", g))] = core.scale(1 / (nu * delta))
            units.append(MatrixUnit("iv", (h, a), entries, nu + 2))
    return units


def class_v_unit(d: "HIDatum", w, C, j: int) -> MatrixUnit:
    """e^{v;j}_{g rho, h rho} = (nu/lambda)(C_gh + conj(w) delta F_gh + delta sum C_kl G_gh^{k+(g+h)/2, l+(g+h)/2})."""
    grp = d.group
    els = list(grp.elements)
    delta = scalars.scalar(d.delta)
    lam = scalars.scalar(d.lam)
    entries = {}
    for g in els:
        for h in els:
            mid = grp.half(grp.add(g, h))
            terms = {("C", g, h): 1, ("F", g, h): w.conjugate() * delta}
            for k in els:
                for l in els:
                    terms[("G", g, h, grp.add(k, mid), grp.add(l, mid))] = delta * C[k][l]
            entries[(("rho", g), ("rho", h))] = TubeElement(terms).scale(d.nu / lam)
    return MatrixUnit("v", (j,), entries, d.nu, w=w, C=C)


def check_matrix_units(T: TubeAlgebra, units: Sequence[MatrixUnit], tol: float | None = None,
                       full: bool = True, rng: random.Random | None = None, cross_samples: int = 0) -> Report:
    """e_ij e_kl = delta_jk e_il inside each block; diagonal units of different blocks annihilate."""
    tol = scalars.tolerances().tol_report if tol is None else tol
    rep = Report("matrix-units", tol)
    for unit in units:
        keys = list(unit.entries)
        for (r1, c1) in keys:
            for (r2, c2) in keys:
                if not full and not (r1 == c1 and r2 == c2):
                    continue
                prod = T.mul(unit.entries[(r1, c1)], unit.entries[(r2, c2)])
                if c1 == r2 and (r1, c2) in unit.entries:
                    prod = prod - unit.entries[(r1, c2)]
                elif c1 == r2:
                    continue  # product lands on an entry we did not build
                rep.add(f"class {unit.cls} units", (unit.params, r1, c1, r2, c2), prod.norm())
    if cross_samples and rng is not None:
        diag = [(u.cls, u.params, k, v) for u in units for k, v in u.entries.items() if k[0] == k[1]]
        for _ in range(cross_samples):
            a, b = rng.sample(diag, 2)
            if (a[0], a[1]) == (b[0], b[1]):
                continue
            rep.add("distinct blocks annihilate", (a[:3], b[:3]), T.mul(a[3], b[3]).norm())
    return rep


# ---- the rho corner and class v --------------------------------------------------------

def corner_labels(group) -> list[Label]:
    return [("C", 0, 0), ("F", 0, 0)] + [("G", 0, 0, k, l) for k in group.elements for l in group.elements]


@dataclass
class Corner:
    labels: list[Label]
    table: list[list[dict[int, gmpy2.mpc]]]  # table[a][b] = {c: coeff}

    @property
    def dim(self) -> int:
        return len(self.labels)

    def mul(self, x: list, y: list) -> list:
        out = [scalars.ZERO] * self.dim
        for a, xa in enumerate(x):
            if xa == 0:
                continue
            row = self.table[a]
            for b, yb in enumerate(y):
                if yb == 0:
                    continue
                c = xa * yb
                for k, v in row[b].items():
                    out[k] += c * v
        return out

    def np_table(self) -> np.ndarray:
        n = self.dim
        arr = np.zeros((n, n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                for k, v in self.table[a][b].items():
                    arr[a, b, k] = scalars.to_complex(v)
        return arr

    def to_tube(self, x: list) -> TubeElement:
        return TubeElement({lab: v for lab, v in zip(self.labels, x)})

    def from_tube(self, X: TubeElement) -> list:
        index = {lab: i for i, lab in enumerate(self.labels)}
        out = [scalars.ZERO] * self.dim
        for lab, v in X.coeffs.items():
            if lab not in index:
                raise ValueError(f"{lab} is outside the rho corner")
            out[index[lab]] = v
        return out


def corner_from_engine(T: TubeAlgebra) -> Corner:
    labels = corner_labels(T.group)
    index = {lab: i for i, lab in enumerate(labels)}
    table = []
    for x in labels:
        row = []
        for y in labels:
            prod = T.basis_product(x, y)
            entry = {}
            for lab, v in prod.items():
                if lab not in index:
                    raise DecompositionFailure(f"corner product {x}*{y} leaves the corner via {lab}")
                entry[index[lab]] = v
            row.append(entry)
        table.append(row)
    return Corner(labels, table)


def corner_from_printed(d: "HIDatum") -> Corner:
    """Corner products from the closed-form F F, G F, F G and G G expressions (all subscripts zero)."""
    labels = corner_labels(d.group)
    index = {lab: i for i, lab in enumerate(labels)}

    def product(x, y) -> TubeElement:
        if x == ("C", 0, 0):
            return TubeElement.basis(y)
        if y == ("C", 0, 0):
            return TubeElement.basis(x)
        if x[0] == "F" and y[0] == "F":
            return _ff(d, 0)
        if x[0] == "G" and y[0] == "F":
            return _gf(d, x[3], x[4], 0)
        if x[0] == "F" and y[0] == "G":
            return _fg(d, 0, y[3], y[4])
        return _gg(d, 0, x[3], x[4], y[3], y[4])

    table = [[{index[lab]: v for lab, v in product(x, y).coeffs.items()} for y in labels] for x in labels]
    return Corner(labels, table)


def _refine_idempotent(corner: Corner, e: list, iters: int = 12) -> tuple[list, float]:
    target = 2.0 ** (-(scalars.get_precision() - 24))
    res = float("inf")
    for _ in range(iters):
        e2 = corner.mul(e, e)
        res = max(float(abs(a - b)) for a, b in zip(e2, e))
        if res < target:
            break
        e3 = corner.mul(e2, e)
        e = [3 * a - 2 * b for a, b in zip(e2, e3)]
    return e, res


def _double_idempotents(corner: Corner, seed: int, attempts: int) -> list[np.ndarray]:
    arr = corner.np_table()
    n = corner.dim
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        L = np.einsum("a,abc->cb", x, arr)  # column b = x * e_b
        vals, vecs = np.linalg.eig(L)
        gaps = np.abs(vals[:, None] - vals[None, :]) + np.eye(n) * 1e9
        if gaps.min() < 1e-8:
            continue
        out = []
        for col in range(n):
            v = vecs[:, col]
            sq = np.einsum("a,b,abc->c", v, v, arr)
            k = np.argmax(np.abs(v))
            out.append(v / (sq[k] / v[k]))
        return out
    raise DegenerateSpectrum("eigenvalues of random corner elements stay clustered")


def minimal_idempotents(corner: Corner, seed: int = 0, attempts: int = 5) -> list[list]:
    """All minimal idempotents of a commutative semisimple algebra given by structure constants."""
    out = []
    for e0 in _double_idempotents(corner, seed, attempts):
        e, _ = _refine_idempotent(corner, [scalars.scalar(complex(c)) for c in e0])
        out.append(e)
    return out


@dataclass
class HalfBraiding:
    j: int
    w: gmpy2.mpc
    w_order: int | None
    C: list[list[gmpy2.mpc]]
    idempotent: list

    def to_json(self) -> dict:
        return {"j": self.j, "w": scalars.to_pair(self.w, 30), "w_order": self.w_order,
                "C": [[scalars.to_pair(x, 30) for x in row] for row in self.C]}


def _corner_vec_close(x: list, y: list, tol: float) -> bool:
    return max(float(abs(a - b)) for a, b in zip(x, y)) < tol


def known_corner_idempotents(d: "HIDatum", units: Sequence[MatrixUnit], corner: Corner) -> list[tuple[str, tuple, list]]:
    out = []
    for u in units:
        key = (("rho", 0), ("rho", 0))
        if key in u.entries:
            out.append((u.cls, u.params, corner.from_tube(u.entries[key])))
    return out


def solve_class_v(d: "HIDatum", corner: Corner, units: Sequence[MatrixUnit] | None = None,
                  seed: int = 0, tol: float = 1e-20) -> tuple[list[HalfBraiding], Report]:
    """Split the rho corner into minimal idempotents and read off (w_j, C^j) for the class-v ones."""
    units = units if units is not None else matrix_units_known(d)
    rep = Report("class-v", 1e-12)
    idems = _double_idempotents(corner, seed, 5)
    rep.flag("corner dimension", (corner.dim,), len(idems) == d.nu ** 2 + 2, abs(len(idems) - d.nu ** 2 - 2))
    known = known_corner_idempotents(d, units, corner)
    known_np = [np.array([scalars.to_complex(c) for c in k]) for _, _, k in known]
    remaining = []
    matched = set()
    for e in idems:
        hit = None
        for i, k in enumerate(known_np):
            if i not in matched and np.abs(e - k).max() < 1e-8:
                hit = i
                break
        if hit is None:
            refined, res = _refine_idempotent(corner, [scalars.scalar(complex(c)) for c in e])
            remaining.append(refined)
        else:
            matched.add(hit)
    rep.flag("classes ii-iv all found in the corner", (len(matched), len(known)), len(matched) == len(known),
             len(known) - len(matched))
    grp = d.group
    els = list(grp.elements)
    delta = scalars.scalar(d.delta)
    f_vec = corner.from_tube(TubeElement.basis(("F", 0, 0)))
    out: list[HalfBraiding] = []
    for j, e in enumerate(sorted(remaining, key=lambda e: _w_sort_key(corner, e, f_vec, delta)), start=1):
        ef = corner.mul(e, f_vec)
        k = max(range(corner.dim), key=lambda i: abs(e[i]))
        w = delta * ef[k] / e[k]
        rep.add("e F00 proportional to e", (j,), max(float(abs(a - (w / delta) * b)) for a, b in zip(ef, e)))
        C = [[scalars.ZERO] * len(els) for _ in els]
        for g in els:
            for h in els:
                vec = corner.from_tube(TubeElement.basis(("G", 0, 0, g, h)))
                eg = corner.mul(e, vec)
                x = eg[k] / e[k]
                rep.add("e G00 proportional to e", (j, g, h), max(float(abs(a - x * b)) for a, b in zip(eg, e)))
                C[h][g] = x / (d.omega * w)
        order = scalars.certify_root_of_unity(w, 4 * d.mu, 1e-25)
        rep.flag("w is a root of unity", (j,), order is not None)
        out.append(HalfBraiding(j, w, order, C, e))
    rep.flag("class-v count", (len(out), d.m), len(out) == d.m, abs(len(out) - d.m))
    return out, rep


def _w_sort_key(corner: Corner, e: list, f_vec: list, delta) -> tuple:
    ef = corner.mul(e, f_vec)
    k = max(range(corner.dim), key=lambda i: abs(e[i]))
    w = scalars.to_complex(delta * ef[k] / e[k])
    angle = np.angle(w) % (2 * np.pi)
    return (round(angle, 9),)


# ---- class-v equations ---------------------------------------------------------------

def check_class_v_equations(d: "HIDatum", hbs: Sequence[HalfBraiding], tol: float = 1e-12) -> Report:
    """Linear and quadratic equations for (w, C), plus the orthogonality relation and its j <-> j' symmetry."""
    grp = d.group
    els = list(grp.elements)
    A = d.A
    add, sub, neg = grp.add, grp.sub, grp.neg
    w0, wb0 = d.omega, d.omega.conjugate()
    delta = scalars.scalar(d.delta)
    inv = 1 / delta
    lam = scalars.scalar(d.lam)
    nu = d.nu
    rep = Report("class-v-equations", tol)
    for hb in hbs:
        w, C = hb.w, hb.C
        wb = w.conjugate()
        s = sum((C[0][g] for g in els), scalars.ZERO)
        rep.add("row-0 sum rule", (hb.j,), abs(s - (w - wb * inv)))
        for g in els:
            for h in els:
                lhs = w * C[g][h] - sum((A[add(g, k)][add(h, h)] * C[h][k] for k in els), scalars.ZERO)
                rhs = w0 * wb * inv if h == 0 else 0
                rep.add("linear w C relation", (hb.j, g, h), abs(lhs - rhs))
        for p, s_, h, r in itertools.product(els, repeat=4):
            lhs = w0 * w * C[p][s_] * C[h][r] * delta
            rhs = (1 if (s_ == h and r == p) else 0) + (wb * A[add(p, h)][add(s_, s_)] if r == s_ else 0)
            tot = scalars.ZERO
            for k in els:
                for l in els:
                    tot += C[k][l] * A[sub(add(h, l), s_)][sub(add(r, k), s_)] \
                        * A[sub(sub(r, k), s_)][add(sub(sub(l, k), s_), p)] * A[sub(add(h, p), k)][sub(add(r, s_), k)]
            rhs = rhs + delta * tot
            rep.add("quadratic C relation", (hb.j, p, s_, h, r), abs(lhs - rhs))
        for psi_a in els:
            for g in els:
                tot = scalars.ZERO
                for t, q, m in itertools.product(els, repeat=3):
                    tot += grp.character(psi_a, m) * C[q][t] * A[add(add(t, m), g)][add(q, m)] \
                        * A[sub(sub(t, m), g)][sub(q, m)]
                val = 1 + grp.character(psi_a, g).conjugate() * w + delta * w0 * w * tot
                rep.add("character-twisted relation", (hb.j, psi_a, g), abs(val))
    for hb in hbs:
        for hb2 in hbs:
            def rhs_of(a, b):
                tot = sum((b.C[t][q] * a.C[q][t] for t in els for q in els), scalars.ZERO)
                return 1 + b.w.conjugate() * a.w + delta * w0 * a.w * tot
            val = rhs_of(hb, hb2)
            target = lam / nu if hb.j == hb2.j else 0
            rep.add("orthogonality", (hb.j, hb2.j), abs(val - target))
            rep.add("orthogonality symmetry", (hb.j, hb2.j), abs(val - rhs_of(hb2, hb)))
    return rep


# ---- decomposition ----------------------------------------------------------------

def solve_unit(T: TubeAlgebra, table_np: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Least-squares solve of u x = x u = x over the basis; returns (u, residual, rank)."""
    n = T.dim
    left = table_np.transpose(1, 2, 0).reshape(n * n, n)   # rows (b, c), column a: (e_a e_b)_c
    right = table_np.transpose(0, 2, 1).reshape(n * n, n)  # rows (b, c), column a: (e_b e_a)_c
    target = np.eye(n).reshape(n * n)
    M = np.vstack([left, right])
    rhs = np.concatenate([target, target])
    u, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    rank = int(np.linalg.matrix_rank(M, tol=1e-9))
    return u, float(np.abs(M @ u - rhs).max()), rank


def _np_mul(table_np: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("a,b,abc->c", x, y, table_np)


def central_decomposition(T: TubeAlgebra, table_np: np.ndarray, seed: int = 0) -> tuple[list[np.ndarray], list[int]]:
    """Independent block structure: the centre, its minimal idempotents and block sizes."""
    n = T.dim
    # z is central iff (e_a z - z e_a) = 0 for all a
    rows = []
    for a in range(n):
        rows.append(table_np[a, :, :].T - table_np[:, a, :].T)  # (c, b): coefficient of e_c in e_a e_b - e_b e_a
    M = np.vstack(rows)
    _, svals, vh = np.linalg.svd(M, full_matrices=False)
    null = vh[np.sum(svals > 1e-9 * svals[0]):].conj().T  # columns span the centre
    k = null.shape[1]
    rng = np.random.default_rng(seed)
    x = null @ (rng.normal(size=k) + 1j * rng.normal(size=k))
    # multiplication by x restricted to the centre, in the null-space coordinates
    L = np.linalg.lstsq(null, np.stack([_np_mul(table_np, x, null[:, i]) for i in range(k)], axis=1), rcond=None)[0]
    vals, vecs = np.linalg.eig(L)
    projections, sizes = [], []
    for i in range(k):
        v = null @ vecs[:, i]
        sq = _np_mul(table_np, v, v)
        j = np.argmax(np.abs(v))
        z = v * (v[j] / sq[j])
        for _ in range(6):
            z2 = _np_mul(table_np, z, z)
            z = 3 * z2 - 2 * _np_mul(table_np, z2, z)
        projections.append(z)
        Lz = np.einsum("a,abc->cb", z, table_np)
        dim_block = int(np.linalg.matrix_rank(Lz, tol=1e-8))
        sizes.append(int(round(np.sqrt(dim_block))))
    return projections, sizes


def expected_block_sizes(nu: int) -> list[int]:
    n = (nu - 1) // 2
    m = (nu * nu + 3) // 2
    return sorted([1, nu + 1] + [nu + 2] * n + [nu + 2] * (nu * n) + [nu] * m)


def check_decomposition(T: TubeAlgebra, units: Sequence[MatrixUnit], table_np: np.ndarray | None = None,
                        tol: float = 1e-12, seed: int = 0) -> Report:
    """Block sizes, sum of squares and the unit, both from the supplied units and independently."""
    d = T.d
    nu = d.nu
    rep = Report("tube-decomposition", tol)
    sizes = sorted(u.size for u in units)
    expected = expected_block_sizes(nu)
    rep.flag("block sizes from matrix units", (tuple(sizes),), sizes == expected)
    rep.flag("sum of squares", (sum(s * s for s in sizes), tube_dimension(nu)),
             sum(s * s for s in sizes) == tube_dimension(nu))
    # candidate unit: check u x = x u = x on every basis element
    unit = T.candidate_unit()
    worst = 0.0
    for lab in T.labels:
        X = TubeElement.basis(lab)
        worst = max(worst, (T.mul(unit, X) - X).norm(), (T.mul(X, unit) - X).norm())
    rep.add("candidate unit is two-sided", (), worst)
    total = tsum(u.central() for u in units)
    rep.add("central projections sum to the unit", (), (total - unit).norm())
    if table_np is not None:
        u, res, rank = solve_unit(T, table_np)
        rep.add("solved unit residual", (), res, 1e-9)
        rep.flag("unit is unique", (rank, T.dim), rank == T.dim)
        diff = max(abs(u[T.index[lab]] - complex(scalars.to_complex(unit.coeffs.get(lab, 0)))) for lab in T.labels)
        rep.add("solved unit equals candidate", (), diff, 1e-9)
        projections, block_sizes = central_decomposition(T, table_np, seed)
        rep.flag("independent block sizes", (tuple(sorted(block_sizes)),), sorted(block_sizes) == expected)
        total_np = np.sum(projections, axis=0)
        rep.add("independent central projections sum to unit", (),
                float(np.abs(total_np - np.array([complex(scalars.to_complex(unit.coeffs.get(lab, 0)))
                                                  for lab in T.labels])).max()))
        rep.meta["independent_block_sizes"] = sorted(block_sizes)
    rep.meta["block_sizes"] = sizes
    return rep
