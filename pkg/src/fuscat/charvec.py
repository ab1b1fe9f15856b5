"""Admissibility analysis for candidate character vectors of the Z3 doubles at c_eff = 8.

The exponent matrices and q-expansions are bundled as exact rational data.  Every
coefficient of a component is a linear form in a handful of free integer parameters;
admissibility asks for all of them to be nonnegative integers with the vacuum
character normalised.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .report import Report

DATASETS = {
    "haagerup-c8": "0768931a88d0c4946753ac93956bf8b8d5c70b7ea3ef73769f1f28d9052f9e40",
    "nonunitary-c8": "54db0128646a8934e5490b8530eacd787582f33dfeb8ad7b11dc06d743e0cb56",
}

GREEK = {"alpha": "α", "beta": "β", "gamma": "γ", "delta": "δ", "epsilon": "ε"}
_ORDER = {name: i for i, name in enumerate(GREEK)}


class ChecksumMismatch(ValueError):
    pass


class UnknownDataset(KeyError):
    pass


# ---- linear forms ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinearForm:
    const: Fraction = Fraction(0)
    coeffs: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def make(cls, const=0, coeffs: Mapping[str, Fraction] | None = None) -> "LinearForm":
        items = tuple(sorted(((k, Fraction(v)) for k, v in (coeffs or {}).items() if Fraction(v) != 0),
                             key=lambda kv: (_ORDER.get(kv[0], len(_ORDER)), kv[0])))
        return cls(Fraction(const), items)

    @classmethod
    def from_json(cls, entry: Mapping[str, str]) -> "LinearForm":
        const = Fraction(entry.get("coeff_const", "0"))
        coeffs = {k[len("coeff_"):]: Fraction(v) for k, v in entry.items()
                  if k.startswith("coeff_") and k != "coeff_const"}
        return cls.make(const, coeffs)

    @property
    def terms(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    def coeff(self, name: str) -> Fraction:
        return self.terms.get(name, Fraction(0))

    def variables(self) -> set[str]:
        return {k for k, _ in self.coeffs}

    def __add__(self, other: "LinearForm") -> "LinearForm":
        terms = self.terms
        for k, v in other.coeffs:
            terms[k] = terms.get(k, Fraction(0)) + v
        return LinearForm.make(self.const + other.const, terms)

    def scale(self, c) -> "LinearForm":
        c = Fraction(c)
        return LinearForm.make(self.const * c, {k: v * c for k, v in self.coeffs})

    def __neg__(self) -> "LinearForm":
        return self.scale(-1)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + (-other)

    def is_zero(self) -> bool:
        return self.const == 0 and not self.coeffs

    def substitute(self, values: Mapping[str, Fraction]) -> "LinearForm":
        const = self.const
        rest = {}
        for k, v in self.coeffs:
            if k in values:
                const += v * Fraction(values[k])
            else:
                rest[k] = v
        return LinearForm.make(const, rest)

    def evaluate(self, values: Mapping[str, int | Fraction]) -> Fraction:
        return self.const + sum((v * Fraction(values[k]) for k, v in self.coeffs), Fraction(0))

    def denominator(self) -> int:
        return math.lcm(self.const.denominator, *(v.denominator for _, v in self.coeffs))

    def primitive(self) -> tuple[Fraction, "LinearForm"]:
        """(c, g) with self = c*g, g integral with coprime entries and a positive first coefficient."""
        vals = [self.const] + [v for _, v in self.coeffs]
        den = self.denominator()
        ints = [int(v * den) for v in vals]
        g = math.gcd(*ints) or 1
        first = next((x for x in ints if x != 0), 1)
        if first < 0:
            g = -g
        return Fraction(g, den), self.scale(Fraction(den, g))

    def __str__(self) -> str:
        parts = []
        if self.const != 0 or not self.coeffs:
            parts.append(str(self.const))
        for k, v in self.coeffs:
            sym = GREEK.get(k, k)
            if v == 1:
                s = sym
            elif v == -1:
                s = "-" + sym
            else:
                s = f"{v}{sym}" if v.denominator == 1 else f"({v}){sym}"
            parts.append(s)
        out = " + ".join(parts)
        return out.replace("+ -", "- ")


# ---- data --------------------------------------------------------------------------------

@dataclass
class CharSeriesData:
    id: str
    labels: list[str]
    Lambda: list[Fraction]
    Xi1: list[list[Fraction]]
    series: dict[str, list[tuple[Fraction, LinearForm]]]
    positive_row: int
    parameters: list[str]
    fixed: dict[str, Fraction] = field(default_factory=dict)
    p_vector: list[LinearForm] = field(default_factory=list)
    aliases: dict[str, str] = field(default_factory=dict)
    description: str = ""

    @property
    def dim(self) -> int:
        return len(self.labels)

    def component(self, label: str) -> list[tuple[Fraction, LinearForm]]:
        return self.series.get(self.aliases.get(label, label), [])

    def distinct_components(self) -> list[str]:
        return [lab for lab in self.labels if lab in self.series]

    def coefficient(self, label: str, n: int) -> LinearForm:
        """Coefficient n of the printed series (fixed parameters substituted)."""
        return self.component(label)[n][1].substitute(self.fixed)

    def printed_depth(self) -> int:
        return max((len(v) for v in self.series.values()), default=0)

    def xi1_times_p(self) -> list[LinearForm]:
        out = []
        for row in self.Xi1:
            acc = LinearForm()
            for x, p in zip(row, self.p_vector):
                if x != 0 and not p.is_zero():
                    acc = acc + p.scale(x)
            out.append(acc.substitute(self.fixed))
        return out


def _data_path(dataset_id: str) -> Path:
    return Path(str(resources.files("fuscat") / "data" / f"{dataset_id}.json"))


def load_series(dataset_id: str, path: str | Path | None = None, verify: bool = True) -> CharSeriesData:
    if dataset_id not in DATASETS:
        raise UnknownDataset(f"unknown dataset {dataset_id!r}; choose from {sorted(DATASETS)}")
    raw = Path(path).read_bytes() if path is not None else _data_path(dataset_id).read_bytes()
    if verify:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != DATASETS[dataset_id]:
            raise ChecksumMismatch(f"{dataset_id}: sha256 {digest} does not match the bundled manifest")
    d = json.loads(raw)
    series = {lab: [(Fraction(e["q_power"]), LinearForm.from_json(e)) for e in entries]
              for lab, entries in d["series"].items()}
    return CharSeriesData(
        id=d["id"], labels=list(d["labels"]),
        Lambda=[Fraction(x) for x in d["lambda"]],
        Xi1=[[Fraction(x) for x in row] for row in d["xi1"]],
        series=series, positive_row=int(d["positive_row"]),
        parameters=list(d["parameters"]),
        fixed={k: Fraction(v) for k, v in d.get("fixed", {}).items()},
        p_vector=[LinearForm.from_json(e) for e in d.get("p_vector", [])],
        aliases=dict(d.get("aliases", {})), description=d.get("description", ""))


# ---- internal consistency of the printed data -------------------------------------------

def check_lambda_offsets(data: CharSeriesData) -> Report:
    """Each printed series must start at q^(Lambda_kk + integer)."""
    rep = Report(f"{data.id}: series offsets vs Lambda", 0.5)
    for k, lab in enumerate(data.labels):
        comp = data.component(lab)
        if not comp:
            continue
        shift = comp[0][0] - data.Lambda[k]
        frac = shift - math.floor(shift)
        rep.flag("lambda-offset", (lab, str(data.Lambda[k]), str(comp[0][0])), frac == 0, float(frac))
    return rep


def check_xi1(data: CharSeriesData) -> Report:
    """The coefficient at q^(Lambda_kk + 1) must equal (Xi1 p)_k."""
    rep = Report(f"{data.id}: first-order coefficients vs Xi1 p", 0.5)
    if not data.p_vector:
        return rep
    xp = data.xi1_times_p()
    for k, lab in enumerate(data.labels):
        comp = data.component(lab)
        if not comp:
            continue
        target = data.Lambda[k] + 1
        found = [form for power, form in comp if power == target]
        if not found:
            rep.flag("xi1-first-order", (lab, "no coefficient at q^" + str(target)), False, 1.0)
            continue
        diff = found[0].substitute(data.fixed) - xp[k]
        rep.flag("xi1-first-order", (lab, str(xp[k])), diff.is_zero(), 0.0 if diff.is_zero() else 1.0)
    return rep


def compare_lambda_twists(data: CharSeriesData, twist_exponents: Sequence[Fraction]) -> Report:
    """Per-entry comparison of exp(2 pi i Lambda_kk) with T_kk, both taken relative to the vacuum.

    twist_exponents[k] is h_k with T_kk = exp(2 pi i h_k), in the data's label order.
    Mismatches are recorded, the data is left untouched.
    """
    rep = Report(f"{data.id}: Lambda vs T", 0.5)
    rep.meta["mismatches"] = []
    for k, lab in enumerate(data.labels):
        diff = (data.Lambda[k] - data.Lambda[0]) - (Fraction(twist_exponents[k]) - Fraction(twist_exponents[0]))
        frac = diff - math.floor(diff)
        ok = frac == 0
        rep.flag("lambda-vs-T", (lab, str(data.Lambda[k]), str(twist_exponents[k])), ok, float(frac))
        if not ok:
            rep.meta["mismatches"].append({"label": lab, "lambda": str(data.Lambda[k]),
                                           "twist": str(twist_exponents[k]),
                                           "fractional_discrepancy": str(frac)})
    return rep


def twists_from_modular(data: CharSeriesData, md, fit) -> list[Fraction]:
    """Twist exponents of computed modular data, reordered to the data's labels.

    c_j is the c-primary with twist j/3.  d_l is the primary the form fit pairs with +-l.
    """
    from .modular import _exponent
    order = 4 * int(md.meta.get("mu", 13)) * int(md.meta.get("nu", 3))
    h = {lab: _exponent(md.T[i], order) for i, lab in enumerate(md.labels)}
    out = []
    for lab in data.labels:
        if lab in ("0", "b"):
            out.append(h[(lab,)])
        elif lab == "a":
            out.append(next(v for k, v in h.items() if k[0] == "a"))
        elif lab[0] == "c":
            j = int(lab[1:])
            out.append(next(v for k, v in h.items() if k[0] == "c" and v == Fraction(j, 3)))
        elif lab[0] == "d":
            ell = int(lab[1:])
            mu = fit.form.H[0] if len(fit.form.H) == 1 else None
            match = [k for k, rep in fit.pairing.items()
                     if rep and (rep[0] == ell or (mu is not None and rep[0] == mu - ell))]
            out.append(h[match[0]])
        else:
            raise KeyError(lab)
    return out


# ---- constraints -------------------------------------------------------------------------

@dataclass
class AdmissibilityConstraint:
    kind: str  # nonneg-integer | normalisation | parity | linear-relation
    form: LinearForm
    sources: list[tuple[str, Fraction]]
    modulus: int = 0
    note: str = ""

    def describe(self) -> str:
        src = ", ".join(f"χ_{lab}[q^{power}]" for lab, power in self.sources)
        if self.kind == "nonneg-integer":
            body = f"{self.form} ∈ Z≥0"
        elif self.kind == "normalisation":
            body = f"{self.form} = 1"
        elif self.kind == "parity":
            terms = self.form.coeffs
            if self.modulus == 2 and len(terms) == 2 and self.form.const % 2 == 0 and all(v % 2 == 1 for _, v in terms):
                body = f"{GREEK.get(terms[0][0], terms[0][0])} ≡ {GREEK.get(terms[1][0], terms[1][0])} (mod 2)"
            else:
                body = f"{self.form} ≡ 0 (mod {self.modulus})"
        else:
            body = f"{self.form} = 0"
        extra = f" [{self.note}]" if self.note else ""
        return f"{self.kind}: {body} from {src}{extra}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "statement": self.describe(),
                "sources": [[lab, str(p)] for lab, p in self.sources]}


def _single_variable_bound(form: LinearForm) -> str:
    if len(form.coeffs) != 1:
        return ""
    (name, c), = form.coeffs
    sym = GREEK.get(name, name)
    limit = -form.const / c
    if c > 0:
        return f"{sym} ≥ {math.ceil(limit)}"
    return f"{sym} ≤ {math.floor(limit)}"


def _gf2_rows(forms: Iterable[LinearForm], names: Sequence[str]) -> list[list[int]]:
    rows = []
    for f in forms:
        rows.append([int(f.coeff(n)) % 2 for n in names] + [int(f.const) % 2])
    return rows


def _gf2_reduce(basis: list[list[int]], vec: list[int]) -> list[int]:
    v = vec[:]
    for row in basis:
        pivot = next(i for i, x in enumerate(row) if x)
        if v[pivot]:
            v = [a ^ b for a, b in zip(v, row)]
    return v


def _gf2_basis(rows: list[list[int]]) -> list[list[int]]:
    basis: list[list[int]] = []
    for r in rows:
        r = _gf2_reduce(basis, r)
        if any(r):
            pivot = next(i for i, x in enumerate(r) if x)
            basis = [(_x if not _x[pivot] else [a ^ b for a, b in zip(_x, r)]) for _x in basis]
            basis.append(r)
    return basis


def _integrality_congruence(form: LinearForm) -> LinearForm | None:
    """For a form with fractional coefficients, the integral congruence it imposes mod its denominator."""
    den = form.denominator()
    if den == 1:
        return None
    scaled = form.scale(den)
    return LinearForm.make(int(scaled.const) % den,
                           {k: int(v) % den for k, v in scaled.coeffs})


def derive_constraints(data: CharSeriesData, depth: int | None = None) -> list[AdmissibilityConstraint]:
    out: list[AdmissibilityConstraint] = []
    forms: list[tuple[str, Fraction, LinearForm]] = []
    for lab in data.distinct_components():
        for n, (power, _) in enumerate(data.component(lab)):
            if depth is not None and n >= depth:
                break
            f = data.coefficient(lab, n)
            forms.append((lab, power, f))
            if f.variables() or f.const < 0 or f.const.denominator != 1:
                c = AdmissibilityConstraint("nonneg-integer", f, [(lab, power)],
                                            note=_single_variable_bound(f))
                out.append(c)

    vac = data.labels[0]
    if data.component(vac):
        out.append(AdmissibilityConstraint("normalisation", data.coefficient(vac, 0),
                                           [(vac, data.component(vac)[0][0])]))

    seen: dict[tuple, AdmissibilityConstraint] = {}
    for lab, power, f in forms:
        cong = _integrality_congruence(f)
        if cong is None or cong.is_zero():
            continue
        key = (cong, f.denominator())
        if key in seen:
            seen[key].sources.append((lab, power))
            continue
        c = AdmissibilityConstraint("parity", cong, [(lab, power)], modulus=f.denominator(),
                                    note="integrality of a half-integral coefficient"
                                    if f.denominator() == 2 else "integrality")
        seen[key] = c
        out.append(c)

    relations: dict[LinearForm, AdmissibilityConstraint] = {}
    for i, (lab1, p1, f1) in enumerate(forms):
        if not f1.variables():
            continue
        c1, g1 = f1.primitive()
        if g1 in relations:
            continue
        for lab2, p2, f2 in forms[i + 1:]:
            if not f2.variables():
                continue
            c2, g2 = f2.primitive()
            if g2 == g1 and (c1 > 0) != (c2 > 0):
                rel = AdmissibilityConstraint("linear-relation", g1, [(lab1, p1), (lab2, p2)],
                                              note="opposite-sign multiples, both nonnegative")
                relations[g1] = rel
                out.append(rel)
                break

    # parities implied by combining the above mod 2
    names = [n for n in data.parameters if n not in data.fixed]
    mod2 = [c.form for c in out if c.kind == "parity" and c.modulus == 2]
    mod2 += [r.form for r in relations.values() if r.form.denominator() == 1]
    basis = _gf2_basis(_gf2_rows(mod2, names))
    direct = {tuple(r) for r in _gf2_rows([c.form for c in out if c.kind == "parity"], names)}
    for a, b in itertools.combinations(names, 2):
        target = LinearForm.make(0, {a: 1, b: 1})
        vec = _gf2_rows([target], names)[0]
        if tuple(vec) in direct:
            continue
        if basis and not any(_gf2_reduce(basis, vec)):
            out.append(AdmissibilityConstraint(
                "parity", target, [s for c in out if c.kind in ("parity", "linear-relation") for s in c.sources[:1]],
                modulus=2, note="implied by the parity and linear relations above"))
    return out


# ---- enumeration -------------------------------------------------------------------------

@dataclass
class Enumeration:
    data_id: str
    depth: int
    bound: int
    fixed: dict[str, Fraction]
    assignments: list[dict[str, int]]
    constraints: list[AdmissibilityConstraint]
    diagnostics: list[str]

    def to_json(self) -> dict:
        return {"dataset": self.data_id, "depth": self.depth, "bound": self.bound,
                "fixed": {k: str(v) for k, v in self.fixed.items()},
                "n_admissible": len(self.assignments),
                "assignments": self.assignments[:200],
                "constraints": [c.to_json() for c in self.constraints],
                "diagnostics": self.diagnostics}


def _even_under(constraints: Sequence[AdmissibilityConstraint], form: LinearForm, names: Sequence[str]) -> bool:
    if form.denominator() != 1:
        return False
    mod2 = [c.form for c in constraints if c.kind == "parity" and c.modulus == 2]
    mod2 += [c.form for c in constraints if c.kind == "linear-relation" and c.form.denominator() == 1]
    vec = _gf2_rows([form], names)[0]
    if not any(vec):
        return True
    basis = _gf2_basis(_gf2_rows(mod2, names))
    return bool(basis) and not any(_gf2_reduce(basis, vec))


def _in_relation_span(relations: Sequence[LinearForm], form: LinearForm, names: Sequence[str]) -> bool:
    if form.is_zero():
        return True
    if not relations:
        return False
    cols = names
    A = np.array([[float(r.coeff(n)) for n in cols] + [float(r.const)] for r in relations])
    v = np.array([float(form.coeff(n)) for n in cols] + [float(form.const)])
    sol, *_ = np.linalg.lstsq(A.T, v, rcond=None)
    return bool(np.allclose(A.T @ sol, v, atol=1e-9))


def observations(data: CharSeriesData, constraints: Sequence[AdmissibilityConstraint],
                 depth: int | None = None) -> list[str]:
    names = [n for n in data.parameters if n not in data.fixed]
    notes = []
    relations = [c.form for c in constraints if c.kind == "linear-relation"]
    for c in constraints:
        if c.kind in ("parity", "linear-relation"):
            notes.append(c.describe())
    vac = data.labels[0]
    comp = data.component(vac)
    upto = len(comp) if depth is None else min(depth, len(comp))
    if upto > 1:
        even = [n for n in range(1, upto) if _even_under(constraints, data.coefficient(vac, n), names)]
        if even and len(even) == upto - 1:
            notes.append(f"even-coefficient obstruction: coefficients of q^1..q^{upto - 1} in "
                         f"q^{-comp[0][0]}χ_{vac} are all even under the parity constraints, "
                         "so none of them can be the leading 1 of a shifted vacuum character")
    for lab in data.distinct_components():
        comp = data.component(lab)
        upto = len(comp) if depth is None else min(depth, len(comp))
        forms = [data.coefficient(lab, n) for n in range(upto)]
        if any(f.variables() for f in forms) and all(_in_relation_span(relations, f, names) for f in forms):
            notes.append(f"χ_{lab} vanishes through q-depth {upto} on the linear relations")
    return notes


def enumerate_admissible(data: CharSeriesData, depth: int | None = None, bound: int = 20,
                         fixed: Mapping[str, int] | None = None) -> Enumeration:
    """All integer parameter points in [0, bound] at which every coefficient up to depth is admissible."""
    printed = data.printed_depth()
    depth = printed if depth is None else depth
    if depth > printed:
        raise ValueError(f"depth {depth} exceeds the printed depth {printed}")
    fixed_all = dict(data.fixed)
    fixed_all.update({k: Fraction(v) for k, v in (fixed or {}).items()})
    view = CharSeriesData(**{**data.__dict__, "fixed": fixed_all})
    constraints = derive_constraints(view, depth)
    names = [n for n in data.parameters if n not in fixed_all]

    checks = []  # (integer coefficient matrix, constant, denominator, equality target or None)
    for c in constraints:
        if c.kind == "nonneg-integer":
            checks.append((c.form, None))
        elif c.kind == "normalisation":
            checks.append((c.form, Fraction(1)))
    grids = [np.arange(bound + 1, dtype=np.int64)] * len(names)
    mesh = np.stack([g.ravel() for g in np.meshgrid(*grids, indexing="ij")], axis=1) if names \
        else np.zeros((1, 0), dtype=np.int64)
    keep = np.ones(len(mesh), dtype=bool)
    for form, target in checks:
        den = form.denominator()
        coef = np.array([int(form.coeff(n) * den) for n in names], dtype=np.int64)
        val = mesh @ coef + int(form.const * den) if names else np.full(len(mesh), int(form.const * den))
        if target is None:
            keep &= (val >= 0) & (val % den == 0)
        else:
            keep &= val == int(target * den)
    points = [{n: int(x) for n, x in zip(names, row)} for row in mesh[keep]]
    return Enumeration(data.id, depth, bound, fixed_all, points, constraints,
                       observations(view, constraints, depth))


def evaluate_series(data: CharSeriesData, values: Mapping[str, int]) -> dict[str, list[tuple[Fraction, Fraction]]]:
    return {lab: [(power, form.substitute(data.fixed).evaluate(values)) for power, form in data.component(lab)]
            for lab in data.labels}
