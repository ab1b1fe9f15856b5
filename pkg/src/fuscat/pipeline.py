"""Stage orchestration: verify -> tube -> modular -> fit, with per-stage reports."""

from __future__ import annotations

import json
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import endo, hidata, modular, scalars, tube
from .groups import GroupSpec
from .hidata import HIDatum
from .report import Report

STAGES = ("verify", "tube", "modular")
DENSE_TABLE_MAX_NU = 3
ENGINE_CORNER_MAX_NU = 5


@dataclass
class Options:
    seed: int = 0
    parallel: int = 1
    samples: int = 500
    fit: bool = True
    literal_products: bool = False
    crosscheck: bool | None = None  # default: on for nu <= 3
    dense: bool | None = None  # default: on for nu <= DENSE_TABLE_MAX_NU
    corner: str = "auto"


@dataclass
class StageResult:
    stage: str
    datum: str
    reports: list[Report]
    informational: list[Report] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0
    artifacts: dict[str, Any] = field(default_factory=dict)  # live objects, not serialised

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    def to_json(self) -> dict:
        return {"stage": self.stage, "datum": self.datum, "pass": self.ok, "seconds": self.seconds,
                "reports": [r.to_json(full=False) for r in self.reports],
                "informational": [r.to_json(full=False) for r in self.informational],
                "data": self.data}


# ---- inputs --------------------------------------------------------------------------------

def datums_from_json(obj) -> list[HIDatum]:
    if isinstance(obj, dict) and "datums" in obj:
        obj = obj["datums"]
    if isinstance(obj, dict) and "datum" in obj:
        obj = obj["datum"]
    if isinstance(obj, dict):
        obj = [obj]
    if not isinstance(obj, list):
        raise ValueError("expected a datum object or a list of datums")
    return [HIDatum.from_json(x) for x in obj]


def group_from_name(name: str) -> GroupSpec:
    return GroupSpec.parse(name)


# ---- stages --------------------------------------------------------------------------------

def verify_stage(d: HIDatum, opts: Options | None = None) -> StageResult:
    t0 = time.time()
    reports = [hidata.verify_equations(d)]
    P = endo.RhoPowers(d)
    reports.append(endo.check_cuntz_preservation(P.rho))
    for g in d.group.elements:
        reports.append(endo.check_cuntz_preservation(P.alpha(g)))
    reports.append(endo.check_rho2_decomposition(d, P))
    reports.append(endo.check_equivariance(d, P.rho))
    reports.append(endo.check_simplicity(d))
    reports.append(endo.check_fusion_ring(d))
    return StageResult("verify", d.name, reports, seconds=time.time() - t0,
                       data={"classification": hidata.classify(d)})


def _corner(d: HIDatum, T: tube.TubeAlgebra | None, mode: str) -> tube.Corner:
    if mode == "engine" or (mode == "auto" and d.nu <= ENGINE_CORNER_MAX_NU and T is not None):
        return tube.corner_from_engine(T if T is not None else tube.TubeAlgebra(d))
    return tube.corner_from_printed(d)


def tube_stage(d: HIDatum, opts: Options | None = None) -> StageResult:
    opts = opts or Options()
    t0 = time.time()
    T = tube.TubeAlgebra(d)
    reports: list[Report] = []
    info: list[Report] = []
    dim_rep = Report("tube-dimension", 0.5)
    dim_rep.flag("basis size", (T.dim, tube.tube_dimension(d.nu)), T.dim == tube.tube_dimension(d.nu))
    reports.append(dim_rep)
    dense = opts.dense if opts.dense is not None else d.nu <= DENSE_TABLE_MAX_NU
    table_np = None
    if dense:
        table = tube.structure_table(T, opts.parallel)
        table_np = tube.table_arrays(T, table)
    literal = tube.check_printed_products(T)
    literal.name = "printed-products (literal)"
    corrected = tube.check_printed_products(T, corrected=True)
    corrected.name = "printed-products (corrected)"
    if opts.literal_products:
        reports.append(literal)
    else:
        info.append(literal)
    reports.append(corrected)
    reports.append(tube.check_associativity(T, opts.samples, opts.seed))
    units = tube.matrix_units_known(d)
    reports.append(tube.check_matrix_units(T, units, full=d.nu <= 3, rng=random.Random(opts.seed),
                                           cross_samples=200))
    hbs, cv = tube.solve_class_v(d, _corner(d, T, opts.corner), units, seed=opts.seed)
    reports.append(cv)
    reports.append(tube.check_class_v_equations(d, hbs))
    all_units = units + [tube.class_v_unit(d, h.w, h.C, h.j) for h in hbs]
    reports.append(tube.check_decomposition(T, all_units, table_np, seed=opts.seed))
    return StageResult("tube", d.name, reports, info, seconds=time.time() - t0, data={
        "dimension": T.dim, "half_braidings": [h.to_json() for h in hbs],
        "block_sizes": reports[-1].meta.get("block_sizes"),
        "literal_family_failures": {k: v for k, v in literal.meta["families"].items() if v["failures"]}},
        artifacts={"half_braidings": hbs})


def modular_data(d: HIDatum, seed: int = 0, corner: str = "auto"):
    T = tube.TubeAlgebra(d) if d.nu <= ENGINE_CORNER_MAX_NU and corner != "printed" else None
    units = tube.matrix_units_known(d)
    hbs, cv = tube.solve_class_v(d, _corner(d, T, corner), units, seed=seed)
    md = modular.assemble_ST(d, hbs)
    md.meta.update(mu=d.mu, nu=d.nu, datum=d.name)
    return md, hbs, units, T, cv


def modular_stage(d: HIDatum, opts: Options | None = None) -> StageResult:
    opts = opts or Options()
    t0 = time.time()
    md, hbs, units, T, cv = modular_data(d, opts.seed, opts.corner)
    reports = [cv, modular.check_axioms(md), modular.verlinde_ring_checks(md)]
    info: list[Report] = []
    crosscheck = opts.crosscheck if opts.crosscheck is not None else d.nu <= 3
    if crosscheck:
        T = T or tube.TubeAlgebra(d)
        all_units = units + [tube.class_v_unit(d, h.w, h.C, h.j) for h in hbs]
        reports.append(modular.sdef_crosscheck(T, all_units, md))
    info.append(modular.diagonal_alternative_check(d, hbs, md))
    data: dict[str, Any] = {
        "primaries": len(md.labels),
        "T_orders": sorted({scalars.certify_root_of_unity(t, 4 * d.mu * d.nu) or 0 for t in md.T}),
        "positive_columns": reports[1].meta.get("positive_columns"),
        "modular_data": md.to_json()}
    if opts.fit:
        fit_rep = Report("bilinear-form fit", 0.5)
        try:
            fits = modular.fit_bilinear_form(md, d.mu, d.sign)
            data["fits"] = [f.to_json() for f in fits]
            fit_rep.flag("fit found", (fits[0].form.describe(),), True, fits[0].max_residual)
        except modular.NoFit as exc:
            data["fits"] = []
            fit_rep.flag("fit found", (str(exc),), False, 1.0)
        reports.append(fit_rep)
    return StageResult("modular", d.name, reports, info, seconds=time.time() - t0, data=data,
                       artifacts={"md": md, "half_braidings": hbs})


STAGE_FUNCS = {"verify": verify_stage, "tube": tube_stage, "modular": modular_stage}


def run_pipeline(datums: Sequence[HIDatum], stages: Sequence[str], opts: Options | None = None,
                 output: str | Path | None = None, stream=None) -> tuple[int, list[StageResult]]:
    """Run the requested stages on each datum; exit code 1 iff any gating check fails."""
    opts = opts or Options()
    stream = stream or sys.stdout
    results = []
    out_dir = Path(output) if output else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for d in datums:
        for stage in stages:
            res = STAGE_FUNCS[stage](d, opts)
            results.append(res)
            for r in res.reports:
                print(f"[{'PASS' if r.ok else 'FAIL'}] {d.name} {stage}: {r.summary()}", file=stream)
            for fit in res.data.get("fits", [])[:1]:
                H = "x".join(f"Z{h}" for h in fit["H"])
                print(f"fit {d.name}: ({H}, {fit['beta']})", file=stream)
            for r in res.informational:
                print(f"[info] {d.name} {stage}: {r.summary()}", file=stream)
            if out_dir:
                (out_dir / f"{d.name}.{stage}.json").write_text(json.dumps(res.to_json(), indent=1, default=str))
    return (0 if all(r.ok for r in results) else 1), results
