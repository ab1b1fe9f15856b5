"""Session-wide caches so expensive runs are shared between test modules."""

from __future__ import annotations

import functools

from fuscat import hidata, pipeline, tube

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def small() -> dict:
    return {d.name: d for d in hidata.catalog_small()}


def small_by_nu(nu: int) -> list:
    return [d for d in small().values() if d.nu == nu]


@functools.lru_cache(maxsize=None)
def tube_result(name: str) -> pipeline.StageResult:
    return pipeline.tube_stage(small()[name], pipeline.Options(seed=0))


@functools.lru_cache(maxsize=None)
def modular_result(name: str) -> pipeline.StageResult:
    return pipeline.modular_stage(small()[name], pipeline.Options(seed=0, crosscheck=False))


@functools.lru_cache(maxsize=None)
def qsystem(name: str):
    spec = next(q for q in hidata.QSYSTEM_J if q.name == name)
    d = hidata.from_qsystem_j(spec)
    d.meta["id"] = name
    return d


@functools.lru_cache(maxsize=None)
def qsystem_modular(name: str) -> pipeline.StageResult:
    return pipeline.modular_stage(qsystem(name), pipeline.Options(seed=0, crosscheck=False))


@functools.lru_cache(maxsize=None)
def tube_algebra(name: str) -> tube.TubeAlgebra:
    return tube.TubeAlgebra(small()[name])


def report(result: pipeline.StageResult, name: str):
    for r in list(result.reports) + list(result.informational):
        if r.name == name:
            return r
    raise KeyError(name)
