import json

import pytest

from helpers import small
from fuscat import hidata
from fuscat.catalog import Catalog, CatalogError, DuplicateRecord, bundled_path, record_for, validate_record

bundled = pytest.mark.skipif(not bundled_path().exists(), reason="bundled catalog not built")


def test_record_roundtrip(tmp_path):
    d = small()["Z3+2"]
    cat = Catalog([record_for(d)])
    path = cat.save(tmp_path / "c.json")
    back = Catalog.load(path)
    assert back.ids() == ["Z3+2"]
    assert hidata.equivalence(back.datum("Z3+2"), d) == (0, 1, 2)


def test_duplicate_ids_rejected():
    rec = record_for(small()["Z1+"])
    cat = Catalog([rec])
    with pytest.raises(DuplicateRecord):
        cat.add(dict(rec))


def test_missing_keys_rejected():
    with pytest.raises(CatalogError):
        validate_record({"id": "x"})
    with pytest.raises(CatalogError):
        Catalog().datum("nothing")


def test_qsystem_record(tmp_path):
    spec = hidata.QSYSTEM_J[0]
    d = hidata.from_qsystem_j(spec)
    d.meta["id"] = spec.name
    rec = record_for(d, qsystem=spec)
    assert json.loads(json.dumps(rec))["datum"]["qsystem"]["nu"] == 7
    assert hidata.verify_equations(Catalog([rec]).datum(spec.name)).ok


def test_save_is_atomic(tmp_path):
    path = tmp_path / "c.json"
    Catalog([record_for(small()["Z1-"])]).save(path)
    assert [p.name for p in tmp_path.iterdir()] == ["c.json"]


@bundled
def test_bundled_contents():
    cat = Catalog.load()
    assert len(cat.ids()) == 20
    kinds = [cat[r]["classification"] for r in cat.ids()]
    assert kinds.count("unitary") == 5 + 10
    assert cat["Z1-"]["modular"]["fit"]["beta"] == "2kl/5"
    assert cat["QS-j7"]["modular"]["fit"] == {"H": [53], "beta": "1kl/53"}


@bundled
@pytest.mark.parametrize("rid", ["Z1+", "Z3-1", "Z5+2"])
def test_bundled_datums_verify(rid):
    assert hidata.verify_equations(Catalog.load().datum(rid)).ok
