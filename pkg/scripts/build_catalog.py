"""Regenerate the bundled catalog: the 10 small datums and the 10 Q-system j-vectors.

Modular summaries are computed for the small datums and for the Q-systems named on
the command line (the larger ones take hours and are left as null by default).
"""

import argparse
import sys
import time

from fuscat import catalog, hidata, pipeline


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--qsystem-modular", nargs="*", default=["QS-j7", "QS-j9", "QS-j9p"])
    args = ap.parse_args()
    cat = catalog.Catalog([])
    opts = pipeline.Options(crosscheck=False)
    for d in hidata.catalog_small():
        t = time.time()
        res = pipeline.modular_stage(d, opts)
        cat.add(catalog.record_for(d, res.data))
        print(d.name, res.ok, round(time.time() - t, 1), flush=True)
    for spec in hidata.QSYSTEM_J:
        d = hidata.from_qsystem_j(spec)
        d.meta["id"] = spec.name
        data = None
        if spec.name in args.qsystem_modular:
            t = time.time()
            res = pipeline.modular_stage(d, opts)
            data = res.data
            print(spec.name, res.ok, round(time.time() - t, 1), flush=True)
        cat.add(catalog.record_for(d, data, provenance="Q-system j-vector", qsystem=spec))
    cat.save(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
