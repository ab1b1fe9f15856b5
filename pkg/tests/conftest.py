import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from helpers import ACCEPTANCE  # noqa: E402

CRITERIA = {
    1: "Z1 classification",
    2: "catalog counts and unitarity split",
    3: "fusion ring from Hom dimensions",
    4: "tube products, dimension, associativity",
    5: "semisimple decomposition",
    6: "class-v half-braidings",
    7: "modular axioms",
    8: "bilinear-form fits",
    9: "character vectors",
    10: "property suites",
}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k in ACCEPTANCE:
            ok, detail = ACCEPTANCE[k]
            terminalreporter.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {CRITERIA[k]}: {detail}")
        else:
            terminalreporter.write_line(f"criterion {k:2d} NOT RUN  {CRITERIA[k]}")
