"""Acceptance criteria 1 to 12, each run through its shipped scenario files.

Every criterion prints one ``PASS`` or ``FAIL`` line.  The lines are repeated
in the pytest terminal summary.  Run this module directly to get only the
lines: ``python3 tests/test_acceptance.py``.
"""

import sys

import pytest

from conewalk.experiments import EXIT_OK, run_scenario
from conewalk.scenario import parse_scenario

try:
    from conftest import ACCEPTANCE_LINES, SCENARIOS
except ImportError:  # imported as tests.test_acceptance
    from tests.conftest import ACCEPTANCE_LINES, SCENARIOS

WORKERS = 8

CRITERIA = {
    1: ("decomposition identity", ["c01_decomposition_identity"]),
    2: ("V-law chi-square", ["c02_v_law"]),
    3: ("geometry oracle", ["c03_geometry"]),
    4: ("half-plane exactness", ["c04_half_plane_exact"]),
    5: ("radial cone exit, c in {-1, 0, 1}", ["c05_cone_exit_cm1", "c05_cone_exit_c0", "c05_cone_exit_cp1"]),
    6: ("limiting direction, d in {2, 3}", ["c06_direction_d2", "c06_direction_d3"]),
    7: ("supermartingale census", ["c07_supermartingale"]),
    8: ("escape bound", ["c08_escape_bound"]),
    9: ("concentration bounds", ["c09_concentration"]),
    10: ("RWRE replay and exit", ["c10_rwre_replay", "c10_rwre_exit"]),
    11: ("normalization", ["c11_normalize"]),
    12: ("determinism across workers", ["c12_determinism"]),
}


def evaluate(n: int, out_root) -> tuple[bool, str]:
    title, names = CRITERIA[n]
    ok, failed = True, []
    for name in names:
        sc = parse_scenario(SCENARIOS / f"{name}.ini")
        logged = []
        rc = run_scenario(sc, workers=WORKERS, out_dir=str(out_root), log=logged.append)
        for line in logged:
            print(line)
        if rc != EXIT_OK:
            ok = False
            failed += [ln.split(" ", 1)[1].split(":")[0] for ln in logged if ln.startswith(("FAIL", "error"))] \
                or [f"{name} (exit {rc})"]
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {title}"
    if failed:
        line += " [" + ", ".join(failed) + "]"
    return ok, line


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, tmp_path_factory):
    ok, line = evaluate(n, tmp_path_factory.mktemp(f"criterion{n}"))
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        results = [evaluate(n, tmp) for n in sorted(CRITERIA)]
    print()
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 2)
