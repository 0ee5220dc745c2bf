import sys

TITLES = {
    1: "structure constants", 2: "algebra identities", 3: "spectral dimension",
    4: "relative bound", 5: "Dixmier ratios", 6: "junk forms", 7: "scalar curvature",
    8: "torsion/unitarity patterns", 9: "index pairing", 10: "homotopy continuity",
}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in TITLES.items():
        if n in mod.RESULTS:
            ok, detail = mod.RESULTS[n]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n} ({title}): {detail}")
        else:
            terminalreporter.write_line(f"FAIL criterion {n} ({title}): not run or errored before reporting")
