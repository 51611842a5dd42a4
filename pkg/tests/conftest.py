"""Prints one PASS/FAIL line per acceptance criterion after the run."""

import re

CRITERION_RE = re.compile(r"test_criterion_(\d+)")

TITLES = {
    1: "interior support law, exact zeros off support",
    2: "boundary support law",
    3: "decay law with frozen maxima",
    4: "filtration bound on the translated coefficient",
    5: "Gram rank stabilization and bound",
    6: "fast evaluator equivalence and speedup",
    7: "Gauss sum magnitudes and shell norms",
    8: "character linearization, exhaustive",
    9: "trivial coefficient values",
    10: "exponent arithmetic",
    11: "lattice point counting bounds",
}


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = CRITERION_RE.search(getattr(report, "nodeid", ""))
            if match is None:
                continue
            num = int(match.group(1))
            if status != "passed":
                outcomes[num] = "FAIL"
            else:
                outcomes.setdefault(num, "PASS")
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(outcomes):
        title = TITLES.get(num, "")
        terminalreporter.write_line(f"criterion {num:2d}: {outcomes[num]}  {title}")
