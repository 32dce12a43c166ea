from __future__ import annotations

import pytest

CRITERIA = {
    1: "exact algebra: Wick round trip, orthogonality, Gamma mean, sharp variance, Gamma(D_X F)",
    2: "spectral: R_q vs Cauchy-Binet, remainder inequalities, radius bound",
    3: "negative-moment quadrature vs closed forms and divergence rule",
    4: "negative moments along the second-chaos family",
    5: "density superconvergence trend and level",
    6: "counterexample flagged divergent",
    7: "fourth-moment bookkeeping, entropy and Fisher trend",
    8: "GOE semicircle moments, delta trend, Kolmogorov level",
    9: "Wishart domination and inverse-determinant trajectory",
    10: "byte-identical CSVs across repeats and worker counts",
}

_outcomes: dict[int, list[tuple[str, bool]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    k = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ok = rep.outcome == "passed" and not hasattr(rep, "wasxfail")
        _outcomes.setdefault(k, []).append((item.name, ok))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k not in _outcomes:
            continue
        results = _outcomes[k]
        ok = all(r for _, r in results)
        failed = [name for name, r in results if not r]
        extra = f"  (failing: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {CRITERIA[k]}{extra}")
