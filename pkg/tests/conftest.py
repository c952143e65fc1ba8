import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


UP = np.array([1.0, 0.0])
DOWN = np.array([0.0, 1.0])


def bell_state():
    return (np.kron(UP, UP) + np.kron(DOWN, DOWN)) / np.sqrt(2)


def random_unitary(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(d_s, d_e, rng, rank=None):
    rank = rank or d_s * d_e
    a = rng.normal(size=(d_s * d_e, rank)) + 1j * rng.normal(size=(d_s * d_e, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# acceptance criteria bookkeeping: tests marked ``criterion(n)`` are grouped
# and summarized as one PASS/FAIL line per criterion at the end of the run

CRITERIA = {
    1: "oracle equivalence at M=32 (N = 8, 12, 14)",
    2: "fixed-mu crossing at lambda_c, mu = 2/3",
    3: "Ising fit h = 0.38 +- 0.06, alpha = 1.68 +- 0.20",
    4: "XX fit h = 0.47 +- 0.07, alpha = 0.96 +- 0.15",
    5: "XX log-negativity fit h = 0.33 +- 0.06",
    6: "universality Ising vs gamma=0.5 within 10%, XX further",
    7: "scale invariance within 5% at mu = 2/3, 1, 2",
    8: "truncated weight and M=40 -> 60 stability",
    9: "entanglement unit invariants",
}
_criterion_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        measured = "; ".join(str(v) for k, v in report.user_properties if k == "measured")
        _criterion_results.setdefault(marker.args[0], []).append((item.name, report.outcome, measured))


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _criterion_results.get(n)
        if not results:
            continue
        failed = [name for name, outcome, _ in results if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        line = f"criterion {n}: {status}  {CRITERIA[n]}  ({len(results) - len(failed)}/{len(results)} checks)"
        terminalreporter.write_line(line)
        for name, outcome, measured in results:
            if measured or outcome != "passed":
                terminalreporter.write_line(f"    {outcome:6s} {name}: {measured}")
