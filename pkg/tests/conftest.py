import pytest

from pumped_bh import ModelParams

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    entry = _CRITERIA.setdefault(marker.args[0], {"passed": True, "details": []})
    entry["passed"] &= rep.passed
    detail = dict(item.user_properties).get("detail", "")
    entry["details"].append(f"{item.name}: {'ok' if rep.passed else 'failed'}{' (' + detail + ')' if detail else ''}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        verdict = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {verdict}  " + "; ".join(entry["details"]))


@pytest.fixture
def detail(record_property):
    """Attach a short measurement summary to the acceptance line."""

    def _detail(text):
        record_property("detail", text)

    return _detail


@pytest.fixture
def noise_params():
    """gamma_p/kappa = 0.6, chi/kappa = 0.2."""
    return ModelParams.from_chi(0.6, 0.2)
