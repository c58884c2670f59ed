import pytest

_RESULTS = {}


class AcceptanceReport:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def record(self, key: str, title: str, passed: bool, detail: str):
        _RESULTS[key] = (title, bool(passed), detail)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceReport()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: int(k.lstrip("AC"))):
        title, passed, detail = _RESULTS[key]
        terminalreporter.write_line(f"{key} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
