import pytest

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def report(request):
    """Record a one-line pass/fail for the acceptance summary."""

    def _report(label: str, ok: bool, detail: str = ""):
        _ACCEPTANCE[label] = f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        assert ok, f"{label}: {detail}"

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for label in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[label])
