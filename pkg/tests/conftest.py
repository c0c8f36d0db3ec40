import pytest

# criterion number -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(number, checks):
        """Store a list of (label, ok, detail) sub-checks for one criterion."""
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{label} {'ok' if good else 'FAIL'} ({info})"
                           for label, good, info in checks)
        ACCEPTANCE[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
