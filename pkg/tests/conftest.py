import pytest

ACCEPTANCE = {}


def record(number, name, passed, detail=""):
    """Store one acceptance outcome; printed by the terminal summary hook."""
    ACCEPTANCE[number] = (name, bool(passed), detail)
    status = "PASS" if passed else "FAIL"
    print(f"[criterion {number:2d}] {status}  {name}: {detail}")


@pytest.fixture
def accept():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {name} -- {detail}")
