import pytest

# criterion label -> (passed, detail), filled by tests/test_acceptance.py
VERDICTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    def record(label: str, ok: bool, detail: str = "") -> bool:
        VERDICTS[label] = (bool(ok), detail)
        print(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    # labels start with the criterion number
    for label in sorted(VERDICTS, key=lambda s: int(s.split()[0])):
        ok, detail = VERDICTS[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
