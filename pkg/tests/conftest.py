import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; it is echoed in the terminal summary."""

    def add(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        print(ACCEPTANCE[-1])
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
