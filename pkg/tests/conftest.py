import pytest

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, description, ok, detail)``."""
    lines = request.config.stash[_LINES_KEY]

    def record(number, description, ok, detail=""):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {description}  {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
