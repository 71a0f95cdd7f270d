import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture(scope="session")
def report(pytestconfig):
    """Collect one summary line per acceptance criterion."""
    lines = pytestconfig.stash[_LINES]

    def emit(number, title, checks):
        ok = all(passed for passed, _ in checks.values())
        parts = [f"{name}: {detail} [{'ok' if passed else 'MISS'}]" for name, (passed, detail) in checks.items()]
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  |  " + "; ".join(parts)
        print(line)
        lines.append(line)

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
