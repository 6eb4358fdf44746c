import pytest

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def record_criterion(request):
    """Record ``(passed, detail)`` for an acceptance criterion id like ``"C3"``."""
    table = request.config.stash[_CRITERIA]

    def record(cid: str, title: str, passed: bool, detail: str = ""):
        table[cid] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(_CRITERIA, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(table, key=lambda c: int(c[1:])):
        title, passed, detail = table[cid]
        line = f"{cid} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
