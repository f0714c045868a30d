import pytest

ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def criterion(request):
    """``criterion(k, text)`` registers the line printed for acceptance criterion ``k``."""
    state = {}

    def register(k, text):
        state["k"], state["text"] = k, text

    yield register
    if "k" in state:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        ACCEPTANCE_LINES[state["k"]] = f"criterion {state['k']:>2}: {'PASS' if ok else 'FAIL'}  {state['text']}"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
