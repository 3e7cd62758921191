import os

import pytest

# acceptance results, filled by tests/test_acceptance.py and printed at the end
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion check")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.fixture
def record():
    def _record(criterion: str, ok: bool | None, detail: str = ""):
        # ok=None marks an informational line that is not a criterion
        ACCEPTANCE[criterion] = (None if ok is None else bool(ok), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: (len(k.split()[0]), k)):
        ok, detail = ACCEPTANCE[name]
        status = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        tr.write_line(f"{status}  {name}  {detail}")
    if os.environ.get("NONINF_QUICK"):
        tr.write_line("(NONINF_QUICK set: the full-table tier was skipped)")
