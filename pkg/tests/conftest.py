import sys

import pytest

# make the shared synthetic-scene helpers importable regardless of rootdir
sys.path.insert(0, str(__import__("pathlib").Path(__file__).parent))


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose per-phase outcomes so the acceptance suite can print its verdicts
    outcome = yield
    report = outcome.get_result()
    setattr(item, "rep_" + report.when, report)
