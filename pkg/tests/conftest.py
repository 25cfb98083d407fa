import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aftcs import load_bundled  # noqa: E402


def segments(*rows):
    """[(start_s, end_s, noise_dbm, readings), ...] -> schedule list."""
    out = []
    for start, end, noise, *rest in rows:
        seg = {"start_s": start, "end_s": end, "noise_floor_dbm": noise}
        if rest and rest[0]:
            seg["readings"] = rest[0]
        out.append(seg)
    return out


@pytest.fixture
def small_cfg():
    def make(duration=20, noise=-100.0, **overrides):
        return load_bundled(duration_s=duration, schedule=segments((0, duration, noise)), **overrides)

    return make


ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if "[AC-" in name:
        ac = name[name.index("[") + 1 : -1]
        detail = dict(report.user_properties).get("detail", "")
        ACCEPTANCE_RESULTS[ac] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(ACCEPTANCE_RESULTS, key=lambda a: int(a.split("-")[1])):
        status, detail = ACCEPTANCE_RESULTS[ac]
        terminalreporter.write_line(f"{ac}: {status}  {detail}".rstrip())
