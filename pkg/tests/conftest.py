import numpy as np
import pytest

from fishguide.env import EnvConfig
from fishguide.fishsim import BehaviorParams

_ACCEPTANCE: list[tuple[str, bool, str]] = []
_INVARIANT_OUTCOMES: list[tuple[str, bool]] = []


def record_criterion(name: str, ok: bool, detail: str = "") -> None:
    _ACCEPTANCE.append((name, ok, detail))


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: property test backing acceptance criterion 8")


def pytest_runtest_logreport(report):
    if report.when == "call" and "invariant" in report.keywords:
        _INVARIANT_OUTCOMES.append((report.nodeid, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE and not _INVARIANT_OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    if _INVARIANT_OUTCOMES:
        failed = [n for n, ok in _INVARIANT_OUTCOMES if not ok]
        status = "PASS" if not failed else "FAIL"
        tr.write_line(
            f"{status}  criterion 8 (unit invariants)  "
            f"{len(_INVARIANT_OUTCOMES) - len(failed)}/{len(_INVARIANT_OUTCOMES)} property tests passed"
        )
        for n in failed:
            tr.write_line(f"      failed: {n}")


@pytest.fixture
def rng():
    return np.random.default_rng(20180209)


@pytest.fixture
def cfg():
    return EnvConfig()


@pytest.fixture
def behavior():
    return BehaviorParams()


class ScriptedRng:
    """Replays a fixed list of uniforms through ``random()``."""

    def __init__(self, values):
        self.values = list(values)
        self.i = 0

    def random(self):
        v = self.values[self.i]
        self.i += 1
        return v
