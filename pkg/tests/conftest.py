import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from playstyle import synth

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def small_corpus():
    """300 players / 1,500 matches with 4 planted archetypes."""
    spec = synth.planted_spec(n_archetypes=4, n_players=300, n_matches=1500, seed=11)
    return synth.generate(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report(capsys):
    """Record and print one pass/fail line for an acceptance criterion."""

    def _report(number: int, ok: bool, detail: str, seconds: float):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.1f}s]"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
