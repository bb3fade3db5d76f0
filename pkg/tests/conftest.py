"""Shared fixtures: cached beam artifacts, one reference Monte Carlo
campaign of the clamped-free beam, and the acceptance-line reporter.

Everything heavy is session-scoped; individual tests read from these
caches instead of re-simulating.
"""

from __future__ import annotations

import pytest

from omabench.dsp import derive_seed
from omabench.harness import (CampaignConfig, DEFAULT_NOISE_LEVELS, default_beams,
                              run_campaign, simulate_beam)
from omabench.noise import NoiseSpec, corrupt

MASTER_SEED = 42
CAMPAIGN_LEVELS = (0.0,) + DEFAULT_NOISE_LEVELS


@pytest.fixture(scope="session")
def beam_artifacts():
    """Simulated artifacts for the four standard beams at the master seed."""
    return {bc.beam_id: simulate_beam(bc, MASTER_SEED) for bc in default_beams()}


@pytest.fixture(scope="session")
def cf(beam_artifacts):
    return beam_artifacts["CF"]


@pytest.fixture(scope="session")
def noisy_record(beam_artifacts):
    """Factory for corrupted records using the campaign seed convention.

    ``noisy_record(beam_id, level, run)`` reproduces exactly the record the
    benchmark harness would process for that (level, run) cell.
    """
    def make(beam_id: str, level: float, run: int = 0):
        art = beam_artifacts[beam_id]
        if level == 0.0:
            return art.clean_record
        nl_index = CAMPAIGN_LEVELS.index(level)
        seed = derive_seed(MASTER_SEED, "noise", beam_id, nl_index, run)
        rec, _ = corrupt(art.clean_record, NoiseSpec(level, seed))
        return rec

    return make


@pytest.fixture(scope="session")
def cf_campaign(beam_artifacts):
    """Full clamped-free campaign: 8 levels x 20 runs x PP/FDD/SSI."""
    cfg = CampaignConfig(
        beams=tuple(b for b in default_beams() if b.beam_id == "CF"),
        noise_levels=CAMPAIGN_LEVELS,
        runs=20,
        methods=("PP", "FDD", "SSI"),
        master_seed=MASTER_SEED,
    )
    return run_campaign(cfg, jobs=1)


_ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Recorder for one acceptance-criterion verdict line."""
    def record(criterion: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE_LINES.append((criterion, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE_LINES:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {criterion}: {verdict} - {detail}")
