from __future__ import annotations

import pytest

from hexcollab.dataio import RecordedInteraction, extract_examples, save
from hexcollab.mapgen import MapConfig
from hexcollab.sim import generate_games

CORPUS_SIZE = 50

# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def corpus() -> list[RecordedInteraction]:
    """Scripted-leader, template-follower games on seeds 0..49."""
    return [
        RecordedInteraction.from_game(g, f"sim-{mc.seed}", mc)
        for mc, g in generate_games(CORPUS_SIZE, seed=0, map_config=MapConfig())
    ]


@pytest.fixture(scope="session")
def small_corpus(corpus) -> list[RecordedInteraction]:
    return corpus[:10]


@pytest.fixture(scope="session")
def examples(small_corpus):
    return [ex for rec in small_corpus for ex in extract_examples(rec)]


@pytest.fixture(scope="session")
def corpus_file(tmp_path_factory, small_corpus):
    path = tmp_path_factory.mktemp("data") / "games.jsonl"
    save(path, small_corpus)
    return path


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
