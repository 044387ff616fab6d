import json
from dataclasses import replace

import pytest

from hexcollab.dataio import (
    ParseError,
    RecordedInteraction,
    ReplayInvalid,
    VersionError,
    dataset_stats,
    extract_examples,
    load,
    load_examples,
    replay,
    replay_validate,
    save,
    save_examples,
    snapshots,
    stats_to_tsv,
    tokenize,
)
from hexcollab.engine import DONE, Done, GameConfig, Instruct, TurnConfig, new_game, step
from hexcollab.hexworld import Agent, WorldAction, WorldState, make_pose

L, F = Agent.LEADER, Agent.FOLLOWER
MF, RL, RR = WorldAction.MF, WorldAction.RL, WorldAction.RR
FIXTURE_TEXTS = ["turn left", "turn right", "go forward one", "turn around", "sing, please"]


def fixture_game() -> RecordedInteraction:
    """Five completed instructions, then one queued instruction the game ends before."""
    world = WorldState(10, 10, {}, {}, make_pose(0, 0), make_pose(3, 3, 0))
    g = new_game(world, GameConfig(TurnConfig(initial_turns=3)))
    for text in FIXTURE_TEXTS:
        step(g, L, Instruct(text))
    step(g, L, DONE)
    for a in [RL, DONE, RR, DONE, MF, DONE, RL, RL, RL, DONE, DONE]:
        step(g, F, a)
    step(g, L, Instruct("never started"))
    step(g, L, DONE)
    assert g.over
    return RecordedInteraction.from_game(g, "fixture")


def test_roundtrip_50_games(tmp_path, corpus):
    path = tmp_path / "games.jsonl"
    assert save(path, corpus) == 50
    loaded = list(load(path))
    assert [r.to_dict() for r in loaded] == [r.to_dict() for r in corpus]
    for a, b in zip(loaded[:5], corpus[:5]):
        assert replay(a).fingerprint() == replay(b).fingerprint()


def test_truncated_line_reports_its_number(tmp_path, small_corpus):
    path = tmp_path / "games.jsonl"
    save(path, small_corpus[:3])
    lines = path.read_text().splitlines()
    lines[1] = lines[1][: len(lines[1]) // 2]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        list(load(path))
    assert info.value.line == 2


def test_empty_file_is_empty_stream(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert list(load(path)) == []


def test_unknown_version_rejected(tmp_path, small_corpus):
    d = small_corpus[0].to_dict()
    d["version"] = 99
    path = tmp_path / "v.jsonl"
    path.write_text(json.dumps(d) + "\n")
    with pytest.raises(VersionError):
        list(load(path))


def test_fixture_examples():
    rec = fixture_game()
    examples = extract_examples(rec)
    assert [ex.text for ex in examples] == FIXTURE_TEXTS
    for ex in examples:
        assert ex.steps[0].actor is F
        assert isinstance(ex.steps[-1].action, Done)
    assert [len([a for a in ex.follower_actions() if isinstance(a, WorldAction)]) for ex in examples] == [1, 1, 1, 3, 0]
    assert "never started" not in [ex.text for ex in examples]
    report = replay_validate(rec)
    assert report.ok and "unfinished_instruction" in report.kinds()


def test_examples_partition_follower_actions(small_corpus):
    for rec in small_corpus:
        examples = extract_examples(rec)
        done = sum(1 for e in rec.events if e.actor is F and isinstance(e.action, Done))
        assert len(examples) == done
        joined = [a for ex in examples for a in ex.follower_actions()]
        stream = rec.follower_actions()
        assert stream[: len(joined)] == joined
        assert not any(isinstance(a, Done) for a in stream[len(joined):])


def test_example_start_state_matches_replay(small_corpus):
    rec = small_corpus[0]
    snaps, _ = snapshots(rec)
    by_index = {s.event.index: s for s in snaps}
    for ex in extract_examples(rec):
        snap = by_index[ex.event_span[0]]
        assert ex.start_world == snap.world
        assert ex.start_interaction == snap.interaction
        assert ex.start_score == snap.score


def test_extraction_stable_under_replay(small_corpus):
    rec = small_corpus[1]
    g = replay(rec)
    again = RecordedInteraction.from_game(g, rec.game_id, rec.map_config)
    assert [e.to_dict() for e in extract_examples(again)] == [e.to_dict() for e in extract_examples(rec)]


def test_spawn_tape_length_and_replay(small_corpus):
    for rec in small_corpus:
        tape = rec.spawn_tape()
        assert sum(len(group) for group in tape) == 3 * rec.final_score
        with_tape = replay(rec, use_tape=True)
        from_seed = replay(rec, use_tape=False)
        assert with_tape.fingerprint() == from_seed.fingerprint()


def test_example_json_roundtrip(tmp_path, examples):
    path = tmp_path / "ex.jsonl"
    save_examples(path, examples)
    back = list(load_examples(path))
    assert [e.to_dict() for e in back] == [e.to_dict() for e in examples]
    for a, b in zip(back, examples):
        assert [s.world for s in a.steps] == [s.world for s in b.steps]


def test_validate_clean_game(small_corpus):
    assert replay_validate(small_corpus[0]).ok


def test_validate_flags_forged_move(small_corpus):
    rec = small_corpus[0]
    k = next(i for i, e in enumerate(rec.events) if e.actor is F and e.action is MF and not e.rejected)
    events = rec.events[: k + 1] + [rec.events[k]] + rec.events[k + 1 :]
    report = replay_validate(replace(rec, events=events))
    assert not report.ok
    assert "step_accounting" in report.kinds()


def test_validate_flags_score_mismatch(small_corpus):
    rec = small_corpus[0]
    report = replay_validate(replace(rec, final_score=rec.final_score + 1))
    assert not report.ok
    assert "score_mismatch" in report.kinds()


def test_validate_flags_illegal_event(small_corpus):
    rec = small_corpus[0]
    k = next(i for i, e in enumerate(rec.events) if e.actor is L and isinstance(e.action, Instruct))
    bad = replace(rec.events[k], actor=F)
    report = replay_validate(replace(rec, events=rec.events[:k] + [bad] + rec.events[k + 1 :]))
    assert not report.ok
    with pytest.raises(ReplayInvalid):
        replay(replace(rec, events=rec.events[:k] + [bad]))


def test_tokenizer():
    assert tokenize("Okay, pick up 3 green stars!") == ["okay", ",", "pick", "up", "3", "green", "stars", "!"]


def test_stats_on_fixture_hand_computed():
    stats = dataset_stats([fixture_game()])
    assert stats["interactions"] == 1
    # turn left right go forward one around sing , please
    assert stats["vocabulary_size"] == 10
    rows = stats["rows"]
    assert rows["score_per_interaction"] == {"mean": 0, "median": 0, "max": 0}
    assert rows["instructions_per_interaction"] == {"mean": 5, "median": 5, "max": 5}
    assert rows["tokens_per_instruction"] == {"mean": pytest.approx(2.4), "median": 2, "max": 3}
    assert rows["follower_actions_per_instruction"] == {"mean": pytest.approx(1.2), "median": 1, "max": 3}
    tsv = stats_to_tsv(stats).splitlines()
    assert tsv[0] == "metric\tmean\tmedian\tmax"
    assert "tokens_per_instruction\t2.400\t2.000\t3" in tsv


def test_stats_empty_corpus():
    stats = dataset_stats([])
    assert stats == {"interactions": 0, "vocabulary_size": 0, "rows": {}}
    assert stats_to_tsv(stats).startswith("metric")
