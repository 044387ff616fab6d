import json

import pytest

from hexcollab.cli import main
from hexcollab.dataio import load, save

from test_dataio import fixture_game


@pytest.fixture(scope="module")
def sim_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "games.jsonl"
    assert main(["sim", "--seed", "0", "--games", "3", "--map-size", "12", "--out", str(path)]) == 0
    return path


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sim", "--bogus"])
    assert info.value.code == 2


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["stats", "--data", str(tmp_path / "missing.jsonl")]) == 2


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"turn": {"nope": 1}}')
    assert main(["sim", "--games", "1", "--config", str(cfg), "--out", str(tmp_path / "o.jsonl")]) == 2


def test_malformed_data_is_invalid(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{\n")
    assert main(["replay", "--data", str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_sim_writes_games(sim_file):
    recs = list(load(sim_file))
    assert [r.game_id for r in recs] == ["sim-0", "sim-1", "sim-2"]
    assert all(r.initial_world.width == 12 for r in recs)


def test_replay_validate(sim_file, capsys):
    assert main(["replay", "--data", str(sim_file), "--validate"]) == 0
    out = [line for line in capsys.readouterr().out.splitlines() if not line.startswith(" ")]
    assert len(out) == 3 and all("\tok\t" in line for line in out)
    assert main(["replay", "--data", str(sim_file), "--game", "7"]) == 2


def test_replay_validate_flags_tampering(tmp_path, sim_file, capsys):
    rows = [json.loads(line) for line in sim_file.read_text().splitlines()]
    rows[1]["final_score"] += 1
    bad = tmp_path / "t.jsonl"
    bad.write_text("".join(json.dumps(r) + "\n" for r in rows))
    assert main(["replay", "--data", str(bad), "--validate"]) == 1
    assert "score_mismatch" in capsys.readouterr().out


def test_eval_cascaded_static_oracle(tmp_path, sim_file, capsys):
    report = tmp_path / "rep.json"
    assert main(["eval", "--mode", "cascaded", "--data", str(sim_file), "--policy", "static-oracle", "--report", str(report)]) == 0
    summary = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert summary["means"] == {"prop_instructions_followed": 1.0, "prop_points_scored": 1.0}
    assert report.exists() and report.with_suffix(".tsv").exists()


def test_eval_instruction_and_full(sim_file, capsys):
    assert main(["eval", "--mode", "instruction", "--data", str(sim_file), "--policy", "static-oracle"]) == 0
    means = json.loads(capsys.readouterr().out)["means"]
    assert set(means.values()) == {1.0}
    assert main(["eval", "--mode", "full", "--data", str(sim_file), "--policy", "static-oracle"]) == 0
    means = json.loads(capsys.readouterr().out)["means"]
    assert means["points"] == means["gold"]


def test_aggregate(tmp_path, sim_file, capsys):
    out, mix = tmp_path / "rec.jsonl", tmp_path / "mix.jsonl"
    assert main(["aggregate", "--data", str(sim_file), "--policy", "stop-early", "--out", str(out), "--mix", str(mix)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["recovery"] == len(out.read_text().splitlines())
    assert summary["mix"] == summary["examples"] + min(summary["recovery"], summary["examples"])


def test_stats_hand_checked(tmp_path, capsys):
    path = tmp_path / "fixture.jsonl"
    save(path, [fixture_game()])
    js = tmp_path / "stats.json"
    assert main(["stats", "--data", str(path), "--json", str(js)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "metric\tmean\tmedian\tmax"
    assert "instructions_per_interaction\t5.000\t5.000\t5" in lines
    assert json.loads(js.read_text())["vocabulary_size"] == 10


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "kernels:" in capsys.readouterr().out
