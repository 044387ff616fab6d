"""Command-line entry points: sim, eval, aggregate, stats, serve, replay.

Exit codes: 0 on success, 1 when validation fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import replace
from pathlib import Path

from hexcollab import KERNEL_BACKEND, __version__
from hexcollab.config import AppConfig, load_config
from hexcollab.dataio import (
    ParseError,
    RecordedInteraction,
    VersionError,
    dataset_stats,
    extract_examples,
    load,
    replay,
    replay_validate,
    save,
    save_examples,
    stats_to_tsv,
)
from hexcollab.engine import ConfigError
from hexcollab.policies import POLICIES, make_policy

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
LEADER_POLICIES = ("scripted",)

log = logging.getLogger("hexcollab")


class UsageError(Exception):
    pass


def _load_corpus(path: str) -> list[RecordedInteraction]:
    if not Path(path).is_file():
        raise UsageError(f"no such data file: {path}")
    return list(load(path))


def _config(args) -> AppConfig:
    return load_config(getattr(args, "config", None), env={})


def cmd_sim(args) -> int:
    from hexcollab.sim import generate_games

    if args.games < 0:
        raise UsageError("--games must be non-negative")
    cfg = _config(args)
    map_config = cfg.map if args.map_size is None else replace(cfg.map, width=args.map_size, height=args.map_size)
    games = generate_games(args.games, args.seed, map_config, cfg.game, args.follower_policy)
    recs = (RecordedInteraction.from_game(g, f"sim-{mc.seed}", mc) for mc, g in games)
    n = save(args.out, recs)
    print(f"wrote {n} games to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from hexcollab.evalkit import evaluate, write_report

    corpus = _load_corpus(args.data)
    report = evaluate(args.mode, lambda: make_policy(args.policy, args.seed), corpus)
    if args.report:
        json_path, tsv_path = write_report(report, args.report)
        print(f"wrote {json_path} and {tsv_path}")
    print(json.dumps({"mode": report["mode"], "policy": args.policy, "n": report["n"], "means": report["means"]}))
    return EXIT_OK


def cmd_aggregate(args) -> int:
    from hexcollab.recovery import aggregate_detailed, sample_for_epoch

    corpus = _load_corpus(args.data)
    examples = [ex for rec in corpus for ex in extract_examples(rec)]
    result = aggregate_detailed(make_policy(args.policy, args.seed), examples)
    n = save_examples(args.out, result.examples)
    summary = {"examples": len(examples), "recovery": n, "counts": result.counts}
    if args.mix:
        mix = sample_for_epoch(examples, result.examples, random.Random(args.seed))
        summary["mix"] = save_examples(args.mix, mix)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_stats(args) -> int:
    stats = dataset_stats(_load_corpus(args.data))
    if args.json:
        Path(args.json).write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(stats_to_tsv(stats))
    return EXIT_OK


def cmd_serve(args) -> int:
    from hexcollab.server import run

    cfg = load_config(args.config)
    if args.port is not None:
        cfg = replace(cfg, server=replace(cfg.server, port=args.port))
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    try:
        run(cfg)
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_replay(args) -> int:
    corpus = _load_corpus(args.data)
    if args.game is not None:
        if not 0 <= args.game < len(corpus):
            raise UsageError(f"--game {args.game} out of range (file has {len(corpus)} games)")
        corpus = [corpus[args.game]]
    failures = 0
    for rec in corpus:
        if args.validate:
            report = replay_validate(rec)
            status = "ok" if report.ok else "INVALID"
            print(f"{rec.game_id}\t{status}\tscore={report.replayed_score}")
            for issue in report.issues:
                print(f"  {issue.severity}\t{issue.kind}\tevent={issue.event}\t{issue.detail}")
            failures += not report.ok
        else:
            g = replay(rec)
            print(f"{rec.game_id}\tscore={g.score}\tevents={len(g.log)}\tturns={g.turns_taken}")
    return EXIT_INVALID if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hexcollab", description="Collaborative hex-world game tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} (kernels: {KERNEL_BACKEND})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    policies = sorted(POLICIES)

    s = sub.add_parser("sim", help="roll out scripted games to JSONL")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--games", type=int, default=10)
    s.add_argument("--leader-policy", choices=LEADER_POLICIES, default="scripted")
    s.add_argument("--follower-policy", choices=policies, default="template")
    s.add_argument("--map-size", type=int)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sim)

    e = sub.add_parser("eval", help="evaluate a follower policy")
    e.add_argument("--mode", choices=("instruction", "full", "cascaded"), required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--policy", choices=policies, required=True)
    e.add_argument("--report")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("aggregate", help="generate recovery examples for a policy")
    a.add_argument("--data", required=True)
    a.add_argument("--policy", choices=policies, required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--mix", help="also write the training mix for one epoch here")
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_aggregate)

    t = sub.add_parser("stats", help="corpus statistics table")
    t.add_argument("--data", required=True)
    t.add_argument("--json", help="also write the statistics as JSON")
    t.set_defaults(func=cmd_stats)

    v = sub.add_parser("serve", help="start the game service")
    v.add_argument("--config")
    v.add_argument("--port", type=int)
    v.set_defaults(func=cmd_serve)

    r = sub.add_parser("replay", help="replay recorded games")
    r.add_argument("--data", required=True)
    r.add_argument("--validate", action="store_true")
    r.add_argument("--game", type=int)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"hexcollab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, VersionError) as exc:
        print(f"hexcollab {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
