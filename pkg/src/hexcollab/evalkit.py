"""Instruction-level, full-game and cascaded evaluation.

All three modes share one rollout loop: the follower policy acts during
follower turns, and each actual leader turn consumes the next recorded
leader turn (illegal recorded moves are skipped; once the recording runs
out the leader only ends its turn). Card spawns come from the recorded spawn
tape so card-state comparisons stay well defined when the follower deviates.
"""

from __future__ import annotations

import json
import statistics
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from hexcollab.dataio import InstructionExample, RecordedInteraction, SpawnTape, Step, extract_examples, snapshots
from hexcollab.engine import (
    DONE,
    TIMEOUT,
    Done,
    GameAction,
    GameConfig,
    GameState,
    InteractionState,
    new_game,
    step,
)
from hexcollab.hexworld import Agent, IllegalMove, WorldAction, WorldState, check_move
from hexcollab.policies import Episode, FollowerPolicy, LogView, Observation

ACTION_CAP = 25
MAX_ROLLOUT_EVENTS = 20_000


def leader_turns(actions: Iterable[GameAction]) -> list[list[GameAction]]:
    """Group leader actions into turns, each closed by DONE."""
    turns: list[list[GameAction]] = []
    current: list[GameAction] = []
    for a in actions:
        current.append(a)
        if isinstance(a, Done):
            turns.append(current)
            current = []
    if current:
        turns.append(current + [DONE])
    return turns


class LeaderReplay:
    """Replays recorded leader turns, one per actual leader turn."""

    def __init__(self, turns: Sequence[list[GameAction]]):
        self._turns = deque(list(t) for t in turns)
        self._current: deque | None = None

    def decide(self, g: GameState) -> GameAction:
        if self._current is None:
            self._current = deque(self._turns.popleft()) if self._turns else deque([DONE])
        while self._current:
            a = self._current.popleft()
            if isinstance(a, WorldAction):
                if g.interaction.steps == 0 or check_move(g.world, Agent.LEADER, a) is not None:
                    continue
            if isinstance(a, Done):
                self._current = None
            return a
        self._current = None
        return DONE

    def pending(self) -> list[GameAction]:
        """Recorded leader actions not yet played (rest of the current turn, then unstarted turns)."""
        out = list(self._current or [])
        for t in self._turns:
            out.extend(t)
        return out


@dataclass
class Rollout:
    game: GameState
    leader: LeaderReplay
    follower_actions: list[GameAction] = field(default_factory=list)
    done_worlds: list[WorldState] = field(default_factory=list)
    trace: list[Step] = field(default_factory=list)


def rollout(
    g: GameState,
    leader: LeaderReplay,
    policy: FollowerPolicy,
    stop_after: int | None = None,
    action_cap: int = ACTION_CAP,
    max_events: int = MAX_ROLLOUT_EVENTS,
) -> Rollout:
    """Play ``g`` forward until the game ends or ``stop_after`` follower DONEs.

    The follower gets at most ``action_cap`` actions per instruction; the
    next one is a forced DONE. A world action the engine rejects costs
    nothing, but counts toward the cap so a stuck policy cannot loop.
    """
    out = Rollout(g, leader)
    per_instruction = 0
    events = 0
    while not g.over and events < max_events:
        events += 1
        actor = g.interaction.turn
        if actor is Agent.LEADER:
            a = leader.decide(g)
        else:
            if per_instruction >= action_cap:
                a = DONE
            else:
                a = policy.decide(Observation(g.world, g.interaction, LogView(g.log)))
                per_instruction += 1
        before = Step(g.world, g.interaction, actor, a)
        try:
            step(g, actor, a)
        except IllegalMove:
            continue
        out.trace.append(before)
        if actor is Agent.FOLLOWER:
            out.follower_actions.append(a)
            if isinstance(a, Done):
                per_instruction = 0
                out.done_worlds.append(g.world)
                if stop_after is not None and len(out.done_worlds) >= stop_after:
                    break
    return out


def game_from(
    world: WorldState,
    interaction: InteractionState,
    config: GameConfig,
    score: int,
    turns_remaining: int,
    spawns: SpawnTape,
    seed: int | None,
) -> GameState:
    g = new_game(world, config, seed, spawns)
    g.interaction = interaction
    g.score = g.sets_completed = score
    g.turns_remaining = turns_remaining
    return g


# ---------------------------------------------------------------------------
# Instruction level


@dataclass(frozen=True)
class InstructionMetrics:
    card_state_acc: int
    env_state_acc: int
    action_seq_acc: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.card_state_acc, self.env_state_acc, self.action_seq_acc)


def run_instruction(
    policy: FollowerPolicy, ex: InstructionExample, config: GameConfig | None = None, action_cap: int = ACTION_CAP
) -> Rollout:
    """Roll ``policy`` out on one example until its first DONE."""
    first = ex.steps[0]
    g = game_from(
        first.world, first.interaction, config or GameConfig(), ex.start_score, ex.start_turns_remaining, ex.spawns, 0
    )
    policy.reset(Episode(ex.follower_actions(), f"{ex.game_id}/{ex.index}"))
    return rollout(g, LeaderReplay(ex.leader_turns()), policy, stop_after=1, action_cap=action_cap)


def eval_instruction(
    policy: FollowerPolicy, ex: InstructionExample, config: GameConfig | None = None, action_cap: int = ACTION_CAP
) -> InstructionMetrics:
    r = run_instruction(policy, ex, config, action_cap)
    final = r.game.world
    cards = int(final.cards == ex.end_world.cards)
    env = int(bool(cards) and final.follower.position == ex.end_world.follower.position)
    return InstructionMetrics(cards, env, int(r.follower_actions == ex.follower_actions()))


# ---------------------------------------------------------------------------
# Full game


def _recorded_leader_actions(rec: RecordedInteraction, start_event: int = 0) -> list[GameAction]:
    return [
        e.action
        for e in rec.events[start_event:]
        if e.actor is Agent.LEADER and not e.rejected
    ]


def run_full_game(policy: FollowerPolicy, rec: RecordedInteraction, action_cap: int = ACTION_CAP) -> Rollout:
    g = new_game(rec.initial_world, rec.config, rec.seed, rec.spawn_tape())
    policy.reset(Episode(rec.follower_actions(), rec.game_id))
    return rollout(g, LeaderReplay(leader_turns(_recorded_leader_actions(rec))), policy, action_cap=action_cap)


def eval_full_game(policy: FollowerPolicy, rec: RecordedInteraction, action_cap: int = ACTION_CAP) -> int:
    """Points scored when ``policy`` follows the recorded leader from the start."""
    if not rec.events:
        return 0
    return run_full_game(policy, rec, action_cap).game.score


# ---------------------------------------------------------------------------
# Cascaded


@dataclass
class CascadedExample:
    """Suffix of an interaction starting at instruction ``start`` (1-based)."""

    game_id: str
    start: int
    n_instructions: int
    world: WorldState
    interaction: InteractionState
    score_before: int
    turns_remaining: int
    leader_turns: list[list[GameAction]]
    gold_follower_actions: list[GameAction]
    gold_card_states: list[dict]
    gold_final_score: int
    spawns: SpawnTape
    config: GameConfig
    seed: int | None = None
    texts: tuple[str, ...] = ()

    @property
    def remaining(self) -> int:
        return self.n_instructions - self.start + 1


def build_cascaded_examples(rec: RecordedInteraction) -> list[CascadedExample]:
    """One example per completed instruction: the suffix from its start state to the end."""
    examples = extract_examples(rec)
    if not examples:
        return []
    snaps, final = snapshots(rec)
    tape = rec.spawn_tape()
    by_index = {s.event.index: s for s in snaps}
    out = []
    n = len(examples)
    for j, ex in enumerate(examples, start=1):
        first_event = ex.event_span[0]
        snap = by_index[first_event]
        pos = next(k for k, s in enumerate(snaps) if s.event.index == first_event)
        follower = [
            e.action
            for e in rec.events[pos:]
            if e.actor is Agent.FOLLOWER and not e.rejected and e.action != TIMEOUT
        ]
        out.append(
            CascadedExample(
                game_id=rec.game_id,
                start=j,
                n_instructions=n,
                world=snap.world,
                interaction=snap.interaction,
                score_before=snap.score,
                turns_remaining=snap.turns_remaining,
                leader_turns=leader_turns(_recorded_leader_actions(rec, pos)),
                gold_follower_actions=follower,
                gold_card_states=[e.end_world.cards for e in examples[j - 1 :]],
                gold_final_score=final.score,
                spawns=tape[snap.score :],
                config=rec.config,
                seed=rec.seed,
                texts=tuple(e.text for e in examples[j - 1 :]),
            )
        )
    return out


@dataclass(frozen=True)
class CascadedResult:
    game_id: str
    start: int
    followed: int
    remaining: int
    points: int
    max_points: int
    prop_instructions_followed: float
    prop_points_scored: float


def points_proportion(scored: int, gold_final: int, score_before: int) -> float:
    """Share of the gold points still available that the rollout scored; 0/0 is 1."""
    available = gold_final - score_before
    if available <= 0:
        return 1.0
    return min(1.0, max(0.0, scored / available))


def run_cascaded(policy: FollowerPolicy, cx: CascadedExample, action_cap: int = ACTION_CAP) -> CascadedResult:
    g = game_from(cx.world, cx.interaction, cx.config, cx.score_before, cx.turns_remaining, cx.spawns, cx.seed)
    policy.reset(Episode(cx.gold_follower_actions, f"{cx.game_id}/cascade{cx.start}"))
    r = rollout(g, LeaderReplay(cx.leader_turns), policy, action_cap=action_cap)
    followed = sum(
        1 for world, gold in zip(r.done_worlds, cx.gold_card_states) if world.cards == gold
    )
    scored = r.game.score - cx.score_before
    return CascadedResult(
        cx.game_id,
        cx.start,
        followed,
        cx.remaining,
        scored,
        cx.gold_final_score - cx.score_before,
        followed / cx.remaining,
        points_proportion(scored, cx.gold_final_score, cx.score_before),
    )


@dataclass
class CascadedMetrics:
    prop_instructions_followed: float
    prop_points_scored: float
    n_examples: int
    rows: list[CascadedResult] = field(default_factory=list)


def eval_cascaded(
    policy: FollowerPolicy, recs: RecordedInteraction | Iterable[RecordedInteraction], action_cap: int = ACTION_CAP
) -> CascadedMetrics:
    """Mean proportions over every cascaded example of every interaction."""
    if isinstance(recs, RecordedInteraction):
        recs = [recs]
    rows = [run_cascaded(policy, cx, action_cap) for rec in recs for cx in build_cascaded_examples(rec)]
    if not rows:
        return CascadedMetrics(1.0, 1.0, 0, [])
    return CascadedMetrics(
        statistics.fmean(r.prop_instructions_followed for r in rows),
        statistics.fmean(r.prop_points_scored for r in rows),
        len(rows),
        rows,
    )


# ---------------------------------------------------------------------------
# Reports


def evaluate(
    mode: str,
    policy_factory: Callable[[], FollowerPolicy],
    corpus: Iterable[RecordedInteraction],
    action_cap: int = ACTION_CAP,
) -> dict:
    """Run one evaluation mode over a corpus; returns a JSON-ready report."""
    policy = policy_factory()
    rows: list[dict] = []
    if mode == "instruction":
        for rec in corpus:
            for ex in extract_examples(rec):
                m = eval_instruction(policy, ex, rec.config, action_cap)
                rows.append({"game_id": rec.game_id, "index": ex.index, **asdict(m)})
        keys = ("card_state_acc", "env_state_acc", "action_seq_acc")
    elif mode == "full":
        for rec in corpus:
            rows.append({"game_id": rec.game_id, "points": eval_full_game(policy, rec, action_cap), "gold": rec.final_score})
        keys = ("points", "gold")
    elif mode == "cascaded":
        for rec in corpus:
            rows.extend(asdict(r) for r in eval_cascaded(policy, rec, action_cap).rows)
        keys = ("prop_instructions_followed", "prop_points_scored")
    else:
        raise ValueError(f"unknown evaluation mode {mode!r}")
    means = {k: (statistics.fmean(r[k] for r in rows) if rows else None) for k in keys}
    return {"mode": mode, "policy": getattr(policy, "name", "policy"), "n": len(rows), "means": means, "rows": rows}


def report_to_tsv(report: dict) -> str:
    rows = report["rows"]
    if not rows:
        return "\n"
    cols = list(rows[0])
    lines = ["\t".join(cols)]
    lines += ["\t".join(str(r[c]) for c in cols) for r in rows]
    lines.append("\t".join(["mean"] + [str(report["means"].get(c, "")) if c in report["means"] else "" for c in cols[1:]]))
    return "\n".join(lines) + "\n"


def write_report(report: dict, path: str | Path) -> tuple[Path, Path]:
    """Write ``path`` as JSON and a sibling ``.tsv``."""
    path = Path(path)
    path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    tsv = path.with_suffix(".tsv")
    tsv.write_text(report_to_tsv(report), encoding="utf-8")
    return path, tsv

