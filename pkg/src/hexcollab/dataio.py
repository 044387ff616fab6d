"""Recorded interactions: JSONL persistence, replay, example extraction and statistics.

A recorded interaction stores the configuration, the initial world and the
full event log. Card spawns are logged with full card identities, so a game
can be replayed exactly without its random seed (the "spawn tape").
"""

from __future__ import annotations

import json
import random
import re
import statistics
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from hexcollab.cards import Card
from hexcollab.engine import (
    LOG_VERSION,
    TIMEOUT,
    Done,
    Event,
    GameAction,
    GameConfig,
    GameError,
    GameState,
    InteractionState,
    Instruct,
    OutOfDomain,
    action_from_dict,
    action_to_dict,
    expire_turn,
    new_game,
    spawn_effect,
    spawns_from_effect,
    step,
    world_step,
)
from hexcollab.hexworld import Agent, HexCoord, IllegalMove, WorldAction, WorldState
from hexcollab.mapgen import MapConfig

SpawnTape = list[list[tuple[HexCoord, Card]]]


class ParseError(ValueError):
    def __init__(self, line: int, detail: str):
        super().__init__(f"line {line}: {detail}")
        self.line = line


class VersionError(ValueError):
    pass


class ReplayInvalid(Exception):
    pass


@dataclass
class RecordedInteraction:
    game_id: str
    config: GameConfig
    initial_world: WorldState
    events: list[Event]
    final_score: int
    seed: int | None = None
    map_config: MapConfig | None = None
    version: int = LOG_VERSION

    @classmethod
    def from_game(cls, g: GameState, game_id: str, map_config: MapConfig | None = None) -> RecordedInteraction:
        if g.initial_world is None:
            raise ValueError("game has no initial world")
        return cls(game_id, g.config, g.initial_world, list(g.log), g.score, g.seed, map_config)

    def spawn_tape(self) -> SpawnTape:
        return [spawns_from_effect(e) for ev in self.events for e in ev.effects_of("spawn")]

    def follower_actions(self) -> list[GameAction]:
        """Follower policy actions in order: world actions and DONEs."""
        return [
            e.action
            for e in self.events
            if e.actor is Agent.FOLLOWER and not e.rejected and e.action != TIMEOUT
        ]

    def instructions(self) -> list[str]:
        return [e.action.text for e in self.events if isinstance(e.action, Instruct)]

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "game_id": self.game_id,
            "seed": self.seed,
            "config": self.config.to_dict(),
            "map_config": self.map_config.to_dict() if self.map_config else None,
            "initial_world": self.initial_world.to_dict(),
            "events": [e.to_dict() for e in self.events],
            "final_score": self.final_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RecordedInteraction:
        if d.get("version") != LOG_VERSION:
            raise VersionError(f"unsupported interaction version {d.get('version')!r}")
        return cls(
            game_id=str(d["game_id"]),
            config=GameConfig.from_dict(d["config"]),
            initial_world=WorldState.from_dict(d["initial_world"]),
            events=[Event.from_dict(e) for e in d["events"]],
            final_score=int(d["final_score"]),
            seed=d.get("seed"),
            map_config=MapConfig.from_dict(d["map_config"]) if d.get("map_config") else None,
            version=d["version"],
        )


def save(path: str | Path, recs: Iterable[RecordedInteraction], append: bool = False) -> int:
    n = 0
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for rec in recs:
            fh.write(json.dumps(rec.to_dict(), separators=(",", ":")) + "\n")
            n += 1
    return n


def _read_jsonl(fh: IO[str]) -> Iterator[tuple[int, dict]]:
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, str(exc)) from exc


def load(path: str | Path) -> Iterator[RecordedInteraction]:
    """Stream interactions from a JSONL file, one per line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, d in _read_jsonl(fh):
            try:
                yield RecordedInteraction.from_dict(d)
            except VersionError as exc:
                raise VersionError(f"line {lineno}: {exc}") from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(lineno, f"malformed interaction: {exc!r}") from exc


# ---------------------------------------------------------------------------
# Replay


def apply_event(g: GameState, e: Event) -> list[Event]:
    """Re-apply a logged event to ``g``; rejected events must be rejected again."""
    if e.action == TIMEOUT:
        return expire_turn(g)[1]
    if e.rejected:
        try:
            step(g, e.actor, e.action)
        except IllegalMove:
            return [g.log[-1]]
        raise ReplayInvalid(f"event {e.index}: logged as rejected but is legal")
    return step(g, e.actor, e.action)[1]


def replay(rec: RecordedInteraction, use_tape: bool = True) -> GameState:
    """Rebuild the final game state from the log.

    With ``use_tape`` card spawns come from the logged spawn events; without
    it they are re-drawn from the recorded seed.
    """
    g = new_game(rec.initial_world, rec.config, rec.seed, rec.spawn_tape() if use_tape else None)
    for e in rec.events:
        try:
            apply_event(g, e)
        except (GameError, IllegalMove) as exc:
            raise ReplayInvalid(f"event {e.index}: {exc}") from exc
    return g


@dataclass(frozen=True)
class Issue:
    kind: str  # step_accounting | illegal_event | effect_mismatch | score_mismatch | unfinished_instruction
    event: int | None
    detail: str
    severity: str = "error"


@dataclass
class ReplayReport:
    game_id: str
    issues: list[Issue] = field(default_factory=list)
    replayed_score: int | None = None

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}

    def to_dict(self) -> dict:
        return {
            "game_id": self.game_id,
            "ok": self.ok,
            "replayed_score": self.replayed_score,
            "issues": [i.__dict__ for i in self.issues],
        }


_STEP_KEYS = ("turn", "steps", "queue", "turns_remaining", "over")


def replay_validate(rec: RecordedInteraction) -> ReplayReport:
    """Recompute every state from the log and report inconsistencies.

    Replay stops at the first event that cannot be applied, since every
    later state would be meaningless.
    """
    report = ReplayReport(rec.game_id)
    g = new_game(rec.initial_world, rec.config, rec.seed, rec.spawn_tape())
    for e in rec.events:
        if e.index != len(g.log):
            report.issues.append(Issue("step_accounting", e.index, f"event index {e.index}, expected {len(g.log)}"))
        try:
            produced = apply_event(g, e)
        except OutOfDomain as exc:
            report.issues.append(Issue("step_accounting", e.index, str(exc)))
            break
        except (GameError, IllegalMove, ReplayInvalid) as exc:
            report.issues.append(Issue("illegal_event", e.index, str(exc)))
            break
        got = produced[-1]
        if e.after is not None and got.after is not None:
            diff = [k for k in _STEP_KEYS if e.after.get(k) != got.after.get(k)]
            if diff:
                report.issues.append(
                    Issue("step_accounting", e.index, f"state after event differs in {diff}: {e.after} vs {got.after}")
                )
                break
        if list(e.effects) != list(got.effects):
            report.issues.append(Issue("effect_mismatch", e.index, f"logged {list(e.effects)} vs replayed {list(got.effects)}"))
            break
    report.replayed_score = g.score
    if g.score != rec.final_score:
        report.issues.append(Issue("score_mismatch", None, f"final_score {rec.final_score}, replay scored {g.score}"))
    n_sets = sum(len(ev.effects_of("set_complete")) for ev in rec.events)
    if n_sets != rec.final_score:
        report.issues.append(Issue("score_mismatch", None, f"{n_sets} set events but final_score {rec.final_score}"))
    issued = sum(1 for ev in rec.events if isinstance(ev.action, Instruct))
    done = sum(1 for ev in rec.events if ev.actor is Agent.FOLLOWER and isinstance(ev.action, Done))
    if done > issued:
        report.issues.append(Issue("queue_discipline", None, f"{done} DONEs for {issued} instructions"))
    elif done < issued:
        report.issues.append(
            Issue("unfinished_instruction", None, f"{issued - done} of {issued} instructions never completed", "warning")
        )
    return report


# ---------------------------------------------------------------------------
# Instruction examples


@dataclass(frozen=True)
class Step:
    world: WorldState
    interaction: InteractionState
    actor: Agent
    action: GameAction | str


@dataclass
class InstructionExample:
    """One instruction with its (state, interaction, action) tuples.

    The tuples run from the follower's first action after seeing the
    instruction through the DONE that completes it; leader actions taken in
    between are included and actor-tagged.
    """

    game_id: str
    index: int
    text: str
    steps: list[Step]
    end_world: WorldState
    start_score: int
    start_turns_remaining: int
    spawns: SpawnTape = field(default_factory=list)
    event_span: tuple[int, int] | None = None
    implicit: bool = False
    provenance: dict | None = None
    # Leader actions between the previous instruction's DONE and this example.
    lead_in: list[GameAction] = field(default_factory=list)

    @property
    def start_world(self) -> WorldState:
        return self.steps[0].world

    @property
    def start_interaction(self) -> InteractionState:
        return self.steps[0].interaction

    def follower_actions(self) -> list[GameAction]:
        return [s.action for s in self.steps if s.actor is Agent.FOLLOWER and s.action != TIMEOUT]

    def leader_turns(self) -> list[list[GameAction]]:
        """Leader actions in the window, grouped into turns (each ends with DONE)."""
        turns: list[list[GameAction]] = []
        current: list[GameAction] = []
        for s in self.steps:
            if s.actor is not Agent.LEADER:
                continue
            current.append(s.action)
            if isinstance(s.action, Done):
                turns.append(current)
                current = []
        if current:
            turns.append(current)
        return turns

    def to_dict(self) -> dict:
        return {
            "version": LOG_VERSION,
            "game_id": self.game_id,
            "index": self.index,
            "text": self.text,
            "start_world": self.start_world.to_dict(),
            "start_score": self.start_score,
            "start_turns_remaining": self.start_turns_remaining,
            "steps": [
                {"actor": s.actor.value, "action": action_to_dict(s.action), "interaction": s.interaction.to_dict()}
                for s in self.steps
            ],
            "spawns": [spawn_effect(sp)["cards"] for sp in self.spawns],
            "end_world": self.end_world.to_dict(),
            "event_span": list(self.event_span) if self.event_span else None,
            "implicit": self.implicit,
            "provenance": self.provenance,
            "lead_in": [action_to_dict(a) for a in self.lead_in],
        }

    @classmethod
    def from_dict(cls, d: dict) -> InstructionExample:
        if d.get("version") != LOG_VERSION:
            raise VersionError(f"unsupported example version {d.get('version')!r}")
        spawns = [spawns_from_effect({"cards": sp}) for sp in d["spawns"]]
        world = WorldState.from_dict(d["start_world"])
        tape, rng = deque(spawns), random.Random(0)
        steps: list[Step] = []
        for raw in d["steps"]:
            actor = Agent(raw["actor"])
            action = action_from_dict(raw["action"])
            steps.append(Step(world, InteractionState.from_dict(raw["interaction"]), actor, action))
            if isinstance(action, WorldAction):
                world, _ = world_step(world, actor, action, tape, rng)
        return cls(
            game_id=d["game_id"],
            index=int(d["index"]),
            text=d["text"],
            steps=steps,
            end_world=WorldState.from_dict(d["end_world"]),
            start_score=int(d["start_score"]),
            start_turns_remaining=int(d["start_turns_remaining"]),
            spawns=spawns,
            event_span=tuple(d["event_span"]) if d.get("event_span") else None,
            implicit=bool(d.get("implicit", False)),
            provenance=d.get("provenance"),
            lead_in=[action_from_dict(a) for a in d.get("lead_in", [])],
        )


def save_examples(path: str | Path, examples: Iterable[InstructionExample]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_dict(), separators=(",", ":")) + "\n")
            n += 1
    return n


def load_examples(path: str | Path) -> Iterator[InstructionExample]:
    with open(path, encoding="utf-8") as fh:
        for lineno, d in _read_jsonl(fh):
            try:
                yield InstructionExample.from_dict(d)
            except VersionError as exc:
                raise VersionError(f"line {lineno}: {exc}") from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(lineno, f"malformed example: {exc!r}") from exc


@dataclass(frozen=True)
class Snapshot:
    """State before one logged event, recovered by replay."""

    event: Event
    world: WorldState
    interaction: InteractionState
    score: int
    turns_remaining: int


def snapshots(rec: RecordedInteraction) -> tuple[list[Snapshot], GameState]:
    """Replay ``rec`` and capture the state before every event."""
    g = new_game(rec.initial_world, rec.config, rec.seed, rec.spawn_tape())
    out = []
    for e in rec.events:
        out.append(Snapshot(e, g.world, g.interaction, g.score, g.turns_remaining))
        try:
            apply_event(g, e)
        except (GameError, IllegalMove) as exc:
            raise ReplayInvalid(f"event {e.index}: {exc}") from exc
    return out, g


def extract_examples(rec: RecordedInteraction) -> list[InstructionExample]:
    """One example per completed instruction, in completion order.

    Instructions never completed (the game ended first) are dropped.
    """
    snaps, final = snapshots(rec)
    tape = rec.spawn_tape()
    texts = rec.instructions()
    examples: list[InstructionExample] = []
    current: list[Step] | None = None
    first = 0
    start: Snapshot | None = None
    lead_in: list[GameAction] = []
    for k, snap in enumerate(snaps):
        e = snap.event
        if e.rejected:
            continue
        is_follower_move = e.actor is Agent.FOLLOWER and e.action != TIMEOUT
        if current is None:
            if not is_follower_move:
                if e.actor is Agent.LEADER:
                    lead_in.append(e.action)
                continue
            current, first, start = [], k, snap
        current.append(Step(snap.world, snap.interaction, e.actor, e.action))
        if is_follower_move and isinstance(e.action, Done):
            j = len(examples)
            end_world = snaps[k + 1].world if k + 1 < len(snaps) else final.world
            examples.append(
                InstructionExample(
                    game_id=rec.game_id,
                    index=j,
                    text=texts[j],
                    steps=current,
                    end_world=end_world,
                    start_score=start.score,
                    start_turns_remaining=start.turns_remaining,
                    spawns=tape[start.score :],
                    event_span=(rec.events[first].index, e.index),
                    lead_in=lead_in,
                )
            )
            current, lead_in = None, []
    return examples


def spawn_tape(rec: RecordedInteraction) -> SpawnTape:
    return rec.spawn_tape()


# ---------------------------------------------------------------------------
# Corpus statistics

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercase, then split into word runs and single punctuation marks."""
    return _TOKEN_RE.findall(text.lower())


STAT_ROWS = (
    "score_per_interaction",
    "instructions_per_interaction",
    "tokens_per_instruction",
    "follower_actions_per_instruction",
)


def _summary(values: list[float]) -> dict:
    if not values:
        return {}
    return {"mean": statistics.fmean(values), "median": statistics.median(values), "max": max(values)}


def dataset_stats(corpus: Iterable[RecordedInteraction]) -> dict:
    """Per-interaction and per-instruction summary statistics.

    Instructions count only when completed; follower actions count world
    actions (DONE excluded).
    """
    scores, n_instr, tokens, actions = [], [], [], []
    vocab: set[str] = set()
    n = 0
    for rec in corpus:
        n += 1
        scores.append(rec.final_score)
        examples = extract_examples(rec)
        n_instr.append(len(examples))
        for ex in examples:
            toks = tokenize(ex.text)
            tokens.append(len(toks))
            vocab.update(toks)
            actions.append(sum(1 for a in ex.follower_actions() if isinstance(a, WorldAction)))
    if n == 0:
        return {"interactions": 0, "vocabulary_size": 0, "rows": {}}
    rows = dict(zip(STAT_ROWS, (_summary(scores), _summary(n_instr), _summary(tokens), _summary(actions))))
    return {"interactions": n, "vocabulary_size": len(vocab), "rows": rows}


def stats_to_tsv(stats: dict) -> str:
    lines = ["metric\tmean\tmedian\tmax"]
    for name, row in stats["rows"].items():
        if row:
            lines.append(f"{name}\t{row['mean']:.3f}\t{row['median']:.3f}\t{row['max']}")
    lines.append(f"interactions\t{stats['interactions']}\t\t")
    lines.append(f"vocabulary_size\t{stats['vocabulary_size']}\t\t")
    return "\n".join(lines) + "\n"

