"""Interaction-level transition function, turn economy, scoring and event log.

The eight transition rules:

1. leader instruction: appended to the queue, no step cost
2. leader DONE with a non-empty queue: control to the follower with a full budget
3. leader DONE with an empty queue: the follower turn is skipped, a new leader turn begins
4. leader world action at one step left: budget drops to 0, the leader keeps control
5. follower DONE with more than one queued instruction: pop the head, same turn
6. follower DONE on the last queued instruction: queue empties, control to the leader
7. follower world action at one step left: control to the leader
8. any world action with more than one step left: budget decreases by one

Every handover (rules 2, 3, 6, 7 and follower timeouts) spends one turn of
the shared turn counter.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Union

from hexcollab.cards import (
    DEFAULT_VOCAB,
    Card,
    CardVocab,
    CompletionKind,
    check_completion,
    respawn_cards,
)
from hexcollab.hexworld import (
    Agent,
    HexCoord,
    IllegalMove,
    WorldAction,
    WorldState,
    apply_world_action,
    check_move,
)

LOG_VERSION = 1


@dataclass(frozen=True)
class Instruct:
    text: str


@dataclass(frozen=True)
class Done:
    def __repr__(self) -> str:
        return "DONE"


DONE = Done()

GameAction = Union[WorldAction, Instruct, Done]


def action_to_dict(a: GameAction | str) -> dict:
    if isinstance(a, WorldAction):
        return {"type": "move", "move": a.value}
    if isinstance(a, Instruct):
        return {"type": "instruct", "text": a.text}
    if isinstance(a, Done):
        return {"type": "done"}
    if a == TIMEOUT:
        return {"type": "timeout"}
    raise TypeError(f"not a game action: {a!r}")


def action_from_dict(d: dict) -> GameAction | str:
    kind = d["type"]
    if kind == "move":
        return WorldAction(d["move"])
    if kind == "instruct":
        return Instruct(d["text"])
    if kind == "done":
        return DONE
    if kind == "timeout":
        return TIMEOUT
    raise ValueError(f"unknown action type {kind!r}")


# Logged when a follower's turn ends by timer; not a policy action.
TIMEOUT = "TIMEOUT"


class GameError(Exception):
    pass


class OutOfDomain(GameError):
    """No transition rule covers this (state, actor, action) combination."""


class GameOver(GameError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TurnConfig:
    leader_steps: int = 5
    follower_steps: int = 10
    initial_turns: int = 12
    bonus_schedule: tuple[int, ...] = (16, 12, 8, 6, 4, 2, 1)
    leader_time_s: float | None = 45.0
    follower_time_s: float | None = 15.0
    max_turn_cap: int = 65

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.leader_steps < 1 or self.follower_steps < 1:
            raise ConfigError("step budgets must be positive")
        if self.initial_turns < 1:
            raise ConfigError("initial_turns must be positive")
        if any(b < 0 for b in self.bonus_schedule):
            raise ConfigError("bonus schedule entries must be non-negative")
        total = self.initial_turns + sum(self.bonus_schedule)
        if total > self.max_turn_cap:
            raise ConfigError(
                f"initial_turns + sum(bonus_schedule) = {total} exceeds the turn cap {self.max_turn_cap}"
            )

    def bonus(self, k: int) -> int:
        """Turns added for the k-th completed set (1-based); zero past the schedule."""
        return self.bonus_schedule[k - 1] if 1 <= k <= len(self.bonus_schedule) else 0

    def budget(self, agent: Agent) -> int:
        return self.leader_steps if agent is Agent.LEADER else self.follower_steps

    def to_dict(self) -> dict:
        return {
            "leader_steps": self.leader_steps,
            "follower_steps": self.follower_steps,
            "initial_turns": self.initial_turns,
            "bonus_schedule": list(self.bonus_schedule),
            "leader_time_s": self.leader_time_s,
            "follower_time_s": self.follower_time_s,
            "max_turn_cap": self.max_turn_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TurnConfig:
        d = dict(d)
        if "bonus_schedule" in d:
            d["bonus_schedule"] = tuple(d["bonus_schedule"])
        return cls(**d)


@dataclass(frozen=True)
class GameConfig:
    turn: TurnConfig = field(default_factory=TurnConfig)
    vocab: CardVocab = DEFAULT_VOCAB

    def to_dict(self) -> dict:
        return {"turn": self.turn.to_dict(), "vocab": self.vocab.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> GameConfig:
        return cls(TurnConfig.from_dict(d.get("turn", {})), CardVocab.from_dict(d["vocab"]) if "vocab" in d else DEFAULT_VOCAB)


@dataclass(frozen=True)
class InteractionState:
    queue: tuple[str, ...]
    turn: Agent
    steps: int

    def to_dict(self) -> dict:
        return {"queue": list(self.queue), "turn": self.turn.value, "steps": self.steps}

    @classmethod
    def from_dict(cls, d: dict) -> InteractionState:
        return cls(tuple(d["queue"]), Agent(d["turn"]), int(d["steps"]))


HANDOVER_RULES = frozenset({2, 3, 6, 7})


def classify_rule(gamma: InteractionState, actor: Agent, a: GameAction) -> int:
    """Number of the transition rule that applies, or raise ``OutOfDomain``."""
    if actor is not gamma.turn:
        raise OutOfDomain(f"{actor.value} acted during the {gamma.turn.value}'s turn")
    if actor is Agent.FOLLOWER and not gamma.queue:
        raise OutOfDomain("follower holds the turn with an empty queue")
    if isinstance(a, Instruct):
        if actor is Agent.FOLLOWER:
            raise OutOfDomain("the follower cannot issue instructions")
        return 1
    if isinstance(a, Done):
        if actor is Agent.LEADER:
            return 2 if gamma.queue else 3
        return 5 if len(gamma.queue) > 1 else 6
    if isinstance(a, WorldAction):
        if gamma.steps > 1:
            return 8
        if gamma.steps == 1:
            return 4 if actor is Agent.LEADER else 7
        raise OutOfDomain(f"{actor.value} has no steps left")
    raise OutOfDomain(f"unknown action {a!r}")


def next_interaction(gamma: InteractionState, rule: int, a: GameAction, cfg: TurnConfig) -> InteractionState:
    if rule == 1:
        return replace(gamma, queue=gamma.queue + (a.text,))
    if rule == 2:
        return InteractionState(gamma.queue, Agent.FOLLOWER, cfg.follower_steps)
    if rule == 3:
        return InteractionState(gamma.queue, Agent.LEADER, cfg.leader_steps)
    if rule == 4:
        return replace(gamma, steps=0)
    if rule == 5:
        return replace(gamma, queue=gamma.queue[1:])
    if rule == 6:
        return InteractionState((), Agent.LEADER, cfg.leader_steps)
    if rule == 7:
        return InteractionState(gamma.queue, Agent.LEADER, cfg.leader_steps)
    if rule == 8:
        return replace(gamma, steps=gamma.steps - 1)
    raise ValueError(f"no rule {rule}")


def transition(
    s: WorldState, gamma: InteractionState, actor: Agent, a: GameAction, cfg: TurnConfig | None = None
) -> tuple[WorldState, InteractionState]:
    """Apply the transition function to a world and interaction state."""
    cfg = cfg or TurnConfig()
    rule = classify_rule(gamma, actor, a)
    if isinstance(a, WorldAction):
        s, effect = apply_world_action(s, actor, a)
        if effect.rejected:
            raise IllegalMove(f"{actor.value} {a.value}: {effect.reason}")
    return s, next_interaction(gamma, rule, a, cfg)


@dataclass(frozen=True)
class Event:
    index: int
    actor: Agent
    action: GameAction | str
    effects: tuple[dict, ...] = ()
    after: dict | None = None

    @property
    def rejected(self) -> bool:
        return any(e["type"] == "rejected" for e in self.effects)

    def effects_of(self, kind: str) -> list[dict]:
        return [e for e in self.effects if e["type"] == kind]

    def to_dict(self) -> dict:
        d = {
            "index": self.index,
            "actor": self.actor.value,
            "action": action_to_dict(self.action),
            "effects": list(self.effects),
        }
        if self.after is not None:
            d["after"] = self.after
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Event:
        return cls(
            index=int(d["index"]),
            actor=Agent(d["actor"]),
            action=action_from_dict(d["action"]),
            effects=tuple(d.get("effects", ())),
            after=d.get("after"),
        )


def spawn_effect(spawned: Iterable[tuple[HexCoord, Card]]) -> dict:
    return {"type": "spawn", "cards": [{"hex": list(h), **c.to_dict()} for h, c in spawned]}


def spawns_from_effect(effect: dict) -> list[tuple[HexCoord, Card]]:
    return [(HexCoord(*c["hex"]), Card.from_dict(c)) for c in effect["cards"]]


@dataclass
class GameState:
    """Mutable single-owner game; change it only through ``step``/``expire_turn``."""

    world: WorldState
    interaction: InteractionState
    config: GameConfig = field(default_factory=GameConfig)
    score: int = 0
    sets_completed: int = 0
    turns_remaining: int = 12
    over: bool = False
    seed: int | None = None
    rng: random.Random = field(default_factory=random.Random)
    log: list[Event] = field(default_factory=list)
    spawn_tape: deque | None = None
    turns_taken: int = 0
    initial_world: WorldState | None = None

    def snapshot(self) -> dict:
        return {
            "turn": self.interaction.turn.value,
            "steps": self.interaction.steps,
            "queue": len(self.interaction.queue),
            "score": self.score,
            "turns_remaining": self.turns_remaining,
            "over": self.over,
        }

    def fingerprint(self) -> tuple:
        """Everything that defines the state, for bit-identical comparisons."""
        return (
            self.world,
            self.interaction,
            self.score,
            self.sets_completed,
            self.turns_remaining,
            self.over,
            self.turns_taken,
        )


def new_game(
    world: WorldState,
    config: GameConfig | None = None,
    seed: int | None = 0,
    spawn_tape: Iterable[list[tuple[HexCoord, Card]]] | None = None,
) -> GameState:
    """Fresh game: the leader moves first with an empty queue."""
    config = config or GameConfig()
    world.validate()
    return GameState(
        world=world,
        interaction=InteractionState((), Agent.LEADER, config.turn.leader_steps),
        config=config,
        turns_remaining=config.turn.initial_turns,
        seed=seed,
        rng=random.Random(seed),
        spawn_tape=deque(spawn_tape) if spawn_tape is not None else None,
        initial_world=world,
    )


def _next_spawn(g: GameState, cleared: WorldState) -> list[tuple[HexCoord, Card]] | None:
    if not g.spawn_tape:
        return None
    spawned = g.spawn_tape.popleft()
    for h, _ in spawned:
        if not cleared.passable(h) or h in cleared.cards:
            return None
    return spawned


def _complete_set(g: GameState, world: WorldState, hexes: tuple, effects: list[dict]) -> WorldState:
    g.score += 1
    g.sets_completed += 1
    effects.append({"type": "set_complete", "hexes": [list(h) for h in hexes], "score": g.score})
    cards = {h: c for h, c in world.cards.items() if h not in hexes}
    cleared = replace(world, cards=cards)
    spawned = _next_spawn(g, cleared)
    if spawned is None:
        world, spawned = respawn_cards(world, hexes, g.rng, g.config.vocab)
    else:
        cards = dict(cards)
        cards.update({h: replace(c, selected=False) for h, c in spawned})
        world = replace(world, cards=cards)
    effects.append(spawn_effect(spawned))
    bonus = g.config.turn.bonus(g.sets_completed)
    if bonus:
        g.turns_remaining += bonus
        effects.append({"type": "bonus", "turns": bonus})
    return world


def _handover(g: GameState, effects: list[dict]) -> None:
    g.turns_remaining -= 1
    g.turns_taken += 1
    effects.append(
        {
            "type": "turn_end",
            "to": g.interaction.turn.value,
            "steps": g.interaction.steps,
            "turns_remaining": g.turns_remaining,
        }
    )
    if g.turns_remaining <= 0:
        g.turns_remaining = 0
        g.over = True
        effects.append({"type": "game_over", "score": g.score})


def _append(g: GameState, actor: Agent, action, effects: list[dict]) -> Event:
    event = Event(len(g.log), actor, action, tuple(effects), g.snapshot())
    g.log.append(event)
    return event


def step(g: GameState, actor: Agent, a: GameAction) -> tuple[GameState, list[Event]]:
    """Apply one action by ``actor``; mutates and returns ``g`` with the new events.

    Illegal world moves are logged as a rejection event (costing nothing)
    and then raised as ``IllegalMove``.
    """
    if g.over:
        raise GameOver("the game is over")
    rule = classify_rule(g.interaction, actor, a)
    effects: list[dict] = []
    world = g.world
    if isinstance(a, WorldAction):
        world, effect = apply_world_action(world, actor, a)
        if effect.rejected:
            event = _append(g, actor, a, [{"type": "rejected", "reason": effect.reason}])
            raise IllegalMove(f"{actor.value} {a.value}: {effect.reason} (event {event.index})")
        if effect.toggled is not None:
            effects.append({"type": "card_toggle", "hex": list(effect.toggled), "selected": effect.selected})
            outcome = check_completion(world)
            if outcome.kind is CompletionKind.VALID_SET:
                world = _complete_set(g, world, outcome.hexes, effects)
    g.world = world
    g.interaction = next_interaction(g.interaction, rule, a, g.config.turn)
    if rule in HANDOVER_RULES:
        _handover(g, effects)
    return g, [_append(g, actor, a, effects)]


def expire_turn(g: GameState) -> tuple[GameState, list[Event]]:
    """Timer expiry. The leader's turn ends as a forced DONE; the follower's
    turn passes to the leader with the queue untouched."""
    if g.over:
        raise GameOver("the game is over")
    if g.interaction.turn is Agent.LEADER:
        g, events = step(g, Agent.LEADER, DONE)
        return g, events
    effects: list[dict] = [{"type": "timeout"}]
    g.interaction = InteractionState(g.interaction.queue, Agent.LEADER, g.config.turn.leader_steps)
    _handover(g, effects)
    return g, [_append(g, Agent.FOLLOWER, TIMEOUT, effects)]


def legal_actions(g: GameState, leader_done_requires_queue: bool = False) -> set:
    """Actions the current turn-taker may take without error.

    ``Instruct`` (the class) stands for "any instruction". With
    ``leader_done_requires_queue`` the leader cannot end the turn while the
    queue is empty, mirroring the live client.
    """
    if g.over:
        return set()
    gamma = g.interaction
    actor = gamma.turn
    if actor is Agent.FOLLOWER and not gamma.queue:
        return set()
    out: set = set()
    if gamma.steps > 0:
        for a in WorldAction:
            if check_move(g.world, actor, a) is None:
                out.add(a)
    if actor is Agent.LEADER:
        out.add(Instruct)
        if gamma.queue or not leader_done_requires_queue:
            out.add(DONE)
    else:
        out.add(DONE)
    return out


def world_step(
    world: WorldState,
    actor: Agent,
    a: WorldAction,
    tape: deque,
    rng: random.Random,
    vocab: CardVocab = DEFAULT_VOCAB,
) -> tuple[WorldState, bool]:
    """One world action with set completion; respawns come from ``tape`` first.

    Returns the new world and whether a set was completed. Raises
    ``IllegalMove`` if the action is rejected.
    """
    world, effect = apply_world_action(world, actor, a)
    if effect.rejected:
        raise IllegalMove(f"{actor.value} {a.value}: {effect.reason}")
    if effect.toggled is None:
        return world, False
    outcome = check_completion(world)
    if outcome.kind is not CompletionKind.VALID_SET:
        return world, False
    cards = {h: c for h, c in world.cards.items() if h not in outcome.hexes}
    cleared = replace(world, cards=cards)
    spawned = tape.popleft() if tape else None
    if spawned is not None and all(cleared.passable(h) and h not in cards for h, _ in spawned):
        cards.update({h: replace(c, selected=False) for h, c in spawned})
        return replace(world, cards=cards), True
    return respawn_cards(world, outcome.hexes, rng, vocab)[0], True


def simulate_world(
    world: WorldState,
    moves: Iterable[tuple[Agent, WorldAction]],
    spawns: Iterable[list[tuple[HexCoord, Card]]] = (),
    vocab: CardVocab = DEFAULT_VOCAB,
    seed: int = 0,
) -> WorldState:
    """Apply world actions only, with set completion and tape respawns.

    Raises ``IllegalMove`` on the first rejected action. Used to check
    synthesized action sequences without the turn machinery.
    """
    tape = deque(spawns)
    rng = random.Random(seed)
    for actor, a in moves:
        world, _ = world_step(world, actor, a, tape, rng, vocab)
    return world
