"""Follower decision interface and non-neural baselines."""

from __future__ import annotations

import random
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Callable

from hexcollab.cards import DEFAULT_VOCAB, CardVocab
from hexcollab.engine import DONE, Done, Event, GameAction, InteractionState
from hexcollab.grammar import CardTargets, Move, parse_instruction
from hexcollab.hexworld import Agent, HexCoord, WorldAction, WorldState, check_move, move_pose
from hexcollab.planner import Unreachable, plan_card_tour


class DesyncError(Exception):
    """A recorded action is illegal in the live state: the replay harness is misaligned."""


class LogView(Sequence):
    """Read-only view of an event log."""

    def __init__(self, log: list[Event]):
        self._log = log

    def __getitem__(self, i):
        return self._log[i]

    def __len__(self) -> int:
        return len(self._log)


@dataclass(frozen=True)
class Observation:
    world: WorldState
    interaction: InteractionState
    history: Sequence = ()


@dataclass
class Episode:
    """What a policy is told when an evaluation episode starts.

    ``follower_actions`` is the gold follower action stream for the episode
    window; only oracle baselines look at it.
    """

    follower_actions: list[GameAction] | None = None
    label: str = ""


class FollowerPolicy:
    name = "policy"

    def reset(self, episode: Episode | None = None) -> None:
        pass

    def decide(self, obs: Observation) -> GameAction:
        raise NotImplementedError


class StaticOracle(FollowerPolicy):
    """Replays recorded follower actions verbatim, then DONE."""

    name = "static-oracle"

    def __init__(self, actions: list[GameAction] | None = None):
        self._fixed = list(actions) if actions is not None else None
        self._actions: list[GameAction] = list(self._fixed or [])
        self._pos = 0

    def reset(self, episode: Episode | None = None) -> None:
        if self._fixed is not None:
            self._actions = list(self._fixed)
        elif episode is not None and episode.follower_actions is not None:
            self._actions = list(episode.follower_actions)
        else:
            self._actions = []
        self._pos = 0

    def decide(self, obs: Observation) -> GameAction:
        if self._pos >= len(self._actions):
            return DONE
        a = self._actions[self._pos]
        self._pos += 1
        if isinstance(a, WorldAction):
            reason = check_move(obs.world, Agent.FOLLOWER, a)
            if reason is not None:
                raise DesyncError(f"recorded action #{self._pos - 1} {a.value} is illegal now ({reason})")
        return a


def static_oracle(recorded) -> StaticOracle:
    """Oracle bound to one recorded example (anything with ``follower_actions()``)."""
    return StaticOracle(recorded.follower_actions())


def drop_last_moves(actions: list[GameAction]) -> list[GameAction]:
    """Remove the world action immediately before each DONE, when there is one."""
    out: list[GameAction] = []
    for a in actions:
        if isinstance(a, Done) and out and isinstance(out[-1], WorldAction):
            out.pop()
        out.append(a)
    return out


class StopEarlyOracle(StaticOracle):
    """Gold replay that stops one step short of every instruction."""

    name = "stop-early"

    def reset(self, episode: Episode | None = None) -> None:
        super().reset(episode)
        self._actions = drop_last_moves(self._actions)

    def decide(self, obs: Observation) -> GameAction:
        try:
            return super().decide(obs)
        except DesyncError:
            return DONE


class RandomPolicy(FollowerPolicy):
    """Uniform over legal world actions and DONE; DONE is forced at one step left."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def reset(self, episode: Episode | None = None) -> None:
        self.rng = random.Random(self.seed)

    def decide(self, obs: Observation) -> GameAction:
        if obs.interaction.steps <= 1:
            return DONE
        options: list[GameAction] = [a for a in WorldAction if check_move(obs.world, Agent.FOLLOWER, a) is None]
        options.append(DONE)
        return self.rng.choice(options)


def _macro_actions(move: Move) -> list[WorldAction]:
    if move.pattern == "turn_around":
        return [WorldAction.RL] * 3
    if move.pattern == "turn_left":
        return [WorldAction.RL]
    if move.pattern == "turn_right":
        return [WorldAction.RR]
    return [WorldAction.MF] * move.n


@dataclass
class _Plan:
    actions: list[WorldAction]
    targets: dict[HexCoord, tuple] = field(default_factory=dict)  # hex -> (identity, wanted selected flag)
    cards_seen: frozenset = frozenset()
    leader_seen: HexCoord | None = None


class TemplateFollower(FollowerPolicy):
    """Parses the head instruction with the template grammar and walks the card tour.

    Ambiguous card references resolve to the nearest matching card by
    pose-graph cost. Unmatched or unparsable instructions get an immediate
    DONE. The plan is recomputed if the board or the leader changed since it
    was made, or if the next action has become illegal.
    """

    name = "template"

    def __init__(self, vocab: CardVocab = DEFAULT_VOCAB):
        self.vocab = vocab
        self._plan: _Plan | None = None

    def reset(self, episode: Episode | None = None) -> None:
        self._plan = None

    def decide(self, obs: Observation) -> GameAction:
        world = obs.world
        if self._plan is None:
            self._plan = self._make_plan(world, obs.interaction.queue[0])
        plan = self._plan
        if plan.targets and (world.card_config() != plan.cards_seen or world.leader.position != plan.leader_seen):
            self._replan(world, plan)
        if plan.actions and check_move(world, Agent.FOLLOWER, plan.actions[0]) is not None:
            if plan.targets:
                self._replan(world, plan)
            else:
                plan.actions = []
        if (
            plan.actions
            and not plan.targets
            and plan.actions[0] in (WorldAction.MF, WorldAction.MB)
            and move_pose(world.follower, plan.actions[0]).position in world.cards
        ):
            # Movement macros never step onto cards.
            plan.actions = []
        if not plan.actions or check_move(world, Agent.FOLLOWER, plan.actions[0]) is not None:
            self._plan = None
            return DONE
        return plan.actions.pop(0)

    def _make_plan(self, world: WorldState, text: str) -> _Plan:
        directive = parse_instruction(text, self.vocab)
        if isinstance(directive, Move):
            return _Plan(_macro_actions(directive))
        if not isinstance(directive, CardTargets):
            return _Plan([])
        want_selected = directive.mode == "select"
        chosen: dict[HexCoord, tuple] = {}
        for f in directive.filters:
            candidates = [
                h
                for h, c in sorted(world.cards.items())
                if f.matches(c) and c.selected != want_selected and h not in chosen
            ]
            if not candidates:
                continue
            h = min(candidates, key=lambda c: self._cost(world, c))
            chosen[h] = (world.cards[h].identity, want_selected)
        plan = _Plan([], chosen)
        self._replan(world, plan)
        return plan

    def _cost(self, world: WorldState, target: HexCoord) -> float:
        try:
            return len(plan_card_tour(world, world.follower, [target]))
        except Unreachable:
            return float("inf")

    def _replan(self, world: WorldState, plan: _Plan) -> None:
        remaining = [
            h
            for h, (identity, wanted) in plan.targets.items()
            if h in world.cards and world.cards[h].identity == identity and world.cards[h].selected != wanted
        ]
        try:
            plan.actions = plan_card_tour(world, world.follower, remaining)
        except Unreachable:
            plan.actions = []
        plan.cards_seen = world.card_config()
        plan.leader_seen = world.leader.position


POLICIES: dict[str, Callable[..., FollowerPolicy]] = {
    "template": TemplateFollower,
    "random": RandomPolicy,
    "static-oracle": StaticOracle,
    "stop-early": StopEarlyOracle,
}


def make_policy(name: str, seed: int = 0) -> FollowerPolicy:
    if name not in POLICIES:
        raise KeyError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}")
    if name == "random":
        return RandomPolicy(seed)
    return POLICIES[name]()


def template_follower() -> TemplateFollower:
    return TemplateFollower()


def random_policy(seed: int = 0) -> RandomPolicy:
    return RandomPolicy(seed)
