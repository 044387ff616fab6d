"""Scripted leader and headless game rollouts for synthetic corpora."""

from __future__ import annotations

import itertools
import logging
import random
from typing import Iterator

from hexcollab.cards import CompletionKind, check_completion, is_valid_set
from hexcollab.engine import (
    DONE,
    GameAction,
    GameConfig,
    GameState,
    Instruct,
    expire_turn,
    new_game,
    step,
)
from hexcollab.grammar import describe_card
from hexcollab.hexworld import Agent, HexCoord, IllegalMove, WorldAction, WorldState, check_move, hex_distance
from hexcollab.mapgen import MapConfig, generate_map
from hexcollab.planner import Goal, Unreachable, end_pose, agent_path, plan_card_tour
from hexcollab.policies import FollowerPolicy, LogView, Observation, make_policy

log = logging.getLogger(__name__)

IDLE_INSTRUCTIONS = ("wait there for now", "hold on a moment", "stay where you are")
MOVE_INSTRUCTIONS = ("turn left", "turn right", "turn around", "go forward one", "go forward two")
MAX_EVENTS = 20_000
MAX_REJECTIONS = 3
# Longest single-card leg the leader will hand to the follower; leaves slack
# under the 25-action evaluation cap for replanning around the leader.
FOLLOWER_REACH = 18


class ScriptedLeader:
    """Greedy set planner that speaks the template grammar.

    Each turn it picks the cheapest valid set consistent with the current
    selection, walks to one of its cards when that fits in the step budget,
    and delegates the rest to the follower (deselecting stray cards first).
    """

    name = "scripted"

    def __init__(self, seed: int = 0, combine_rate: float = 0.5, idle_rate: float = 0.1, move_rate: float = 0.15):
        self.seed = seed
        self.combine_rate = combine_rate
        self.idle_rate = idle_rate
        self.move_rate = move_rate
        self.reset()

    def reset(self, g: GameState | None = None) -> None:
        self.rng = random.Random(self.seed)
        self._plan: list[GameAction] = []
        self._target: tuple | None = None
        self._stale = 0
        self._banned: set[frozenset] = set()
        self._progress: tuple | None = None

    def decide(self, g: GameState) -> GameAction:
        if not self._plan:
            self._plan = self._plan_turn(g)
        a = self._plan.pop(0)
        if isinstance(a, WorldAction) and (g.interaction.steps == 0 or check_move(g.world, Agent.LEADER, a)):
            self._plan = [DONE]
            return self._plan.pop(0)
        return a

    def _choose_target(self, world: WorldState) -> tuple[tuple[HexCoord, ...], list[HexCoord]] | None:
        cards = world.cards
        selected = [h for h, c in cards.items() if c.selected]
        consistent = check_completion(world).kind is CompletionKind.NONE
        if self._target is not None:
            hexes, identities = self._target
            if all(h in cards and cards[h].identity == i for h, i in zip(hexes, identities)) and (
                not consistent or set(selected) <= set(hexes)
            ):
                return hexes, [h for h in selected if h not in hexes]
        leader, follower = world.leader.position, world.follower.position
        best = None
        for triple in itertools.combinations(sorted(cards), 3):
            if frozenset(triple) in self._banned:
                continue
            if not is_valid_set(*(cards[h] for h in triple)):
                continue
            if consistent and not set(selected) <= set(triple):
                continue
            cost = sum(
                min(hex_distance(leader, h), hex_distance(follower, h)) for h in triple if not cards[h].selected
            )
            if best is None or cost < best[0]:
                best = (cost, triple)
        if best is None:
            if self._banned:
                self._banned.clear()
                return self._choose_target(world)
            return None
        hexes = best[1]
        self._target = (hexes, [cards[h].identity for h in hexes])
        return hexes, [h for h in selected if h not in hexes]

    def _plan_turn(self, g: GameState) -> list[GameAction]:
        world = g.world
        chosen = self._choose_target(world)
        if chosen is None:
            return [DONE]
        target, strays = chosen
        progress = (world.card_config(), world.leader, world.follower)
        self._stale = self._stale + 1 if progress == self._progress else 0
        self._progress = progress
        if self._stale > 4:
            # No progress for several turns: give up on this set.
            self._banned.add(frozenset(target))
            self._target = None
            self._stale = 0
        unselected = [h for h in target if not world.cards[h].selected]
        leader_card, leader_moves = None, []
        if g.interaction.steps > 0:
            for h in sorted(unselected, key=lambda c: hex_distance(world.leader.position, c)):
                path = agent_path(world, Agent.LEADER, Goal.position(h), forbidden=set(world.cards) - {h})
                if path is not None and len(path) <= g.interaction.steps:
                    leader_card, leader_moves = h, path
                    break
        delegated = self._delegable(world, [h for h in unselected if h != leader_card])
        if leader_card is None and g.interaction.steps > 0:
            # Walk toward a card the follower cannot reach cheaply; never end on a card.
            far = [h for h in unselected if h not in delegated]
            for h in sorted(far, key=lambda c: hex_distance(world.leader.position, c)):
                path = agent_path(world, Agent.LEADER, Goal.position(h), forbidden=set(world.cards) - {h})
                if path:
                    leader_moves = path[: min(len(path) - 1, g.interaction.steps)]
                    break
        texts: list[str] = []
        if not g.interaction.queue:
            if strays:
                texts.append("deselect " + " and ".join(describe_card(world.cards[h]) for h in strays))
            if delegated:
                refs = [describe_card(world.cards[h]) for h in delegated]
                if len(refs) > 1 and self.rng.random() < self.combine_rate and self._tour_cost(world, delegated) <= FOLLOWER_REACH:
                    texts.append("get " + " and ".join(refs))
                else:
                    texts.extend(f"{self.rng.choice(('get', 'pick up', 'grab'))} {r}" for r in refs)
            if texts and self.rng.random() < self.move_rate:
                texts.append(self.rng.choice(MOVE_INSTRUCTIONS))
            if texts and self.rng.random() < self.idle_rate:
                texts.append(self.rng.choice(IDLE_INSTRUCTIONS))
        return [Instruct(t) for t in texts] + list(leader_moves) + [DONE]

    @staticmethod
    def _tour_cost(world: WorldState, cards: list[HexCoord]) -> float:
        try:
            return len(plan_card_tour(world, world.follower, cards))
        except Unreachable:
            return float("inf")

    def _delegable(self, world: WorldState, cards: list[HexCoord]) -> list[HexCoord]:
        """Cards the follower can visit in turn, each leg within ``FOLLOWER_REACH`` actions."""
        out: list[HexCoord] = []
        pose = world.follower
        remaining = list(cards)
        while remaining:
            legs = []
            for h in remaining:
                try:
                    legs.append((plan_card_tour(world, pose, [h], protected=out), h))
                except Unreachable:
                    continue
            if not legs:
                break
            path, h = min(legs, key=lambda x: len(x[0]))
            if len(path) > FOLLOWER_REACH:
                break
            out.append(h)
            remaining.remove(h)
            pose = end_pose(pose, path)
        return out


def play(
    g: GameState,
    leader: ScriptedLeader,
    follower: FollowerPolicy,
    max_events: int = MAX_EVENTS,
) -> GameState:
    """Run ``g`` to completion with a leader and a follower policy."""
    leader.reset(g)
    follower.reset(None)
    rejections = 0
    while not g.over and len(g.log) < max_events:
        actor = g.interaction.turn
        if actor is Agent.LEADER:
            a = leader.decide(g)
        else:
            a = follower.decide(Observation(g.world, g.interaction, LogView(g.log)))
        try:
            step(g, actor, a)
            rejections = 0
        except IllegalMove:
            rejections += 1
            if rejections >= MAX_REJECTIONS:
                expire_turn(g)
                rejections = 0
    return g


def play_game(
    seed: int,
    map_config: MapConfig | None = None,
    config: GameConfig | None = None,
    follower: str | FollowerPolicy = "template",
    leader_seed: int | None = None,
) -> GameState:
    map_config = map_config or MapConfig(seed=seed)
    if map_config.seed != seed:
        map_config = MapConfig(**{**map_config.to_dict(), "seed": seed})
    world = generate_map(map_config, (config or GameConfig()).vocab)
    g = new_game(world, config, seed=seed)
    policy = make_policy(follower, seed) if isinstance(follower, str) else follower
    return play(g, ScriptedLeader(seed if leader_seed is None else leader_seed), policy)


def generate_games(
    n: int,
    seed: int = 0,
    map_config: MapConfig | None = None,
    config: GameConfig | None = None,
    follower: str = "template",
) -> Iterator[tuple[MapConfig, GameState]]:
    """Yield ``n`` finished games with seeds ``seed, seed + 1, ...``."""
    base = map_config or MapConfig()
    for k in range(n):
        mc = MapConfig(**{**base.to_dict(), "seed": seed + k})
        yield mc, play_game(seed + k, mc, config, follower)
