"""Procedural generation of playable worlds."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from hexcollab.cards import DEFAULT_VOCAB, CardVocab, cards_have_valid_set, random_card
from hexcollab.hexworld import (
    DEFAULT_HEIGHT,
    DEFAULT_PROP_COLORS,
    DEFAULT_WIDTH,
    AgentPose,
    HexCoord,
    Prop,
    PropKind,
    WorldState,
    neighbor,
)

MAX_MAP_RETRIES = 200
MAX_CARD_RETRIES = 1000


class GenerationFailed(Exception):
    pass


@dataclass(frozen=True)
class MapConfig:
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    obstacle_density: float = 0.12
    initial_cards: int = 21
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ValueError("map must be at least 2x2")
        if not 0 <= self.obstacle_density < 1:
            raise ValueError("obstacle_density must be in [0, 1)")
        if self.initial_cards < 3:
            raise ValueError("initial_cards must be at least 3")

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "obstacle_density": self.obstacle_density,
            "initial_cards": self.initial_cards,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MapConfig:
        return cls(**d)


def passable_component(world: WorldState, start: HexCoord) -> set[HexCoord]:
    """Flood fill of passable hexes reachable from ``start``."""
    seen = {start}
    todo = deque([start])
    while todo:
        c = todo.popleft()
        for h in range(6):
            n = neighbor(c, h)
            if n not in seen and world.passable(n):
                seen.add(n)
                todo.append(n)
    return seen


def is_connected(world: WorldState) -> bool:
    cells = [h for h in world.all_hexes() if world.passable(h)]
    if not cells:
        return False
    return len(passable_component(world, cells[0])) == len(cells)


def _random_prop(rng: random.Random) -> Prop:
    kind = rng.choice(list(PropKind))
    color = rng.choice(DEFAULT_PROP_COLORS) if kind is PropKind.HUT else None
    return Prop(kind, color)


def generate_map(cfg: MapConfig, vocab: CardVocab = DEFAULT_VOCAB) -> WorldState:
    """Deterministic world for ``cfg.seed`` with a connected passable region,
    two agents on distinct hexes and a card board holding a valid set."""
    rng = random.Random(cfg.seed)
    hexes = [HexCoord(q, r) for r in range(cfg.height) for q in range(cfg.width)]
    n_props = round(cfg.obstacle_density * len(hexes))
    if len(hexes) - n_props < cfg.initial_cards + 2:
        raise GenerationFailed("not enough free hexes for the cards and both agents")
    for _ in range(MAX_MAP_RETRIES):
        props = {h: _random_prop(rng) for h in rng.sample(hexes, n_props)}
        free = [h for h in hexes if h not in props]
        shell = WorldState(
            cfg.width, cfg.height, props, {}, AgentPose(free[0], 0), AgentPose(free[-1], 0)
        )
        if not is_connected(shell):
            continue
        spots = rng.sample(free, cfg.initial_cards + 2)
        leader = AgentPose(spots[0], rng.randrange(6))
        follower = AgentPose(spots[1], rng.randrange(6))
        card_hexes = spots[2:]
        for _ in range(MAX_CARD_RETRIES):
            cards = [random_card(rng, vocab) for _ in card_hexes]
            if cards_have_valid_set(cards):
                break
        else:
            raise GenerationFailed("could not draw a card board with a valid set")
        world = WorldState(cfg.width, cfg.height, props, dict(zip(card_hexes, cards)), leader, follower)
        world.validate()
        return world
    raise GenerationFailed(f"no connected map after {MAX_MAP_RETRIES} attempts")
