"""Shortest-path planning over (position, heading) poses.

All moves cost one step, so plain breadth-first search is optimal. Ties are
broken by expanding actions in the fixed order MF < MB < RL < RR.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from hexcollab import _kernels
from hexcollab.hexworld import (
    ACTION_ORDER,
    Agent,
    AgentPose,
    HexCoord,
    WorldAction,
    WorldState,
    apply_world_action,
    move_pose,
    neighbor,
)


@dataclass(frozen=True)
class Goal:
    """Goal predicate: an exact pose, or any heading at one of ``positions``."""

    positions: frozenset[HexCoord]
    heading: int | None = None

    @classmethod
    def pose(cls, pose: AgentPose) -> Goal:
        return cls(frozenset([pose.position]), pose.heading)

    @classmethod
    def position(cls, *hexes: HexCoord) -> Goal:
        return cls(frozenset(hexes))

    def satisfied(self, pose: AgentPose) -> bool:
        return pose.position in self.positions and (self.heading is None or pose.heading == self.heading)


@dataclass(frozen=True)
class PathQuery:
    world: WorldState
    start: AgentPose
    goal: Goal
    forbidden: frozenset[HexCoord] = field(default_factory=frozenset)
    # Hexes blocked besides terrain/props; defaults to the other agent's hex.
    blockers: frozenset[HexCoord] = field(default_factory=frozenset)


def passable_mask(world: WorldState, blocked: Iterable[HexCoord]) -> bytearray:
    w = world.width
    mask = bytearray(w * world.height)
    for r in range(world.height):
        base = r * w
        for q in range(w):
            if (q, r) not in world.props and (q, r) not in world.terrain:
                mask[base + q] = 1
    for q, r in blocked:
        if 0 <= q < w and 0 <= r < world.height:
            mask[r * w + q] = 0
    return mask


def _goal_mask(world: WorldState, goal: Goal) -> bytearray:
    mask = bytearray(world.width * world.height * 6)
    for q, r in goal.positions:
        if not world.on_map(HexCoord(q, r)):
            continue
        base = (r * world.width + q) * 6
        if goal.heading is None:
            mask[base : base + 6] = b"\x01" * 6
        else:
            mask[base + goal.heading % 6] = 1
    return mask


def shortest_path(q: PathQuery) -> list[WorldAction] | None:
    """Minimum-length legal action sequence to a goal pose, or ``None`` if unreachable.

    The search never enters a hex in ``q.forbidden`` or ``q.blockers``; a
    forbidden start hex may be left but is never re-entered.
    """
    world = q.world
    mask = passable_mask(world, q.forbidden | q.blockers)
    sq, sr = q.start.position
    codes = _kernels.bfs_pose(
        world.width, world.height, bytes(mask), sq, sr, q.start.heading % 6, bytes(_goal_mask(world, q.goal))
    )
    if codes is None:
        return None
    return [ACTION_ORDER[c] for c in codes]


def agent_path(
    world: WorldState,
    agent: Agent,
    goal: Goal,
    forbidden: Iterable[HexCoord] = (),
    start: AgentPose | None = None,
) -> list[WorldAction] | None:
    """Shortest path for ``agent``, treating the other agent's hex as blocked."""
    other = world.pose(agent.other).position
    return shortest_path(
        PathQuery(
            world,
            start if start is not None else world.pose(agent),
            goal,
            frozenset(forbidden),
            frozenset([other]),
        )
    )


class Unreachable(Exception):
    pass


def simulate_path(world: WorldState, agent: Agent, actions: Iterable[WorldAction]) -> WorldState:
    """Apply ``actions`` with the world transition; raise if any is rejected."""
    for a in actions:
        world, effect = apply_world_action(world, agent, a)
        if effect.rejected:
            raise Unreachable(f"{a.value} rejected ({effect.reason})")
    return world


def plan_card_tour(
    world: WorldState,
    start: AgentPose,
    targets: Iterable[HexCoord],
    protected: Iterable[HexCoord] = (),
    agent: Agent = Agent.FOLLOWER,
) -> list[WorldAction]:
    """Visit every target card hex once, nearest target first.

    Each leg is a shortest path that enters no card hex except its own
    target. Raises ``Unreachable`` if some target cannot be reached.
    """
    remaining = set(targets)
    protected = set(protected)
    if remaining & protected:
        raise ValueError("targets and protected hexes overlap")
    card_hexes = set(world.cards)
    blockers = frozenset([world.pose(agent.other).position])
    pose = start
    plan: list[WorldAction] = []
    visited: set[HexCoord] = set()
    while remaining:
        best: tuple[int, HexCoord, list[WorldAction]] | None = None
        for target in sorted(remaining):
            forbidden = frozenset((card_hexes | protected | visited) - {target})
            path = _leg(world, pose, target, forbidden, blockers)
            if path is None:
                continue
            if best is None or len(path) < best[0]:
                best = (len(path), target, path)
        if best is None:
            raise Unreachable(f"cannot reach {sorted(remaining)}")
        _, target, path = best
        plan.extend(path)
        pose = end_pose(pose, path)
        remaining.discard(target)
        visited.add(target)
    return plan


def _leg(
    world: WorldState, pose: AgentPose, target: HexCoord, forbidden: frozenset, blockers: frozenset
) -> list[WorldAction] | None:
    if pose.position != target:
        return shortest_path(PathQuery(world, pose, Goal.position(target), forbidden, blockers))
    # Already on the target: step off to a free neighbor, then come back.
    best = None
    for h in range(6):
        n = neighbor(target, h)
        if not world.passable(n) or n in forbidden or n in blockers:
            continue
        out = shortest_path(PathQuery(world, pose, Goal.position(n), forbidden | {target}, blockers))
        if out is None:
            continue
        back = shortest_path(PathQuery(world, end_pose(pose, out), Goal.position(target), forbidden, blockers))
        if back is not None and (best is None or len(out) + len(back) < len(best)):
            best = out + back
    return best


def end_pose(pose: AgentPose, path: Iterable[WorldAction]) -> AgentPose:
    for a in path:
        pose = move_pose(pose, a)
    return pose
