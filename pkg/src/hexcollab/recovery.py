"""Recovery examples: teach the follower to finish an instruction from a
slightly wrong starting pose, and mix them into the training data.

When a policy ends instruction j with the right cards but the wrong pose, a
recovery example for instruction j+1 starts from that pose. The leader first
catches up on recorded actions it has not yet executed (as one synthetic
turn), the follower walks a shortest path to where gold was just before its
first card toggle, and then the gold actions continue unchanged.
"""

from __future__ import annotations

import enum
import logging
import random
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from hexcollab.dataio import InstructionExample, SpawnTape, Step
from hexcollab.engine import DONE, Done, GameAction, GameConfig, GameState, InteractionState, Instruct, step
from hexcollab.evalkit import LeaderReplay, game_from, leader_turns, rollout, run_instruction
from hexcollab.hexworld import Agent, AgentPose, IllegalMove, WorldAction, WorldState, apply_world_action, hex_distance
from hexcollab.planner import Goal, agent_path
from hexcollab.policies import DesyncError, FollowerPolicy, StaticOracle

log = logging.getLogger(__name__)

IMPLICIT_DISTANCE = 2
# Recovery rollouts replay fixed action lists, so the evaluation cap does not apply.
UNCAPPED = 10_000


class ErrorClass(str, enum.Enum):
    CARD_ERROR = "card_error"
    POSE_ERROR = "pose_error"
    NONE = "none"


def classify_end_state(result: WorldState, gold: WorldState) -> ErrorClass:
    """Compare where an instruction ended against gold.

    Any card difference is a card error. Otherwise a different follower
    position or heading is a pose error.
    """
    if result.cards != gold.cards:
        return ErrorClass.CARD_ERROR
    if result.follower != gold.follower:
        return ErrorClass.POSE_ERROR
    return ErrorClass.NONE


def is_implicit(start: AgentPose, gold_start: AgentPose) -> bool:
    return hex_distance(start.position, gold_start.position) > IMPLICIT_DISTANCE


@dataclass(frozen=True)
class Skip:
    reason: str
    detail: str = ""


def _toggle_step(ex: InstructionExample) -> int:
    """Index in ``ex.steps`` of the first follower move that toggles a card, else of the final DONE."""
    for k, s in enumerate(ex.steps):
        if s.actor is Agent.FOLLOWER and isinstance(s.action, WorldAction):
            _, effect = apply_world_action(s.world, Agent.FOLLOWER, s.action)
            if effect.toggled is not None:
                return k
    return len(ex.steps) - 1


def _base_queue(ex: InstructionExample, catch_up: Sequence[GameAction]) -> tuple[str, ...]:
    """Queue before the catch-up turn: gold's starting queue minus what catch-up will issue."""
    queue = ex.start_interaction.queue
    issued = sum(1 for a in catch_up if isinstance(a, Instruct))
    return queue[: len(queue) - issued] if issued else queue


@dataclass(frozen=True)
class StartContext:
    """Game bookkeeping at the perturbed state (the evaluated rollout's end)."""

    score: int
    turns_remaining: int
    spawns: SpawnTape
    queue: tuple[str, ...]

    @classmethod
    def from_game(cls, g: GameState) -> StartContext:
        return cls(g.score, g.turns_remaining, list(g.spawn_tape or []), g.interaction.queue)


def generate_recovery_example(
    s_prime: WorldState,
    gold_next: InstructionExample,
    unexecuted_leader: Sequence[GameAction] = (),
    config: GameConfig | None = None,
    context: StartContext | None = None,
) -> InstructionExample | Skip:
    """Recovery example for ``gold_next`` starting from the perturbed world ``s_prime``.

    ``context`` carries score, spawn tape and queue at ``s_prime``; without
    it they are taken from the gold start, which is only right when the
    catch-up actions complete no set.

    Returns a ``Skip`` with a reason when no valid example exists: the
    target pose is unreachable or sits on a card, a replayed action is
    illegal, or the result misses the gold end state.
    """
    config = config or GameConfig()
    if context is None:
        context = StartContext(
            gold_next.start_score,
            gold_next.start_turns_remaining,
            gold_next.spawns,
            _base_queue(gold_next, unexecuted_leader),
        )
    gold_start = gold_next.start_world.follower
    provenance = {
        "game_id": gold_next.game_id,
        "index": gold_next.index,
        "perturbed_pose": s_prime.follower.to_dict(),
        "gold_start_pose": gold_start.to_dict(),
    }
    if gold_next.follower_actions() == [DONE]:
        if s_prime.cards != gold_next.end_world.cards:
            return Skip("card_mismatch", "perturbed cards differ from gold for a DONE-only instruction")
        only = Step(s_prime, gold_next.start_interaction, Agent.FOLLOWER, DONE)
        return replace(
            gold_next,
            steps=[only],
            end_world=s_prime,
            start_score=context.score,
            start_turns_remaining=context.turns_remaining,
            spawns=list(context.spawns),
            event_span=None,
            implicit=False,
            provenance={**provenance, "t": 0, "special": "done_only"},
            lead_in=[],
        )

    t = _toggle_step(gold_next)
    head, tail = gold_next.steps[:t], gold_next.steps[t:]
    catch_up = [a for a in unexecuted_leader if not isinstance(a, Done)]
    catch_up += [s.action for s in head if s.actor is Agent.LEADER and not isinstance(s.action, Done)]
    target: AgentPose = tail[0].world.follower
    if target.position in s_prime.cards:
        return Skip("goal_on_card", f"target pose {target} is on a card hex")

    g = game_from(s_prime, gold_next.start_interaction, config, context.score, context.turns_remaining, context.spawns, 0)
    steps: list[Step] = []
    if catch_up:
        moves = sum(1 for a in catch_up if isinstance(a, WorldAction))
        # One synthetic leader turn, with enough steps for every catch-up move.
        g.interaction = InteractionState(context.queue, Agent.LEADER, max(config.turn.leader_steps, moves))
        for a in catch_up + [DONE]:
            steps.append(Step(g.world, g.interaction, Agent.LEADER, a))
            try:
                step(g, Agent.LEADER, a)
            except IllegalMove as exc:
                return Skip("catch_up_illegal", str(exc))
        if g.interaction.turn is not Agent.FOLLOWER:
            return Skip("catch_up_illegal", "catch-up turn did not hand control to the follower")

    prefix = agent_path(g.world, Agent.FOLLOWER, Goal.pose(target), forbidden=set(g.world.cards))
    if prefix is None:
        return Skip("unreachable", f"no card-free path from {g.world.follower} to {target}")
    follower = prefix + [s.action for s in tail if s.actor is Agent.FOLLOWER]
    leader = leader_turns(s.action for s in tail if s.actor is Agent.LEADER)
    try:
        r = rollout(g, LeaderReplay(leader), StaticOracle(follower), stop_after=1, action_cap=UNCAPPED)
    except DesyncError as exc:
        return Skip("suffix_illegal", str(exc))
    steps.extend(r.trace)
    end = r.game.world
    if end.cards != gold_next.end_world.cards or end.follower.position != gold_next.end_world.follower.position:
        return Skip("postcondition", "recovery rollout misses the gold end state")
    return replace(
        gold_next,
        steps=steps,
        end_world=end,
        start_score=context.score,
        start_turns_remaining=context.turns_remaining,
        spawns=list(context.spawns),
        event_span=None,
        implicit=is_implicit(s_prime.follower, gold_start),
        provenance={**provenance, "t": t, "prefix_length": len(prefix), "catch_up": len(catch_up)},
        lead_in=[],
    )


def _by_interaction(examples: Iterable[InstructionExample]) -> dict[str, list[InstructionExample]]:
    groups: dict[str, list[InstructionExample]] = defaultdict(list)
    for ex in examples:
        groups[ex.game_id].append(ex)
    for exs in groups.values():
        exs.sort(key=lambda e: e.index)
    return groups


@dataclass
class AggregateResult:
    examples: list[InstructionExample]
    skipped: list[tuple[str, int, Skip]]
    counts: dict[str, int]


def aggregate_detailed(
    policy: FollowerPolicy, examples: Iterable[InstructionExample], config: GameConfig | None = None
) -> AggregateResult:
    out: list[InstructionExample] = []
    skipped: list[tuple[str, int, Skip]] = []
    counts: dict[str, int] = defaultdict(int)
    for game_id, exs in sorted(_by_interaction(examples).items()):
        # The last instruction has no successor to recover into.
        for cur, nxt in zip(exs, exs[1:]):
            r = run_instruction(policy, cur, config)
            kind = classify_end_state(r.game.world, cur.end_world)
            counts[kind.value] += 1
            if kind is not ErrorClass.POSE_ERROR:
                continue
            unexecuted = r.leader.pending() + list(nxt.lead_in)
            result = generate_recovery_example(r.game.world, nxt, unexecuted, config, StartContext.from_game(r.game))
            if isinstance(result, Skip):
                log.info("skip recovery for %s/%d: %s %s", game_id, nxt.index, result.reason, result.detail)
                skipped.append((game_id, nxt.index, result))
                counts["skipped"] += 1
            else:
                out.append(result)
    return AggregateResult(out, skipped, dict(counts))


def aggregate(
    policy: FollowerPolicy, examples: Iterable[InstructionExample], config: GameConfig | None = None
) -> list[InstructionExample]:
    """Recovery examples for every pose error the policy makes on ``examples``."""
    return aggregate_detailed(policy, examples, config).examples


def sample_for_epoch(d: Sequence, d_prime: Sequence, rng: random.Random) -> list:
    """All of ``d`` plus at most ``len(d)`` recovery examples drawn without replacement."""
    return list(d) + rng.sample(list(d_prime), min(len(d_prime), len(d)))
