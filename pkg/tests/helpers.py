"""Hand-built game fixtures shared by several test modules."""

from hexcollab.dataio import RecordedInteraction
from hexcollab.engine import DONE, Done, GameConfig, Instruct, TurnConfig, new_game, step
from hexcollab.evalkit import game_from
from hexcollab.hexworld import Agent, WorldAction

L, F = Agent.LEADER, Agent.FOLLOWER
MF, MB, RL, RR = WorldAction.MF, WorldAction.MB, WorldAction.RL, WorldAction.RR


def scripted_game(world, script, game_id="fixture", turns=12, seed=0) -> RecordedInteraction:
    """Play ``script`` (actor, action) pairs; a str action means Instruct(text)."""
    g = new_game(world, GameConfig(TurnConfig(initial_turns=turns)), seed)
    for actor, a in script:
        step(g, actor, a if isinstance(a, (WorldAction, Done)) else Instruct(a))
    return RecordedInteraction.from_game(g, game_id)


def leader_says(*texts):
    return [(L, t) for t in texts] + [(L, DONE)]


def follower_does(*actions):
    return [(F, a) for a in actions]


def simulate_example(ex, config=None):
    """Re-execute an example's steps through the engine; returns the final game."""
    first = ex.steps[0]
    g = game_from(first.world, first.interaction, config or GameConfig(), ex.start_score, ex.start_turns_remaining, ex.spawns, 0)
    for s in ex.steps:
        assert g.world == s.world and g.interaction == s.interaction
        step(g, s.actor, s.action)
    return g
