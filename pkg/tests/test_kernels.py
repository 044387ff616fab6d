"""Both kernel backends against each other and against the test oracles."""

import random

import pytest

from hexcollab import _kernels, _pykernels
from hexcollab.cards import _encode, random_card
from hexcollab.hexworld import HexCoord, WorldAction
from hexcollab.mapgen import MapConfig, generate_map
from hexcollab.planner import Goal, _goal_mask, end_pose, passable_mask

from oracles import enumerate_valid_triples, naive_pose_bfs

try:
    from hexcollab import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [pytest.param(_pykernels, id="python")]
BACKENDS.append(
    pytest.param(_ckernels, id="cython", marks=pytest.mark.skipif(_ckernels is None, reason="extension not built"))
)
CODES = (WorldAction.MF, WorldAction.MB, WorldAction.RL, WorldAction.RR)


def test_backend_selection_is_reported():
    assert _kernels.BACKEND in ("cython", "python")
    if _ckernels is None:
        assert _kernels.BACKEND == "python"


@pytest.mark.parametrize("impl", BACKENDS)
def test_has_valid_triple_matches_enumeration(impl):
    rng = random.Random(3)
    for n in (0, 1, 2, 3, 5, 9, 21):
        for _ in range(60):
            cards = [random_card(rng) for _ in range(n)]
            assert impl.has_valid_triple(*_encode(cards)) == bool(enumerate_valid_triples([c.identity for c in cards]))


@pytest.mark.parametrize("impl", BACKENDS)
def test_bfs_pose_matches_naive_oracle(impl):
    rng = random.Random(5)
    for seed in range(15):
        world = generate_map(MapConfig(width=9, height=8, obstacle_density=0.25, initial_cards=3, seed=seed))
        mask = bytes(passable_mask(world, ()))
        open_hexes = {h for h in world.all_hexes() if world.passable(h)}
        free = sorted(open_hexes)
        for _ in range(6):
            s, g = rng.sample(free, 2)
            heading = rng.randrange(6)
            goal_heading = rng.choice([None, rng.randrange(6)])
            goal = Goal(frozenset([g]), goal_heading)
            codes = impl.bfs_pose(9, 8, mask, s[0], s[1], heading, bytes(_goal_mask(world, goal)))
            expected = naive_pose_bfs(open_hexes, (s[0], s[1], heading), {tuple(g)}, goal_heading)
            assert expected is not None  # connected maps
            assert len(codes) == expected
            assert goal.satisfied(end_pose(world.follower._replace(position=HexCoord(*s), heading=heading), [CODES[c] for c in codes]))


@pytest.mark.parametrize("impl", BACKENDS)
def test_bfs_pose_unreachable_and_trivial(impl):
    mask = bytes([1, 0, 1])  # 3x1 strip with a wall in the middle
    goal = bytearray(18)
    goal[2 * 6 + 0] = 1
    assert impl.bfs_pose(3, 1, mask, 0, 0, 0, bytes(goal)) is None
    goal = bytearray(18)
    goal[0] = 1
    assert impl.bfs_pose(3, 1, mask, 0, 0, 0, bytes(goal)) == []


@pytest.mark.skipif(_ckernels is None, reason="extension not built")
def test_backends_agree_exactly():
    rng = random.Random(8)
    world = generate_map(MapConfig(width=15, height=15, seed=4))
    mask = bytes(passable_mask(world, ()))
    free = [h for h in world.all_hexes() if world.passable(h)]
    for _ in range(50):
        s, g = rng.sample(free, 2)
        goal = bytes(_goal_mask(world, Goal.position(g)))
        args = (15, 15, mask, s[0], s[1], rng.randrange(6), goal)
        assert _ckernels.bfs_pose(*args) == _pykernels.bfs_pose(*args)
    for _ in range(200):
        enc = _encode([random_card(rng) for _ in range(rng.randrange(0, 12))])
        assert _ckernels.has_valid_triple(*enc) == _pykernels.has_valid_triple(*enc)


def test_pure_env_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, HEXCOLLAB_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import hexcollab; print(hexcollab.KERNEL_BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
