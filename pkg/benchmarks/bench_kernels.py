"""Compare the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--size 25] [--queries 200] [--boards 2000]

Prints one row per kernel with per-call time for each backend and the
speedup. Both backends must agree on every input; a mismatch is an error.
"""

from __future__ import annotations

import argparse
import random
import sys
import timeit

from hexcollab import _pykernels
from hexcollab.cards import DEFAULT_VOCAB, _encode, random_card
from hexcollab.mapgen import MapConfig, generate_map
from hexcollab.planner import _goal_mask, Goal, passable_mask
from hexcollab.hexworld import HexCoord

try:
    from hexcollab import _ckernels
except ImportError:
    _ckernels = None


def bfs_inputs(size: int, n: int, seed: int) -> list[tuple]:
    rng = random.Random(seed)
    world = generate_map(MapConfig(width=size, height=size, seed=seed))
    mask = bytes(passable_mask(world, ()))
    free = [h for h in world.all_hexes() if world.passable(h)]
    out = []
    for _ in range(n):
        s, g = rng.sample(free, 2)
        goal = bytes(_goal_mask(world, Goal.position(HexCoord(*g))))
        out.append((size, size, mask, s[0], s[1], rng.randrange(6), goal))
    return out


def triple_inputs(n: int, seed: int, cards: int = 21) -> list[tuple]:
    rng = random.Random(seed)
    return [_encode([random_card(rng, DEFAULT_VOCAB) for _ in range(cards)]) for _ in range(n)]


def time_per_call(fn, inputs, repeat: int) -> float:
    def run():
        for args in inputs:
            fn(*args)

    best = min(timeit.repeat(run, number=1, repeat=repeat))
    return best / len(inputs)


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=25)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--boards", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the pure-Python backend is available", file=sys.stderr)

    cases = {
        "bfs_pose": bfs_inputs(args.size, args.queries, args.seed),
        "has_valid_triple": triple_inputs(args.boards, args.seed),
    }
    print(f"{'kernel':<18}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, inputs in cases.items():
        py_fn = getattr(_pykernels, name)
        for a in inputs:
            if _ckernels is not None and getattr(_ckernels, name)(*a) != py_fn(*a):
                print(f"{name}: backends disagree on {a[3:6] if name == 'bfs_pose' else a}", file=sys.stderr)
                return 1
        t_py = time_per_call(py_fn, inputs, args.repeat)
        if _ckernels is None:
            print(f"{name:<18}{t_py * 1e6:>12.1f}{'-':>12}{'-':>10}")
            continue
        t_c = time_per_call(getattr(_ckernels, name), inputs, args.repeat)
        print(f"{name:<18}{t_py * 1e6:>12.1f}{t_c * 1e6:>12.1f}{t_py / t_c:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
