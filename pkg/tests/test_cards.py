import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexcollab.cards import (
    DEFAULT_VOCAB,
    Card,
    CompletionKind,
    NoSpace,
    cards_have_valid_set,
    check_completion,
    exists_valid_set,
    is_valid_set,
    random_card,
    respawn_cards,
)
from hexcollab.hexworld import HexCoord, WorldState, make_pose
from hexcollab.mapgen import MapConfig, generate_map

from oracles import completion_oracle, enumerate_valid_triples, triple_is_set

A = Card("red", "heart", 1)
B = Card("blue", "star", 2)
C = Card("green", "square", 3)


def board(cards, selected=()) -> WorldState:
    placed = {}
    for k, c in enumerate(cards):
        placed[HexCoord(k % 10, 2 + k // 10)] = Card(c.color, c.shape, c.count, k in selected)
    return WorldState(10, 10, {}, placed, make_pose(0, 0), make_pose(9, 9))


def test_valid_set_examples():
    assert is_valid_set(A, B, C)
    assert not is_valid_set(A, Card("red", "star", 2), C)
    assert not is_valid_set(A, B, Card("green", "square", 2))


cards_st = st.builds(
    Card, st.sampled_from(DEFAULT_VOCAB.colors), st.sampled_from(DEFAULT_VOCAB.shapes), st.sampled_from((1, 2, 3))
)


@settings(max_examples=200, deadline=None)
@given(cards_st, cards_st, cards_st)
def test_is_valid_set_permutation_invariant_and_matches_oracle(a, b, c):
    results = {is_valid_set(*p) for p in itertools.permutations((a, b, c))}
    assert len(results) == 1
    assert results.pop() == triple_is_set(a.identity, b.identity, c.identity)


def test_completion_examples():
    assert check_completion(board([A, B, C], selected={0, 1, 2})).kind is CompletionKind.VALID_SET
    assert check_completion(board([A, Card("red", "star", 2)], selected={0, 1})).kind is CompletionKind.INVALID_SELECTION
    assert check_completion(board([A, B, C])).kind is CompletionKind.NONE
    assert check_completion(board([A, B, C, Card("pink", "circle", 1)], selected={0, 1, 2, 3})).kind is CompletionKind.INVALID_SELECTION


def test_completion_hexes_are_the_selected_ones():
    w = board([A, B, C, Card("pink", "circle", 1)], selected={0, 1, 3})
    out = check_completion(w)
    assert set(out.hexes) == {h for h, c in w.cards.items() if c.selected}


def test_completion_matches_oracle_on_random_boards():
    rng = random.Random(4)
    for _ in range(500):
        cards = [random_card(rng) for _ in range(rng.randrange(3, 10))]
        chosen = set(rng.sample(range(len(cards)), rng.randrange(0, 5) if len(cards) >= 4 else 2))
        w = board(cards, chosen)
        expected = completion_oracle([cards[k].identity for k in sorted(chosen)])
        got = check_completion(w)
        assert got.kind.value == expected
        if got.kind is CompletionKind.VALID_SET:
            assert len(got.hexes) == 3


def test_exists_valid_set_examples():
    assert not exists_valid_set(board([A, B]))
    assert exists_valid_set(board([Card("red", "heart", 1), A, B, C, Card("red", "heart", 2)]))


def test_exists_valid_set_matches_enumeration_on_21_card_boards():
    rng = random.Random(9)
    hits = 0
    for _ in range(300):
        cards = [random_card(rng) for _ in range(21)]
        expected = bool(enumerate_valid_triples([c.identity for c in cards]))
        assert cards_have_valid_set(cards) == expected
        hits += expected
    assert 0 < hits


def test_sparse_boards_exercise_the_false_branch():
    rng = random.Random(1)
    seen = set()
    for _ in range(300):
        cards = [random_card(rng) for _ in range(4)]
        expected = bool(enumerate_valid_triples([c.identity for c in cards]))
        assert cards_have_valid_set(cards) == expected
        seen.add(expected)
    assert seen == {True, False}


def test_respawn_keeps_count_and_spawns_unselected():
    w = generate_map(MapConfig(width=12, height=12, seed=1))
    hexes = [h for h, _ in itertools.islice(w.cards.items(), 3)]
    new, spawned = respawn_cards(w, hexes, random.Random(0))
    assert len(new.cards) == len(w.cards)
    assert len(spawned) == 3
    assert all(not c.selected for _, c in spawned)
    assert all(new.cards[h] == c for h, c in spawned)
    assert exists_valid_set(new)


def test_respawn_deterministic():
    w = generate_map(MapConfig(width=12, height=12, seed=1))
    hexes = list(w.cards)[:3]
    a = respawn_cards(w, hexes, random.Random(42))
    b = respawn_cards(w, hexes, random.Random(42))
    assert a == b


def test_respawn_no_space():
    w = WorldState(2, 2, {}, {HexCoord(0, 1): A, HexCoord(1, 1): B}, make_pose(0, 0), make_pose(1, 0))
    with pytest.raises(NoSpace):
        respawn_cards(w, [], random.Random(0))


def test_card_serialization():
    c = Card("pink", "triangle", 3, True)
    assert c.to_string() == "pink|triangle|3|1"
    assert Card.from_string(c.to_string()) == c
    assert Card.from_dict(c.to_dict()) == c
    with pytest.raises(ValueError):
        Card("red", "heart", 4)
