"""Card semantics: set validity, completion detection and respawning."""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Sequence

from hexcollab import _kernels

if TYPE_CHECKING:
    from hexcollab.hexworld import HexCoord, WorldState

DEFAULT_COLORS = ("red", "blue", "green", "yellow", "orange", "pink")
DEFAULT_SHAPES = ("heart", "star", "diamond", "square", "circle", "triangle")
DEFAULT_COUNTS = (1, 2, 3)

RESPAWN_CAP = 10_000


@dataclass(frozen=True)
class CardVocab:
    colors: tuple[str, ...] = DEFAULT_COLORS
    shapes: tuple[str, ...] = DEFAULT_SHAPES
    counts: tuple[int, ...] = DEFAULT_COUNTS

    def __post_init__(self) -> None:
        if len(self.colors) < 3 or len(self.shapes) < 3:
            raise ValueError("a valid set needs at least three colors and three shapes")
        if tuple(sorted(set(self.counts))) != (1, 2, 3):
            raise ValueError(f"counts must be exactly {{1, 2, 3}}, got {self.counts}")

    def to_dict(self) -> dict:
        return {"colors": list(self.colors), "shapes": list(self.shapes), "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict) -> CardVocab:
        return cls(tuple(d["colors"]), tuple(d["shapes"]), tuple(d["counts"]))


DEFAULT_VOCAB = CardVocab()


@dataclass(frozen=True)
class Card:
    color: str
    shape: str
    count: int
    selected: bool = False

    def __post_init__(self) -> None:
        if self.count not in (1, 2, 3):
            raise ValueError(f"card count must be 1, 2 or 3, got {self.count}")

    def toggled(self) -> Card:
        return replace(self, selected=not self.selected)

    @property
    def identity(self) -> tuple[str, str, int]:
        return (self.color, self.shape, self.count)

    def to_string(self) -> str:
        return f"{self.color}|{self.shape}|{self.count}|{int(self.selected)}"

    @classmethod
    def from_string(cls, text: str) -> Card:
        color, shape, count, selected = text.split("|")
        return cls(color, shape, int(count), selected == "1")

    def to_dict(self) -> dict:
        return {"color": self.color, "shape": self.shape, "count": self.count, "selected": self.selected}

    @classmethod
    def from_dict(cls, d: dict) -> Card:
        return cls(d["color"], d["shape"], int(d["count"]), bool(d.get("selected", False)))


def compatible(a: Card, b: Card) -> bool:
    """Two cards can belong to the same valid set."""
    return a.color != b.color and a.shape != b.shape and a.count != b.count


def is_valid_set(a: Card, b: Card, c: Card) -> bool:
    return compatible(a, b) and compatible(a, c) and compatible(b, c)


class CompletionKind(str, enum.Enum):
    NONE = "none"
    VALID_SET = "valid_set"
    INVALID_SELECTION = "invalid_selection"


@dataclass(frozen=True)
class Completion:
    kind: CompletionKind
    hexes: tuple = field(default=())


def check_completion(s: WorldState) -> Completion:
    """Classify the current selection.

    ``INVALID_SELECTION`` means the selected cards cannot all be part of one
    valid set (a clashing pair, or more than three selected); it drives the
    leader-side highlight.
    """
    selected = sorted((h, c) for h, c in s.cards.items() if c.selected)
    hexes = tuple(h for h, _ in selected)
    if len(selected) > 3:
        return Completion(CompletionKind.INVALID_SELECTION, hexes)
    for (_, a), (_, b) in itertools.combinations(selected, 2):
        if not compatible(a, b):
            return Completion(CompletionKind.INVALID_SELECTION, hexes)
    if len(selected) == 3:
        return Completion(CompletionKind.VALID_SET, hexes)
    return Completion(CompletionKind.NONE, hexes)


def _encode(cards: Iterable[Card]) -> tuple[list[int], list[int], list[int]]:
    colors: dict[str, int] = {}
    shapes: dict[str, int] = {}
    cs, ss, ns = [], [], []
    for card in cards:
        cs.append(colors.setdefault(card.color, len(colors)))
        ss.append(shapes.setdefault(card.shape, len(shapes)))
        ns.append(card.count)
    return cs, ss, ns


def cards_have_valid_set(cards: Sequence[Card]) -> bool:
    return _kernels.has_valid_triple(*_encode(cards))


def exists_valid_set(s: WorldState) -> bool:
    """True iff some triple of on-board cards (selected or not) is a valid set."""
    return cards_have_valid_set(list(s.cards.values()))


class NoSpace(Exception):
    """Fewer free hexes than cards to place."""


def random_card(rng: random.Random, vocab: CardVocab = DEFAULT_VOCAB) -> Card:
    return Card(rng.choice(vocab.colors), rng.choice(vocab.shapes), rng.choice(vocab.counts))


def free_card_hexes(s: WorldState) -> list[HexCoord]:
    """Hexes where a new card may be placed, in canonical order."""
    occupied = {s.leader.position, s.follower.position}
    return [h for h in s.all_hexes() if s.passable(h) and h not in s.cards and h not in occupied]


def spawn_cards(
    s: WorldState, n: int, rng: random.Random, vocab: CardVocab = DEFAULT_VOCAB
) -> list[tuple[HexCoord, Card]]:
    """Sample ``n`` new cards on free hexes such that the board keeps a valid set.

    Rejection-samples attributes and positions; after ``RESPAWN_CAP`` failed
    draws one card triple compatible with the existing board is constructed.
    """
    free = free_card_hexes(s)
    if len(free) < n:
        raise NoSpace(f"need {n} free hexes, have {len(free)}")
    existing = list(s.cards.values())
    for _ in range(RESPAWN_CAP):
        hexes = rng.sample(free, n)
        new = [random_card(rng, vocab) for _ in range(n)]
        if cards_have_valid_set(existing + new):
            return list(zip(hexes, new))
    hexes = rng.sample(free, n)
    return list(zip(hexes, _constructive_cards(n, rng, vocab)))


def _constructive_cards(n: int, rng: random.Random, vocab: CardVocab) -> list[Card]:
    colors = rng.sample(vocab.colors, 3)
    shapes = rng.sample(vocab.shapes, 3)
    counts = rng.sample(list(vocab.counts), 3)
    triple = [Card(c, s, k) for c, s, k in zip(colors, shapes, counts)]
    return (triple + [random_card(rng, vocab) for _ in range(max(0, n - 3))])[:n]


def respawn_cards(
    s: WorldState, removed: Iterable[HexCoord], rng: random.Random, vocab: CardVocab = DEFAULT_VOCAB
) -> tuple[WorldState, list[tuple[HexCoord, Card]]]:
    """Delete the completed set and place three fresh cards.

    Returns the new world and the spawned ``(hex, card)`` pairs.
    """
    cards = dict(s.cards)
    for h in removed:
        del cards[h]
    cleared = replace(s, cards=cards)
    spawned = spawn_cards(cleared, 3, rng, vocab)
    cards.update(spawned)
    return replace(s, cards=cards), spawned
