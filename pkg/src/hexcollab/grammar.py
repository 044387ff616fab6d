"""Restricted instruction grammar used by the template follower.

See ``docs/grammar.ebnf`` for the versioned grammar. Parsing is total:
anything the grammar does not cover yields ``NoOp``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from hexcollab.cards import DEFAULT_VOCAB, Card, CardVocab

GRAMMAR_VERSION = 1

SELECT_VERBS = (("pick", "up"), ("get",), ("grab",), ("select",), ("take",))
DESELECT_VERBS = (("deselect",), ("unselect",), ("avoid",))
ARTICLES = frozenset({"the", "a", "an"})
COUNT_WORDS = {"one": 1, "two": 2, "three": 3, "1": 1, "2": 2, "3": 3}
NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}


@dataclass(frozen=True)
class CardFilter:
    count: int | None = None
    color: str | None = None
    shape: str | None = None

    def matches(self, card: Card) -> bool:
        return (
            (self.count is None or card.count == self.count)
            and (self.color is None or card.color == self.color)
            and (self.shape is None or card.shape == self.shape)
        )


@dataclass(frozen=True)
class CardTargets:
    filters: tuple[CardFilter, ...]
    mode: str  # "select" | "deselect"

    def __post_init__(self) -> None:
        if not self.filters:
            raise ValueError("CardTargets needs at least one filter")


@dataclass(frozen=True)
class Move:
    pattern: str  # "forward" | "turn_around" | "turn_left" | "turn_right"
    n: int = 1


@dataclass(frozen=True)
class NoOp:
    pass


Directive = Union[CardTargets, Move, NoOp]


def tokenize(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _match_verb(tokens: list[str], i: int) -> tuple[str | None, int]:
    for mode, verbs in (("select", SELECT_VERBS), ("deselect", DESELECT_VERBS)):
        for verb in verbs:
            if tuple(tokens[i : i + len(verb)]) == verb:
                return mode, i + len(verb)
    return None, i


def _shape_of(token: str, shapes: tuple[str, ...]) -> str | None:
    for shape in shapes:
        if token in (shape, shape + "s", shape + "es"):
            return shape
    return None


def _match_card_ref(tokens: list[str], i: int, vocab: CardVocab) -> tuple[CardFilter | None, int]:
    n = len(tokens)
    if i < n and tokens[i] in ARTICLES:
        i += 1
    count = None
    if i < n and tokens[i] in COUNT_WORDS:
        count = COUNT_WORDS[tokens[i]]
        i += 1
    color = None
    if i < n and tokens[i] in vocab.colors:
        color = tokens[i]
        i += 1
    if i < n:
        shape = _shape_of(tokens[i], vocab.shapes)
        if shape is not None:
            return CardFilter(count, color, shape), i + 1
    return None, i


def _match_move(tokens: list[str], i: int) -> Move | None:
    pair = tuple(tokens[i : i + 2])
    if pair == ("turn", "around"):
        return Move("turn_around")
    if pair == ("turn", "left"):
        return Move("turn_left")
    if pair == ("turn", "right"):
        return Move("turn_right")
    if pair == ("go", "forward"):
        nxt = tokens[i + 2] if i + 2 < len(tokens) else None
        if nxt is not None and nxt.isdigit():
            return Move("forward", max(1, int(nxt)))
        if nxt in NUMBER_WORDS:
            return Move("forward", NUMBER_WORDS[nxt])
        return Move("forward", 1)
    return None


def parse_instruction(text: str, vocab: CardVocab = DEFAULT_VOCAB) -> Directive:
    """Parse an instruction into a directive.

    Card references after a verb are collected (joined by "and"); the first
    verb fixes the mode and references under a verb of the other mode are
    ignored. Movement macros apply only when no card reference matched.
    """
    tokens = tokenize(text)
    filters: list[CardFilter] = []
    mode: str | None = None
    i = 0
    while i < len(tokens):
        verb_mode, j = _match_verb(tokens, i)
        if verb_mode is None:
            i += 1
            continue
        refs = []
        k = j
        while True:
            ref, k2 = _match_card_ref(tokens, k, vocab)
            if ref is None:
                break
            refs.append(ref)
            k = k2
            if k < len(tokens) and tokens[k] == "and":
                ahead, _ = _match_card_ref(tokens, k + 1, vocab)
                if ahead is not None:
                    k += 1
                    continue
            break
        if refs:
            if mode is None:
                mode = verb_mode
            if verb_mode == mode:
                filters.extend(refs)
        i = max(k, j)
    if filters:
        return CardTargets(tuple(filters), mode)
    for i in range(len(tokens)):
        move = _match_move(tokens, i)
        if move is not None:
            return move
    return NoOp()


_COUNT_NAMES = {1: "one", 2: "two", 3: "three"}


def describe_card(card: Card) -> str:
    """Grammar-conformant card reference, e.g. "the two green stars"."""
    shape = card.shape if card.count == 1 else card.shape + "s"
    return f"the {_COUNT_NAMES[card.count]} {card.color} {shape}"
