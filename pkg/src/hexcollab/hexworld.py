"""Hex-grid geometry, world state and the world-action transition.

Coordinates are axial ``(q, r)``; a map of width ``W`` and height ``H``
covers ``0 <= q < W``, ``0 <= r < H``. Headings are integers mod 6 with
heading 0 pointing along ``+q`` and headings increasing counter-clockwise.
Every serialized artifact depends on this convention.
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Iterator, NamedTuple

import numpy as np

from hexcollab.cards import DEFAULT_VOCAB, Card, CardVocab

DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))

DEFAULT_WIDTH = 25
DEFAULT_HEIGHT = 25


class HexCoord(NamedTuple):
    q: int
    r: int


def neighbor(c: HexCoord, heading: int) -> HexCoord:
    dq, dr = DIRECTIONS[heading % 6]
    return HexCoord(c[0] + dq, c[1] + dr)


def hex_distance(a: HexCoord, b: HexCoord) -> int:
    dq = a[0] - b[0]
    dr = a[1] - b[1]
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


class AgentPose(NamedTuple):
    position: HexCoord
    heading: int

    def to_dict(self) -> dict:
        return {"hex": list(self.position), "heading": self.heading}

    @classmethod
    def from_dict(cls, d: dict) -> AgentPose:
        return cls(HexCoord(*d["hex"]), int(d["heading"]) % 6)


def make_pose(q: int, r: int, heading: int = 0) -> AgentPose:
    return AgentPose(HexCoord(q, r), heading % 6)


class Agent(str, enum.Enum):
    LEADER = "leader"
    FOLLOWER = "follower"

    @property
    def other(self) -> Agent:
        return Agent.FOLLOWER if self is Agent.LEADER else Agent.LEADER


class PropKind(str, enum.Enum):
    TREE = "tree"
    HUT = "hut"
    BUSH = "bush"
    ROCK = "rock"
    POND = "pond"


DEFAULT_PROP_COLORS = ("red", "blue", "green", "yellow")


@dataclass(frozen=True)
class Prop:
    kind: PropKind
    color: str | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "color": self.color}

    @classmethod
    def from_dict(cls, d: dict) -> Prop:
        return cls(PropKind(d["kind"]), d.get("color"))


class WorldAction(str, enum.Enum):
    MF = "MF"
    MB = "MB"
    RL = "RL"
    RR = "RR"

    @property
    def inverse(self) -> WorldAction:
        return _INVERSE[self]


_INVERSE = {
    WorldAction.MF: WorldAction.MB,
    WorldAction.MB: WorldAction.MF,
    WorldAction.RL: WorldAction.RR,
    WorldAction.RR: WorldAction.RL,
}

# Kernel action codes share this order.
ACTION_ORDER = (WorldAction.MF, WorldAction.MB, WorldAction.RL, WorldAction.RR)


def move_pose(pose: AgentPose, a: WorldAction) -> AgentPose:
    """Pose after ``a`` ignoring legality."""
    if a is WorldAction.MF:
        return AgentPose(neighbor(pose.position, pose.heading), pose.heading)
    if a is WorldAction.MB:
        return AgentPose(neighbor(pose.position, pose.heading + 3), pose.heading)
    if a is WorldAction.RL:
        return AgentPose(pose.position, (pose.heading + 1) % 6)
    return AgentPose(pose.position, (pose.heading + 5) % 6)


@dataclass(frozen=True)
class WorldState:
    """Immutable world: map, props, cards and both agent poses.

    ``terrain`` holds hexes that are impassable for reasons other than a prop.
    Operations return new states; dict fields are never mutated in place.
    """

    width: int
    height: int
    props: dict[HexCoord, Prop]
    cards: dict[HexCoord, Card]
    leader: AgentPose
    follower: AgentPose
    terrain: frozenset[HexCoord] = field(default_factory=frozenset)

    def on_map(self, c: HexCoord) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def passable(self, c: HexCoord) -> bool:
        return self.on_map(c) and c not in self.props and c not in self.terrain

    def all_hexes(self) -> Iterator[HexCoord]:
        for r in range(self.height):
            for q in range(self.width):
                yield HexCoord(q, r)

    def pose(self, agent: Agent) -> AgentPose:
        return self.leader if agent is Agent.LEADER else self.follower

    def with_pose(self, agent: Agent, pose: AgentPose) -> WorldState:
        if agent is Agent.LEADER:
            return replace(self, leader=pose)
        return replace(self, follower=pose)

    def card_config(self) -> frozenset[tuple[HexCoord, Card]]:
        """Hashable snapshot of every card, its hex and its selection flag."""
        return frozenset(self.cards.items())

    def validate(self) -> None:
        """Raise ``ValueError`` if any world invariant is broken."""
        for h in self.cards:
            if not self.passable(h):
                raise ValueError(f"card on impassable hex {h}")
        for h in self.props:
            if not self.on_map(h):
                raise ValueError(f"prop off map at {h}")
        for agent in Agent:
            p = self.pose(agent)
            if not self.passable(p.position):
                raise ValueError(f"{agent.value} on impassable hex {p.position}")
            if not 0 <= p.heading < 6:
                raise ValueError(f"{agent.value} heading {p.heading} not reduced mod 6")
        if self.leader.position == self.follower.position:
            raise ValueError("agents share a hex")

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "terrain": sorted([list(h) for h in self.terrain]),
            "props": [{"hex": list(h), **p.to_dict()} for h, p in sorted(self.props.items())],
            "cards": [{"hex": list(h), **c.to_dict()} for h, c in sorted(self.cards.items())],
            "leader": self.leader.to_dict(),
            "follower": self.follower.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> WorldState:
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            props={HexCoord(*p["hex"]): Prop.from_dict(p) for p in d["props"]},
            cards={HexCoord(*c["hex"]): Card.from_dict(c) for c in d["cards"]},
            leader=AgentPose.from_dict(d["leader"]),
            follower=AgentPose.from_dict(d["follower"]),
            terrain=frozenset(HexCoord(*h) for h in d.get("terrain", ())),
        )


class IllegalMove(Exception):
    """A world action whose target hex is off-map, blocked or occupied."""


@dataclass(frozen=True)
class MoveEffect:
    actor: Agent
    action: WorldAction
    rejected: bool = False
    reason: str | None = None
    toggled: HexCoord | None = None
    selected: bool | None = None


def check_move(s: WorldState, actor: Agent, a: WorldAction) -> str | None:
    """Return why ``a`` is illegal for ``actor``, or ``None`` if it is legal."""
    if a is WorldAction.RL or a is WorldAction.RR:
        return None
    target = move_pose(s.pose(actor), a).position
    if not s.on_map(target):
        return "off_map"
    if not s.passable(target):
        return "impassable"
    if target == s.pose(actor.other).position:
        return "occupied"
    return None


def apply_world_action(s: WorldState, actor: Agent, a: WorldAction) -> tuple[WorldState, MoveEffect]:
    """Apply a world action; illegal moves return ``s`` unchanged with a rejection effect."""
    reason = check_move(s, actor, a)
    if reason is not None:
        return s, MoveEffect(actor, a, rejected=True, reason=reason)
    pose = move_pose(s.pose(actor), a)
    new = s.with_pose(actor, pose)
    if a in (WorldAction.MF, WorldAction.MB) and pose.position in s.cards:
        card = s.cards[pose.position].toggled()
        cards = dict(s.cards)
        cards[pose.position] = card
        new = replace(new, cards=cards)
        return new, MoveEffect(actor, a, toggled=pose.position, selected=card.selected)
    return new, MoveEffect(actor, a)


# ---------------------------------------------------------------------------
# Bit-plane state encoding

STATE_TENSOR_VERSION = 1


def property_vocabulary(
    vocab: CardVocab = DEFAULT_VOCAB, prop_colors: tuple[str, ...] = DEFAULT_PROP_COLORS
) -> tuple[str, ...]:
    """Ordered plane names.

    Colors form one namespace shared by props and cards (a hex never holds
    both), so a red hut and a red card both light the ``red`` plane.
    """
    colors = list(vocab.colors) + [c for c in prop_colors if c not in vocab.colors]
    names = ["passable"]
    names += [k.value for k in PropKind]
    names += colors
    names += list(vocab.shapes)
    names += [f"count_{n}" for n in sorted(vocab.counts)]
    names += ["selected", "leader", "follower"]
    names += [f"leader_heading_{h}" for h in range(6)]
    names += [f"follower_heading_{h}" for h in range(6)]
    return tuple(names)


@dataclass(frozen=True)
class StateTensor:
    vocabulary: tuple[str, ...]
    planes: np.ndarray  # uint8, shape (P, W, H)

    @property
    def P(self) -> int:
        return len(self.vocabulary)

    def plane(self, name: str) -> np.ndarray:
        return self.planes[self.vocabulary.index(name)]

    def header(self) -> dict:
        _, w, h = self.planes.shape
        return {"version": STATE_TENSOR_VERSION, "W": w, "H": h, "P": self.P, "vocabulary": list(self.vocabulary)}

    def write(self, fh: BinaryIO) -> None:
        """One JSON header line, then P*W*H bytes (plane-major, C order)."""
        fh.write(json.dumps(self.header()).encode() + b"\n")
        fh.write(np.ascontiguousarray(self.planes, dtype=np.uint8).tobytes())

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.write(buf)
        return buf.getvalue()

    @classmethod
    def read(cls, fh: BinaryIO) -> StateTensor:
        header = json.loads(fh.readline())
        if header.get("version") != STATE_TENSOR_VERSION:
            raise ValueError(f"unsupported state tensor version {header.get('version')}")
        p, w, h = header["P"], header["W"], header["H"]
        data = fh.read(p * w * h)
        if len(data) != p * w * h:
            raise ValueError("truncated state tensor payload")
        planes = np.frombuffer(data, dtype=np.uint8).reshape(p, w, h).copy()
        return cls(tuple(header["vocabulary"]), planes)

    @classmethod
    def from_bytes(cls, data: bytes) -> StateTensor:
        return cls.read(io.BytesIO(data))


def encode_state(
    s: WorldState, vocab: CardVocab = DEFAULT_VOCAB, prop_colors: tuple[str, ...] = DEFAULT_PROP_COLORS
) -> StateTensor:
    names = property_vocabulary(vocab, prop_colors)
    index = {n: i for i, n in enumerate(names)}
    planes = np.zeros((len(names), s.width, s.height), dtype=np.uint8)
    for h in s.all_hexes():
        if s.passable(h):
            planes[index["passable"], h.q, h.r] = 1
    for h, prop in s.props.items():
        planes[index[prop.kind.value], h.q, h.r] = 1
        if prop.color is not None:
            planes[index[prop.color], h.q, h.r] = 1
    for h, card in s.cards.items():
        planes[index[card.color], h.q, h.r] = 1
        planes[index[card.shape], h.q, h.r] = 1
        planes[index[f"count_{card.count}"], h.q, h.r] = 1
        if card.selected:
            planes[index["selected"], h.q, h.r] = 1
    for agent in Agent:
        pose = s.pose(agent)
        q, r = pose.position
        planes[index[agent.value], q, r] = 1
        planes[index[f"{agent.value}_heading_{pose.heading}"], q, r] = 1
    return StateTensor(names, planes)
