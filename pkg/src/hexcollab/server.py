"""Live game service: rooms, seats, turn timers and the JSON wire protocol.

The ``Room`` class is the whole game-side logic and is synchronous: it
takes a client message and returns the messages to deliver. ``GameServer``
wraps rooms in a websocket service with one lock per room, per-connection
ordered outboxes, wall-clock turn timers and a ``/health`` endpoint.
Message schemas are documented in ``docs/protocol.md``.
"""

from __future__ import annotations

import asyncio
import http
import json
import logging
import math
import time
import uuid
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from websockets.asyncio.server import ServerConnection, serve
from websockets.datastructures import Headers
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Request, Response

from hexcollab import __version__
from hexcollab.config import AppConfig
from hexcollab.dataio import RecordedInteraction, save
from hexcollab.engine import DONE, Done, GameError, GameState, Instruct, expire_turn, new_game, step
from hexcollab.hexworld import DIRECTIONS, Agent, AgentPose, HexCoord, IllegalMove, WorldAction, WorldState
from hexcollab.mapgen import generate_map
from hexcollab.policies import FollowerPolicy, LogView, Observation, make_policy
from hexcollab.sim import MAX_REJECTIONS, ScriptedLeader

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
CLIENT_TYPES = ("join", "instruct", "act", "done", "end_turn")
BOT_EVENT_LIMIT = 2_000

Outgoing = tuple[str, dict]


# ---------------------------------------------------------------------------
# Follower view


def hex_to_pixel(c: HexCoord | tuple[int, int]) -> tuple[float, float]:
    """Centre of an axial hex in unit-size pixel space."""
    q, r = c
    return math.sqrt(3.0) * (q + r / 2.0), 1.5 * r


def in_wedge(pose: AgentPose, c: HexCoord, half_angle: float = 60.0) -> bool:
    if c == pose.position:
        return True
    px, py = hex_to_pixel(pose.position)
    cx, cy = hex_to_pixel(c)
    vx, vy = cx - px, cy - py
    hx, hy = hex_to_pixel(DIRECTIONS[pose.heading])
    cos = (vx * hx + vy * hy) / (math.hypot(vx, vy) * math.hypot(hx, hy))
    return cos >= math.cos(math.radians(half_angle)) - 1e-9


def visible_hexes(world: WorldState, pose: AgentPose, radius: int = 7, half_angle: float = 60.0) -> frozenset[HexCoord]:
    """Hexes within ``radius`` of ``pose`` and inside its forward wedge. No occlusion."""
    q0, r0 = pose.position
    out = set()
    for dq in range(-radius, radius + 1):
        for dr in range(max(-radius, -dq - radius), min(radius, -dq + radius) + 1):
            c = HexCoord(q0 + dq, r0 + dr)
            if world.on_map(c) and in_wedge(pose, c, half_angle):
                out.add(c)
    return frozenset(out)


def leader_view(world: WorldState) -> dict:
    return {"full": True, **world.to_dict()}


def follower_view(world: WorldState, radius: int = 7, half_angle: float = 60.0) -> dict:
    """World restricted to the follower's wedge; nothing outside it is sent."""
    seen = visible_hexes(world, world.follower, radius, half_angle)
    full = world.to_dict()
    return {
        "full": False,
        "width": world.width,
        "height": world.height,
        "visible": sorted([list(h) for h in seen]),
        "terrain": [h for h in full["terrain"] if tuple(h) in seen],
        "props": [p for p in full["props"] if tuple(p["hex"]) in seen],
        "cards": [c for c in full["cards"] if tuple(c["hex"]) in seen],
        "follower": full["follower"],
        "leader": full["leader"] if world.leader.position in seen else None,
    }


# ---------------------------------------------------------------------------
# Messages


def message(kind: str, **fields) -> dict:
    return {"type": kind, "v": PROTOCOL_VERSION, **fields}


def error(code: str, detail: str = "") -> dict:
    return message("error", code=code, detail=detail)


class ProtocolError(Exception):
    def __init__(self, code: str, detail: str = ""):
        super().__init__(detail)
        self.code = code
        self.detail = detail


def parse_client_message(raw: str | bytes | dict) -> dict:
    if isinstance(raw, dict):
        msg = raw
    else:
        try:
            msg = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ProtocolError("bad_message", f"not JSON: {exc}") from exc
    if not isinstance(msg, dict) or msg.get("type") not in CLIENT_TYPES:
        raise ProtocolError("bad_message", f"expected a message with type in {list(CLIENT_TYPES)}")
    if msg.get("v", PROTOCOL_VERSION) != PROTOCOL_VERSION:
        raise ProtocolError("unsupported_version", f"server speaks protocol {PROTOCOL_VERSION}")
    return msg


# ---------------------------------------------------------------------------
# Rooms


@dataclass
class Seat:
    kind: str  # "human" | "policy" | "scripted"
    session: str | None = None
    name: str = ""
    connected: bool = True


def room_seed(room_id: str, base: int) -> int:
    return base + zlib.crc32(room_id.encode("utf-8")) % 1_000_000


class Room:
    """One game and its two seats. Not thread-safe: callers serialize access."""

    def __init__(
        self,
        room_id: str,
        cfg: AppConfig,
        seed: int | None = None,
        clock: Callable[[], float] = time.monotonic,
        on_finish: Callable[[RecordedInteraction], None] | None = None,
    ):
        self.room_id = room_id
        self.cfg = cfg
        self.seed = room_seed(room_id, cfg.server.seed) if seed is None else seed
        self.map_config = replace(cfg.map, seed=self.seed)
        world = generate_map(self.map_config, cfg.game.vocab)
        self.game: GameState = new_game(world, cfg.game, self.seed)
        self.clock = clock
        self.on_finish = on_finish
        self.seats: dict[Agent, Seat | None] = {Agent.LEADER: None, Agent.FOLLOWER: None}
        self._follower_bot: FollowerPolicy | None = None
        self._leader_bot: ScriptedLeader | None = None
        if cfg.server.follower_policy:
            self._follower_bot = make_policy(cfg.server.follower_policy, self.seed)
            self._follower_bot.reset(None)
            self.seats[Agent.FOLLOWER] = Seat("policy", name=cfg.server.follower_policy)
        if cfg.server.leader_bot:
            if cfg.server.leader_bot != "scripted":
                raise ValueError(f"unknown leader bot {cfg.server.leader_bot!r}")
            self._leader_bot = ScriptedLeader(self.seed)
            self._leader_bot.reset(self.game)
            self.seats[Agent.LEADER] = Seat("scripted", name="scripted")
        self.deadline: float | None = None
        self._turn_key: tuple | None = None
        self.flushed = False
        self.record: RecordedInteraction | None = None
        self._arm_timer()

    # -- seats ---------------------------------------------------------

    def sessions(self) -> dict[str, Agent]:
        return {s.session: a for a, s in self.seats.items() if s is not None and s.kind == "human" and s.session}

    def seat_of(self, session: str) -> Agent | None:
        return self.sessions().get(session)

    def join(self, session: str, seat_name: str, resume: str | None = None) -> list[Outgoing]:
        try:
            agent = Agent(seat_name)
        except ValueError:
            return [(session, error("bad_seat", f"seat must be 'leader' or 'follower', got {seat_name!r}"))]
        current = self.seats[agent]
        if current is not None:
            if current.session == session:
                pass
            elif resume is not None and current.kind == "human" and current.session == resume:
                current.session, current.connected = session, True
            else:
                return [(session, error("seat_taken", f"the {agent.value} seat is occupied"))]
        else:
            other = self.seat_of(session)
            if other is not None:
                return [(session, error("seat_taken", f"session already holds the {other.value} seat"))]
            self.seats[agent] = Seat("human", session)
        self._turn_key = None  # re-arm: the seat holding the turn may just have been filled
        self._arm_timer()
        return self.broadcast()

    def leave(self, session: str) -> None:
        for seat in self.seats.values():
            if seat is not None and seat.session == session:
                seat.connected = False

    # -- game ----------------------------------------------------------

    def handle(self, session: str, msg: dict) -> list[Outgoing]:
        """Apply one client message. Every message gets a state_update or an error."""
        try:
            msg = parse_client_message(msg)
        except ProtocolError as exc:
            return [(session, error(exc.code, exc.detail))]
        if msg["type"] == "join":
            return self.join(session, str(msg.get("seat", "")), msg.get("resume"))
        agent = self.seat_of(session)
        if agent is None:
            return [(session, error("not_joined", "join a seat first"))]
        g = self.game
        if g.over:
            return [(session, error("game_over", "the game has ended"))]
        if g.interaction.turn is not agent:
            return [(session, error("not_your_turn", f"it is the {g.interaction.turn.value}'s turn"))]
        try:
            action = self._action_for(agent, msg)
        except ProtocolError as exc:
            return [(session, error(exc.code, exc.detail))]
        score_before = g.score
        try:
            step(g, agent, action)
        except IllegalMove as exc:
            return [(session, error("illegal_action", str(exc)))]
        except GameError as exc:
            return [(session, error("illegal_action", str(exc)))]
        self.run_bots()
        return self._after(score_before)

    def _action_for(self, agent: Agent, msg: dict):
        kind = msg["type"]
        if kind == "instruct":
            if agent is not Agent.LEADER:
                raise ProtocolError("wrong_seat", "only the leader can instruct")
            text = str(msg.get("text", "")).strip()
            if not text:
                raise ProtocolError("bad_message", "empty instruction")
            return Instruct(text)
        if kind == "act":
            try:
                return WorldAction(msg.get("action"))
            except ValueError as exc:
                raise ProtocolError("bad_message", f"unknown action {msg.get('action')!r}") from exc
        if kind == "done":
            if agent is not Agent.FOLLOWER:
                raise ProtocolError("wrong_seat", "the leader ends its turn with end_turn")
            return DONE
        # end_turn
        if agent is not Agent.LEADER:
            raise ProtocolError("wrong_seat", "the follower finishes instructions with done")
        if not self.game.interaction.queue:
            raise ProtocolError("queue_empty", "issue an instruction before ending the turn")
        return DONE

    def run_bots(self) -> None:
        """Let bot seats act until a human holds the turn or the game ends."""
        g = self.game
        rejections = 0
        for _ in range(BOT_EVENT_LIMIT):
            if g.over:
                break
            actor = g.interaction.turn
            if actor is Agent.FOLLOWER and self._follower_bot is not None:
                a = self._follower_bot.decide(Observation(g.world, g.interaction, LogView(g.log)))
            elif actor is Agent.LEADER and self._leader_bot is not None:
                a = self._leader_bot.decide(g)
            else:
                break
            try:
                step(g, actor, a)
                rejections = 0
            except IllegalMove:
                rejections += 1
                if rejections >= MAX_REJECTIONS:
                    expire_turn(g)
                    rejections = 0
        self._arm_timer()
        self._maybe_finish()

    def expire(self, now: float | None = None) -> list[Outgoing]:
        """Force the end of the current turn if its deadline has passed."""
        now = self.clock() if now is None else now
        if self.game.over or self.deadline is None or now < self.deadline:
            return []
        score_before = self.game.score
        expire_turn(self.game)
        self.run_bots()
        return self._after(score_before)

    def _arm_timer(self) -> None:
        g = self.game
        key = (g.turns_taken, g.over)
        if key == self._turn_key:
            return
        self._turn_key = key
        seat = self.seats[g.interaction.turn]
        leader_t, follower_t = self.cfg.timers()
        limit = leader_t if g.interaction.turn is Agent.LEADER else follower_t
        if g.over or limit is None or seat is None or seat.kind != "human":
            self.deadline = None
        else:
            self.deadline = self.clock() + limit

    def _maybe_finish(self) -> None:
        if self.game.over and not self.flushed:
            self.flushed = True
            self.record = RecordedInteraction.from_game(self.game, f"{self.room_id}-{self.seed}", self.map_config)
            if self.on_finish is not None:
                self.on_finish(self.record)

    def start(self) -> None:
        """Run bots if a bot holds the first turn (an all-bot room plays to the end)."""
        self.run_bots()

    # -- views ---------------------------------------------------------

    def instruction_queue(self, agent: Agent) -> dict:
        texts = [e.action.text for e in self.game.log if isinstance(e.action, Instruct)]
        done = sum(1 for e in self.game.log if e.actor is Agent.FOLLOWER and isinstance(e.action, Done))
        if agent is Agent.FOLLOWER:
            texts = texts[: done + 1]
        return message("instruction_queue", texts=texts, current=done)

    def state_update(self, agent: Agent, session: str) -> dict:
        g = self.game
        srv = self.cfg.server
        view = leader_view(g.world) if agent is Agent.LEADER else follower_view(g.world, srv.view_radius, srv.view_half_angle)
        return message(
            "state_update",
            room=self.room_id,
            seat=agent.value,
            session=session,
            view=view,
            turn=g.interaction.turn.value,
            steps=g.interaction.steps,
            score=g.score,
            turns_remaining=g.turns_remaining,
            events=len(g.log),
            over=g.over,
        )

    def broadcast(self) -> list[Outgoing]:
        out: list[Outgoing] = []
        g = self.game
        for session, agent in self.sessions().items():
            out.append((session, self.state_update(agent, session)))
            out.append((session, self.instruction_queue(agent)))
            if not g.over and g.interaction.turn is agent:
                out.append((session, message("your_turn", steps=g.interaction.steps, deadline=self.deadline_wall())))
        return out

    def deadline_wall(self) -> float | None:
        """Deadline as a Unix timestamp for clients."""
        if self.deadline is None:
            return None
        return time.time() + (self.deadline - self.clock())

    def _after(self, score_before: int) -> list[Outgoing]:
        out = self.broadcast()
        g = self.game
        extra = []
        if g.score != score_before:
            extra.append(message("score_event", score=g.score, turns_remaining=g.turns_remaining))
        if g.over:
            extra.append(message("game_over", score=g.score))
        for session in self.sessions():
            out.extend((session, m) for m in extra)
        return out


# ---------------------------------------------------------------------------
# Websocket service


class GameServer:
    def __init__(self, cfg: AppConfig, data_path: str | Path | None = None):
        self.cfg = cfg
        self.rooms: dict[str, Room] = {}
        self._locks: dict[str, asyncio.Lock] = {}
        self._timers: dict[str, asyncio.Task] = {}
        self._outboxes: dict[str, asyncio.Queue] = {}
        self.data_path = Path(data_path) if data_path else Path(cfg.server.data_dir) / "games.jsonl"
        self.finished: list[RecordedInteraction] = []
        self._server = None
        self.port: int | None = None

    def _flush(self, rec: RecordedInteraction) -> None:
        self.finished.append(rec)
        self.data_path.parent.mkdir(parents=True, exist_ok=True)
        save(self.data_path, [rec], append=True)
        log.info("game %s finished with score %d", rec.game_id, rec.final_score)

    def room(self, room_id: str, seed: int | None = None) -> Room:
        if room_id not in self.rooms:
            self.rooms[room_id] = Room(room_id, self.cfg, seed, on_finish=self._flush)
            self._locks[room_id] = asyncio.Lock()
            self.rooms[room_id].start()
        return self.rooms[room_id]

    def health(self, connection: ServerConnection, request: Request) -> Response | None:
        if request.path != "/health":
            return None
        body = json.dumps(
            {"status": "ok", "version": __version__, "protocol": PROTOCOL_VERSION, "rooms": len(self.rooms)}
        ).encode()
        headers = Headers([("Content-Type", "application/json"), ("Content-Length", str(len(body)))])
        return Response(http.HTTPStatus.OK.value, "OK", headers, body)

    async def _deliver(self, outs: list[Outgoing]) -> None:
        for session, msg in outs:
            box = self._outboxes.get(session)
            if box is not None:
                await box.put(msg)

    def _arm(self, room: Room) -> None:
        task = self._timers.pop(room.room_id, None)
        if task is not None:
            task.cancel()
        if room.deadline is not None and not room.game.over:
            self._timers[room.room_id] = asyncio.get_running_loop().create_task(self._timer(room))

    async def _timer(self, room: Room) -> None:
        try:
            await asyncio.sleep(max(0.0, room.deadline - room.clock()))
            async with self._locks[room.room_id]:
                outs = room.expire()
            await self._deliver(outs)
            self._timers.pop(room.room_id, None)
            self._arm(room)
        except asyncio.CancelledError:
            pass

    async def _writer(self, ws: ServerConnection, box: asyncio.Queue) -> None:
        try:
            while True:
                msg = await box.get()
                await ws.send(json.dumps(msg))
        except ConnectionClosed:
            pass

    async def handler(self, ws: ServerConnection) -> None:
        session = uuid.uuid4().hex
        box: asyncio.Queue = asyncio.Queue()
        self._outboxes[session] = box
        writer = asyncio.get_running_loop().create_task(self._writer(ws, box))
        room: Room | None = None
        try:
            async for raw in ws:
                try:
                    msg = parse_client_message(raw)
                except ProtocolError as exc:
                    await box.put(error(exc.code, exc.detail))
                    continue
                if msg["type"] == "join":
                    room_id = str(msg.get("room") or "default")
                    if room is not None and room.room_id != room_id:
                        await box.put(error("bad_message", "this connection already joined another room"))
                        continue
                    seed = msg.get("seed")
                    room = self.room(room_id, int(seed) if seed is not None else None)
                if room is None:
                    await box.put(error("not_joined", "join a room first"))
                    continue
                async with self._locks[room.room_id]:
                    outs = room.handle(session, msg)
                await self._deliver(outs)
                self._arm(room)
        except ConnectionClosed:
            pass
        finally:
            if room is not None:
                room.leave(session)
            self._outboxes.pop(session, None)
            writer.cancel()

    async def start(self) -> int:
        s = self.cfg.server
        self._server = await serve(self.handler, s.host, s.port, process_request=self.health)
        self.port = self._server.sockets[0].getsockname()[1] if s.port == 0 else s.port
        log.info("serving on %s:%d", s.host, self.port)
        return self.port

    async def stop(self) -> None:
        for task in self._timers.values():
            task.cancel()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Future()
        finally:
            await self.stop()


def run(cfg: AppConfig) -> None:
    asyncio.run(GameServer(cfg).serve_forever())
