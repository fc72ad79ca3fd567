"""Line protocol, PIR occupancy counting, hub state fold and the TCP hub.

Wire grammar (ASCII, single spaces, one ``\\n``-terminated line each)::

    EVT <node_id> <DOOR|PIR_IN|PIR_OUT|LUX0|LUX1|LUX2> <value> <ts_ms>
    CMD <light_id 0-2> <POWER_ON|POWER_OFF|INT_UP|INT_DOWN>
    ACK <light_id 0-2> <level 0-10>

Integers are canonical (no sign, no leading zeros). LUX values are
non-negative decimals ``d+[.d+]``; they are written in the shortest
positional form that reads back to the same float.
"""
from __future__ import annotations

import asyncio
import enum
import logging
import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import OutOfOrderError, ProtocolError, UnknownSensorError
from .state import MAX_LEVEL, N_LIGHTS, OccupancyCounter, RoomState

log = logging.getLogger(__name__)

MAX_LINE = 256
MAX_TS = 2**63 - 1
_TOKEN = re.compile(r"[A-Za-z0-9_.\-]{1,64}")
_UINT = re.compile(r"0|[1-9][0-9]*")
_DECIMAL = re.compile(r"[0-9]+(\.[0-9]+)?")


class SensorType(enum.Enum):
    DOOR = "DOOR"
    PIR_IN = "PIR_IN"
    PIR_OUT = "PIR_OUT"
    LUX0 = "LUX0"
    LUX1 = "LUX1"
    LUX2 = "LUX2"

    @property
    def lux_channel(self):
        return int(self.value[3]) if self.value.startswith("LUX") else None


LUX_SENSORS = (SensorType.LUX0, SensorType.LUX1, SensorType.LUX2)


class Action(enum.Enum):
    POWER_ON = "POWER_ON"
    POWER_OFF = "POWER_OFF"
    INT_UP = "INT_UP"
    INT_DOWN = "INT_DOWN"


@dataclass(frozen=True)
class Event:
    node_id: str
    sensor: SensorType
    value: float
    ts: int

    def __post_init__(self):
        if not isinstance(self.node_id, str) or not _TOKEN.fullmatch(self.node_id):
            raise ProtocolError(f"invalid node id {self.node_id!r}", "node_id")
        if not isinstance(self.sensor, SensorType):
            raise UnknownSensorError(f"unknown sensor {self.sensor!r}", "sensor")
        if isinstance(self.ts, bool) or not isinstance(self.ts, (int, np.integer)) or not 0 <= self.ts <= MAX_TS:
            raise ProtocolError(f"timestamp must be an integer in [0, 2^63), got {self.ts!r}", "ts")
        object.__setattr__(self, "ts", int(self.ts))
        v = self.value
        if self.sensor.lux_channel is not None:
            v = float(v) + 0.0          # folds -0.0 into 0.0
            if not np.isfinite(v) or v < 0:
                raise ProtocolError(f"lux must be finite and non-negative, got {self.value!r}", "value")
        elif self.sensor is SensorType.DOOR:
            if v not in (0, 1):
                raise ProtocolError(f"door value must be 0 or 1, got {self.value!r}", "value")
            v = int(v)
        else:
            if v != 1:
                raise ProtocolError(f"PIR value must be 1, got {self.value!r}", "value")
            v = 1
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Command:
    light_id: int
    action: Action

    def __post_init__(self):
        if isinstance(self.light_id, bool) or self.light_id not in range(N_LIGHTS):
            raise ProtocolError(f"light id must be 0..{N_LIGHTS - 1}, got {self.light_id!r}", "light_id")
        if not isinstance(self.action, Action):
            raise ProtocolError(f"unknown action {self.action!r}", "action")


@dataclass(frozen=True)
class Ack:
    light_id: int
    level: int

    def __post_init__(self):
        if isinstance(self.light_id, bool) or self.light_id not in range(N_LIGHTS):
            raise ProtocolError(f"light id must be 0..{N_LIGHTS - 1}, got {self.light_id!r}", "light_id")
        if isinstance(self.level, bool) or self.level not in range(MAX_LEVEL + 1):
            raise ProtocolError(f"level must be 0..{MAX_LEVEL}, got {self.level!r}", "level")


def format_lux(v: float) -> str:
    return np.format_float_positional(float(v) + 0.0, unique=True, trim="-")


def encode_message(msg) -> bytes:
    if isinstance(msg, Event):
        if msg.sensor.lux_channel is not None:
            value = format_lux(msg.value)
        else:
            value = str(int(msg.value))
        line = f"EVT {msg.node_id} {msg.sensor.value} {value} {msg.ts}"
    elif isinstance(msg, Command):
        line = f"CMD {msg.light_id} {msg.action.value}"
    elif isinstance(msg, Ack):
        line = f"ACK {msg.light_id} {msg.level}"
    else:
        raise ProtocolError(f"cannot encode {type(msg).__name__}", "type")
    return (line + "\n").encode("ascii")


def _uint(tok: str, field: str, hi: int = MAX_TS) -> int:
    if not _UINT.fullmatch(tok):
        raise ProtocolError(f"expected a non-negative integer, got {tok!r}", field)
    v = int(tok)
    if v > hi:
        raise ProtocolError(f"value {v} exceeds {hi}", field)
    return v


def decode_message(data):
    """Parse exactly one ``\\n``-terminated line (bytes or str)."""
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("ascii")
        except UnicodeDecodeError:
            raise ProtocolError("line is not ASCII", "line") from None
    else:
        text = str(data)
        if not text.isascii():
            raise ProtocolError("line is not ASCII", "line")
    if len(text) > MAX_LINE:
        raise ProtocolError(f"line longer than {MAX_LINE} bytes", "line")
    if not text.endswith("\n") or "\n" in text[:-1]:
        raise ProtocolError("expected exactly one newline-terminated line", "line")
    parts = text[:-1].split(" ")
    kind = parts[0]
    expected = {"EVT": 5, "CMD": 3, "ACK": 3}
    if kind not in expected:
        raise ProtocolError(f"unknown message type {kind!r}", "type")
    if len(parts) != expected[kind]:
        raise ProtocolError(f"{kind} takes {expected[kind] - 1} fields, got {len(parts) - 1}", "fields")
    if kind == "CMD":
        light = _uint(parts[1], "light_id", N_LIGHTS - 1)
        try:
            action = Action(parts[2])
        except ValueError:
            raise ProtocolError(f"unknown action {parts[2]!r}", "action") from None
        return Command(light, action)
    if kind == "ACK":
        return Ack(_uint(parts[1], "light_id", N_LIGHTS - 1), _uint(parts[2], "level", MAX_LEVEL))
    _, node, sensor_tok, value_tok, ts_tok = parts
    if not _TOKEN.fullmatch(node):
        raise ProtocolError(f"invalid node id {node!r}", "node_id")
    if not _TOKEN.fullmatch(sensor_tok):
        raise ProtocolError(f"malformed sensor token {sensor_tok!r}", "sensor")
    try:
        sensor = SensorType(sensor_tok)
    except ValueError:
        raise UnknownSensorError(f"unknown sensor {sensor_tok!r}", "sensor") from None
    if sensor.lux_channel is not None:
        if not _DECIMAL.fullmatch(value_tok):
            raise ProtocolError(f"lux must be a non-negative decimal, got {value_tok!r}", "value")
        value = float(value_tok)
        if not np.isfinite(value):
            raise ProtocolError(f"lux out of range: {value_tok!r}", "value")
    else:
        allowed = ("0", "1") if sensor is SensorType.DOOR else ("1",)
        if value_tok not in allowed:
            raise ProtocolError(f"{sensor.value} value must be one of {allowed}, got {value_tok!r}", "value")
        value = int(value_tok)
    return Event(node, sensor, value, _uint(ts_tok, "ts"))


# ---------------------------------------------------------------- occupancy

def pir_update(counter: OccupancyCounter, event) -> tuple:
    """Fold one PIR pulse into the counter; returns ``(counter, delta)``.

    A pending pulse pairs with the next pulse from the other sensor when
    their timestamps are at most ``window_ms`` apart: OUT then IN is an
    entry (+1), IN then OUT an exit (-1, floored at zero). Otherwise the new
    pulse replaces the pending one, so a pulse pairs at most once.
    """
    sensor = event.sensor.value if isinstance(event, Event) else SensorType(event[0]).value
    ts = event.ts if isinstance(event, Event) else int(event[1])
    if sensor not in ("PIR_IN", "PIR_OUT"):
        raise ValueError(f"pir_update needs a PIR event, got {sensor}")
    last = counter.last_seen(sensor)
    if last is not None and ts < last:
        raise OutOfOrderError(f"{sensor} timestamp {ts} precedes previous {last}")
    seen = dict(counter.last_ts)
    seen[sensor] = ts
    seen = tuple(sorted(seen.items()))
    p = counter.pending
    if p is not None and p[0] != sensor and abs(ts - p[1]) <= counter.window_ms:
        delta = 1 if sensor == "PIR_IN" else -1
        if counter.count + delta < 0:
            delta = 0
        return replace(counter, count=counter.count + delta, pending=None, last_ts=seen), delta
    return replace(counter, pending=(sensor, ts), last_ts=seen), 0


# ---------------------------------------------------------------- hub fold

def hub_ingest(state: RoomState, msg) -> RoomState:
    """Apply one decoded message to a room snapshot."""
    if isinstance(msg, Ack):
        levels = list(state.levels)
        levels[msg.light_id] = msg.level
        return replace(state, levels=tuple(levels))
    if isinstance(msg, Command):
        return state
    sensor = msg.sensor
    if sensor is SensorType.DOOR:
        return state.stamp("DOOR", msg.ts, door_open=bool(msg.value))
    if sensor in (SensorType.PIR_IN, SensorType.PIR_OUT):
        counter, _ = pir_update(state.counter, msg)
        return state.stamp(sensor.value, msg.ts, counter=counter)
    lux = list(state.lux)
    lux[sensor.lux_channel] = float(msg.value)
    return state.stamp(sensor.value, msg.ts, lux=tuple(lux))


def replay(lines, state: RoomState | None = None) -> RoomState:
    """Fold encoded lines in order, skipping lines that fail to parse or apply."""
    state = state or RoomState()
    for line in lines:
        try:
            state = hub_ingest(state, decode_message(line))
        except (ProtocolError, OutOfOrderError):
            continue
    return state


# ---------------------------------------------------------------- TCP hub

class Hub:
    """Accepts node connections and folds their events in arrival order.

    Every received line is appended to ``arrival_log`` before it is
    applied, so ``replay(hub.arrival_log)`` reproduces ``hub.state``.
    Lines that fail to decode are logged and skipped; a connection is
    closed only on a framing fault (over-long line).
    """

    def __init__(self, state: RoomState | None = None, on_transition=None):
        self.state = state or RoomState()
        self.arrival_log: list = []
        self.errors: list = []
        self.on_transition = on_transition
        self._lock = asyncio.Lock()
        self._server = None

    async def ingest_line(self, raw: bytes):
        async with self._lock:
            self.arrival_log.append(raw)
            try:
                new = hub_ingest(self.state, decode_message(raw))
            except (ProtocolError, OutOfOrderError) as exc:
                self.errors.append(str(exc))
                log.warning("rejected %r: %s", raw[:80], exc)
                return
            if new != self.state:
                self.state = new
                if self.on_transition:
                    self.on_transition(raw.decode("ascii").rstrip("\n"), new)

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        try:
            while True:
                try:
                    raw = await reader.readuntil(b"\n")
                except asyncio.IncompleteReadError as exc:
                    if exc.partial:
                        await self.ingest_line(exc.partial)
                    break
                except asyncio.LimitOverrunError:
                    self.errors.append("line too long; connection dropped")
                    log.warning("line too long; dropping connection")
                    break
                await self.ingest_line(raw)
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionError:
                pass

    async def start(self, host: str = "127.0.0.1", port: int = 0):
        self._server = await asyncio.start_server(self._handle, host, port, limit=MAX_LINE + 1)
        return self._server.sockets[0].getsockname()[:2]

    async def serve_forever(self):
        async with self._server:
            await self._server.serve_forever()

    async def stop(self):
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()


async def send_lines(host: str, port: int, lines) -> None:
    """Open one node connection and write ``lines`` (bytes) in order."""
    reader, writer = await asyncio.open_connection(host, port)
    for line in lines:
        writer.write(line)
        await writer.drain()
    writer.write_eof() if writer.can_write_eof() else None
    await reader.read()
    writer.close()
    await writer.wait_closed()


# ---------------------------------------------------------------- simulated nodes

@dataclass
class SensorNode:
    """Seeded event source for one sensor node.

    Timestamps advance by ``period_ms`` plus a uniform jitter in
    ``[0, jitter_ms]``, so they stay monotone per node.
    """

    node_id: str
    sensors: tuple = tuple(SensorType)
    seed: int = 0
    period_ms: int = 100
    jitter_ms: int = 40
    start_ms: int = 0

    def events(self, n: int) -> list:
        rng = np.random.default_rng(self.seed)
        ts = self.start_ms
        out = []
        for _ in range(n):
            ts += self.period_ms + int(rng.integers(0, self.jitter_ms + 1))
            sensor = self.sensors[int(rng.integers(len(self.sensors)))]
            if sensor.lux_channel is not None:
                value = round(float(rng.uniform(0, 800)), 1)
            elif sensor is SensorType.DOOR:
                value = int(rng.integers(2))
            else:
                value = 1
            out.append(Event(self.node_id, sensor, value, ts))
        return out
