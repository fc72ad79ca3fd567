"""Immutable room snapshot shared by the hub and the controller."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .face import EmotionLabel
from .skeleton import PostureLabel

N_LIGHTS = 3
MAX_LEVEL = 10
DEFAULT_WINDOW_MS = 2000


@dataclass(frozen=True)
class OccupancyCounter:
    """People count from the PIR pair.

    ``pending`` is the unpaired pulse ``(sensor, ts)``; ``last_ts`` maps each
    PIR sensor name to its latest timestamp.
    """

    count: int = 0
    pending: tuple | None = None
    window_ms: int = DEFAULT_WINDOW_MS
    last_ts: tuple = ()

    def last_seen(self, sensor: str):
        return dict(self.last_ts).get(sensor)


@dataclass(frozen=True)
class RoomState:
    counter: OccupancyCounter = field(default_factory=OccupancyCounter)
    door_open: bool = False
    lux: tuple = (0.0,) * N_LIGHTS
    levels: tuple = (0,) * N_LIGHTS
    posture: PostureLabel | None = None
    emotion: EmotionLabel | None = None
    updated: tuple = ()          # sorted (source, ts) pairs

    @property
    def occupancy(self) -> int:
        return self.counter.count

    @property
    def mean_lux(self) -> float:
        return sum(self.lux) / len(self.lux)

    def stamp(self, source: str, ts: int, **changes) -> "RoomState":
        upd = dict(self.updated)
        upd[source] = ts
        return replace(self, updated=tuple(sorted(upd.items())), **changes)

    def summary(self) -> str:
        posture = self.posture.value if self.posture else "unknown"
        emotion = self.emotion.value if self.emotion else "unknown"
        lux = " ".join(f"{v:g}" for v in self.lux)
        levels = " ".join(str(v) for v in self.levels)
        return (f"occupancy={self.occupancy} door={'open' if self.door_open else 'closed'} "
                f"lux=[{lux}] levels=[{levels}] posture={posture} emotion={emotion}")
