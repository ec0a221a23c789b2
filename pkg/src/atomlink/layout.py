"""Ion-chain zones packed inside the tweezer objective's field of view.

Chains are horizontal, equally spaced strings. Zone centres sit on a square
grid of pitch ``zone_pitch`` centred on the FOV disk; a zone is kept when
both chain ends (hence the whole segment) lie at least ``edge_margin`` inside
the disk edge. Along each axis the grid can put a node on the centre line or
straddle it; all four choices are symmetric, and the one keeping the most
zones is used (ties: on-axis before straddling, x before y).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from atomlink.errors import ConfigurationError

DEFAULT_FOV = 1.2e-3
DEFAULT_PITCH = 250e-6
DEFAULT_EDGE_MARGIN = 10e-6
IDLE_OFFSET = 50e-6


@dataclass(frozen=True)
class ChainSpec:
    num_ions: int = 30
    ion_spacing: float = 5e-6

    def __post_init__(self):
        if self.num_ions < 1:
            raise ValueError("num_ions must be >= 1")
        if not self.ion_spacing > 0:
            raise ValueError("ion_spacing must be positive")

    @property
    def extent(self) -> float:
        return (self.num_ions - 1) * self.ion_spacing


@dataclass(frozen=True)
class Zone:
    id: int
    center: tuple[float, float]
    chain: ChainSpec
    ion_positions: tuple[tuple[float, float], ...]

    @property
    def num_ions(self) -> int:
        return self.chain.num_ions


@dataclass(frozen=True)
class ChipLayout:
    fov_diameter: float
    zone_pitch: float
    zones: tuple[Zone, ...]
    idle_positions: tuple[tuple[float, float], ...]
    edge_margin: float = DEFAULT_EDGE_MARGIN
    grid_offset: tuple[float, float] = field(default=(0.0, 0.0))

    @property
    def zone_count(self) -> int:
        return len(self.zones)

    @property
    def total_qubits(self) -> int:
        return sum(z.num_ions for z in self.zones)

    def zone(self, zone_id: int) -> Zone:
        for z in self.zones:
            if z.id == zone_id:
                return z
        raise ValueError(f"unknown zone {zone_id}")

    def ion_position(self, zone_id: int, ion: int) -> tuple[float, float]:
        z = self.zone(zone_id)
        if not 0 <= ion < z.num_ions:
            raise ValueError(f"zone {zone_id} has no ion {ion}")
        return z.ion_positions[ion]

    def idle_position(self, idle_id: int) -> tuple[float, float]:
        if not 0 <= idle_id < len(self.idle_positions):
            raise ValueError(f"unknown idle position {idle_id}")
        return self.idle_positions[idle_id]

    def resolve(self, endpoint) -> tuple[float, float]:
        """Position of an endpoint.

        Accepts ``(zone_id, ion_index)``, ``{"zone": z, "ion": i}``,
        ``{"idle": k}``, or an explicit ``{"xy": [x, y]}``.
        """
        if isinstance(endpoint, dict):
            if "idle" in endpoint:
                return self.idle_position(int(endpoint["idle"]))
            if "xy" in endpoint:
                x, y = endpoint["xy"]
                return (float(x), float(y))
            try:
                return self.ion_position(int(endpoint["zone"]), int(endpoint["ion"]))
            except KeyError:
                raise ValueError(f"bad endpoint {endpoint!r}") from None
        zone_id, ion = endpoint
        return self.ion_position(int(zone_id), int(ion))

    def to_dict(self) -> dict:
        return {
            "fov_diameter": self.fov_diameter,
            "zone_pitch": self.zone_pitch,
            "edge_margin": self.edge_margin,
            "grid_offset": list(self.grid_offset),
            "zones": [
                {
                    "id": z.id,
                    "center": list(z.center),
                    "chain": {"num_ions": z.chain.num_ions, "ion_spacing": z.chain.ion_spacing},
                    "ion_positions": [list(p) for p in z.ion_positions],
                }
                for z in self.zones
            ],
            "idle_positions": [list(p) for p in self.idle_positions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChipLayout":
        try:
            zones = tuple(
                Zone(
                    int(z["id"]),
                    tuple(map(float, z["center"])),
                    ChainSpec(int(z["chain"]["num_ions"]), float(z["chain"]["ion_spacing"])),
                    tuple(tuple(map(float, p)) for p in z["ion_positions"]),
                )
                for z in d["zones"]
            )
            layout = cls(
                float(d["fov_diameter"]),
                float(d["zone_pitch"]),
                zones,
                tuple(tuple(map(float, p)) for p in d.get("idle_positions", [])),
                float(d.get("edge_margin", DEFAULT_EDGE_MARGIN)),
                tuple(map(float, d.get("grid_offset", (0.0, 0.0)))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad layout document: {exc}") from exc
        r = layout.fov_diameter / 2
        for z in layout.zones:
            if len(z.ion_positions) != z.num_ions:
                raise ConfigurationError(f"zone {z.id}: ion count mismatch")
            for x, y in z.ion_positions:
                if math.hypot(x, y) > r * (1 + 1e-12):
                    raise ConfigurationError(f"zone {z.id}: ion outside the field of view")
        return layout

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load_json(cls, path: str | Path) -> "ChipLayout":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def write_ion_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["zone", "ion", "x", "y"])
            for z in self.zones:
                for i, (x, y) in enumerate(z.ion_positions):
                    w.writerow([z.id, i, repr(x), repr(y)])


def _axis_nodes(offset, pitch, reach):
    k = math.ceil(reach / pitch) + 1
    return [(i + offset) * pitch for i in range(-k, k + 1)]


def _fits(cx, cy, half, r_eff):
    return (abs(cx) + half) ** 2 + cy**2 <= r_eff**2 * (1 + 1e-12)


def _count(offset, pitch, half, r_eff):
    ox, oy = offset
    return sum(
        _fits(cx, cy, half, r_eff)
        for cy in _axis_nodes(oy, pitch, r_eff)
        for cx in _axis_nodes(ox, pitch, r_eff)
    )


def pack_zones(
    fov_diameter: float = DEFAULT_FOV,
    zone_pitch: float = DEFAULT_PITCH,
    chain: ChainSpec | None = None,
    edge_margin: float = DEFAULT_EDGE_MARGIN,
) -> ChipLayout:
    chain = chain or ChainSpec()
    if not fov_diameter > 0 or not zone_pitch > 0:
        raise ValueError("fov_diameter and zone_pitch must be positive")
    if edge_margin < 0:
        raise ValueError("edge_margin must be >= 0")
    if chain.extent >= fov_diameter:
        raise ValueError(
            f"chain extent {chain.extent:.3g} m does not fit a {fov_diameter:.3g} m field of view"
        )
    r_eff = fov_diameter / 2 - edge_margin
    half = chain.extent / 2
    if r_eff <= 0:
        offset = (0.0, 0.0)
    else:
        candidates = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]
        offset = max(candidates, key=lambda o: (_count(o, zone_pitch, half, r_eff), -candidates.index(o)))
    centers = []
    if r_eff > 0:
        for cy in _axis_nodes(offset[1], zone_pitch, r_eff):
            for cx in _axis_nodes(offset[0], zone_pitch, r_eff):
                if _fits(cx, cy, half, r_eff):
                    centers.append((cx, cy))
    # top row first, left to right
    centers.sort(key=lambda c: (-c[1], c[0]))
    zones = []
    idle = []
    offsets = np.arange(chain.num_ions) * chain.ion_spacing - half
    for zid, (cx, cy) in enumerate(centers):
        ions = tuple((float(cx + dx), float(cy)) for dx in offsets)
        zones.append(Zone(zid, (float(cx), float(cy)), chain, ions))
        idle.append((float(cx - half), float(cy - IDLE_OFFSET)))
    return ChipLayout(fov_diameter, zone_pitch, tuple(zones), tuple(idle), edge_margin, offset)


def distance(layout: ChipLayout, a, b) -> float:
    """Euclidean distance between two endpoints (see ``ChipLayout.resolve``)."""
    (x0, y0), (x1, y1) = layout.resolve(a), layout.resolve(b)
    return math.hypot(x1 - x0, y1 - y0)


def edge_ions(layout: ChipLayout, zone_id: int):
    """Left and right communication ions: ((index, (x, y)), (index, (x, y)))."""
    z = layout.zone(zone_id)
    right = z.num_ions - 1
    return (0, z.ion_positions[0]), (right, z.ion_positions[right])
