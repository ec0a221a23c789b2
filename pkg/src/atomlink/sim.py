"""Discrete-event simulation of messenger atoms servicing entanglement requests.

A request names two ions in different places on the chip. The assigned
messenger flies to the nearer ion, runs a gate, flies to the other ion, runs
the second gate, and the atom is measured. The ion pair is then delivered.

Time is kept in integer nanoseconds. Pending actions are ordered by
(time, event kind, request id, insertion sequence), so a run is a pure
function of its config and seed.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from atomlink import quantum
from atomlink.errors import ConfigurationError
from atomlink.gates import (
    CollisionalGateSpec,
    GateKind,
    RydbergGateSpec,
    gate_duration,
    gate_outcome,
)
from atomlink.layout import ChainSpec, ChipLayout, pack_zones
from atomlink.species import get_species
from atomlink.tweezer import (
    ProfileKind,
    TweezerParams,
    plan_transport,
    trap_profile,
    transport_duration,
)

NS = 1e-9


def to_ns(seconds: float) -> int:
    return int(round(seconds / NS))


class EventKind(enum.IntEnum):
    # value doubles as the tie-break order for simultaneous events
    RequestArrival = 0
    TransportStart = 1
    TransportEnd = 2
    GateStart = 3
    GateEnd = 4
    MeasureEnd = 5
    PairDelivered = 6
    RequestRejected = 7


@dataclass(frozen=True)
class Event:
    time_ns: int
    kind: EventKind
    request: int | None
    messenger: int | None
    detail: str = ""

    @property
    def time(self) -> float:
        return self.time_ns * NS


def default_a_limit(safety_factor: float = 0.5) -> float:
    """Half the spill limit of the 250 mW, 1 um, 1064 nm Li-6 tweezer."""
    prof = trap_profile(TweezerParams(0.25, 1e-6, 1064e-9, get_species("Li6")))
    return prof.safe_acceleration(safety_factor)


@dataclass(frozen=True)
class TransportConfig:
    a_limit: float = field(default_factory=default_a_limit)
    profile_kind: ProfileKind = ProfileKind.BANG_BANG
    v_limit: float | None = None
    extra_settle_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "profile_kind", ProfileKind(self.profile_kind))
        if not self.a_limit > 0:
            raise ConfigurationError("transport.a_limit must be positive")
        if self.v_limit is not None and not self.v_limit > 0:
            raise ConfigurationError("transport.v_limit must be positive")
        if self.extra_settle_time < 0:
            raise ConfigurationError("transport.extra_settle_time must be >= 0")

    def duration(self, dist: float) -> float:
        if dist == 0:
            return 0.0
        return (
            transport_duration(dist, self.a_limit, self.v_limit, self.profile_kind)
            + self.extra_settle_time
        )


@dataclass(frozen=True)
class MessengerSpec:
    id: int
    position: object  # endpoint accepted by ChipLayout.resolve


@dataclass(frozen=True)
class RequestPair:
    a: tuple[int, int]  # (zone, ion)
    b: tuple[int, int]


@dataclass(frozen=True)
class Closed:
    count: int
    pairs: tuple = ()


@dataclass(frozen=True)
class Open:
    rate: float
    pairs: tuple = ()


@dataclass(frozen=True)
class SimConfig:
    layout: ChipLayout
    gate: CollisionalGateSpec | RydbergGateSpec
    messengers: tuple[MessengerSpec, ...]
    request_model: Closed | Open
    transport: TransportConfig = field(default_factory=TransportConfig)
    seed: int = 0
    duration_limit: float = 1.0
    measure_time: float = 0.0
    ramp_overhead: float = 0.0
    queue_capacity: int | None = None
    strict_paths: bool = False
    exclusion_radius: float = 10e-6
    policy: str = "nearest-idle"

    @property
    def gate_kind(self) -> GateKind:
        return self.gate.kind

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return config_from_dict(d)

    def to_dict(self) -> dict:
        return config_to_dict(self)


@dataclass
class Metrics:
    delivered_pairs: int
    submitted: int
    rejected: int
    elapsed: float
    throughput: float
    mean_latency: float
    p95_latency: float
    messenger_utilization: dict[int, float]
    mean_pair_fidelity: float
    event_log: list[Event]
    latencies: list[float] = field(default_factory=list)
    legs: list[tuple] = field(default_factory=list, repr=False)
    counters: list[tuple[int, int, int, int, int]] = field(default_factory=list, repr=False)
    homes: dict[int, tuple[float, float]] = field(default_factory=dict, repr=False)
    transport: TransportConfig | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "delivered_pairs": self.delivered_pairs,
            "submitted": self.submitted,
            "rejected": self.rejected,
            "elapsed": self.elapsed,
            "throughput": self.throughput,
            "mean_latency": self.mean_latency,
            "p95_latency": self.p95_latency,
            "messenger_utilization": {str(k): v for k, v in self.messenger_utilization.items()},
            "mean_pair_fidelity": self.mean_pair_fidelity,
            "events": len(self.event_log),
            "event_log_sha256": event_log_checksum(self.event_log),
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def write_event_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(event_log_csv(self.event_log))

    def write_trace_csv(self, path, samples_per_leg: int = 20) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_ns", "messenger", "x", "y"])
            for row in position_trace(self, samples_per_leg):
                w.writerow([row[0], row[1], repr(row[2]), repr(row[3])])


def event_log_csv(log: list[Event]) -> str:
    lines = ["time_ns,kind,request,messenger,detail"]
    for e in log:
        req = "" if e.request is None else str(e.request)
        mes = "" if e.messenger is None else str(e.messenger)
        lines.append(f"{e.time_ns},{e.kind.name},{req},{mes},{e.detail}")
    return "\n".join(lines) + "\n"


def event_log_checksum(log: list[Event]) -> str:
    return hashlib.sha256(event_log_csv(log).encode()).hexdigest()


def analytic_rate(t_gate: float, t_transport: float, overheads: float = 0.0) -> float:
    """Pairs per second for one messenger: 1 / (2 t_gate + t_transport + overheads)."""
    if min(t_gate, t_transport, overheads) < 0:
        raise ValueError("times must be >= 0")
    total = 2 * t_gate + t_transport + overheads
    if total <= 0:
        raise ValueError("cycle time must be positive")
    return 1.0 / total


# -- assignment policies ---------------------------------------------------


@dataclass
class MessengerState:
    id: int
    position: tuple[float, float]
    home: tuple[float, float]
    busy: bool = False


@dataclass
class Request:
    id: int
    pair: RequestPair
    arrival_ns: int
    messenger: int | None = None
    stops: list = field(default_factory=list)
    step: int = 0


Policy = Callable[[list[MessengerState], tuple[float, float]], int]


def nearest_idle(idle: list[MessengerState], target: tuple[float, float]) -> int:
    """Closest idle messenger to ``target``; ties go to the lowest id."""
    best = min(idle, key=lambda m: (math.hypot(m.position[0] - target[0], m.position[1] - target[1]), m.id))
    return best.id


def lowest_id(idle: list[MessengerState], target) -> int:
    return min(m.id for m in idle)


POLICIES: dict[str, Policy] = {"nearest-idle": nearest_idle, "lowest-id": lowest_id}


def assign_policy(messengers, request_position, policy: str | Policy = "nearest-idle") -> int | None:
    """Pick an idle messenger for a request, or None to leave it in the backlog."""
    idle = [m for m in messengers if not m.busy]
    if not idle:
        return None
    fn = POLICIES[policy] if isinstance(policy, str) else policy
    return fn(idle, request_position)


# -- geometry helpers ------------------------------------------------------


def _dist(p, q) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


def segment_distance(p1, q1, p2, q2) -> float:
    """Minimum distance between segments p1-q1 and p2-q2."""
    p1, q1, p2, q2 = (np.asarray(v, dtype=float) for v in (p1, q1, p2, q2))
    d1, d2, r = q1 - p1, q2 - p2, p1 - p2
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    if a <= 1e-30 and e <= 1e-30:
        return float(np.linalg.norm(r))
    if a <= 1e-30:
        s, t = 0.0, min(max(f / e, 0.0), 1.0)
    else:
        c = d1 @ r
        if e <= 1e-30:
            t, s = 0.0, min(max(-c / a, 0.0), 1.0)
        else:
            b = d1 @ d2
            den = a * e - b * b
            s = min(max((b * f - c * e) / den, 0.0), 1.0) if den > 1e-30 else 0.0
            t = (b * s + f) / e
            if t < 0:
                t, s = 0.0, min(max(-c / a, 0.0), 1.0)
            elif t > 1:
                t, s = 1.0, min(max((b - c) / a, 0.0), 1.0)
    return float(np.linalg.norm(p1 + d1 * s - (p2 + d2 * t)))


def facing_edge_ions(layout: ChipLayout, zone_a: int, zone_b: int) -> RequestPair:
    """Edge ions of two zones that face each other (shortest edge-to-edge hop)."""
    za, zb = layout.zone(zone_a), layout.zone(zone_b)
    cands = []
    # right of A to left of B first, matching the usual left-to-right picture
    for ia in (za.num_ions - 1, 0):
        for ib in (0, zb.num_ions - 1):
            d = _dist(za.ion_positions[ia], zb.ion_positions[ib])
            cands.append((d, len(cands), ia, ib))
    _, _, ia, ib = min(cands)
    return RequestPair((zone_a, ia), (zone_b, ib))


# -- the engine ------------------------------------------------------------


class _Run:
    def __init__(self, config: SimConfig):
        self.cfg = config
        self.layout = config.layout
        self.rng = np.random.default_rng(config.seed)
        self.heap: list = []
        self.seq = 0
        self.log: list[Event] = []
        self.counters: list[tuple] = []
        self.queue: deque[Request] = deque()
        self.requests: dict[int, Request] = {}
        self.next_request = 0
        self.submitted = self.delivered = self.rejected = self.in_flight = 0
        self.latencies: list[int] = []
        self.legs: list[tuple] = []
        self.busy: list[tuple[int, int, int]] = []
        self.locks: dict[tuple[int, int], int | None] = {}
        self.lock_waiters: dict[tuple[int, int], deque] = {}
        self.active_moves: dict[int, tuple] = {}
        self.move_waiters: list = []
        self.t_gate_ns = to_ns(gate_duration(config.gate.kind, config.gate) + config.ramp_overhead)
        self.measure_ns = to_ns(config.measure_time)
        self.limit_ns = to_ns(config.duration_limit)
        self.fidelity = predicted_pair_fidelity(config.gate)
        self.policy = config.policy
        self.messengers = {}
        for ms in config.messengers:
            pos = config.layout.resolve(ms.position)
            self.messengers[ms.id] = MessengerState(ms.id, pos, pos)
        self.finished_ns: int | None = None

    # bookkeeping

    def push(self, t_ns, kind, req_id, fn, *args):
        key = -1 if req_id is None else req_id
        heapq.heappush(self.heap, (t_ns, int(kind), key, self.seq, fn, args))
        self.seq += 1

    def emit(self, t_ns, kind, req, mid, detail=""):
        self.log.append(Event(t_ns, kind, req, mid, detail))
        self.counters.append(
            (self.submitted, len(self.queue), self.in_flight, self.delivered, self.rejected)
        )

    def check_conservation(self):
        if self.submitted != self.delivered + self.in_flight + self.rejected + len(self.queue):
            raise RuntimeError("request conservation violated")

    # workload

    def _pairs(self):
        model = self.cfg.request_model
        pairs = list(model.pairs)
        if not pairs:
            ids = [z.id for z in self.layout.zones]
            if len(ids) < 2:
                raise ConfigurationError("need at least two zones for default request pairs")
            pairs = [facing_edge_ions(self.layout, ids[0], ids[1])]
        return pairs

    def new_request(self, t_ns, pair):
        r = Request(self.next_request, pair, t_ns)
        self.next_request += 1
        self.requests[r.id] = r
        self.submitted += 1
        cap = self.cfg.queue_capacity
        if cap is not None and len(self.queue) >= cap:
            self.rejected += 1
            self.emit(t_ns, EventKind.RequestArrival, r.id, None)
            self.emit(t_ns, EventKind.RequestRejected, r.id, None, "queue full")
            return
        self.queue.append(r)
        self.emit(t_ns, EventKind.RequestArrival, r.id, None, _pair_detail(r.pair))

    def on_open_arrival(self, t_ns):
        pairs = self.pairs
        pair = pairs[int(self.rng.integers(len(pairs)))] if len(pairs) > 1 else pairs[0]
        self.new_request(t_ns, pair)
        self.schedule_open_arrival(t_ns)

    def schedule_open_arrival(self, t_ns):
        gap = self.rng.exponential(1.0 / self.cfg.request_model.rate)
        self.push(t_ns + max(1, to_ns(gap)), EventKind.RequestArrival, None, self.on_open_arrival)

    # dispatch

    def dispatch(self, t_ns):
        while self.queue:
            req = self.queue[0]
            target = self.layout.resolve(req.pair.a)
            mid = assign_policy(self.messengers.values(), target, POLICIES.get(self.policy, self.policy))
            if mid is None:
                break
            self.queue.popleft()
            self.in_flight += 1
            m = self.messengers[mid]
            m.busy = True
            req.messenger = mid
            pa, pb = self.layout.resolve(req.pair.a), self.layout.resolve(req.pair.b)
            if _dist(m.position, pb) < _dist(m.position, pa):
                req.stops = [(req.pair.b, pb), (req.pair.a, pa)]
            else:
                req.stops = [(req.pair.a, pa), (req.pair.b, pb)]
            req.step = 0
            self.start_move(t_ns, m, req.stops[0][1], req)
        if not self.queue and not self.done():
            for m in self.messengers.values():
                if not m.busy and m.position != m.home:
                    m.busy = True
                    self.start_move(t_ns, m, m.home, None)

    def done(self):
        model = self.cfg.request_model
        return isinstance(model, Closed) and self.delivered + self.rejected == model.count

    # motion

    def start_move(self, t_ns, m, dest, req):
        d = _dist(m.position, dest)
        if d == 0:
            self.arrive(t_ns, m.id, dest, req.id if req else None)
            return
        if self.cfg.strict_paths:
            blocker = self._conflict(m.position, dest)
            if blocker is not None:
                self.move_waiters.append((m, dest, req))
                return
        dur = to_ns(self.cfg.transport.duration(d))
        rid = req.id if req else None
        self.emit(t_ns, EventKind.TransportStart, rid, m.id, f"to=({dest[0]:.9g};{dest[1]:.9g})")
        self.active_moves[m.id] = (m.position, dest)
        self.legs.append((m.id, t_ns, t_ns + dur, m.position, dest))
        self.busy.append((m.id, t_ns, t_ns + dur))
        self.push(t_ns + dur, EventKind.TransportEnd, rid, self.on_transport_end, m.id, dest, rid)

    def _conflict(self, p, q):
        r = self.cfg.exclusion_radius
        for mid, (a, b) in self.active_moves.items():
            if segment_distance(p, q, a, b) < r:
                return mid
        return None

    def on_transport_end(self, t_ns, mid, dest, rid):
        self.emit(t_ns, EventKind.TransportEnd, rid, mid)
        self.active_moves.pop(mid, None)
        if self.move_waiters:
            waiting, self.move_waiters = self.move_waiters, []
            for wm, wdest, wreq in waiting:
                self.start_move(t_ns, wm, wdest, wreq)
        self.arrive(t_ns, mid, dest, rid)

    def arrive(self, t_ns, mid, dest, rid):
        m = self.messengers[mid]
        m.position = dest
        if rid is None:
            m.busy = False
            return
        req = self.requests[rid]
        ion = req.stops[req.step][0]
        holder = self.locks.get(ion)
        if holder is None:
            self.start_gate(t_ns, req, ion)
        else:
            self.lock_waiters.setdefault(ion, deque()).append(req)

    # gates

    def start_gate(self, t_ns, req, ion):
        self.locks[ion] = req.id
        self.emit(t_ns, EventKind.GateStart, req.id, req.messenger, f"zone={ion[0]};ion={ion[1]}")
        self.busy.append((req.messenger, t_ns, t_ns + self.t_gate_ns))
        self.push(t_ns + self.t_gate_ns, EventKind.GateEnd, req.id, self.on_gate_end, req.id, ion)

    def on_gate_end(self, t_ns, rid, ion):
        req = self.requests[rid]
        self.emit(t_ns, EventKind.GateEnd, rid, req.messenger, f"zone={ion[0]};ion={ion[1]}")
        self.locks[ion] = None
        waiters = self.lock_waiters.get(ion)
        if waiters:
            self.start_gate(t_ns, waiters.popleft(), ion)
        req.step += 1
        m = self.messengers[req.messenger]
        if req.step < len(req.stops):
            self.start_move(t_ns, m, req.stops[req.step][1], req)
        else:
            self.busy.append((m.id, t_ns, t_ns + self.measure_ns))
            self.push(t_ns + self.measure_ns, EventKind.MeasureEnd, rid, self.on_measure_end, rid)

    def on_measure_end(self, t_ns, rid):
        req = self.requests[rid]
        self.emit(t_ns, EventKind.MeasureEnd, rid, req.messenger)
        self.in_flight -= 1
        self.delivered += 1
        self.latencies.append(t_ns - req.arrival_ns)
        self.emit(t_ns, EventKind.PairDelivered, rid, req.messenger, f"fidelity={self.fidelity:.12g}")
        self.messengers[req.messenger].busy = False
        if self.done():
            self.finished_ns = t_ns

    # main loop

    def run(self) -> Metrics:
        model = self.cfg.request_model
        self.pairs = self._pairs()
        if isinstance(model, Closed):
            for i in range(model.count):
                self.new_request(0, self.pairs[i % len(self.pairs)])
            if model.count == 0:
                self.finished_ns = 0
            else:
                self.dispatch(0)
        else:
            self.schedule_open_arrival(0)
        while self.heap and self.finished_ns is None:
            t_ns, _, _, _, fn, args = heapq.heappop(self.heap)
            if t_ns > self.limit_ns:
                break
            fn(t_ns, *args)
            self.dispatch(t_ns)
            self.check_conservation()
        end_ns = self.finished_ns if self.finished_ns is not None else self.limit_ns
        return self.metrics(end_ns)

    def metrics(self, end_ns) -> Metrics:
        elapsed = end_ns * NS
        lat = np.array(self.latencies, dtype=float) * NS
        util = {}
        for mid in self.messengers:
            # only the part of each activity inside [0, end] counts
            busy = sum(
                max(0, min(t1, end_ns) - t0) for bm, t0, t1 in self.busy if bm == mid
            )
            util[mid] = min(1.0, busy / end_ns) if end_ns > 0 else 0.0
        return Metrics(
            delivered_pairs=self.delivered,
            submitted=self.submitted,
            rejected=self.rejected,
            elapsed=elapsed,
            throughput=self.delivered / elapsed if elapsed > 0 else 0.0,
            mean_latency=float(lat.mean()) if lat.size else 0.0,
            p95_latency=float(np.percentile(lat, 95)) if lat.size else 0.0,
            messenger_utilization=util,
            mean_pair_fidelity=self.fidelity if self.delivered else 0.0,
            event_log=self.log,
            latencies=lat.tolist(),
            legs=self.legs,
            counters=self.counters,
            homes={mid: m.home for mid, m in self.messengers.items()},
            transport=self.cfg.transport,
        )


def _pair_detail(pair: RequestPair) -> str:
    return f"a={pair.a[0]}:{pair.a[1]};b={pair.b[0]}:{pair.b[1]}"


def predicted_pair_fidelity(gate_spec) -> float:
    """Delivered-pair fidelity: two gates of the gate's effective fidelity,
    each followed by the matching depolarizing channel, then corrected."""
    outcome = gate_outcome(gate_spec)
    p = quantum.depolarizing_from_fidelity(outcome.effective_fidelity)
    phase = gate_spec.phase if isinstance(gate_spec, CollisionalGateSpec) else math.pi
    return quantum.pair_fidelity(p, phase)


def validate(config: SimConfig) -> None:
    if not config.messengers:
        raise ConfigurationError("at least one messenger is required")
    ids = [m.id for m in config.messengers]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("messenger ids must be unique")
    for m in config.messengers:
        try:
            config.layout.resolve(m.position)
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(f"messenger {m.id}: {exc}") from exc
    model = config.request_model
    if isinstance(model, Closed):
        if model.count < 0:
            raise ConfigurationError("closed workload count must be >= 0")
    elif isinstance(model, Open):
        if not model.rate > 0:
            raise ConfigurationError("open workload rate must be positive")
    else:
        raise ConfigurationError(f"unknown request model {model!r}")
    for pair in model.pairs:
        for end in (pair.a, pair.b):
            try:
                config.layout.resolve(end)
            except (ValueError, TypeError) as exc:
                raise ConfigurationError(f"request endpoint {end}: {exc}") from exc
        if tuple(pair.a) == tuple(pair.b):
            raise ConfigurationError(f"request endpoints coincide: {pair}")
    if not config.duration_limit > 0:
        raise ConfigurationError("duration_limit must be positive")
    if config.measure_time < 0 or config.ramp_overhead < 0:
        raise ConfigurationError("measure_time and ramp_overhead must be >= 0")
    if config.queue_capacity is not None and config.queue_capacity < 0:
        raise ConfigurationError("queue_capacity must be >= 0")
    if isinstance(config.policy, str) and config.policy not in POLICIES:
        raise ConfigurationError(f"unknown policy {config.policy!r}")


def run(config: SimConfig) -> Metrics:
    validate(config)
    return _Run(config).run()


def single_messenger_cycle(config: SimConfig, pair: RequestPair | None = None) -> float:
    """Closed-form cycle time for one messenger shuttling between a pair's ions."""
    if pair is None:
        pair = config.request_model.pairs[0]
    leg = config.transport.duration(
        _dist(config.layout.resolve(pair.a), config.layout.resolve(pair.b))
    )
    t_gate = gate_duration(config.gate.kind, config.gate) + config.ramp_overhead
    return 2 * t_gate + leg + config.measure_time


# -- position trace --------------------------------------------------------


def position_trace(metrics: Metrics, samples_per_leg: int = 20):
    """Rows (time_ns, messenger, x, y): messenger positions over the run.

    Each transport leg is sampled along its straight path; positions are held
    constant between legs.
    """
    rows = []
    legs_by = {}
    for leg in metrics.legs:
        legs_by.setdefault(leg[0], []).append(leg)
    end_ns = to_ns(metrics.elapsed)
    for mid, home in sorted(metrics.homes.items()):
        pos = home
        rows.append((0, mid, pos[0], pos[1]))
        for _, t0, t1, p0, p1 in sorted(legs_by.get(mid, []), key=lambda l: l[1]):
            rows.append((t0, mid, p0[0], p0[1]))
            d = _dist(p0, p1)
            if t1 > t0 and d > 0:
                tc = metrics.transport or TransportConfig()
                plan = plan_transport(d, tc.a_limit, tc.v_limit, tc.profile_kind)
                idx = np.unique(np.linspace(0, len(plan.t) - 1, samples_per_leg + 1).round().astype(int))
                for i in idx[1:-1]:
                    f = plan.x[i] / d
                    rows.append((t0 + to_ns(plan.t[i]), mid,
                                 p0[0] + f * (p1[0] - p0[0]), p0[1] + f * (p1[1] - p0[1])))
                rows.append((t0 + to_ns(plan.duration), mid, p1[0], p1[1]))
            rows.append((t1, mid, p1[0], p1[1]))
            pos = p1
        rows.append((max(end_ns, rows[-1][0]), mid, pos[0], pos[1]))
    return rows


# -- config (de)serialisation ----------------------------------------------


def _parse_pair(layout: ChipLayout, item, where: str) -> RequestPair:
    try:
        if isinstance(item, dict):
            a, b = item["a"], item["b"]
            return RequestPair(
                (int(a["zone"]), int(a["ion"])), (int(b["zone"]), int(b["ion"]))
            )
        za, zb = item
        return facing_edge_ions(layout, int(za), int(zb))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: bad request pair {item!r} ({exc})") from exc


def _section(d, key, default=None):
    v = d.get(key, default)
    if v is not None and not isinstance(v, dict):
        raise ConfigurationError(f"{key}: expected an object")
    return v if v is not None else {}


def _build(where, fn, **kw):
    try:
        return fn(**kw)
    except TypeError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{where}: {exc}") from exc


def config_from_dict(d: dict) -> SimConfig:
    """Build a SimConfig from the JSON config document.

    Raises ConfigurationError naming the offending section/field.
    """
    if not isinstance(d, dict):
        raise ConfigurationError("config must be a JSON object")
    lay = _section(d, "layout")
    if "zones" in lay:
        layout = ChipLayout.from_dict(lay)
    else:
        chain = _build("layout.chain", ChainSpec, **_section(lay, "chain"))
        kw = {k: lay[k] for k in ("fov_diameter", "zone_pitch", "edge_margin") if k in lay}
        layout = _build("layout", pack_zones, chain=chain, **kw)

    gate = dict(_section(d, "gate"))
    kind = gate.pop("kind", "Collisional")
    try:
        kind = GateKind(kind)
    except ValueError:
        raise ConfigurationError(f"gate.kind: unknown gate kind {kind!r}") from None
    cls = CollisionalGateSpec if kind is GateKind.COLLISIONAL else RydbergGateSpec
    gate_spec = _build("gate", cls, **gate)

    tr = dict(_section(d, "transport"))
    try:
        transport = TransportConfig(**tr)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"transport: {exc}") from exc

    ms = d.get("messengers")
    if not isinstance(ms, list) or not ms:
        raise ConfigurationError("messengers: expected a non-empty list")
    messengers = []
    for i, m in enumerate(ms):
        if not isinstance(m, dict) or "id" not in m:
            raise ConfigurationError(f"messengers[{i}]: expected an object with an id")
        messengers.append(MessengerSpec(int(m["id"]), m.get("position", {"idle": i})))

    rm = _section(d, "request_model")
    pairs = tuple(
        _parse_pair(layout, p, f"request_model.pairs[{i}]")
        for i, p in enumerate(rm.get("pairs", []))
    )
    rtype = rm.get("type", "closed")
    try:
        if rtype == "closed":
            model = Closed(int(rm.get("count", 1)), pairs)
        elif rtype == "open":
            model = Open(float(rm["rate"]), pairs)
        else:
            raise ConfigurationError(f"request_model.type: unknown {rtype!r}")
    except KeyError as exc:
        raise ConfigurationError(f"request_model: missing {exc}") from exc

    known = {"layout", "gate", "transport", "messengers", "request_model", "seed",
             "duration_limit", "measure_time", "ramp_overhead", "queue_capacity",
             "strict_paths", "exclusion_radius", "policy"}
    unknown = set(d) - known
    if unknown:
        raise ConfigurationError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    extra = {k: d[k] for k in known - {"layout", "gate", "transport", "messengers", "request_model"} if k in d}
    cfg = _build("config", SimConfig, layout=layout, gate=gate_spec, messengers=tuple(messengers),
                 request_model=model, transport=transport, **extra)
    validate(cfg)
    return cfg


def config_to_dict(cfg: SimConfig) -> dict:
    from dataclasses import asdict

    gate = asdict(cfg.gate)
    gate["kind"] = cfg.gate.kind.value
    if "pair_kind" in gate:
        gate["pair_kind"] = cfg.gate.pair_kind.value
    model = cfg.request_model
    rm = {"type": "closed", "count": model.count} if isinstance(model, Closed) else {
        "type": "open", "rate": model.rate}
    rm["pairs"] = [
        {"a": {"zone": p.a[0], "ion": p.a[1]}, "b": {"zone": p.b[0], "ion": p.b[1]}}
        for p in model.pairs
    ]
    tr = asdict(cfg.transport)
    tr["profile_kind"] = cfg.transport.profile_kind.value
    return {
        "layout": cfg.layout.to_dict(),
        "gate": gate,
        "transport": tr,
        "messengers": [{"id": m.id, "position": _pos_json(m.position)} for m in cfg.messengers],
        "request_model": rm,
        "seed": cfg.seed,
        "duration_limit": cfg.duration_limit,
        "measure_time": cfg.measure_time,
        "ramp_overhead": cfg.ramp_overhead,
        "queue_capacity": cfg.queue_capacity,
        "strict_paths": cfg.strict_paths,
        "exclusion_radius": cfg.exclusion_radius,
        "policy": cfg.policy if isinstance(cfg.policy, str) else "custom",
    }


def _pos_json(p):
    if isinstance(p, dict):
        return p
    return {"zone": int(p[0]), "ion": int(p[1])}
