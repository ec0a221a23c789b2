"""Headline-number checks shared by ``atomlink reproduce-paper`` and the tests."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

from atomlink import gates, quantum, sim
from atomlink.layout import ChainSpec, pack_zones
from atomlink.species import Reaction, SpeciesKind, builtin_species, classify_charge_exchange, get_species
from atomlink.tweezer import TweezerParams, plan_transport, trap_profile

# Corrected Bell fidelity for two gates at F = 0.9999 (p = 16e-4/15), from a
# kron-matrix / 16-Pauli Kraus evaluation independent of the engine.
# Closed form 1 - 1.5 p + 0.75 p^2 agrees to 1e-16.
NOISY_PROTOCOL_FIDELITY = 0.9998400085333331


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        mark = "PASS" if self.passed and self.seconds < self.budget else "FAIL"
        return f"[{mark}] {self.number}. {self.name}: {self.detail} ({self.seconds:.2f} s)"

    @property
    def ok(self) -> bool:
        return self.passed and self.seconds < self.budget


def _within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def li6_trap():
    return trap_profile(TweezerParams(0.25, 1e-6, 1064e-9, get_species("Li6")))


def check_trap():
    p = li6_trap()
    f_r, f_z = p.f_radial, p.f_axial
    ok = (
        _within(p.depth_mK, 10.0, 0.05)
        and _within(f_r, 1.2e6, 0.05)
        and _within(f_z, 0.28e6, 0.05)
    )
    detail = f"depth {p.depth_mK:.3f} mK, f_r {f_r / 1e6:.4f} MHz, f_z {f_z / 1e6:.4f} MHz"
    return ok, detail


def check_transport():
    a_max = li6_trap().max_acceleration
    t_trap = plan_transport(250e-6, a_max).duration
    t_ref = plan_transport(250e-6, 4e5).duration
    oracle = 2 * math.sqrt(250e-6 / 4e5)
    ok = t_trap <= 50e-6 and _within(t_ref, oracle, 1e-3) and _within(t_ref, 50e-6, 1e-3)
    return ok, f"250 um at a_max={a_max:.3g} m/s^2: {t_trap * 1e6:.2f} us; at 4e5 m/s^2: {t_ref * 1e6:.4f} us"


def _saturated_rate(gate_spec, seconds, arrival_rate):
    layout = pack_zones()
    pair = sim.facing_edge_ions(layout, 0, 1)
    leg = math.dist(layout.resolve(pair.a), layout.resolve(pair.b))
    # acceleration that makes the A->B hop take exactly 50 us
    tc = sim.TransportConfig(a_limit=4 * leg / (50e-6) ** 2)
    cfg = sim.SimConfig(
        layout, gate_spec, (sim.MessengerSpec(0, pair.a),), sim.Open(arrival_rate, (pair,)),
        tc, seed=1, duration_limit=seconds, queue_capacity=16,
    )
    return sim.run(cfg).throughput


def check_rates():
    r_col = sim.analytic_rate(300e-6, 50e-6)
    r_ryd = sim.analytic_rate(0.5e-6, 50e-6)
    s_col = _saturated_rate(gates.CollisionalGateSpec(), 1.0, 2e4)
    s_ryd = _saturated_rate(gates.RydbergGateSpec(), 0.2, 2e5)
    ok = (
        _within(r_col, 1538, 0.01) and _within(r_ryd, 1.96e4, 0.01)
        and _within(s_col, r_col, 0.01) and _within(s_ryd, r_ryd, 0.01)
    )
    detail = (f"analytic {r_col:.1f}/s, {r_ryd:.0f}/s; simulated {s_col:.1f}/s, {s_ryd:.0f}/s")
    return ok, detail


def check_protocol():
    f0 = quantum.run_messenger_protocol(math.pi, 0.0, postselect=0).bell_fidelity
    f1 = quantum.run_messenger_protocol(math.pi, 0.0, postselect=1).bell_fidelity
    fz = quantum.run_messenger_protocol(0.0, 0.0, postselect=0).bell_fidelity
    p = quantum.depolarizing_from_fidelity(0.9999)
    fn = quantum.run_messenger_protocol(math.pi, p, postselect=0, apply_correction=True).bell_fidelity
    ok = (
        abs(f0 - 1) < 1e-9 and abs(f1 - 1) < 1e-9 and abs(fz - 0.5) < 1e-9
        and fn >= 0.999 and abs(fn - NOISY_PROTOCOL_FIDELITY) < 1e-6
    )
    return ok, f"ideal {f0:.12f}/{f1:.12f}, phase 0 {fz:.12f}, noisy {fn:.10f}"


def endothermic_pairs():
    table = builtin_species()
    atoms = [s for s in table if s.kind is SpeciesKind.NEUTRAL_ATOM]
    ions = [s for s in table if s.kind is SpeciesKind.SINGLY_CHARGED_ION]
    found = {}
    for a, i in itertools.product(atoms, ions):
        v = classify_charge_exchange(a, i)
        if v.classification is Reaction.ENDOTHERMIC:
            found[(a.element, i.element)] = v.energy_gap
    return found


def check_charge_exchange():
    found = endothermic_pairs()
    ok = set(found) == {("Li", "Ba"), ("Li", "Ra")} and found[("Li", "Ba")] > found[("Li", "Ra")]
    detail = ", ".join(f"{a}+{i}+ gap {g:.1f} cm^-1" for (a, i), g in sorted(found.items()))
    return ok, detail or "none endothermic"


def brute_force_zone_count(fov_diameter, zone_pitch, chain: ChainSpec, edge_margin=10e-6):
    """Best zone count over the four symmetric grid placements, checking every ion."""
    r = fov_diameter / 2 - edge_margin
    best = 0
    n = int(fov_diameter / zone_pitch) + 3
    for ox, oy in itertools.product((0.0, 0.5), repeat=2):
        count = 0
        for i in range(-n, n + 1):
            for j in range(-n, n + 1):
                cx, cy = (i + ox) * zone_pitch, (j + oy) * zone_pitch
                ions = [
                    (cx - chain.extent / 2 + k * chain.ion_spacing, cy)
                    for k in range(chain.num_ions)
                ]
                if all(math.hypot(x, y) <= r * (1 + 1e-12) for x, y in ions):
                    count += 1
        best = max(best, count)
    return best


def check_layout():
    layout = pack_zones()
    oracle = brute_force_zone_count(1.2e-3, 250e-6, ChainSpec())
    ok = (
        16 <= layout.zone_count <= 20 and 480 <= layout.total_qubits <= 600
        and layout.zone_count == oracle
    )
    return ok, f"{layout.zone_count} zones, {layout.total_qubits} qubits (oracle {oracle})"


def check_rydberg():
    c6, r = gates.REFERENCE_C6, 2e-6
    aa = gates.vdw_strength(c6, gates.PairKind.ATOM_ATOM, r)
    ai = gates.vdw_strength(c6, gates.PairKind.ATOM_ION, r)
    ii = gates.vdw_strength(c6, gates.PairKind.ION_ION, r)
    r_b = gates.blockade_radius(gates.RydbergGateSpec(pair_kind=gates.PairKind.ATOM_ION))
    ok = ai / aa == 1 / 8 and ii / aa == 1 / 64 and r_b > 1e-6
    return ok, f"AtomIon/AtomAtom {ai / aa:g}, IonIon/AtomAtom {ii / aa:g}, atom-ion r_b {r_b * 1e6:.2f} um"


CRITERIA = [
    (1, "trap calibration", check_trap, 1.0),
    (2, "transport budget", check_transport, 1.0),
    (3, "rate reproduction", check_rates, 10.0),
    (4, "protocol correctness", check_protocol, 5.0),
    (5, "charge-exchange classification", check_charge_exchange, 1.0),
    (6, "layout scaling", check_layout, 1.0),
    (7, "Z-scaling", check_rydberg, 1.0),
]


def run_criterion(number: int) -> CriterionResult:
    num, name, fn, budget = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # reported as a failure, not a crash
        passed, detail = False, f"error: {exc!r}"
    return CriterionResult(num, name, passed, detail, time.perf_counter() - t0, budget)


def run_all() -> list[CriterionResult]:
    return [run_criterion(c[0]) for c in CRITERIA]
