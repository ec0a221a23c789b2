"""Budgets for the two atom-ion entangling gates.

Collisional gate: a spin-dependent collision phase, degraded by inelastic
(spin-flip) loss at rate K_loss*n. Rydberg gate: van der Waals blockade with
C6 rescaled by the net core charge Z=2 of a singly charged ion, Z^-6 for an
ion-ion pair and effectively Z^-3 for an atom-ion pair.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from scipy import constants as csts


class GateKind(str, enum.Enum):
    COLLISIONAL = "Collisional"
    RYDBERG = "Rydberg"


class PairKind(str, enum.Enum):
    ATOM_ATOM = "AtomAtom"
    ATOM_ION = "AtomIon"
    ION_ION = "IonIon"


CORE_CHARGE_SCALE = {
    PairKind.ATOM_ATOM: 1.0,
    PairKind.ATOM_ION: 2.0**-3,
    PairKind.ION_ION: 2.0**-6,
}

# Representative atom-atom C6 near n ~ 50: h x 50 GHz um^6
REFERENCE_C6 = csts.h * 50e9 * 1e-36


@dataclass(frozen=True)
class CollisionalGateSpec:
    t_gate: float = 300e-6
    phase: float = math.pi
    base_fidelity: float = 0.9999
    k_loss: float = 0.0
    density: float = 0.0
    margin: float = 100.0

    def __post_init__(self):
        if not self.t_gate > 0:
            raise ValueError("t_gate must be positive")
        if not 0 < self.base_fidelity <= 1:
            raise ValueError("base_fidelity must lie in (0, 1]")
        if self.k_loss < 0 or self.density < 0:
            raise ValueError("k_loss and density must be >= 0")
        if not self.margin >= 1:
            raise ValueError("margin must be >= 1")

    @property
    def kind(self) -> GateKind:
        return GateKind.COLLISIONAL


@dataclass(frozen=True)
class RydbergGateSpec:
    t_gate: float = 0.5e-6
    c6_reference: float = REFERENCE_C6
    pair_kind: PairKind = PairKind.ATOM_ION
    rabi_frequency: float = 2 * math.pi * 1e6
    separation: float = 1e-6
    # no demonstrated atom-ion Rydberg gate; None means "treat as ideal"
    base_fidelity: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "pair_kind", PairKind(self.pair_kind))
        for name in ("t_gate", "c6_reference", "rabi_frequency", "separation"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.base_fidelity is not None and not 0 < self.base_fidelity <= 1:
            raise ValueError("base_fidelity must lie in (0, 1]")

    @property
    def kind(self) -> GateKind:
        return GateKind.RYDBERG


@dataclass(frozen=True)
class GateOutcome:
    feasible: bool
    effective_fidelity: float
    loss_probability: float
    diagnostics: str = field(default="")


def collisional_budget(spec: CollisionalGateSpec) -> GateOutcome:
    rate = spec.k_loss * spec.density
    loss = -math.expm1(-rate * spec.t_gate)
    # boundary counts as feasible; allow for rounding in k_loss*n*t_gate
    feasible = rate * spec.t_gate * spec.margin <= 1.0 + 1e-12
    fid = spec.base_fidelity * (1.0 - loss)
    ratio = rate * spec.t_gate
    diag = (
        f"K_loss*n*t_gate = {ratio:.3g} "
        f"({'within' if feasible else 'violates'} the 1/{spec.margin:g} margin)"
    )
    return GateOutcome(feasible, fid, loss, diag)


def rydberg_budget(spec: RydbergGateSpec) -> GateOutcome:
    """Blockade check at the configured separation; fidelity is pass-through."""
    r_b = blockade_radius(spec)
    feasible = spec.separation < r_b
    fid = 1.0 if spec.base_fidelity is None else spec.base_fidelity
    diag = f"blockade radius {r_b * 1e6:.3g} um at separation {spec.separation * 1e6:.3g} um"
    return GateOutcome(feasible, fid, 0.0, diag)


def gate_outcome(spec) -> GateOutcome:
    if isinstance(spec, CollisionalGateSpec):
        return collisional_budget(spec)
    if isinstance(spec, RydbergGateSpec):
        return rydberg_budget(spec)
    raise TypeError(f"not a gate spec: {spec!r}")


def effective_c6(c6_reference: float, pair_kind: PairKind | str) -> float:
    return c6_reference * CORE_CHARGE_SCALE[PairKind(pair_kind)]


def vdw_strength(c6_reference: float, pair_kind: PairKind | str, separation: float) -> float:
    if not separation > 0:
        raise ValueError("separation must be positive")
    return effective_c6(c6_reference, pair_kind) / separation**6


def blockade_radius(spec: RydbergGateSpec) -> float:
    """Distance at which the vdW shift equals hbar * Omega."""
    if not spec.rabi_frequency > 0:
        raise ValueError("rabi_frequency must be positive")
    c6 = effective_c6(spec.c6_reference, spec.pair_kind)
    return (c6 / (csts.hbar * spec.rabi_frequency)) ** (1.0 / 6.0)


def gate_duration(kind: GateKind | str, spec=None) -> float:
    kind = GateKind(kind)
    if spec is None:
        spec = CollisionalGateSpec() if kind is GateKind.COLLISIONAL else RydbergGateSpec()
    if spec.kind is not kind:
        raise ValueError(f"{kind.value} gate given a {spec.kind.value} spec")
    return spec.t_gate
