"""Gaussian-beam tweezer traps and minimum-time transport of the trapped atom.

Trap relations (SI units throughout)::

    I0    = 2 P / (pi w0^2)
    U0    = alpha I0 / (2 eps0 c)
    z_R   = pi w0^2 / lambda
    w_r   = sqrt(4 U0 / (m w0^2))
    w_z   = sqrt(2 U0 / (m z_R^2))
    a_max = 2 U0 exp(-1/2) / (m w0)

``a_max`` is the steepest slope of the radial Gaussian well divided by the
mass; a moving trap accelerating harder than that spills the atom.

Note on the often-quoted "1e5 m/s^2 moves 250 um in under a microsecond":
kinematics gives 2*sqrt(d/a) = 100 us at that acceleration. Sub-microsecond
transfer over 250 um needs roughly 1e9 m/s^2. The planner reports kinematics.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import constants as csts

from atomlink.errors import ConfigurationError
from atomlink.species import AU_POLARIZABILITY, SpeciesKind, SpeciesRecord

# Demonstrated average speed for a tweezer-held Rb atom (0.55 um/us)
REFERENCE_SPEED = 0.55
MIN_INTERVALS = 200
DEFAULT_SAFETY_FACTOR = 0.5
# Varifocal-lens (axial) refocus time; no trajectory is modelled for it
AXIAL_TRANSPORT_TIME = 30e-6

# peak |a| of the 10-15-6 polynomial is this times d / T^2
_MJ_PEAK_ACCEL = 10.0 / math.sqrt(3.0)
_MJ_PEAK_VEL = 15.0 / 8.0


@dataclass(frozen=True)
class TweezerParams:
    power: float
    waist: float
    wavelength: float
    species: SpeciesRecord
    polarizability: float | None = None  # a.u., overrides the 1064 nm value

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("power must be >= 0")
        if self.waist <= 0 or self.wavelength <= 0:
            raise ValueError("waist and wavelength must be positive")

    def alpha_si(self) -> float:
        if self.species.kind is not SpeciesKind.NEUTRAL_ATOM:
            raise ConfigurationError(f"{self.species.name} is not a neutral atom")
        if self.polarizability is not None:
            return self.polarizability * AU_POLARIZABILITY
        if self.species.polarizability_1064 is None:
            raise ConfigurationError(f"{self.species.name} has no polarizability")
        if abs(self.wavelength - 1064e-9) > 1e-9:
            raise ConfigurationError(
                f"only the 1064 nm polarizability is tabulated for {self.species.name};"
                " pass polarizability= for other wavelengths"
            )
        return self.species.polarizability_1064 * AU_POLARIZABILITY


@dataclass(frozen=True)
class TrapProfile:
    depth: float
    omega_radial: float
    omega_axial: float
    rayleigh_range: float
    max_acceleration: float

    @property
    def depth_mK(self) -> float:
        return self.depth / csts.k * 1e3

    @property
    def f_radial(self) -> float:
        return self.omega_radial / (2 * math.pi)

    @property
    def f_axial(self) -> float:
        return self.omega_axial / (2 * math.pi)

    def safe_acceleration(self, safety_factor: float = DEFAULT_SAFETY_FACTOR) -> float:
        return safety_factor * self.max_acceleration


def trap_profile(params: TweezerParams) -> TrapProfile:
    m = params.species.mass
    w0 = params.waist
    i0 = 2 * params.power / (math.pi * w0**2)
    u0 = params.alpha_si() * i0 / (2 * csts.epsilon_0 * csts.c)
    z_r = math.pi * w0**2 / params.wavelength
    return TrapProfile(
        depth=u0,
        omega_radial=math.sqrt(4 * u0 / (m * w0**2)),
        omega_axial=math.sqrt(2 * u0 / (m * z_r**2)),
        rayleigh_range=z_r,
        max_acceleration=2 * u0 * math.exp(-0.5) / (m * w0),
    )


class ProfileKind(str, enum.Enum):
    BANG_BANG = "BangBang"
    TRAPEZOID_VELOCITY = "TrapezoidVelocity"
    MINIMUM_JERK = "MinimumJerk"


@dataclass(frozen=True, eq=False)
class TransportPlan:
    distance: float
    duration: float
    profile_kind: ProfileKind
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    peak_acceleration: float
    peak_velocity: float

    @property
    def samples(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.t.tolist(), self.x.tolist(), self.v.tolist(), self.a.tolist()))

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(
            path, np.column_stack([self.t, self.x, self.v, self.a]),
            delimiter=",", header="t,x,v,a", comments="", fmt="%.17g",
        )


def _check_limits(a_limit, v_limit):
    if not a_limit > 0:
        raise ValueError(f"a_limit must be positive, got {a_limit}")
    if v_limit is not None and not v_limit > 0:
        raise ValueError(f"v_limit must be positive, got {v_limit}")


def transport_duration(distance, a_limit, v_limit=None, profile_kind=ProfileKind.BANG_BANG):
    """Minimum duration for a rest-to-rest move; same timing as plan_transport."""
    _check_limits(a_limit, v_limit)
    if distance < 0:
        raise ValueError("distance must be >= 0")
    kind = ProfileKind(profile_kind)
    if distance == 0:
        return 0.0
    if kind is ProfileKind.BANG_BANG:
        return 2.0 * math.sqrt(distance / a_limit)
    if kind is ProfileKind.TRAPEZOID_VELOCITY:
        t_half = math.sqrt(distance / a_limit)
        if v_limit is None or a_limit * t_half <= v_limit:
            return 2.0 * t_half
        return distance / v_limit + v_limit / a_limit
    T = math.sqrt(_MJ_PEAK_ACCEL * distance / a_limit)
    if v_limit is not None:
        T = max(T, _MJ_PEAK_VEL * distance / v_limit)
    return T


def _phase_times(t0, t1, duration):
    n = max(1, math.ceil((t1 - t0) / duration * MIN_INTERVALS - 1e-9))
    return np.linspace(t0, t1, n + 1)


def _piecewise_const_accel(distance, duration, t_acc, a_lim):
    """Accelerate for t_acc, coast, decelerate for t_acc (t_acc <= duration/2).

    Each phase gets its own grid; phase boundaries appear twice, carrying the
    left and right limits of a(t).
    """
    v_peak = a_lim * t_acc
    t_dec = duration - t_acc
    x_acc = 0.5 * a_lim * t_acc**2
    parts = []
    t = _phase_times(0.0, t_acc, duration)
    parts.append((t, 0.5 * a_lim * t**2, a_lim * t, np.full_like(t, a_lim)))
    if t_dec - t_acc > 1e-12 * duration:
        t = _phase_times(t_acc, t_dec, duration)
        parts.append((t, x_acc + v_peak * (t - t_acc), np.full_like(t, v_peak), np.zeros_like(t)))
    t = _phase_times(t_dec, duration, duration)
    tr = duration - t
    parts.append((t, distance - 0.5 * a_lim * tr**2, a_lim * tr, np.full_like(t, -a_lim)))
    t, x, v, a = (np.concatenate(c) for c in zip(*parts))
    return t, np.clip(x, 0.0, distance), v, a, v_peak


def plan_transport(
    distance: float,
    a_limit: float,
    v_limit: float | None = None,
    profile_kind: ProfileKind | str = ProfileKind.BANG_BANG,
) -> TransportPlan:
    """Minimum-time rest-to-rest move of ``distance`` metres.

    BangBang ignores ``v_limit``; use TrapezoidVelocity to honour it. Samples
    are spaced at most duration/200 apart. Switching times are sampled twice
    (left and right limit of the acceleration), so trapezoid-rule integration
    of a(t) is exact.
    """
    kind = ProfileKind(profile_kind)
    duration = transport_duration(distance, a_limit, v_limit, kind)
    if duration == 0.0:
        z = np.zeros(1)
        return TransportPlan(0.0, 0.0, kind, z, z.copy(), z.copy(), z.copy(), 0.0, 0.0)

    if kind is ProfileKind.MINIMUM_JERK:
        t = np.linspace(0.0, duration, MIN_INTERVALS + 1)
        s = t / duration
        x = distance * (10 * s**3 - 15 * s**4 + 6 * s**5)
        v = distance / duration * (30 * s**2 - 60 * s**3 + 30 * s**4)
        a = distance / duration**2 * (60 * s - 180 * s**2 + 120 * s**3)
        peak_a = _MJ_PEAK_ACCEL * distance / duration**2
        peak_v = _MJ_PEAK_VEL * distance / duration
    else:
        t_half = math.sqrt(distance / a_limit)
        if kind is ProfileKind.TRAPEZOID_VELOCITY and v_limit is not None and a_limit * t_half > v_limit:
            t_acc = v_limit / a_limit
        else:
            t_acc = duration / 2
        t, x, v, a, peak_v = _piecewise_const_accel(distance, duration, t_acc, a_limit)
        peak_a = a_limit
    t[-1] = duration
    x[0], v[0], x[-1], v[-1] = 0.0, 0.0, distance, 0.0
    return TransportPlan(distance, duration, kind, t, x, v, a, peak_a, peak_v)


def reference_speed_check(plan: TransportPlan) -> float:
    """Average speed of ``plan`` in units of the 0.55 um/us Rb benchmark."""
    if not plan.duration > 0:
        raise ValueError("plan has zero duration")
    return (plan.distance / plan.duration) / REFERENCE_SPEED


@dataclass(frozen=True, eq=False)
class AodWaveform:
    t: np.ndarray
    drive_frequency: np.ndarray
    center_frequency: float
    scale: float  # m/Hz

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.drive_frequency.tolist()))

    def positions(self) -> np.ndarray:
        return (self.drive_frequency - self.center_frequency) * self.scale

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(
            path, np.column_stack([self.t, self.drive_frequency]),
            delimiter=",", header="t,f", comments="", fmt="%.17g",
        )


def emit_aod_waveform(plan: TransportPlan, center_frequency: float, scale: float) -> AodWaveform:
    if scale == 0:
        raise ValueError("AOD scale must be non-zero")
    f = center_frequency + plan.x / scale
    return AodWaveform(plan.t.copy(), f, float(center_frequency), float(scale))
