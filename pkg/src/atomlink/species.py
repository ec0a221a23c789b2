"""Atomic data for the candidate messenger atoms and trapped-ion qubits.

Ionization energies are first ionization energies of the *neutral* element in
cm^-1 (NIST Atomic Spectra Database ground-state limits). Masses come from the
AME isotope tables; ion masses have one electron mass removed.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from scipy import constants as csts

from atomlink.errors import ConfigurationError

# hc in J per cm^-1
_HC_PER_CM = csts.h * csts.c * 100.0
AU_POLARIZABILITY = csts.physical_constants["atomic unit of electric polarizability"][0]

# 10 mK depth at 250 mW, w0 = 1 um, 1064 nm
LI6_CALIBRATED_POLARIZABILITY = 279.3


class SpeciesKind(str, enum.Enum):
    NEUTRAL_ATOM = "NeutralAtom"
    SINGLY_CHARGED_ION = "SinglyChargedIon"


class Reaction(str, enum.Enum):
    ENDOTHERMIC = "Endothermic"
    EXOTHERMIC = "Exothermic"
    THERMONEUTRAL = "Thermoneutral"


@dataclass(frozen=True)
class HyperfineState:
    F: Fraction
    m_F: Fraction

    def __post_init__(self):
        object.__setattr__(self, "F", Fraction(self.F))
        object.__setattr__(self, "m_F", Fraction(self.m_F))

    def __str__(self):
        return f"|F={self.F},m_F={self.m_F}>"


@dataclass(frozen=True)
class SpeciesRecord:
    name: str
    kind: SpeciesKind
    mass: float
    ionization_energy: float
    polarizability_1064: float | None = None
    qubit_states: tuple[HyperfineState, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "kind", SpeciesKind(self.kind))
        object.__setattr__(self, "qubit_states", tuple(self.qubit_states))
        if not self.mass > 0:
            raise ConfigurationError(f"{self.name}: mass must be positive")
        if not self.ionization_energy > 0:
            raise ConfigurationError(f"{self.name}: ionization energy must be positive")
        if self.polarizability_1064 is not None and not self.polarizability_1064 > 0:
            raise ConfigurationError(f"{self.name}: polarizability must be positive")
        if self.qubit_states:
            if len(self.qubit_states) != 2 or self.qubit_states[0] == self.qubit_states[1]:
                raise ConfigurationError(
                    f"{self.name}: qubit_states needs exactly two distinct labels"
                )

    @property
    def element(self) -> str:
        return re.match(r"[A-Z][a-z]?", self.name).group(0)

    @property
    def polarizability_si(self) -> float | None:
        """Polarizability at 1064 nm in C m^2 / V."""
        if self.polarizability_1064 is None:
            return None
        return self.polarizability_1064 * AU_POLARIZABILITY

    def qubit_label(self, bit: int) -> str:
        suffix = "a" if self.kind is SpeciesKind.NEUTRAL_ATOM else "i"
        return f"|{bit}_{suffix}> = {self.qubit_states[bit]}"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "mass": self.mass,
            "ionization_energy": self.ionization_energy,
            "polarizability_1064": self.polarizability_1064,
            "qubit_states": [[str(s.F), str(s.m_F)] for s in self.qubit_states],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpeciesRecord":
        try:
            return cls(
                name=d["name"],
                kind=SpeciesKind(d["kind"]),
                mass=float(d["mass"]),
                ionization_energy=float(d["ionization_energy"]),
                polarizability_1064=(
                    None if d.get("polarizability_1064") is None
                    else float(d["polarizability_1064"])
                ),
                qubit_states=tuple(
                    HyperfineState(Fraction(f), Fraction(m))
                    for f, m in d.get("qubit_states") or ()
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad species record {d!r}: {exc}") from exc


@dataclass(frozen=True)
class ChargeExchangeVerdict:
    classification: Reaction
    energy_gap: float  # cm^-1

    @property
    def energy_gap_joule(self) -> float:
        return wavenumber_to_joule(self.energy_gap)


def wavenumber_to_joule(wn: float) -> float:
    return wn * _HC_PER_CM


def wavenumber_to_ev(wn: float) -> float:
    return wn * _HC_PER_CM / csts.e


def _atom(name, mass_u, ie, alpha=None, qubits=()):
    return SpeciesRecord(
        name, SpeciesKind.NEUTRAL_ATOM, mass_u * csts.atomic_mass, ie, alpha, qubits
    )


def _ion(name, mass_u, ie, qubits=()):
    return SpeciesRecord(
        name, SpeciesKind.SINGLY_CHARGED_ION,
        mass_u * csts.atomic_mass - csts.m_e, ie, None, qubits,
    )


_half = Fraction(1, 2)

# (name, isotope mass / u, neutral-element IE / cm^-1, alpha(1064 nm) / a.u.)
_BUILTIN = (
    _atom("Li6", 6.0151228874, 43487.1142, LI6_CALIBRATED_POLARIZABILITY,
          (HyperfineState(_half, _half), HyperfineState(3 * _half, 3 * _half))),
    _atom("Li7", 7.0160034366, 43487.1142, LI6_CALIBRATED_POLARIZABILITY),
    _atom("Na23", 22.9897692820, 41449.451, 215.0),
    _atom("K39", 38.9637064864, 35009.8140, 599.0),
    _atom("Rb87", 86.9091805310, 33690.81, 687.0),
    _atom("Cs133", 132.9054519610, 31406.4677, 1163.0),
    _ion("Be9+", 9.012183065, 75192.64),
    _ion("Mg24+", 23.985041697, 61671.05),
    _ion("Ca40+", 39.962590863, 49305.9240),
    _ion("Sr88+", 87.9056125, 45932.2036),
    _ion("Ba137+", 136.90582714, 42034.91,
         (HyperfineState(1, 1), HyperfineState(2, 2))),
    _ion("Ba138+", 137.90524700, 42034.91),
    _ion("Ra226+", 226.0254103, 42573.36),
    _ion("Yb171+", 170.9363302, 50443.07),
    _ion("Yb174+", 173.9388664, 50443.07),
)


def builtin_species() -> list[SpeciesRecord]:
    return list(_BUILTIN)


def get_species(name: str, table: list[SpeciesRecord] | None = None) -> SpeciesRecord:
    """Look a species up by exact name ("Ba137+") or bare element ("Ba+", "Li").

    A bare element resolves to its first tabulated isotope.
    """
    table = builtin_species() if table is None else table
    for rec in table:
        if rec.name == name:
            return rec
    want_ion = name.endswith("+")
    element = name.rstrip("+")
    for rec in table:
        if rec.element == element and (rec.kind is SpeciesKind.SINGLY_CHARGED_ION) == want_ion:
            return rec
    raise KeyError(f"unknown species {name!r}")


def classify_charge_exchange(atom: SpeciesRecord, ion: SpeciesRecord) -> ChargeExchangeVerdict:
    """Energetics of atom + ion+ -> atom+ + neutral at ultracold energies.

    A positive gap (atom harder to ionize than the ion's parent element) means the
    reaction is endothermic and closed.
    """
    if atom.kind is not SpeciesKind.NEUTRAL_ATOM:
        raise ValueError(f"{atom.name} is not a neutral atom")
    if ion.kind is not SpeciesKind.SINGLY_CHARGED_ION:
        raise ValueError(f"{ion.name} is not a singly charged ion")
    gap = atom.ionization_energy - ion.ionization_energy
    if gap > 0:
        cls = Reaction.ENDOTHERMIC
    elif gap < 0:
        cls = Reaction.EXOTHERMIC
    else:
        cls = Reaction.THERMONEUTRAL
    return ChargeExchangeVerdict(cls, gap)


def dumps_table(table: list[SpeciesRecord]) -> str:
    return json.dumps([r.to_dict() for r in table], indent=2)


def loads_table(text: str) -> list[SpeciesRecord]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ConfigurationError("species table must be a JSON array")
    return [SpeciesRecord.from_dict(d) for d in data]


def save_table(path: str | Path, table: list[SpeciesRecord]) -> None:
    Path(path).write_text(dumps_table(table))


def load_table(path: str | Path) -> list[SpeciesRecord]:
    return loads_table(Path(path).read_text())
