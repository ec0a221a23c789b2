"""Dense state-vector / density-matrix engine and the messenger protocol.

Qubit k is bit k of the basis index (little-endian). The protocol register is
ion1 = 0, ion2 = 1, atom = 2.

The controlled-phase gate follows the collision convention: the |11> amplitude
picks up exp(-i phi) and the other three basis states are untouched.

Gate errors are two-qubit depolarizing channels applied after each entangling
gate, rho -> (1 - p) rho + p (I/4 (x) Tr_pair rho), so a gate of fidelity F
corresponds to p = 16 (1 - F) / 15.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_PURE_QUBITS = 14
MAX_MIXED_QUBITS = 7
ION1, ION2, ATOM = 0, 1, 2


@dataclass(frozen=True)
class Gate:
    name: str
    phi: float = 0.0
    matrix: np.ndarray | None = None

    @property
    def arity(self) -> int:
        return 2 if self.name == "CPhase" else 1

    def unitary(self) -> np.ndarray:
        if self.name == "CPhase":
            return np.diag([1, 1, 1, np.exp(-1j * self.phi)]).astype(complex)
        return self.matrix


_S2 = 1 / math.sqrt(2)
I2 = np.eye(2, dtype=complex)
H = Gate("H", matrix=np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex))
X = Gate("X", matrix=np.array([[0, 1], [1, 0]], dtype=complex))
Y = Gate("Y", matrix=np.array([[0, -1j], [1j, 0]], dtype=complex))
Z = Gate("Z", matrix=np.array([[1, 0], [0, -1]], dtype=complex))
PAULIS = (I2, X.matrix, Y.matrix, Z.matrix)


def CPhase(phi: float) -> Gate:
    return Gate("CPhase", phi=float(phi))


_GATES = {"H": H, "X": X, "Y": Y, "Z": Z}


def _as_gate(gate) -> Gate:
    if isinstance(gate, Gate):
        return gate
    try:
        return _GATES[gate]
    except KeyError:
        raise ValueError(f"unknown gate {gate!r}") from None


@dataclass
class PureState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_PURE_QUBITS:
            raise ValueError(f"pure states support 1..{MAX_PURE_QUBITS} qubits")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 2**self.num_qubits:
            raise ValueError("amplitude vector has the wrong length")

    @classmethod
    def zeros(cls, n: int) -> "PureState":
        amp = np.zeros(2**n, dtype=complex)
        amp[0] = 1.0
        return cls(n, amp)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def to_density(self) -> "MixedState":
        return MixedState(self.num_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass
class MixedState:
    num_qubits: int
    density_matrix: np.ndarray

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_MIXED_QUBITS:
            raise ValueError(f"mixed states support 1..{MAX_MIXED_QUBITS} qubits")
        dim = 2**self.num_qubits
        self.density_matrix = np.asarray(self.density_matrix, dtype=complex)
        if self.density_matrix.shape != (dim, dim):
            raise ValueError("density matrix has the wrong shape")

    @classmethod
    def zeros(cls, n: int) -> "MixedState":
        return PureState.zeros(n).to_density()

    @classmethod
    def maximally_mixed(cls, n: int) -> "MixedState":
        return cls(n, np.eye(2**n, dtype=complex) / 2**n)

    def trace(self) -> float:
        return float(np.trace(self.density_matrix).real)

    def check(self, tol: float = 1e-10) -> None:
        rho = self.density_matrix
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(self.trace() - 1) > tol:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(rho).min() < -1e-9:
            raise ValueError("density matrix is not positive semidefinite")


State = Union[PureState, MixedState]


def _axis(q: int, n: int) -> int:
    return n - 1 - q


def _apply_to_axes(tensor, u, axes):
    """Contract ``u`` (2^k x 2^k) into ``axes`` of ``tensor`` (first target = low bit)."""
    k = len(axes)
    u = u.reshape([2] * (2 * k))
    # u's row/col axes are ordered most-significant first: reverse targets
    ordered = list(reversed(axes))
    out = np.tensordot(u, tensor, axes=(list(range(k, 2 * k)), ordered))
    return np.moveaxis(out, list(range(k)), ordered)


def _check_targets(targets, n, arity):
    if len(targets) != arity:
        raise ValueError(f"gate needs {arity} target(s), got {len(targets)}")
    if len(set(targets)) != len(targets):
        raise ValueError("targets must be distinct")
    for q in targets:
        if not 0 <= q < n:
            raise ValueError(f"target {q} out of range for {n} qubits")


def apply_unitary(state: State, u: np.ndarray, targets) -> State:
    targets = [int(q) for q in np.atleast_1d(targets)]
    n = state.num_qubits
    _check_targets(targets, n, int(round(math.log2(u.shape[0]))))
    axes = [_axis(q, n) for q in targets]
    if isinstance(state, PureState):
        t = state.amplitudes.reshape([2] * n)
        return PureState(n, _apply_to_axes(t, u, axes).reshape(-1))
    t = state.density_matrix.reshape([2] * (2 * n))
    t = _apply_to_axes(t, u, axes)
    t = _apply_to_axes(t, u.conj(), [a + n for a in axes])
    return MixedState(n, t.reshape(2**n, 2**n))


def apply_gate(state: State, gate, targets) -> State:
    """Apply ``gate`` ("H", "X", "Z", or ``CPhase(phi)``) to ``targets``.

    For CPhase the first target is the low bit of the 4x4 unitary; the gate
    is symmetric so the order does not matter.
    """
    gate = _as_gate(gate)
    targets = list(np.atleast_1d(targets))
    _check_targets(targets, state.num_qubits, gate.arity)
    return apply_unitary(state, gate.unitary(), targets)


def depolarize(state: MixedState, p: float, targets) -> MixedState:
    """Two-qubit (or k-qubit) depolarizing channel on ``targets``."""
    if not 0 <= p <= 1:
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p}")
    if p == 0:
        return state
    n = state.num_qubits
    targets = list(targets)
    _check_targets(targets, n, len(targets))
    axes = [_axis(q, n) for q in targets]
    k = len(targets)
    t = state.density_matrix.reshape([2] * (2 * n))
    reduced = t
    # trace out targets: pair row axis a with column axis a + n
    for a in sorted(axes, reverse=True):
        reduced = np.trace(reduced, axis1=a, axis2=a + reduced.ndim // 2)
    rest = [a for a in range(n) if a not in axes]
    eye = np.eye(2**k, dtype=complex).reshape([2] * (2 * k)) / 2**k
    # build tensor in order (rest_rows, target_rows, rest_cols, target_cols)
    m = len(rest)
    full = np.multiply.outer(reduced, eye)  # rest_r, rest_c, tgt_r, tgt_c
    full = np.moveaxis(full, list(range(m, 2 * m)), list(range(m + k, 2 * m + k)))
    # now: rest_r, tgt_r, rest_c, tgt_c; map back to natural axis order
    src_rows = rest + sorted(axes)
    perm = np.argsort(src_rows)
    order = list(perm) + [i + n for i in perm]
    full = np.transpose(full, order)
    rho = (1 - p) * state.density_matrix + p * full.reshape(2**n, 2**n)
    return MixedState(n, rho)


def measure_branches(state: MixedState, qubit: int):
    """Both outcomes of a computational-basis measurement: [(prob, post_state)]."""
    n = state.num_qubits
    _check_targets([qubit], n, 1)
    idx = np.arange(2**n)
    out = []
    for bit in (0, 1):
        keep = ((idx >> qubit) & 1) == bit
        rho = np.where(np.outer(keep, keep), state.density_matrix, 0)
        prob = float(np.trace(rho).real)
        out.append((prob, MixedState(n, rho / prob) if prob > 0 else None))
    return out


def measure(state: PureState, qubit: int, rng: np.random.Generator, postselect=None):
    """Projective measurement of one qubit; returns (outcome, collapsed state, p1)."""
    n = state.num_qubits
    _check_targets([qubit], n, 1)
    idx = np.arange(2**n)
    ones = ((idx >> qubit) & 1) == 1
    p1 = float(np.sum(np.abs(state.amplitudes[ones]) ** 2))
    if postselect is None:
        outcome = int(rng.random() < p1)
    else:
        outcome = int(postselect)
    keep = ones if outcome else ~ones
    prob = p1 if outcome else 1 - p1
    if prob <= 0:
        raise ValueError(f"outcome {outcome} has zero probability")
    amp = np.where(keep, state.amplitudes, 0) / math.sqrt(prob)
    return outcome, PureState(n, amp), p1


def partial_trace(state: MixedState, keep) -> MixedState:
    n = state.num_qubits
    keep = sorted(keep)
    t = state.density_matrix.reshape([2] * (2 * n))
    for q in sorted(set(range(n)) - set(keep), reverse=True):
        a = _axis(q, n)
        nq = t.ndim // 2
        t = np.trace(t, axis1=a - (n - nq), axis2=a - (n - nq) + nq)
    k = len(keep)
    return MixedState(k, t.reshape(2**k, 2**k))


_BELL = {
    "PhiPlus": np.array([1, 0, 0, 1], dtype=complex) * _S2,
    "PhiMinus": np.array([1, 0, 0, -1], dtype=complex) * _S2,
    "PsiPlus": np.array([0, 1, 1, 0], dtype=complex) * _S2,
    "PsiMinus": np.array([0, 1, -1, 0], dtype=complex) * _S2,
}


def bell_state(target: str) -> np.ndarray:
    return _BELL[target].copy()


def bell_fidelity(state: State, target: str = "PhiPlus") -> float:
    if state.num_qubits != 2:
        raise ValueError("bell_fidelity needs a 2-qubit state")
    try:
        b = _BELL[target]
    except KeyError:
        raise ValueError(f"unknown Bell state {target!r}") from None
    if isinstance(state, PureState):
        return float(abs(np.vdot(b, state.amplitudes)) ** 2)
    return float(np.vdot(b, state.density_matrix @ b).real)


def depolarizing_from_fidelity(fidelity: float) -> float:
    """Two-qubit depolarizing strength for a gate of process fidelity ``fidelity``."""
    if not 0 <= fidelity <= 1:
        raise ValueError("fidelity must lie in [0, 1]")
    return min(1.0, 16.0 * (1.0 - fidelity) / 15.0)


@dataclass
class ProtocolResult:
    measurement_outcome: int
    post_state: State
    bell_fidelity: float
    correction_applied: bool
    branch_probabilities: tuple[float, float] = (0.5, 0.5)
    # outcome-averaged fidelity (mixed mode); equals bell_fidelity in pure mode
    mean_fidelity: float | None = None

    @property
    def target(self) -> str:
        if self.correction_applied or self.measurement_outcome == 0:
            return "PhiPlus"
        return "PsiPlus"

    def to_dict(self, include_state: bool = False) -> dict:
        d = {
            "measurement_outcome": self.measurement_outcome,
            "bell_fidelity": self.bell_fidelity,
            "target": self.target,
            "correction_applied": self.correction_applied,
            "branch_probabilities": list(self.branch_probabilities),
            "mean_fidelity": self.mean_fidelity,
        }
        if include_state:
            if isinstance(self.post_state, PureState):
                d["amplitudes"] = [[z.real, z.imag] for z in self.post_state.amplitudes]
            else:
                d["density_matrix"] = [
                    [[z.real, z.imag] for z in row] for row in self.post_state.density_matrix
                ]
        return d

    def to_json(self, include_state: bool = False) -> str:
        return json.dumps(self.to_dict(include_state), indent=2)


def _prepare(state):
    for q in (ION1, ION2, ATOM):
        state = apply_gate(state, H, q)
    return state


def _random_pauli_pair(rng):
    return int(rng.integers(4)), int(rng.integers(4))


def _run_pure(gate_phase, p, rng, apply_correction, postselect):
    psi = _prepare(PureState.zeros(3))
    for ion in (ION1, ION2):
        psi = apply_gate(psi, CPhase(gate_phase), [ATOM, ion])
        if p > 0 and rng.random() < p:
            pa, pi = _random_pauli_pair(rng)
            psi = apply_unitary(psi, PAULIS[pa], [ATOM])
            psi = apply_unitary(psi, PAULIS[pi], [ion])
    psi = apply_gate(psi, H, ATOM)
    outcome, psi, p1 = measure(psi, ATOM, rng, postselect)
    # atom is now in |outcome>: read off the ion amplitudes
    ions = psi.amplitudes.reshape(2, 4)[outcome]
    ions = PureState(2, ions / np.linalg.norm(ions))
    corrected = apply_correction and outcome == 1
    if corrected:
        ions = apply_gate(ions, X, ION2)
    target = "PhiPlus" if apply_correction or outcome == 0 else "PsiPlus"
    fid = bell_fidelity(ions, target)
    return ProtocolResult(outcome, ions, fid, apply_correction, (1 - p1, p1), fid)


def _run_mixed(gate_phase, p, rng, apply_correction, postselect):
    rho = _prepare(MixedState.zeros(3))
    for ion in (ION1, ION2):
        rho = apply_gate(rho, CPhase(gate_phase), [ATOM, ion])
        rho = depolarize(rho, p, [ATOM, ion])
    rho = apply_gate(rho, H, ATOM)
    branches = measure_branches(rho, ATOM)
    probs = (branches[0][0], branches[1][0])
    results = []
    for bit, (prob, post) in enumerate(branches):
        if post is None:
            results.append((None, 0.0))
            continue
        ions = partial_trace(post, [ION1, ION2])
        if apply_correction and bit == 1:
            ions = apply_gate(ions, X, ION2)
        target = "PhiPlus" if apply_correction or bit == 0 else "PsiPlus"
        results.append((ions, bell_fidelity(ions, target)))
    mean = sum(pr * f for pr, (_, f) in zip(probs, results))
    if postselect is None:
        outcome = int(rng.random() < probs[1])
    else:
        outcome = int(postselect)
        if probs[outcome] <= 0:
            raise ValueError(f"outcome {outcome} has zero probability")
    ions, fid = results[outcome]
    return ProtocolResult(outcome, ions, fid, apply_correction, probs, mean)


def run_messenger_protocol(
    gate_phase: float = math.pi,
    depolarizing_p: float = 0.0,
    seed: int | None = None,
    apply_correction: bool = False,
    mode: str = "mixed",
    postselect: int | None = None,
) -> ProtocolResult:
    """Entangle ion1 and ion2 through the messenger atom.

    All three qubits start in |+>; CPhase(atom, ion1); CPhase(atom, ion2);
    H on the atom; measure it. Outcome 0 leaves the ions in Phi+, outcome 1 in
    Psi+ (Phi+ after an X on ion2 when ``apply_correction``).

    ``mode="mixed"`` evolves the density matrix and keeps both measurement
    branches; the reported outcome is drawn from the seeded RNG unless
    ``postselect`` fixes it. ``mode="pure"`` runs one stochastic trajectory
    with a uniformly random two-qubit Pauli inserted with probability p after
    each CPhase.
    """
    if not 0 <= depolarizing_p <= 1:
        raise ValueError(f"depolarizing_p must lie in [0, 1], got {depolarizing_p}")
    if postselect not in (None, 0, 1):
        raise ValueError("postselect must be None, 0 or 1")
    rng = np.random.default_rng(seed)
    if mode == "mixed":
        return _run_mixed(gate_phase, depolarizing_p, rng, apply_correction, postselect)
    if mode == "pure":
        return _run_pure(gate_phase, depolarizing_p, rng, apply_correction, postselect)
    raise ValueError(f"unknown mode {mode!r}")


def trajectory_mean_fidelity(
    n: int, depolarizing_p: float, seed: int = 0, gate_phase: float = math.pi
) -> float:
    """Mean corrected Bell fidelity over ``n`` pure-state trajectories."""
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(n):
        total += _run_pure(gate_phase, depolarizing_p, rng, True, None).bell_fidelity
    return total / n


def pair_fidelity(depolarizing_p: float, gate_phase: float = math.pi) -> float:
    """Outcome-averaged, corrected ion-ion Bell fidelity from the density matrix."""
    return run_messenger_protocol(
        gate_phase, depolarizing_p, seed=0, apply_correction=True
    ).mean_fidelity
