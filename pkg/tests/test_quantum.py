import itertools
import json
import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomlink.acceptance import NOISY_PROTOCOL_FIDELITY
from atomlink.quantum import (
    CPhase,
    H,
    MixedState,
    PAULIS,
    PureState,
    X,
    apply_gate,
    bell_fidelity,
    bell_state,
    depolarize,
    depolarizing_from_fidelity,
    measure,
    pair_fidelity,
    partial_trace,
    run_messenger_protocol,
    trajectory_mean_fidelity,
)

I2 = np.eye(2)
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])


def kron_op(ops):
    """Operator on n qubits from a {qubit: 2x2} map, little-endian (qubit 0 is the last factor)."""
    n = max(ops) + 1 if ops else 1
    return reduce(np.kron, [ops.get(q, I2) for q in reversed(range(n))])


def embed(u1, q, n):
    return reduce(np.kron, [u1 if k == q else I2 for k in reversed(range(n))])


def cphase_full(phi, a, b, n):
    diag = np.ones(2**n, dtype=complex)
    for i in range(2**n):
        if (i >> a) & 1 and (i >> b) & 1:
            diag[i] = np.exp(-1j * phi)
    return np.diag(diag)


def twirl(rho, p, a, b, n):
    out = (1 - p) * rho
    for pa, pb in itertools.product(PAULIS, repeat=2):
        k = embed(pa, a, n) @ embed(pb, b, n)
        out = out + p / 16 * k @ rho @ k.conj().T
    return out


def protocol_oracle(phi, p, correct=True):
    """Kron-matrix evaluation of the three-qubit protocol; returns (probs, fidelities)."""
    n = 3
    psi = np.zeros(8, dtype=complex)
    psi[0] = 1
    h_all = embed(H.matrix, 0, n) @ embed(H.matrix, 1, n) @ embed(H.matrix, 2, n)
    psi = h_all @ psi
    rho = np.outer(psi, psi.conj())
    for ion in (0, 1):
        u = cphase_full(phi, 2, ion, n)
        rho = twirl(u @ rho @ u.conj().T, p, 2, ion, n)
    h = embed(H.matrix, 2, n)
    rho = h @ rho @ h.conj().T
    probs, fids = [], []
    for bit, proj in enumerate((P0, P1)):
        pr = embed(proj, 2, n)
        branch = pr @ rho @ pr
        prob = np.trace(branch).real
        probs.append(prob)
        if prob < 1e-15:
            fids.append(0.0)
            continue
        ions = np.einsum("aibj->ij", (branch / prob).reshape(2, 4, 2, 4))
        target = bell_state("PhiPlus")
        if bit == 1:
            if correct:
                x2 = np.kron(X.matrix, I2)
                ions = x2 @ ions @ x2
            else:
                target = bell_state("PsiPlus")
        fids.append(np.vdot(target, ions @ target).real)
    return probs, fids


def random_pure(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState(n, v / np.linalg.norm(v))


def random_mixed(n, rng, rank=3):
    a = rng.normal(size=(2**n, rank)) + 1j * rng.normal(size=(2**n, rank))
    rho = a @ a.conj().T
    return MixedState(n, rho / np.trace(rho))


# --- gate primitives -------------------------------------------------------

def test_hadamard_on_zero():
    s = apply_gate(PureState.zeros(1), "H", 0)
    assert np.allclose(s.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-12)


def test_cphase_pi_on_plus_plus():
    s = PureState.zeros(2)
    for q in (0, 1):
        s = apply_gate(s, H, q)
    s = apply_gate(s, CPhase(math.pi), [0, 1])
    assert np.allclose(s.amplitudes, np.array([1, 1, 1, -1]) / 2, atol=1e-12)


def test_cphase_zero_is_identity():
    rng = np.random.default_rng(3)
    s = random_pure(3, rng)
    assert np.allclose(apply_gate(s, CPhase(0.0), [0, 2]).amplitudes, s.amplitudes, atol=1e-15)


def test_cnot_from_h_cz_h():
    for basis in range(4):
        amp = np.zeros(4, dtype=complex)
        amp[basis] = 1
        s = PureState(2, amp)
        s = apply_gate(s, H, 1)
        s = apply_gate(s, CPhase(math.pi), [0, 1])
        s = apply_gate(s, H, 1)
        c, t = basis & 1, (basis >> 1) & 1
        expected = np.zeros(4)
        expected[c | ((t ^ c) << 1)] = 1
        assert np.allclose(s.amplitudes, expected, atol=1e-12)


def test_engine_matches_kron_unitaries():
    rng = np.random.default_rng(11)
    s = random_pure(4, rng)
    out = apply_gate(apply_gate(s, H, 2), CPhase(0.7), [3, 1])
    u = cphase_full(0.7, 3, 1, 4) @ embed(H.matrix, 2, 4)
    assert np.allclose(out.amplitudes, u @ s.amplitudes, atol=1e-12)


def test_depolarize_matches_pauli_twirl():
    rng = np.random.default_rng(5)
    rho = random_mixed(3, rng)
    for a, b in [(2, 0), (0, 1), (1, 2)]:
        out = depolarize(rho, 0.3, [a, b])
        assert np.allclose(out.density_matrix, twirl(rho.density_matrix, 0.3, a, b, 3), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), phi=st.floats(-7, 7), p=st.floats(0, 1))
def test_norm_and_trace_preserved(seed, phi, p):
    rng = np.random.default_rng(seed)
    s = random_pure(3, rng)
    for g, t in [(H, [1]), (CPhase(phi), [0, 2]), (X, [2])]:
        s = apply_gate(s, g, t)
    assert s.norm() == pytest.approx(1, abs=1e-12)
    rho = random_mixed(3, rng)
    rho = depolarize(apply_gate(rho, CPhase(phi), [2, 1]), p, [2, 1])
    rho.check(1e-10)
    assert rho.trace() == pytest.approx(1, abs=1e-12)


def test_register_limits():
    with pytest.raises(ValueError):
        PureState.zeros(15)
    with pytest.raises(ValueError):
        MixedState.zeros(8)
    with pytest.raises(ValueError):
        apply_gate(PureState.zeros(2), H, 2)
    with pytest.raises(ValueError):
        depolarize(MixedState.zeros(2), 1.5, [0, 1])


def test_partial_trace_of_product():
    rng = np.random.default_rng(2)
    a, b = random_mixed(1, rng, 2), random_mixed(2, rng, 2)
    joint = MixedState(3, np.kron(b.density_matrix, a.density_matrix))
    assert np.allclose(partial_trace(joint, [0]).density_matrix, a.density_matrix, atol=1e-12)
    assert np.allclose(partial_trace(joint, [1, 2]).density_matrix, b.density_matrix, atol=1e-12)


# --- Bell fidelity ----------------------------------------------------------

def test_bell_fidelity_examples():
    phi = PureState(2, bell_state("PhiPlus"))
    assert bell_fidelity(phi) == pytest.approx(1, abs=1e-12)
    assert bell_fidelity(MixedState.maximally_mixed(2)) == pytest.approx(0.25, abs=1e-12)
    assert bell_fidelity(PureState.zeros(2)) == pytest.approx(0.5, abs=1e-12)
    assert bell_fidelity(PureState(2, bell_state("PsiPlus")), "PsiPlus") == pytest.approx(1)
    with pytest.raises(ValueError):
        bell_fidelity(PureState.zeros(3))


def test_depolarizing_from_fidelity():
    assert depolarizing_from_fidelity(1.0) == 0
    assert depolarizing_from_fidelity(0.9999) == pytest.approx(16e-4 / 15, rel=1e-12)
    with pytest.raises(ValueError):
        depolarizing_from_fidelity(1.1)


# --- protocol ---------------------------------------------------------------

@pytest.mark.parametrize("mode", ["mixed", "pure"])
def test_ideal_protocol(mode):
    r0 = run_messenger_protocol(math.pi, 0.0, postselect=0, mode=mode)
    r1 = run_messenger_protocol(math.pi, 0.0, postselect=1, mode=mode)
    assert r0.target == "PhiPlus" and r0.bell_fidelity == pytest.approx(1, abs=1e-9)
    assert r1.target == "PsiPlus" and r1.bell_fidelity == pytest.approx(1, abs=1e-9)
    r1c = run_messenger_protocol(math.pi, 0.0, postselect=1, apply_correction=True, mode=mode)
    assert r1c.target == "PhiPlus" and r1c.bell_fidelity == pytest.approx(1, abs=1e-9)
    assert r0.branch_probabilities == pytest.approx((0.5, 0.5), abs=1e-12)


def test_zero_phase_gives_product_state():
    r = run_messenger_protocol(0.0, 0.0, postselect=0)
    assert r.bell_fidelity == pytest.approx(0.5, abs=1e-9)
    assert r.branch_probabilities[1] == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        run_messenger_protocol(0.0, 0.0, postselect=1)


def test_noisy_protocol_frozen_value():
    p = depolarizing_from_fidelity(0.9999)
    r = run_messenger_protocol(math.pi, p, postselect=0, apply_correction=True)
    assert r.bell_fidelity >= 0.999
    assert r.bell_fidelity == pytest.approx(NOISY_PROTOCOL_FIDELITY, abs=1e-12)
    assert pair_fidelity(p) == pytest.approx(1 - 1.5 * p + 0.75 * p * p, abs=1e-14)


@pytest.mark.parametrize("phi", [math.pi, 0.0, 1.1, math.pi / 2])
@pytest.mark.parametrize("p", [0.0, 1e-3, 0.2, 1.0])
def test_protocol_against_kron_oracle(phi, p):
    probs, fids = protocol_oracle(phi, p)
    r = run_messenger_protocol(phi, p, seed=0, apply_correction=True)
    assert r.branch_probabilities == pytest.approx(tuple(probs), abs=1e-12)
    assert r.mean_fidelity == pytest.approx(probs[0] * fids[0] + probs[1] * fids[1], abs=1e-12)
    for bit in (0, 1):
        if probs[bit] > 1e-12:
            rb = run_messenger_protocol(phi, p, postselect=bit, apply_correction=True)
            assert rb.bell_fidelity == pytest.approx(fids[bit], abs=1e-12)


def test_pair_fidelity_monotone_in_p():
    ps = np.linspace(0, 1, 21)
    f = [pair_fidelity(p) for p in ps]
    assert all(b <= a + 1e-15 for a, b in zip(f, f[1:]))
    assert f[0] == pytest.approx(1)


def test_measurement_statistics_binomial():
    n = 10000
    ones = sum(run_messenger_protocol(math.pi, 0.0, seed=s, mode="pure").measurement_outcome
               for s in range(n))
    # 5 sigma around n/2
    assert abs(ones - n / 2) < 5 * math.sqrt(n / 4)


def test_pure_measure_collapse():
    s = apply_gate(PureState.zeros(1), H, 0)
    out, post, p1 = measure(s, 0, np.random.default_rng(0), postselect=1)
    assert out == 1 and p1 == pytest.approx(0.5)
    assert np.allclose(post.amplitudes, [0, 1])


def test_seeded_runs_repeat():
    a = run_messenger_protocol(math.pi, 0.3, seed=42, mode="pure")
    b = run_messenger_protocol(math.pi, 0.3, seed=42, mode="pure")
    assert a.measurement_outcome == b.measurement_outcome
    assert np.array_equal(a.post_state.amplitudes, b.post_state.amplitudes)


@pytest.mark.slow
def test_trajectories_agree_with_density_matrix():
    p = 0.01
    assert trajectory_mean_fidelity(100_000, p, seed=7) == pytest.approx(pair_fidelity(p), abs=0.005)


def test_trajectories_agree_small_sample():
    p = 0.2
    assert trajectory_mean_fidelity(4000, p, seed=1) == pytest.approx(pair_fidelity(p), abs=0.03)


def test_protocol_json():
    r = run_messenger_protocol(math.pi, 0.01, seed=1, apply_correction=True)
    d = json.loads(r.to_json(include_state=True))
    assert set(d) >= {"measurement_outcome", "bell_fidelity", "target", "correction_applied",
                      "density_matrix"}
    rho = np.array([[complex(*z) for z in row] for row in d["density_matrix"]])
    assert np.allclose(rho, r.post_state.density_matrix)
    pure = json.loads(run_messenger_protocol(seed=1, mode="pure").to_json(include_state=True))
    assert len(pure["amplitudes"]) == 4


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_messenger_protocol(math.pi, -0.1)
    with pytest.raises(ValueError):
        run_messenger_protocol(mode="quantum")
    with pytest.raises(ValueError):
        run_messenger_protocol(postselect=2)
