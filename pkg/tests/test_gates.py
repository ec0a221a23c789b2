import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import constants as csts

from atomlink.gates import (
    CollisionalGateSpec,
    GateKind,
    PairKind,
    RydbergGateSpec,
    blockade_radius,
    collisional_budget,
    gate_duration,
    vdw_strength,
)


def test_no_loss_channel():
    out = collisional_budget(CollisionalGateSpec())
    assert out.loss_probability == 0
    assert out.effective_fidelity == 0.9999
    assert out.feasible


def test_boundary_is_feasible():
    t = 300e-6
    spec = CollisionalGateSpec(t_gate=t, k_loss=1.0, density=1 / (100 * t))
    out = collisional_budget(spec)
    assert out.feasible
    assert out.loss_probability == pytest.approx(1 - math.exp(-0.01), rel=1e-12)
    assert out.loss_probability == pytest.approx(0.00995, abs=1e-5)
    assert out.effective_fidelity == pytest.approx(0.9999 * math.exp(-0.01), rel=1e-12)


def test_equal_rates_infeasible():
    t = 300e-6
    assert not collisional_budget(CollisionalGateSpec(t_gate=t, k_loss=1e-15, density=1 / (t * 1e-15))).feasible


@pytest.mark.parametrize("t_gate", [1e-6, 300e-6, 0.01])
@pytest.mark.parametrize("margin", [1.0, 100.0, 1e4])
def test_feasibility_flips_at_one(t_gate, margin):
    rate_at_boundary = 1.0 / (t_gate * margin)
    below = CollisionalGateSpec(t_gate=t_gate, k_loss=1.0, density=rate_at_boundary * (1 - 1e-6), margin=margin)
    above = CollisionalGateSpec(t_gate=t_gate, k_loss=1.0, density=rate_at_boundary * (1 + 1e-6), margin=margin)
    assert collisional_budget(below).feasible
    assert not collisional_budget(above).feasible


@given(
    k=st.floats(0, 1e-12), n=st.floats(0, 1e15), t=st.floats(1e-6, 1e-3),
    f=st.floats(1.01, 3.0),
)
def test_loss_monotonic(k, n, t, f):
    base = collisional_budget(CollisionalGateSpec(t_gate=t, k_loss=k, density=n))
    for spec in (
        CollisionalGateSpec(t_gate=t, k_loss=k * f, density=n),
        CollisionalGateSpec(t_gate=t, k_loss=k, density=n * f),
        CollisionalGateSpec(t_gate=t * f, k_loss=k, density=n),
    ):
        out = collisional_budget(spec)
        assert out.loss_probability >= base.loss_probability
        assert out.effective_fidelity <= base.effective_fidelity
        assert 0 <= out.loss_probability <= 1


def test_spec_validation():
    with pytest.raises(ValueError):
        CollisionalGateSpec(t_gate=0)
    with pytest.raises(ValueError):
        CollisionalGateSpec(base_fidelity=1.5)
    with pytest.raises(ValueError):
        CollisionalGateSpec(margin=0.5)
    with pytest.raises(ValueError):
        RydbergGateSpec(separation=0)


def test_vdw_atom_atom_is_raw():
    assert vdw_strength(3.0, PairKind.ATOM_ATOM, 2.0) == 3.0 / 64


@given(c6=st.floats(1e-60, 1e-40), r=st.floats(1e-7, 1e-4))
def test_vdw_core_charge_ratios(c6, r):
    aa = vdw_strength(c6, "AtomAtom", r)
    assert vdw_strength(c6, "IonIon", r) / aa == pytest.approx(1 / 64, rel=1e-14)
    assert vdw_strength(c6, "AtomIon", r) / aa == pytest.approx(1 / 8, rel=1e-14)
    assert vdw_strength(c6, "AtomAtom", 2 * r) == pytest.approx(aa / 64, rel=1e-14)
    assert vdw_strength(c6, "AtomAtom", r * 1.001) < aa


def test_vdw_bad_separation():
    with pytest.raises(ValueError):
        vdw_strength(1.0, "AtomAtom", 0.0)


def test_blockade_radius_definitional():
    omega = 2 * math.pi * 1e6
    spec = RydbergGateSpec(c6_reference=csts.hbar * omega, pair_kind="AtomAtom", rabi_frequency=omega)
    assert blockade_radius(spec) == pytest.approx(1.0, rel=1e-12)


def test_blockade_radius_reference():
    spec = RydbergGateSpec(pair_kind="AtomAtom")
    # (50 GHz um^6 / 1 MHz)^(1/6) um
    assert blockade_radius(spec) == pytest.approx(5e4 ** (1 / 6) * 1e-6, rel=1e-12)
    assert blockade_radius(spec) == pytest.approx(6.1e-6, rel=0.01)
    ai = blockade_radius(RydbergGateSpec(pair_kind="AtomIon"))
    assert blockade_radius(spec) / ai == pytest.approx(8 ** (1 / 6), rel=1e-12)
    assert ai > 1e-6


@given(c=st.floats(1e-3, 1e3))
def test_blockade_rescaling_invariance(c):
    a = RydbergGateSpec()
    b = RydbergGateSpec(c6_reference=a.c6_reference * c, rabi_frequency=a.rabi_frequency * c)
    assert blockade_radius(b) == pytest.approx(blockade_radius(a), rel=1e-12)


def test_gate_durations():
    assert gate_duration(GateKind.COLLISIONAL) == 300e-6
    assert gate_duration("Rydberg") == 0.5e-6
    assert gate_duration("Collisional", CollisionalGateSpec(t_gate=10e-6)) == 10e-6
    with pytest.raises(ValueError):
        gate_duration("Collisional", RydbergGateSpec())
