import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from qauth import quantum_core as qc


def bell(sign):
    ket = np.zeros(4, complex)
    ket[0], ket[3] = 1, sign
    return np.outer(ket, ket.conj()) / 2


def random_state(rng, labels):
    dim = 2 ** len(labels)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return qc.QuantumState(rho / np.trace(rho), tuple(labels))


seeds = st.integers(0, 2**32 - 1)


# -- gates and states -----------------------------------------------------------

@pytest.mark.parametrize("gate", [qc.X, qc.Z, qc.H, qc.ZX, qc.CX, qc.CZX, qc.ANTI_CX])
def test_named_gates_unitary(gate):
    assert np.max(np.abs(gate.conj().T @ gate - np.eye(gate.shape[0]))) <= 1e-12


def test_check_unitary_rejects():
    with pytest.raises(ValueError):
        qc.check_unitary(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        qc.check_unitary(np.ones((2, 3)))


@pytest.mark.parametrize("matrix", [
    np.diag([0.7, 0.7]),
    np.array([[0.5, 0.5], [0.1, 0.5]]),
    np.diag([1.5, -0.5]),
])
def test_invalid_states_rejected(matrix):
    state = qc.QuantumState(matrix.astype(complex), ("C",))
    assert not state.is_valid()
    with pytest.raises(qc.QuantumStateError):
        state.check()


def test_malformed_states_rejected():
    with pytest.raises(qc.QuantumStateError):
        qc.QuantumState(np.eye(2) / 2, ("C", "C"))
    with pytest.raises(qc.QuantumStateError):
        qc.QuantumState(np.eye(4) / 4, ("C",))


@pytest.mark.parametrize("m,sign", [(0, 1), (1, -1)])
def test_generation_stage(m, sign):
    state = qc.generation_stage(m)
    assert state.labels == ("C", "T")
    np.testing.assert_allclose(state.matrix, bell(sign), atol=1e-15)
    np.testing.assert_allclose(state.partial_trace("T").matrix, np.eye(2) / 2, atol=1e-15)


def test_generation_rejects_bad_gate_choice():
    with pytest.raises(ValueError):
        qc.generation_stage(2)


@pytest.mark.parametrize("m", [0, 1])
def test_noiseless_round_trip(m):
    res = qc.verification_stage(qc.generation_stage(m), outcome=m)
    assert res.probability == pytest.approx(1.0, abs=1e-14)
    expected = np.zeros((4, 4))
    expected[2 * m + 1, 2 * m + 1] = 1
    np.testing.assert_allclose(res.post_state.matrix, expected, atol=1e-14)


def test_verification_on_mixed_control_is_fair():
    rng = np.random.default_rng(3)
    for _ in range(20):
        state = qc.QuantumState.maximally_mixed(("C",)).tensor(qc.haar_random_qubit(rng, "T"))
        probs = qc.outcome_probabilities(
            qc.QuantumState(state.matrix, state.labels).apply(qc.ANTI_CX, ["C", "T"]).apply(qc.H, ["C"]),
            "C")
        assert probs[0] == pytest.approx(0.5, abs=1e-14)
        assert qc.verification_stage(state, outcome=0).probability == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("m,sign", [(0, 1), (1, -1)])
def test_protocol_half_targets(m, sign):
    res = qc.protocol_half_stage(qc.generation_stage(m), outcome=0)
    assert res.probability == pytest.approx(1.0, abs=1e-14)
    target = res.post_state.partial_trace("C").matrix
    pm = np.array([1, sign]) / np.sqrt(2)
    np.testing.assert_allclose(target, np.outer(pm, pm), atol=1e-14)


def test_protocol_half_with_mixed_control():
    state = qc.QuantumState.maximally_mixed(("C",)).tensor(qc.QuantumState.basis([1], ("T",)))
    assert qc.protocol_half_stage(state, outcome=0).probability == pytest.approx(0.5, abs=1e-15)


def test_measurement_probabilities_sum_to_one():
    rng = np.random.default_rng(5)
    for _ in range(50):
        s = random_state(rng, "CTA")
        for lab in "CTA":
            assert qc.outcome_probabilities(s, lab).sum() == pytest.approx(1.0, abs=1e-12)


def test_measure_sampling_and_forced_outcome():
    plus = qc.QuantumState.from_ket([1, 1], ("C",))
    rng = np.random.default_rng(11)
    outs = [qc.measure(plus, "C", rng).outcome for _ in range(4000)]
    assert abs(np.mean(outs) - 0.5) < 0.03
    with pytest.raises(qc.QuantumStateError):
        qc.measure(qc.QuantumState.basis([0], ("C",)), "C", outcome=1)


# -- partial trace and ordering -------------------------------------------------------

def test_partial_trace_product_and_commutes():
    rng = np.random.default_rng(7)
    rho, sigma = random_state(rng, "C"), random_state(rng, "A")
    np.testing.assert_allclose(rho.tensor(sigma).partial_trace("A").matrix, rho.matrix, atol=1e-14)
    s = random_state(rng, "CTA")
    a = s.partial_trace("C").partial_trace("T").matrix
    b = s.partial_trace("T").partial_trace("C").matrix
    c = s.partial_trace(["C", "T"]).matrix
    np.testing.assert_allclose(a, b, atol=1e-14)
    np.testing.assert_allclose(a, c, atol=1e-14)
    with pytest.raises(ValueError):
        s.partial_trace("Q")


def test_reorder_is_a_relabeling():
    rng = np.random.default_rng(8)
    rho, sigma = random_state(rng, "C"), random_state(rng, "T")
    ct = rho.tensor(sigma)
    tc = sigma.tensor(rho)
    np.testing.assert_allclose(ct.reorder(("T", "C")).matrix, tc.matrix, atol=1e-14)


# -- channels -------------------------------------------------------------------------

def test_depolarizing_zero_is_identity_and_one_is_mixed():
    rng = np.random.default_rng(9)
    s = random_state(rng, "CT")
    np.testing.assert_allclose(qc.depolarizing(s, 0.0, ["C"]).matrix, s.matrix, atol=0)
    full = qc.depolarizing(s, 1.0, ["C", "T"]).matrix
    np.testing.assert_allclose(full, np.eye(4) / 4, atol=1e-15)


def test_amplitude_damping_long_time():
    rng = np.random.default_rng(10)
    s = random_state(rng, "C")
    out = qc.amplitude_damping(s, 1e6, 1.0, "C")
    np.testing.assert_allclose(out.matrix, np.diag([1, 0]), atol=1e-12)


def _lindblad_expm(L_ops, rho, t):
    """Solve d rho/dt = sum_k L rho L^+ - {L^+ L, rho}/2 by exponentiating the superoperator."""
    d = rho.shape[0]
    eye = np.eye(d)
    gen = np.zeros((d * d, d * d), complex)
    for L in L_ops:
        LdL = L.conj().T @ L
        # row-major vec: vec(A rho B) = (A kron B^T) vec(rho)
        gen += np.kron(L, L.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.T)
    return (expm(gen * t) @ rho.reshape(-1)).reshape(d, d)


def test_phase_damping_at_T2_matches_lindblad():
    T2 = 295.35e-6
    plus = qc.QuantumState.from_ket([1, 1], ("C",))
    out = qc.phase_damping(plus, T2, T2, "C").matrix
    oracle = _lindblad_expm([np.sqrt(1 / (2 * T2)) * qc.Z], plus.matrix, T2)
    np.testing.assert_allclose(out, oracle, atol=1e-14)
    assert out[0, 1].real == pytest.approx(0.5 * np.exp(-1), rel=1e-14)


@pytest.mark.parametrize("t", [0.0, 10e-6, 223.44e-6, 1e-3])
def test_amplitude_damping_matches_lindblad(t):
    T1 = 223.44e-6
    rng = np.random.default_rng(12)
    s = random_state(rng, "C")
    sm = np.array([[0, 1], [0, 0]], complex) / np.sqrt(T1)
    oracle = _lindblad_expm([sm], s.matrix, t)
    np.testing.assert_allclose(qc.amplitude_damping(s, t, T1, "C").matrix, oracle, atol=1e-13)


def test_channel_parameters():
    assert qc.damping_gamma(1.0, 1.0) == pytest.approx(1 - np.exp(-1))
    assert qc.dephasing_lambda(0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        qc.damping_gamma(1.0, 0.0)
    with pytest.raises(ValueError):
        qc.dephasing_lambda(-1.0, 1.0)
    with pytest.raises(ValueError):
        qc.depolarizing(qc.generation_stage(0), 1.5, ["C"])
    with pytest.raises(ValueError):
        qc.readout_flip(np.array([0.5, 0.5]), -0.1)


def test_readout_flip():
    np.testing.assert_allclose(qc.readout_flip(np.array([1.0, 0.0]), 0.1), [0.9, 0.1])
    np.testing.assert_allclose(qc.readout_flip(np.array([0.3, 0.7]), 0.0), [0.3, 0.7])


def test_apply_noise_channel_dispatch():
    s = qc.generation_stage(0)
    a = qc.apply_noise_channel(s, "phase_damping", "T", t=1e-6, T2=2e-6)
    b = qc.phase_damping(s, 1e-6, 2e-6, "T")
    np.testing.assert_allclose(a.matrix, b.matrix)
    c = qc.apply_noise_channel(s, "depolarizing", ["C", "T"], p=0.2)
    np.testing.assert_allclose(c.matrix, qc.depolarizing(s, 0.2, ["C", "T"]).matrix)
    with pytest.raises(ValueError):
        qc.apply_noise_channel(s, "bit_flip", "C", p=0.1)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, p=st.floats(0, 1), t=st.floats(0, 1e-3),
       channel=st.sampled_from(["depolarizing", "amplitude_damping", "phase_damping"]),
       on=st.sampled_from(["C", "T", "A"]))
def test_channels_preserve_invariants(seed, p, t, channel, on):
    s = random_state(np.random.default_rng(seed), "CTA")
    out = qc.apply_noise_channel(s, channel, on, p=p, t=t, T1=223.44e-6, T2=295.35e-6)
    out.check()
    assert out.labels == s.labels


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_unitaries_preserve_invariants(seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, "CT")
    u = qc.haar_random_unitary(rng, 4)
    qc.check_unitary(u)
    s.apply(u, ["T", "C"]).check()


# -- attacker models ------------------------------------------------------------------

def test_haar_qubit_moments():
    rng = np.random.default_rng(13)
    mats = np.array([qc.haar_random_qubit(rng).matrix for _ in range(100_000)])
    assert abs(mats[:, 0, 0].real.mean() - 0.5) < 0.01
    assert abs(np.einsum("nij,ji->n", mats, qc.X).real.mean()) < 0.01
    purity = np.einsum("nij,nji->n", mats, mats).real
    assert np.max(np.abs(purity - 1)) <= 1e-12


@pytest.mark.parametrize("m", [0, 1])
def test_tamper_oracle_identity(m):
    rho_a = qc.haar_random_qubit(np.random.default_rng(1), "A")
    ca = qc.tamper_oracle(m, np.eye(4), rho_a)
    np.testing.assert_allclose(ca.partial_trace("A").matrix, np.eye(2) / 2, atol=1e-15)


@pytest.mark.parametrize("m", [0, 1])
def test_tamper_oracle_verification_fair_on_average(m):
    # single unitaries can leave C correlated with A; the Haar average cannot
    rng = np.random.default_rng(14)
    n = 4000
    probs = []
    for _ in range(n):
        ca = qc.tamper_oracle(m, qc.haar_random_unitary(rng), qc.haar_random_qubit(rng, "A"))
        probs.append(qc.verification_stage(qc.QuantumState(ca.matrix, ("C", "T")),
                                           outcome=m).probability)
    probs = np.array(probs)
    assert abs(probs.mean() - 0.5) < 4 * probs.std() / np.sqrt(n)


def test_tamper_oracle_swap_keeps_correlation():
    swap = np.eye(4)[[0, 2, 1, 3]]
    ca = qc.tamper_oracle(1, swap, qc.QuantumState.basis([0], ("A",)))
    np.testing.assert_allclose(ca.partial_trace("A").matrix, np.eye(2) / 2, atol=1e-15)
    ct = qc.QuantumState(ca.matrix, ("C", "T"))
    assert qc.verification_stage(ct, outcome=1).probability == pytest.approx(1.0, abs=1e-14)


def test_tamper_oracle_rejects_non_unitary():
    with pytest.raises(ValueError):
        qc.tamper_oracle(0, np.ones((4, 4)), qc.QuantumState.basis([0], ("A",)))
