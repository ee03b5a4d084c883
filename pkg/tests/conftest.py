import numpy as np
import pytest

from qauth import quantum_core as qc
from qauth._kernels import available_backends


def reference_p1(m, mode, t_user, t_server, *, h_err=0.0, cx_err=0.0, czx_err=0.0,
                 ro_err=0.0, T1=np.inf, T2=np.inf, haar=None, eve=None):
    """P(outcome 1) for one shot, built gate by gate from quantum_core.

    ``eve`` is ``(basis, outcome)`` for a measure-and-resend attack on T.
    """
    state = qc.generation_stage(m, h_error=h_err, gate_error=czx_err if m else cx_err)
    if np.isfinite(T1):
        state = qc.amplitude_damping(state, t_server, T1, "C")
        state = qc.amplitude_damping(state, t_user, T1, "T")
    if np.isfinite(T2):
        state = qc.phase_damping(state, t_server, T2, "C")
        state = qc.phase_damping(state, t_user, T2, "T")
    if haar is not None:
        sub = qc.QuantumState.from_ket(haar, ("T",))
        state = state.partial_trace("T").tensor(sub)
    if eve is not None:
        basis, outcome = eve
        if basis == 1:
            state = state.apply(qc.H, ["T"])
        post = qc.measure(state, "T", outcome=outcome).post_state
        if basis == 1:
            post = post.apply(qc.H, ["T"])
        state = post
    if mode == 0:
        state = state.apply(qc.ANTI_CX, ["C", "T"])
        if cx_err:
            state = qc.depolarizing(state, cx_err, ["C", "T"])
        state = state.apply(qc.H, ["C"])
        if h_err:
            state = qc.depolarizing(state, h_err, ["C"])
        p1 = qc.outcome_probabilities(state, "C")[1]
    else:
        state = state.apply(qc.CX, ["T", "C"])
        if cx_err:
            state = qc.depolarizing(state, cx_err, ["C", "T"])
        p1 = qc.outcome_probabilities(state, "C")[1]
    return float(qc.readout_flip(np.array([1 - p1, p1]), ro_err)[1])


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param
