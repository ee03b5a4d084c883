"""Vectorized numpy implementation of the per-shot circuit pipeline.

Each shot carries a 4x4 CT density matrix (basis index ``2*c + t``) through
generation, storage damping, optional tampering and the final measurement of
the control register. All randomness is supplied by the caller so that this
module and the compiled kernel produce the same outcomes for the same inputs.
"""

import numpy as np

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_P0 = np.diag([1, 0]).astype(complex)
_P1 = np.diag([0, 1]).astype(complex)

_H_C = np.kron(_H, _I2)
_CX = np.kron(_P0, _I2) + np.kron(_P1, _X)
_CZX = np.kron(_P0, _I2) + np.kron(_P1, _Z @ _X)
_ANTI_CX = np.kron(_P0, _X) + np.kron(_P1, _I2)
_CX_TC = np.kron(_I2, _P0) + np.kron(_X, _P1)  # T controls X on C

# [basis][outcome] -> ket; basis 0 = Z, 1 = X
_BASIS_KETS = np.array([
    [[1, 0], [0, 1]],
    np.array([[1, 1], [1, -1]]) / np.sqrt(2),
], dtype=complex)


def _conj(rho, u):
    return u @ rho @ u.conj().swapaxes(-1, -2)


def _ptrace_t(rho):
    return np.einsum("najbj->nab", rho.reshape(-1, 2, 2, 2, 2))


def _ptrace_c(rho):
    return np.einsum("njajb->nab", rho.reshape(-1, 2, 2, 2, 2))


def _kron_batch(a, b):
    n = a.shape[0]
    return np.einsum("nab,ncd->nacbd", a, b).reshape(n, 4, 4)


def _depol_c(rho, p):
    if p == 0.0:
        return rho
    half = np.broadcast_to(_I2 / 2, (rho.shape[0], 2, 2))
    return (1 - p) * rho + p * _kron_batch(half, _ptrace_c(rho))


def _depol_2(rho, p):
    if p == 0.0:
        return rho
    return (1 - p) * rho + p * np.eye(4) / 4


def _damp(rho, gamma, lam, qubit):
    """Amplitude damping then dephasing on one qubit, per-shot parameters."""
    n = rho.shape[0]
    k0 = np.zeros((n, 2, 2), dtype=complex)
    k0[:, 0, 0] = 1.0
    k0[:, 1, 1] = np.sqrt(1 - gamma)
    k1 = np.zeros((n, 2, 2), dtype=complex)
    k1[:, 0, 1] = np.sqrt(gamma)
    z0 = np.sqrt(1 - lam / 2)[:, None, None] * _I2
    z1 = np.sqrt(lam / 2)[:, None, None] * _Z
    out = rho
    for ops in ((k0, k1), (z0, z1)):
        acc = np.zeros_like(out)
        for k in ops:
            eye = np.broadcast_to(_I2, k.shape)
            full = _kron_batch(k, eye) if qubit == 0 else _kron_batch(eye, k)
            acc += _conj(out, full)
        out = acc
    return out


def simulate_shots(m, mode, t_user, t_server, survival, u_loss, sub_bit, u_out,
                   tamper, haar, eve_basis, u_eve,
                   h_err, cx_err, czx_err, ro_err, T1, T2):
    """Run ``len(m)`` independent shots and return ``(outcome, lost, p1)``.

    mode 0 runs the verification circuit (expected outcome ``m``); mode 1 runs
    the half circuit (expected outcome 0). ``tamper`` selects no attack (0),
    Haar substitution of the target with ``haar[i]`` (1), or measure-and-resend
    of the target in ``eve_basis[i]`` using uniform ``u_eve[i]`` (2).
    """
    m = np.asarray(m)
    n = m.shape[0]
    rho = np.zeros((n, 4, 4), dtype=complex)
    rho[:, 0, 0] = 1.0

    rho = _conj(rho, _H_C)
    rho = _depol_c(rho, h_err)
    gate = np.where(m[:, None, None] == 1, _CZX, _CX)
    rho = _conj(rho, gate)
    gerr = np.where(m == 1, czx_err, cx_err)
    rho = (1 - gerr)[:, None, None] * rho + gerr[:, None, None] * np.eye(4) / 4

    gamma_c = -np.expm1(-np.asarray(t_server) / T1)
    lam_c = -np.expm1(-np.asarray(t_server) / T2)
    gamma_t = -np.expm1(-np.asarray(t_user) / T1)
    lam_t = -np.expm1(-np.asarray(t_user) / T2)
    rho = _damp(rho, gamma_c, lam_c, 0)
    rho = _damp(rho, gamma_t, lam_t, 1)

    if tamper == 1:
        phi = np.asarray(haar, dtype=complex).reshape(n, 2)
        phi = phi / np.linalg.norm(phi, axis=1, keepdims=True)
        sigma = np.einsum("na,nb->nab", phi, phi.conj())
        rho = _kron_batch(_ptrace_t(rho), sigma)
    elif tamper == 2:
        kets = _BASIS_KETS[np.asarray(eve_basis)]  # (n, outcome, 2)
        rho_t = _ptrace_c(rho)
        k1 = kets[:, 1]
        p1 = np.real(np.einsum("na,nab,nb->n", k1.conj(), rho_t, k1))
        outcome = (np.asarray(u_eve) < p1).astype(int)
        ket = kets[np.arange(n), outcome]
        proj = np.einsum("na,nb->nab", ket, ket.conj())
        full = _kron_batch(np.broadcast_to(_I2, proj.shape), proj)
        post = _ptrace_t(full @ rho @ full)
        norm = np.real(np.einsum("naa->n", post))
        post = post / norm[:, None, None]
        rho = _kron_batch(post, proj)

    if mode == 0:
        rho = _conj(rho, _ANTI_CX)
        rho = _depol_2(rho, cx_err)
        rho = _conj(rho, _H_C)
        rho = _depol_c(rho, h_err)
    else:
        rho = _conj(rho, _CX_TC)
        rho = _depol_2(rho, cx_err)

    p1 = np.clip(np.real(rho[:, 2, 2] + rho[:, 3, 3]), 0.0, 1.0)
    p1 = p1 * (1 - ro_err) + (1 - p1) * ro_err
    outcome = (np.asarray(u_out) < p1).astype(np.int8)
    lost = ~(np.asarray(u_loss) < np.asarray(survival))
    outcome = np.where(lost, np.asarray(sub_bit, dtype=np.int8), outcome).astype(np.int8)
    return outcome, lost.astype(np.int8), p1
