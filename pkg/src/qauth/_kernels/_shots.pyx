# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-shot circuit pipeline; same contract as ``_shots_py.simulate_shots``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, expm1, fmin, fmax

cnp.import_array()

ctypedef double complex cplx

cdef double INV_SQRT2 = 0.7071067811865476


cdef inline void conj_u(cplx[4][4] rho, cplx[4][4] u) noexcept nogil:
    # rho <- u rho u^dagger
    cdef cplx tmp[4][4]
    cdef int i, j, k
    cdef cplx acc
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc = acc + u[i][k] * rho[k][j]
            tmp[i][j] = acc
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc = acc + tmp[i][k] * u[j][k].conjugate()
            rho[i][j] = acc


cdef inline void depol_c(cplx[4][4] rho, double p) noexcept nogil:
    # (1-p) rho + p I/2 (x) Tr_C rho
    cdef cplx rt[2][2]
    cdef int i, j, ci, ti, cj, tj
    if p == 0.0:
        return
    for ti in range(2):
        for tj in range(2):
            rt[ti][tj] = rho[ti][tj] + rho[2 + ti][2 + tj]
    for i in range(4):
        ci = i >> 1
        ti = i & 1
        for j in range(4):
            cj = j >> 1
            tj = j & 1
            rho[i][j] = (1 - p) * rho[i][j] + (p * 0.5 * rt[ti][tj] if ci == cj else 0)


cdef inline void depol_2(cplx[4][4] rho, double p) noexcept nogil:
    cdef int i, j
    if p == 0.0:
        return
    for i in range(4):
        for j in range(4):
            rho[i][j] = (1 - p) * rho[i][j] + (p * 0.25 if i == j else 0)


cdef inline void damp(cplx[4][4] rho, double gamma, double lam, int qubit) noexcept nogil:
    # amplitude damping (gamma) then dephasing (lam) on one qubit, in closed form:
    # populations |1> -> |0> with weight gamma, coherences scaled by sqrt(1-gamma)(1-lam)
    cdef int i, j, bi, bj
    cdef double coh = sqrt(1 - gamma) * (1 - lam)
    cdef int bit = 2 if qubit == 0 else 1
    if gamma == 0.0 and lam == 0.0:
        return
    for i in range(4):
        for j in range(4):
            bi = (i & bit) != 0
            bj = (j & bit) != 0
            if bi != bj:
                rho[i][j] = rho[i][j] * coh
            elif bi == 0:
                rho[i][j] = rho[i][j] + gamma * rho[i | bit][j | bit]
            else:
                rho[i][j] = rho[i][j] * (1 - gamma)


cdef inline void replace_target(cplx[4][4] rho, cplx[2][2] rc, cplx[2] ket) noexcept nogil:
    # rho <- rc (x) |ket><ket|
    cdef int i, j
    for i in range(4):
        for j in range(4):
            rho[i][j] = rc[i >> 1][j >> 1] * ket[i & 1] * ket[j & 1].conjugate()


def simulate_shots(m, int mode, t_user, t_server, survival, u_loss, sub_bit, u_out,
                   int tamper, haar, eve_basis, u_eve,
                   double h_err, double cx_err, double czx_err, double ro_err,
                   double T1, double T2):
    cdef Py_ssize_t n = len(m)
    cdef const signed char[:] mv = np.ascontiguousarray(m, dtype=np.int8)
    cdef const double[:] tu = np.ascontiguousarray(t_user, dtype=np.float64)
    cdef const double[:] ts = np.ascontiguousarray(t_server, dtype=np.float64)
    cdef const double[:] surv = np.ascontiguousarray(survival, dtype=np.float64)
    cdef const double[:] ul = np.ascontiguousarray(u_loss, dtype=np.float64)
    cdef const signed char[:] sb = np.ascontiguousarray(sub_bit, dtype=np.int8)
    cdef const double[:] uo = np.ascontiguousarray(u_out, dtype=np.float64)
    cdef const cplx[:, :] hv
    cdef const signed char[:] eb
    cdef const double[:] ue
    if tamper == 1:
        hv = np.ascontiguousarray(haar, dtype=np.complex128).reshape(n, 2)
    if tamper == 2:
        eb = np.ascontiguousarray(eve_basis, dtype=np.int8)
        ue = np.ascontiguousarray(u_eve, dtype=np.float64)

    out_np = np.empty(n, dtype=np.int8)
    lost_np = np.empty(n, dtype=np.int8)
    p1_np = np.empty(n, dtype=np.float64)
    cdef signed char[:] out = out_np
    cdef signed char[:] lost = lost_np
    cdef double[:] p1v = p1_np

    cdef cplx hc[4][4]
    cdef cplx cx[4][4]
    cdef cplx czx[4][4]
    cdef cplx acx[4][4]
    cdef cplx cx_tc[4][4]
    cdef cplx rho[4][4]
    cdef cplx rc[2][2]
    cdef cplx ket[2]
    cdef int i, j
    cdef Py_ssize_t s
    cdef double gamma, lam, p1, pe, norm

    for i in range(4):
        for j in range(4):
            hc[i][j] = 0; cx[i][j] = 0; czx[i][j] = 0; acx[i][j] = 0; cx_tc[i][j] = 0
    # H on C: basis index 2c + t
    hc[0][0] = INV_SQRT2; hc[0][2] = INV_SQRT2; hc[2][0] = INV_SQRT2; hc[2][2] = -INV_SQRT2
    hc[1][1] = INV_SQRT2; hc[1][3] = INV_SQRT2; hc[3][1] = INV_SQRT2; hc[3][3] = -INV_SQRT2
    cx[0][0] = 1; cx[1][1] = 1; cx[2][3] = 1; cx[3][2] = 1
    czx[0][0] = 1; czx[1][1] = 1; czx[2][3] = 1; czx[3][2] = -1
    acx[0][1] = 1; acx[1][0] = 1; acx[2][2] = 1; acx[3][3] = 1
    cx_tc[0][0] = 1; cx_tc[2][2] = 1; cx_tc[1][3] = 1; cx_tc[3][1] = 1

    with nogil:
        for s in range(n):
            for i in range(4):
                for j in range(4):
                    rho[i][j] = 0
            rho[0][0] = 1
            conj_u(rho, hc)
            depol_c(rho, h_err)
            if mv[s] == 1:
                conj_u(rho, czx)
                depol_2(rho, czx_err)
            else:
                conj_u(rho, cx)
                depol_2(rho, cx_err)

            gamma = -expm1(-ts[s] / T1)
            lam = -expm1(-ts[s] / T2)
            damp(rho, gamma, lam, 0)
            gamma = -expm1(-tu[s] / T1)
            lam = -expm1(-tu[s] / T2)
            damp(rho, gamma, lam, 1)

            if tamper == 1:
                for i in range(2):
                    for j in range(2):
                        rc[i][j] = rho[2 * i][2 * j] + rho[2 * i + 1][2 * j + 1]
                ket[0] = hv[s, 0]
                ket[1] = hv[s, 1]
                norm = sqrt((ket[0] * ket[0].conjugate()).real + (ket[1] * ket[1].conjugate()).real)
                ket[0] = ket[0] / norm
                ket[1] = ket[1] / norm
                replace_target(rho, rc, ket)
            elif tamper == 2:
                # outcome-1 ket of the chosen basis
                if eb[s] == 0:
                    ket[0] = 0; ket[1] = 1
                else:
                    ket[0] = INV_SQRT2; ket[1] = -INV_SQRT2
                pe = 0
                for i in range(2):
                    for j in range(2):
                        pe = pe + (ket[i].conjugate() * (rho[i][j] + rho[2 + i][2 + j]) * ket[j]).real
                if not (ue[s] < pe):
                    if eb[s] == 0:
                        ket[0] = 1; ket[1] = 0
                    else:
                        ket[0] = INV_SQRT2; ket[1] = INV_SQRT2
                # C state conditioned on the target projection
                for i in range(2):
                    for j in range(2):
                        rc[i][j] = (ket[0].conjugate() * rho[2 * i][2 * j] * ket[0]
                                    + ket[0].conjugate() * rho[2 * i][2 * j + 1] * ket[1]
                                    + ket[1].conjugate() * rho[2 * i + 1][2 * j] * ket[0]
                                    + ket[1].conjugate() * rho[2 * i + 1][2 * j + 1] * ket[1])
                norm = rc[0][0].real + rc[1][1].real
                for i in range(2):
                    for j in range(2):
                        rc[i][j] = rc[i][j] / norm
                replace_target(rho, rc, ket)

            if mode == 0:
                conj_u(rho, acx)
                depol_2(rho, cx_err)
                conj_u(rho, hc)
                depol_c(rho, h_err)
            else:
                conj_u(rho, cx_tc)
                depol_2(rho, cx_err)

            p1 = fmin(fmax(rho[2][2].real + rho[3][3].real, 0.0), 1.0)
            p1 = p1 * (1 - ro_err) + (1 - p1) * ro_err
            p1v[s] = p1
            if ul[s] < surv[s]:
                lost[s] = 0
                out[s] = 1 if uo[s] < p1 else 0
            else:
                lost[s] = 1
                out[s] = sb[s]
    return out_np, lost_np, p1_np
