# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel.

Same contract and status codes as ``circumnav._pykernel``; every arithmetic
step is written in the same order so the two agree to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, hypot, isfinite, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    OK = 0
    TARGET_DEGENERATE = 1
    NEIGHBOR_DEGENERATE = 2
    NON_FINITE = 3
    RK4 = 1

cdef double TWO_PI = 2.0 * M_PI


cdef struct Params:
    int n
    double tx, ty
    double d_star, k_est, k_c, k_omega, alpha, eps_dist
    int baseline
    double* beta_star


cdef inline double _wrap(double ang) nogil:
    if ang < 0.0:
        ang = ang + TWO_PI
    if ang >= TWO_PI:
        ang = ang - TWO_PI
    return ang


cdef int _rates(const Params* P, const double* pos, const double* est,
                double* dpos, double* dest, int* agent) noexcept nogil:
    cdef int n = P.n
    cdef int i, j
    cdef double relx, rely, d, rijx, rijy, dij, phx, phy, pjx, pjy
    cdef double psi, beta, rx, ry, dhat, radial, tang, along, ax, ay, bx, by
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        relx = P.tx - pos[2 * i]
        rely = P.ty - pos[2 * i + 1]
        d = hypot(relx, rely)
        if not d > P.eps_dist:
            agent[0] = i
            return TARGET_DEGENERATE
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        rijx = pos[2 * j] - pos[2 * i]
        rijy = pos[2 * j + 1] - pos[2 * i + 1]
        dij = hypot(rijx, rijy)
        if not dij > P.eps_dist:
            agent[0] = i
            return NEIGHBOR_DEGENERATE
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        relx = P.tx - pos[2 * i]
        rely = P.ty - pos[2 * i + 1]
        d = hypot(relx, rely)
        rijx = pos[2 * j] - pos[2 * i]
        rijy = pos[2 * j + 1] - pos[2 * i + 1]
        dij = hypot(rijx, rijy)
        phx = relx / d
        phy = rely / d
        if P.baseline:
            ax = pos[2 * i] - P.tx
            ay = pos[2 * i + 1] - P.ty
            bx = pos[2 * j] - P.tx
            by = pos[2 * j + 1] - P.ty
            beta = _wrap(atan2(ax * by - ay * bx, ax * bx + ay * by))
        else:
            pjx = rijx / dij
            pjy = rijy / dij
            psi = _wrap(atan2(phx * pjy - phy * pjx, phx * pjx + phy * pjy))
            if psi >= M_PI:
                beta = 2.0 * psi - 3.0 * M_PI
            else:
                beta = 2.0 * psi + M_PI
        rx = pos[2 * i] - est[2 * i]
        ry = pos[2 * i + 1] - est[2 * i + 1]
        dhat = hypot(rx, ry)
        radial = P.k_c * (dhat - P.d_star)
        tang = P.k_omega * (P.alpha + (beta - P.beta_star[i]))
        dpos[2 * i] = radial * phx + tang * phy
        dpos[2 * i + 1] = radial * phy - tang * phx
        along = rx * phx + ry * phy
        dest[2 * i] = P.k_est * (rx - along * phx)
        dest[2 * i + 1] = P.k_est * (ry - along * phy)
    return OK


cdef Params _params(double[::1] target, double d_star, double[::1] beta_star,
                    double k_est, double k_c, double k_omega, double alpha,
                    bint baseline, double eps_dist, int n):
    cdef Params P
    P.n = n
    P.tx = target[0]
    P.ty = target[1]
    P.d_star = d_star
    P.k_est = k_est
    P.k_c = k_c
    P.k_omega = k_omega
    P.alpha = alpha
    P.eps_dist = eps_dist
    P.baseline = 1 if baseline else 0
    P.beta_star = &beta_star[0]
    return P


def rates(pos, est, target, double d_star, beta_star, double k_est, double k_c,
          double k_omega, double alpha, baseline=False, double eps_dist=1e-9):
    cdef double[:, ::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef double[:, ::1] e = np.ascontiguousarray(est, dtype=np.float64)
    cdef double[::1] tgt = np.ascontiguousarray(target, dtype=np.float64)
    cdef double[::1] bs = np.ascontiguousarray(beta_star, dtype=np.float64)
    cdef int n = p.shape[0]
    dpos = np.zeros((n, 2))
    dest = np.zeros((n, 2))
    cdef double[:, ::1] dp = dpos
    cdef double[:, ::1] de = dest
    cdef Params P = _params(tgt, d_star, bs, k_est, k_c, k_omega, alpha, baseline, eps_dist, n)
    cdef int agent = -1
    cdef int status = _rates(&P, &p[0, 0], &e[0, 0], &dp[0, 0], &de[0, 0], &agent)
    return dpos, dest, status, agent


def integrate(pos0, est0, target, double d_star, beta_star, double k_est, double k_c,
              double k_omega, double alpha, double dt, long n_steps, long stride,
              int method, baseline=False, double eps_dist=1e-9):
    cdef double[:, ::1] p0 = np.ascontiguousarray(pos0, dtype=np.float64)
    cdef double[:, ::1] e0 = np.ascontiguousarray(est0, dtype=np.float64)
    cdef double[::1] tgt = np.ascontiguousarray(target, dtype=np.float64)
    cdef double[::1] bs = np.ascontiguousarray(beta_star, dtype=np.float64)
    cdef int n = p0.shape[0]
    cdef int m = 2 * n
    cdef long n_samples = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    pos_log = np.empty((n_samples, n, 2))
    est_log = np.empty((n_samples, n, 2))
    steps = np.empty(n_samples, dtype=np.int64)
    cdef double[:, :, ::1] PL = pos_log
    cdef double[:, :, ::1] EL = est_log
    cdef cnp.int64_t[::1] S = steps
    cdef Params P = _params(tgt, d_star, bs, k_est, k_c, k_omega, alpha, baseline, eps_dist, n)

    cdef double* buf = <double*> malloc(12 * m * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* pos = buf
    cdef double* est = buf + m
    cdef double* tp = buf + 2 * m
    cdef double* te = buf + 3 * m
    cdef double* k1p = buf + 4 * m
    cdef double* k1e = buf + 5 * m
    cdef double* k2p = buf + 6 * m
    cdef double* k2e = buf + 7 * m
    cdef double* k3p = buf + 8 * m
    cdef double* k3e = buf + 9 * m
    cdef double* k4p = buf + 10 * m
    cdef double* k4e = buf + 11 * m

    cdef int a, status = OK, agent = -1
    cdef long k, k_log = 1, fail_step = -1
    cdef double h = 0.5 * dt
    cdef double sixth = dt / 6.0
    try:
        with nogil:
            for a in range(n):
                pos[2 * a] = p0[a, 0]
                pos[2 * a + 1] = p0[a, 1]
                est[2 * a] = e0[a, 0]
                est[2 * a + 1] = e0[a, 1]
                PL[0, a, 0] = pos[2 * a]
                PL[0, a, 1] = pos[2 * a + 1]
                EL[0, a, 0] = est[2 * a]
                EL[0, a, 1] = est[2 * a + 1]
            S[0] = 0
            status = _rates(&P, pos, est, k1p, k1e, &agent)
            if status != OK:
                fail_step = 0
            k = 0
            while status == OK and k < n_steps:
                status = _rates(&P, pos, est, k1p, k1e, &agent)
                if status == OK and method == RK4:
                    for a in range(m):
                        tp[a] = pos[a] + h * k1p[a]
                        te[a] = est[a] + h * k1e[a]
                    status = _rates(&P, tp, te, k2p, k2e, &agent)
                    if status == OK:
                        for a in range(m):
                            tp[a] = pos[a] + h * k2p[a]
                            te[a] = est[a] + h * k2e[a]
                        status = _rates(&P, tp, te, k3p, k3e, &agent)
                    if status == OK:
                        for a in range(m):
                            tp[a] = pos[a] + dt * k3p[a]
                            te[a] = est[a] + dt * k3e[a]
                        status = _rates(&P, tp, te, k4p, k4e, &agent)
                    if status == OK:
                        for a in range(m):
                            pos[a] = pos[a] + sixth * (k1p[a] + 2.0 * k2p[a] + 2.0 * k3p[a] + k4p[a])
                            est[a] = est[a] + sixth * (k1e[a] + 2.0 * k2e[a] + 2.0 * k3e[a] + k4e[a])
                elif status == OK:
                    for a in range(m):
                        pos[a] = pos[a] + dt * k1p[a]
                        est[a] = est[a] + dt * k1e[a]
                if status != OK:
                    fail_step = k
                    break
                for a in range(n):
                    if not (isfinite(pos[2 * a]) and isfinite(pos[2 * a + 1])
                            and isfinite(est[2 * a]) and isfinite(est[2 * a + 1])):
                        status = NON_FINITE
                        agent = a
                        fail_step = k + 1
                        break
                if status != OK:
                    break
                if (k + 1) % stride == 0 or k + 1 == n_steps:
                    for a in range(n):
                        PL[k_log, a, 0] = pos[2 * a]
                        PL[k_log, a, 1] = pos[2 * a + 1]
                        EL[k_log, a, 0] = est[2 * a]
                        EL[k_log, a, 1] = est[2 * a + 1]
                    S[k_log] = k + 1
                    k_log += 1
                k += 1
    finally:
        free(buf)
    if status != OK:
        return pos_log[:k_log], est_log[:k_log], steps[:k_log], status, fail_step, agent
    return pos_log, est_log, steps, OK, -1, -1
