# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step integrator for the extremum seeking closed loops.

The state vector layout is defined by :class:`ftes.flows.StateLayout`:
``[u (n), xi1 (n*n, Newton only), xi (n), mu (2n), x (p, plant only), w (1, washout only)]``.
"""

import numpy as np

from libc.math cimport sqrt, pow, fabs, isfinite, M_PI
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy


cdef struct Model:
    int n
    int p
    int newton
    int washout
    int dim
    int off_xi1
    int off_xi
    int off_mu
    int off_x
    int off_w
    double a
    double k1
    double k2
    double k3
    double alpha1
    double alpha2
    double guard
    double washout_rate
    double c
    double *Q
    double *b
    double *A
    double *B
    double *P
    double *r
    double *kappa
    double *z
    double *drv
    double *F
    double *tmp


cdef double measure(Model *m, const double *s) noexcept nogil:
    cdef int i, j
    cdef int n = m.n
    cdef int p = m.p
    cdef double y = m.c
    cdef double acc
    cdef const double *x
    for i in range(n):
        m.z[i] = s[i] + m.a * s[m.off_mu + 2 * i]
    if p > 0:
        x = s + m.off_x
        for i in range(p):
            acc = m.r[i]
            for j in range(p):
                acc += m.P[i * p + j] * x[j]
            y += acc * x[i]
    else:
        for i in range(n):
            acc = 0.5 * m.Q[i * n + i] * m.z[i] + m.b[i]
            for j in range(i + 1, n):
                acc += m.Q[i * n + j] * m.z[j]
            y += acc * m.z[i]
    return y


cdef double rhs(Model *m, const double *s, double *d) noexcept nogil:
    cdef int i, j, l
    cdef int n = m.n
    cdef int p = m.p
    cdef double y = measure(m, s)
    cdef double ym = y
    cdef double rn = 0.0
    cdef double scale, acc, mi, mj
    cdef double g = 2.0 / m.a
    cdef double hd = 16.0 / (m.a * m.a)
    cdef double ho = 4.0 / (m.a * m.a)
    cdef const double *xi = s + m.off_xi
    cdef const double *X = s + m.off_xi1
    cdef const double *mu = s + m.off_mu
    cdef const double *x

    if m.washout:
        d[m.off_w] = m.washout_rate * (y - s[m.off_w])
        ym = y - s[m.off_w]

    for i in range(n):
        rn += xi[i] * xi[i]
    rn = sqrt(rn)
    if rn <= m.guard:
        for i in range(n):
            m.drv[i] = 0.0
    else:
        scale = pow(rn, -m.alpha1) + pow(rn, -m.alpha2)
        for i in range(n):
            m.drv[i] = xi[i] * scale

    if m.newton:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += X[i * n + j] * m.drv[j]
            d[i] = -m.k1 * acc
        # F = y * N(mu)
        for i in range(n):
            mi = mu[2 * i]
            m.F[i * n + i] = ym * hd * (mi * mi - 0.5)
            for j in range(i + 1, n):
                mj = mu[2 * j]
                m.F[i * n + j] = ym * ho * mi * mj
                m.F[j * n + i] = m.F[i * n + j]
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += X[i * n + l] * m.F[l * n + j]
                m.tmp[i * n + j] = acc
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += m.tmp[i * n + l] * X[l * n + j]
                d[m.off_xi1 + i * n + j] = -m.k2 * (acc - X[i * n + j])
    else:
        for i in range(n):
            d[i] = -m.k1 * m.drv[i]

    for i in range(n):
        d[m.off_xi + i] = -m.k2 * (xi[i] - ym * g * mu[2 * i])

    for i in range(n):
        d[m.off_mu + 2 * i] = m.k3 * m.kappa[i] * mu[2 * i + 1]
        d[m.off_mu + 2 * i + 1] = -m.k3 * m.kappa[i] * mu[2 * i]

    if p > 0:
        x = s + m.off_x
        for i in range(p):
            acc = 0.0
            for j in range(p):
                acc += m.A[i * p + j] * x[j]
            for j in range(n):
                acc += m.B[i * n + j] * m.z[j]
            d[m.off_x + i] = acc
    return y


cdef double filter_norm(Model *m, const double *s) noexcept nogil:
    cdef int i
    cdef double acc = 0.0
    cdef double acc1 = 0.0
    for i in range(m.n):
        acc += s[m.off_xi + i] * s[m.off_xi + i]
    if m.newton:
        for i in range(m.n * m.n):
            acc1 += s[m.off_xi1 + i] * s[m.off_xi1 + i]
        return sqrt(acc) if acc >= acc1 else sqrt(acc1)
    return sqrt(acc)


def run_closed_loop(
    int n,
    bint newton,
    const double[::1] state0,
    const double[::1] kappa,
    double a,
    double eps1,
    double eps2,
    double eps0,
    double k,
    double alpha1,
    double alpha2,
    const double[:, ::1] Q,
    const double[::1] b,
    double c,
    const double[:, ::1] A,
    const double[:, ::1] B,
    const double[:, ::1] P,
    const double[::1] r,
    double washout,
    double dt,
    long nsteps,
    long stride,
    double halt_norm,
    double guard,
):
    """Integrate one closed loop with classical RK4 and record every ``stride`` steps.

    ``A.shape[0] == 0`` selects the static quadratic map ``0.5 z'Qz + b'z + c``; otherwise the
    measurement is ``x'Px + r'x + c`` from the linear plant ``dx/dt = Ax + Bz``. ``washout <= 0``
    feeds the raw measurement to the demodulators.
    """
    cdef Model m
    cdef int p = A.shape[0]
    cdef int dim = state0.shape[0]
    cdef int i, j
    cdef long step, row = 0
    cdef long nrows = nsteps // stride + 1
    cdef long nonfinite = -1
    cdef long halted = -1
    cdef double h = dt
    cdef double rn, corr, max_corr = 0.0

    m.n = n
    m.p = p
    m.newton = 1 if newton else 0
    m.washout = 1 if washout > 0 else 0
    m.off_xi1 = n
    m.off_xi = n + (n * n if newton else 0)
    m.off_mu = m.off_xi + n
    m.off_x = m.off_mu + 2 * n
    m.off_w = m.off_x + p
    m.dim = m.off_w + m.washout
    if m.dim != dim:
        raise ValueError(f"state has length {dim}, layout expects {m.dim}")
    if kappa.shape[0] != n:
        raise ValueError("frequency vector length must equal n")
    if p == 0 and (Q.shape[0] != n or Q.shape[1] != n or b.shape[0] != n):
        raise ValueError("static map coefficients do not match n")
    if p > 0 and (B.shape[0] != p or B.shape[1] != n or P.shape[0] != p or r.shape[0] != p):
        raise ValueError("plant coefficients do not match (p, n)")

    m.a = a
    m.k1 = eps0 * k
    m.k2 = eps0 / eps2
    m.k3 = eps0 * 2.0 * M_PI / eps1
    m.alpha1 = alpha1
    m.alpha2 = alpha2
    m.guard = guard
    m.washout_rate = eps0 / washout if washout > 0 else 0.0
    m.c = c

    Qc = np.ascontiguousarray(Q).copy() if p == 0 else np.zeros((n, n))
    bc = np.ascontiguousarray(b).copy() if p == 0 else np.zeros(n)
    Ac = np.ascontiguousarray(A).copy() if p > 0 else np.zeros((1, 1))
    Bc = np.ascontiguousarray(B).copy() if p > 0 else np.zeros((1, 1))
    Pc = np.ascontiguousarray(P).copy() if p > 0 else np.zeros((1, 1))
    rc = np.ascontiguousarray(r).copy() if p > 0 else np.zeros(1)
    kc = np.ascontiguousarray(kappa).copy()
    cdef double[:, ::1] Qv = Qc
    cdef double[::1] bv = bc
    cdef double[:, ::1] Av = Ac
    cdef double[:, ::1] Bv = Bc
    cdef double[:, ::1] Pv = Pc
    cdef double[::1] rv = rc
    cdef double[::1] kv = kc
    m.Q = &Qv[0, 0]
    m.b = &bv[0]
    m.A = &Av[0, 0]
    m.B = &Bv[0, 0]
    m.P = &Pv[0, 0]
    m.r = &rv[0]
    m.kappa = &kv[0]

    samples_np = np.empty((nrows, dim))
    z_np = np.empty((nrows, n))
    y_np = np.empty(nrows)
    cdef double[:, ::1] samples = samples_np
    cdef double[:, ::1] zs = z_np
    cdef double[::1] ys = y_np

    cdef double *buf = <double *> malloc((7 * dim + 2 * n + 2 * n * n) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *s = buf
    cdef double *k1 = buf + dim
    cdef double *k2 = buf + 2 * dim
    cdef double *k3 = buf + 3 * dim
    cdef double *k4 = buf + 4 * dim
    cdef double *tmp = buf + 5 * dim
    cdef double *dd = buf + 6 * dim
    m.z = buf + 7 * dim
    m.drv = m.z + n
    m.F = m.drv + n
    m.tmp = m.F + n * n

    final_np = np.empty(dim)
    cdef double[::1] final = final_np

    try:
        with nogil:
            for i in range(dim):
                s[i] = state0[i]
            ys[0] = rhs(&m, s, dd)
            for i in range(dim):
                samples[0, i] = s[i]
            for i in range(n):
                zs[0, i] = m.z[i]
            row = 1
            for step in range(nsteps):
                rhs(&m, s, k1)
                for i in range(dim):
                    tmp[i] = s[i] + 0.5 * h * k1[i]
                rhs(&m, tmp, k2)
                for i in range(dim):
                    tmp[i] = s[i] + 0.5 * h * k2[i]
                rhs(&m, tmp, k3)
                for i in range(dim):
                    tmp[i] = s[i] + h * k3[i]
                rhs(&m, tmp, k4)
                for i in range(dim):
                    s[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                for i in range(n):
                    j = m.off_mu + 2 * i
                    rn = sqrt(s[j] * s[j] + s[j + 1] * s[j + 1])
                    corr = fabs(rn - 1.0)
                    if corr > max_corr:
                        max_corr = corr
                    s[j] = s[j] / rn
                    s[j + 1] = s[j + 1] / rn
                for i in range(dim):
                    if not isfinite(s[i]):
                        nonfinite = step + 1
                        break
                if nonfinite >= 0:
                    break
                if (step + 1) % stride == 0 and row < nrows:
                    ys[row] = rhs(&m, s, dd)
                    for i in range(dim):
                        samples[row, i] = s[i]
                    for i in range(n):
                        zs[row, i] = m.z[i]
                    row += 1
                if filter_norm(&m, s) > halt_norm:
                    halted = step + 1
                    break
            for i in range(dim):
                final[i] = s[i]
    finally:
        free(buf)

    return {
        "samples": samples_np[:row],
        "z": z_np[:row],
        "y": y_np[:row],
        "steps": (halted if halted >= 0 else (nonfinite if nonfinite >= 0 else nsteps)),
        "final": final_np,
        "max_torus_correction": max_corr,
        "nonfinite_step": nonfinite,
        "halted_step": halted,
    }
