# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory loss kernel.

Mirrors ``trajgen._kernel_py.loss_and_grad`` pose by pose: forward pass
through the chain, local loss adjoints, reverse sweep back to the logits.
"""
import numpy as np

from libc.math cimport cos, sin, exp, sqrt, nextafter, M_PI
from libc.stdlib cimport malloc, free

cdef double DEG = M_PI / 180.0


cdef inline void _rot(int axis, double c, double s, double* v) noexcept nogil:
    cdef double x = v[0], y = v[1], z = v[2]
    if axis == 0:
        v[1] = c * y - s * z
        v[2] = s * y + c * z
    elif axis == 1:
        v[0] = c * x - s * z
        v[2] = s * x + c * z
    else:
        v[0] = c * x - s * y
        v[1] = s * x + c * y


cdef inline void _rot_t(int axis, double c, double s, double* g) noexcept nogil:
    cdef double x = g[0], y = g[1], z = g[2]
    if axis == 0:
        g[1] = c * y + s * z
        g[2] = -s * y + c * z
    elif axis == 1:
        g[0] = c * x + s * z
        g[2] = -s * x + c * z
    else:
        g[0] = c * x + s * y
        g[1] = -s * x + c * y


cdef inline double _drot_dot(int axis, double c, double s, const double* g, const double* v) noexcept nogil:
    cdef double x = v[0], y = v[1], z = v[2]
    if axis == 0:
        return g[1] * (-s * y - c * z) + g[2] * (c * y - s * z)
    if axis == 1:
        return g[0] * (-s * x - c * z) + g[2] * (c * x - s * z)
    return g[0] * (-s * x - c * y) + g[1] * (c * x - s * y)


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def loss_and_grad(packed, lo_, hi_, z_, goal_points_, goal_vecs_, p_start_, p_end_, weights_):
    cdef const int[::1] kind = packed.kind
    cdef const int[::1] axis = packed.axis
    cdef const int[::1] joint = packed.joint
    cdef const double[::1] scale = packed.scale
    cdef const double[:, ::1] trans = packed.trans
    cdef const double[::1] offset = packed.offset
    cdef const double[:, ::1] cs = packed.cs
    cdef const double[::1] lo = np.ascontiguousarray(lo_, dtype=np.float64)
    cdef const double[::1] hi = np.ascontiguousarray(hi_, dtype=np.float64)
    cdef const double[:, ::1] z = np.ascontiguousarray(z_, dtype=np.float64)
    cdef const double[:, ::1] G = np.ascontiguousarray(goal_points_, dtype=np.float64)
    cdef const double[:, ::1] V = np.ascontiguousarray(np.reshape(goal_vecs_, (-1, 3)), dtype=np.float64)
    cdef const double[::1] ps = np.ascontiguousarray(p_start_, dtype=np.float64)
    cdef const double[::1] pe = np.ascontiguousarray(p_end_, dtype=np.float64)
    cdef const double[::1] wt = np.ascontiguousarray(weights_, dtype=np.float64)

    cdef Py_ssize_t N = z.shape[0], m = z.shape[1], K = kind.shape[0]
    cdef Py_ssize_t n = N - 1
    if lo.shape[0] != m or hi.shape[0] != m or ps.shape[0] != m or pe.shape[0] != m:
        raise ValueError("joint count mismatch")
    if G.shape[0] != N or G.shape[1] != 3:
        raise ValueError("goal points must be (N, 3)")
    if n > 0 and V.shape[0] != n:
        raise ValueError("need n goal vectors")
    if wt.shape[0] != 7:
        raise ValueError("need seven weights")

    theta_np = np.empty((N, m))
    sig_np = np.empty((N, m))
    grad_np = np.zeros((N, m))
    P_np = np.empty((N, 3))
    D_np = np.empty((N, 3))
    terms_np = np.zeros(7)
    cdef double[:, ::1] theta = theta_np
    cdef double[:, ::1] sig = sig_np
    cdef double[:, ::1] gth = grad_np
    cdef double[:, ::1] P = P_np
    cdef double[:, ::1] D = D_np
    cdef double[::1] terms = terms_np

    cdef double* tape = <double*> malloc(K * 8 * sizeof(double))
    if tape == NULL:
        raise MemoryError()

    cdef Py_ssize_t i, j, k
    cdef double u[3]
    cdef double w[3]
    cdef double ub[3]
    cdef double wb[3]
    cdef double c, s, rad, t, lo_open, hi_open, e, dn, gn, dot, cosv, inv
    cdef double c0 = wt[0], c1 = wt[1], c2 = wt[2], c3 = wt[3], c4 = wt[4], c5 = wt[5], c6 = wt[6]
    cdef double norm0 = 3.0 * n + 3.0
    cdef double L0 = 0.0, Lcos = 0.0, L2 = 0.0, L3 = 0.0, L4 = 0.0, L5 = 0.0, L6 = 0.0
    cdef double* rec

    try:
        with nogil:
            for i in range(N):
                for j in range(m):
                    t = _sigmoid(z[i, j])
                    sig[i, j] = t
                    t = lo[j] + t * (hi[j] - lo[j])
                    lo_open = nextafter(lo[j], hi[j])
                    hi_open = nextafter(hi[j], lo[j])
                    if t < lo_open:
                        t = lo_open
                    elif t > hi_open:
                        t = hi_open
                    theta[i, j] = t

            for i in range(N):
                u[0] = 0.0; u[1] = 0.0; u[2] = 0.0
                w[0] = 0.0; w[1] = 0.0; w[2] = 1.0
                for k in range(K - 1, -1, -1):
                    if kind[k] == 0:
                        u[0] += trans[k, 0]
                        u[1] += trans[k, 1]
                        u[2] += trans[k, 2]
                        continue
                    if kind[k] == 1:
                        c = cs[k, 0]
                        s = cs[k, 1]
                    else:
                        rad = (scale[k] * theta[i, joint[k]] + offset[k]) * DEG
                        c = cos(rad)
                        s = sin(rad)
                    rec = tape + 8 * k
                    rec[0] = c; rec[1] = s
                    rec[2] = u[0]; rec[3] = u[1]; rec[4] = u[2]
                    rec[5] = w[0]; rec[6] = w[1]; rec[7] = w[2]
                    _rot(axis[k], c, s, u)
                    _rot(axis[k], c, s, w)
                for k in range(3):
                    P[i, k] = u[k]
                    D[i, k] = w[k]

                # adjoints of this pose's position and direction
                for k in range(3):
                    e = u[k] - G[i, k]
                    L0 += e * e
                    ub[k] = c0 * 2.0 * e / norm0
                    wb[k] = 0.0
                if i == 0:
                    for k in range(3):
                        e = u[k] - G[0, k]
                        L4 += e * e
                        ub[k] += c4 * 2.0 * e
                if i == n:
                    for k in range(3):
                        e = u[k] - G[n, k]
                        L5 += e * e
                        ub[k] += c5 * 2.0 * e
                if i < n:
                    dn = sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
                    gn = sqrt(V[i, 0] * V[i, 0] + V[i, 1] * V[i, 1] + V[i, 2] * V[i, 2])
                    dot = w[0] * V[i, 0] + w[1] * V[i, 1] + w[2] * V[i, 2]
                    cosv = dot / (dn * gn)
                    Lcos += cosv
                    for k in range(3):
                        wb[k] = -c1 / n * (V[i, k] / (dn * gn) - cosv / (dn * dn) * w[k])

                for k in range(K):
                    if kind[k] == 0:
                        continue
                    rec = tape + 8 * k
                    c = rec[0]
                    s = rec[1]
                    if kind[k] == 2:
                        gth[i, joint[k]] += (
                            _drot_dot(axis[k], c, s, ub, rec + 2)
                            + _drot_dot(axis[k], c, s, wb, rec + 5)
                        ) * (scale[k] * DEG)
                    _rot_t(axis[k], c, s, ub)
                    _rot_t(axis[k], c, s, wb)

            for j in range(m):
                e = theta[0, j] - ps[j]
                L2 += e * e
                gth[0, j] += c2 * 2.0 * e
                e = theta[n, j] - pe[j]
                L3 += e * e
                gth[n, j] += c3 * 2.0 * e
            if n > 0:
                inv = 1.0 / (n * m)
                for i in range(n):
                    for j in range(m):
                        e = theta[i + 1, j] - theta[i, j]
                        L6 += e * e
                        gth[i + 1, j] += c6 * 2.0 * e * inv
                        gth[i, j] -= c6 * 2.0 * e * inv
                L6 *= inv

            for i in range(N):
                for j in range(m):
                    t = sig[i, j]
                    gth[i, j] *= t * (1.0 - t) * (hi[j] - lo[j])
    finally:
        free(tape)

    terms[0] = L0 / norm0
    terms[1] = 1.0 - Lcos / n if n > 0 else 0.0
    terms[2] = L2
    terms[3] = L3
    terms[4] = L4
    terms[5] = L5
    terms[6] = L6
    loss = 0.0
    for k in range(7):
        loss += wt[k] * terms[k]
    return loss, terms_np, grad_np, theta_np, P_np, D_np
