"""Pure-Python (numpy) trajectory loss kernel.

Same contract as the compiled ``_ckernel.loss_and_grad``: evaluates the
composite loss for a logit matrix and returns its exact gradient, computed
with a hand-written reverse sweep through the chain vectorised over poses.
"""
import numpy as np
from scipy.special import expit

DEG = np.pi / 180.0


def _rot(axis, c, s, v):
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    out = v.copy()
    if axis == 0:
        out[:, 1] = c * y - s * z
        out[:, 2] = s * y + c * z
    elif axis == 1:
        out[:, 0] = c * x - s * z
        out[:, 2] = s * x + c * z
    else:
        out[:, 0] = c * x - s * y
        out[:, 1] = s * x + c * y
    return out


def _rot_t(axis, c, s, g):
    # transpose of _rot applied to an adjoint
    x, y, z = g[:, 0], g[:, 1], g[:, 2]
    out = g.copy()
    if axis == 0:
        out[:, 1] = c * y + s * z
        out[:, 2] = -s * y + c * z
    elif axis == 1:
        out[:, 0] = c * x + s * z
        out[:, 2] = -s * x + c * z
    else:
        out[:, 0] = c * x + s * y
        out[:, 1] = -s * x + c * y
    return out


def _drot_dot(axis, c, s, g, v):
    """g . (dR/dphi) v per row."""
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    if axis == 0:
        return g[:, 1] * (-s * y - c * z) + g[:, 2] * (c * y - s * z)
    if axis == 1:
        return g[:, 0] * (-s * x - c * z) + g[:, 2] * (c * x - s * z)
    return g[:, 0] * (-s * x - c * y) + g[:, 1] * (c * x - s * y)


def forward(packed, theta):
    """Positions and directions for every pose row of ``theta`` (degrees)."""
    N = theta.shape[0]
    u = np.zeros((N, 3))
    w = np.zeros((N, 3))
    w[:, 2] = 1.0
    K = len(packed.kind)
    tape = [None] * K
    for k in range(K - 1, -1, -1):
        kind = packed.kind[k]
        if kind == 0:
            u = u + packed.trans[k]
            continue
        if kind == 1:
            c = np.full(N, packed.cs[k, 0])
            s = np.full(N, packed.cs[k, 1])
        else:
            rad = (packed.scale[k] * theta[:, packed.joint[k]] + packed.offset[k]) * DEG
            c, s = np.cos(rad), np.sin(rad)
        tape[k] = (c, s, u, w)
        u = _rot(packed.axis[k], c, s, u)
        w = _rot(packed.axis[k], c, s, w)
    return u, w, tape


def loss_and_grad(packed, lo, hi, z, goal_points, goal_vecs, p_start, p_end, weights):
    z = np.asarray(z, float)
    N, m = z.shape
    n = N - 1
    span = hi - lo
    sig = expit(z)
    theta = np.clip(lo + sig * span, np.nextafter(lo, hi), np.nextafter(hi, lo))
    P, D, tape = forward(packed, theta)

    c0, c1, c2, c3, c4, c5, c6 = weights
    terms = np.zeros(7)
    gP = np.zeros_like(P)
    gD = np.zeros_like(D)
    gth = np.zeros_like(theta)

    diff = P - goal_points
    terms[0] = np.sum(diff * diff) / (3 * n + 3)
    gP += c0 * 2.0 * diff / (3 * n + 3)

    if n > 0:
        d = D[:n]
        g = goal_vecs
        dn = np.linalg.norm(d, axis=1)
        gn = np.linalg.norm(g, axis=1)
        dot = np.sum(d * g, axis=1)
        cos = dot / (dn * gn)
        terms[1] = 1.0 - np.mean(cos)
        dcos = g / (dn * gn)[:, None] - (cos / (dn * dn))[:, None] * d
        gD[:n] += -c1 / n * dcos

    e2 = theta[0] - p_start
    terms[2] = np.sum(e2 * e2)
    gth[0] += c2 * 2.0 * e2
    e3 = theta[n] - p_end
    terms[3] = np.sum(e3 * e3)
    gth[n] += c3 * 2.0 * e3
    e4 = P[0] - goal_points[0]
    terms[4] = np.sum(e4 * e4)
    gP[0] += c4 * 2.0 * e4
    e5 = P[n] - goal_points[n]
    terms[5] = np.sum(e5 * e5)
    gP[n] += c5 * 2.0 * e5

    if n > 0:
        step = np.diff(theta, axis=0)
        terms[6] = np.sum(step * step) / (n * m)
        gs = c6 * 2.0 * step / (n * m)
        gth[1:] += gs
        gth[:-1] -= gs

    loss = float(np.dot(weights, terms))

    ub, wb = gP, gD
    for k in range(len(packed.kind)):
        kind = packed.kind[k]
        if kind == 0:
            continue
        c, s, u_in, w_in = tape[k]
        ax = packed.axis[k]
        if kind == 2:
            gphi = _drot_dot(ax, c, s, ub, u_in) + _drot_dot(ax, c, s, wb, w_in)
            gth[:, packed.joint[k]] += gphi * (packed.scale[k] * DEG)
        ub = _rot_t(ax, c, s, ub)
        wb = _rot_t(ax, c, s, wb)

    grad = gth * sig * (1.0 - sig) * span
    return loss, terms, grad, theta, P, D
