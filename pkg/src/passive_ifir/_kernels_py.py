"""Pure-Python reference versions of the simulation kernels.

Signatures and semantics match ``_kernels.pyx`` exactly; the compiled module
is preferred when it is importable.
"""

import numpy as np


def ss_filter(a, b, c, d, u):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    u = np.asarray(u, dtype=float)
    n = a.shape[0]
    y = np.empty(u.shape[0])
    x = np.zeros(n)
    for t in range(u.shape[0]):
        y[t] = c @ x + d * u[t]
        x = a @ x + b * u[t]
    return y


def tf_filter(num, den, u):
    num = np.asarray(num, dtype=float) / den[0]
    den = np.asarray(den, dtype=float) / den[0]
    u = [float(v) for v in u]
    nb, na = num.shape[0], den.shape[0]
    y = [0.0] * len(u)
    for t in range(len(u)):
        acc = 0.0
        for k in range(min(nb, t + 1)):
            acc += num[k] * u[t - k]
        for k in range(1, min(na, t + 1)):
            acc -= den[k] * y[t - k]
        y[t] = acc
    return np.array(y)


def _controller_partial(cnum, cden, e_hist, u_hist, t):
    acc = 0.0
    for k in range(1, min(cnum.shape[0], t + 1)):
        acc += cnum[k] * e_hist[t - k]
    for k in range(1, min(cden.shape[0], t + 1)):
        acc -= cden[k] * u_hist[t - k]
    return acc


def closed_loop_linear(a, b, c, d, cnum, cden, r):
    """Unity feedback of a discrete plant ``(a, b, c, d)`` and ``cnum/cden``.

    Returns ``(y, u)``. The caller guarantees ``d * cnum[0] == 0``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    cnum = np.asarray(cnum, dtype=float) / cden[0]
    cden = np.asarray(cden, dtype=float) / cden[0]
    r = np.asarray(r, dtype=float)
    n_steps = r.shape[0]
    x = np.zeros(a.shape[0])
    y = np.zeros(n_steps)
    u = np.zeros(n_steps)
    e = np.zeros(n_steps)
    for t in range(n_steps):
        partial = _controller_partial(cnum, cden, e, u, t)
        if d != 0.0:
            u[t] = partial
            y[t] = c @ x + d * u[t]
            e[t] = r[t] - y[t]
        else:
            y[t] = c @ x
            e[t] = r[t] - y[t]
            u[t] = partial + cnum[0] * e[t]
        x = a @ x + b * u[t]
    return y, u


def spring_force(delta, k12, threshold, slope_small, slope_large, piecewise):
    if not piecewise:
        return k12 * delta
    mag = abs(delta)
    if mag <= threshold:
        return slope_small * delta
    f = slope_small * threshold + slope_large * (mag - threshold)
    return f if delta > 0 else -f


def _two_cart_rhs(s, force, p):
    m1, m2, k12, c12, c, thr, s_small, s_large, pw = p
    v1, v2, dl = s
    fk = spring_force(dl, k12, thr, s_small, s_large, pw)
    fd = c12 * (v1 - v2)
    return (
        (force - fk - fd - c * v1) / m1,
        (fk + fd - c * v2) / m2,
        v1 - v2,
    )


def _rk4_hold(s, force, p, h, substeps):
    for _ in range(substeps):
        k1 = _two_cart_rhs(s, force, p)
        s2 = tuple(s[i] + 0.5 * h * k1[i] for i in range(3))
        k2 = _two_cart_rhs(s2, force, p)
        s3 = tuple(s[i] + 0.5 * h * k2[i] for i in range(3))
        k3 = _two_cart_rhs(s3, force, p)
        s4 = tuple(s[i] + h * k3[i] for i in range(3))
        k4 = _two_cart_rhs(s4, force, p)
        s = tuple(s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(3))
    return s


def two_cart_open_loop(params, u, ts, substeps):
    """Sampled velocity ``v1`` of the two-cart model driven by ZOH force ``u``."""
    p = tuple(float(v) for v in params)
    h = ts / substeps
    s = (0.0, 0.0, 0.0)
    y = np.empty(len(u))
    for t in range(len(u)):
        y[t] = s[0]
        s = _rk4_hold(s, float(u[t]), p, h, substeps)
    return y


def two_cart_closed_loop(params, cnum, cden, r, ts, substeps):
    p = tuple(float(v) for v in params)
    cnum = np.asarray(cnum, dtype=float) / cden[0]
    cden = np.asarray(cden, dtype=float) / cden[0]
    h = ts / substeps
    n_steps = len(r)
    s = (0.0, 0.0, 0.0)
    y = np.zeros(n_steps)
    u = np.zeros(n_steps)
    e = np.zeros(n_steps)
    for t in range(n_steps):
        y[t] = s[0]
        e[t] = r[t] - y[t]
        u[t] = _controller_partial(cnum, cden, e, u, t) + cnum[0] * e[t]
        s = _rk4_hold(s, u[t], p, h, substeps)
    return y, u
