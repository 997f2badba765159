"""Pure-NumPy fallback kernels.

Signature-for-signature mirror of ``numba_backend``.  Loops over time are
plain Python; inner work is vectorized.  Expression trees match the numba
kernels so the integrator paths agree bit-for-bit; reservoir updates go
through BLAS/scipy-sparse and may differ from the numba path in the last
ulp, which cross-backend tests account for.
"""

import numpy as np
from scipy import sparse

LORENZ = 0
ROESSLER = 1

DIVERGENCE_LIMIT = 1.0e6


def _deriv(code, x, p):
    if code == LORENZ:
        return np.array([
            p[0] * (x[1] - x[0]),
            x[0] * (p[1] - x[2]) - x[1],
            x[0] * x[1] - p[2] * x[2],
        ])
    return np.array([
        -(x[1] + x[2]),
        x[0] + p[0] * x[1],
        p[1] + (x[0] - p[2]) * x[2],
    ])


def _rk4_step(code, x, h, p, f):
    k1 = _deriv(code, x, p) + f
    k2 = _deriv(code, x + 0.5 * h * k1, p) + f
    k3 = _deriv(code, x + 0.5 * h * k2, p) + f
    k4 = _deriv(code, x + h * k3, p) + f
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _guard_ok(vec):
    return bool(np.all(np.isfinite(vec)) and np.max(np.abs(vec)) <= DIVERGENCE_LIMIT)


def integrate_sys(code, x0, n_steps, dt, p, force, n_substeps):
    out = np.empty((n_steps + 1, 3))
    out[0] = x0
    cur = x0.astype(np.float64, copy=True)
    h = dt / n_substeps
    for k in range(n_steps):
        f = force[k]
        for _ in range(n_substeps):
            cur = _rk4_step(code, cur, h, p, f)
        if not _guard_ok(cur):
            return out, k
        out[k + 1] = cur
    return out, -1


def _csr(a_data, a_indices, a_indptr):
    n = a_indptr.shape[0] - 1
    return sparse.csr_matrix((a_data, a_indices, a_indptr), shape=(n, n), copy=False)


def _update(a_mat, w_in, r, feed, alpha):
    pre = a_mat @ r + w_in @ feed
    return alpha * r + (1.0 - alpha) * np.tanh(pre)


def _readout(p_out, r):
    return p_out @ np.concatenate((r, r * r))


def drive_loop(a_data, a_indices, a_indptr, w_in, u_seq, r0, alpha):
    a_mat = _csr(a_data, a_indices, a_indptr)
    n = u_seq.shape[0]
    states = np.empty((n, r0.shape[0]))
    r = r0.copy()
    for k in range(n):
        r = _update(a_mat, w_in, r, u_seq[k], alpha)
        states[k] = r
    return states


def predict_loop(a_data, a_indices, a_indptr, w_in, p_out, r0, n_steps, alpha):
    a_mat = _csr(a_data, a_indices, a_indptr)
    dim = p_out.shape[0]
    v_seq = np.empty((n_steps, dim))
    r = r0.copy()
    for k in range(n_steps):
        v = _readout(p_out, r)
        if not _guard_ok(v):
            return v_seq, r, k
        v_seq[k] = v
        r = _update(a_mat, w_in, r, v, alpha)
    return v_seq, r, -1


def controlled_loop(code, a_data, a_indices, a_indptr, w_in, p_out, r0, u0,
                    n_steps, dt, p_sys, k_gain, alpha, n_substeps, resync_period):
    a_mat = _csr(a_data, a_indices, a_indptr)
    u_seq = np.empty((n_steps, 3))
    v_seq = np.empty((n_steps, 3))
    f_seq = np.empty((n_steps, 3))
    u = u0.astype(np.float64, copy=True)
    r = r0.copy()
    h = dt / n_substeps
    for k in range(n_steps):
        v = _readout(p_out, r)
        if not _guard_ok(v):
            return u_seq, v_seq, f_seq, k, 1, r
        u_seq[k] = u
        v_seq[k] = v
        f_seq[k] = k_gain * (v - u)
        for _ in range(n_substeps):
            f = k_gain * (v - u)
            u = _rk4_step(code, u, h, p_sys, f)
        if not _guard_ok(u):
            return u_seq, v_seq, f_seq, k, 2, r
        if resync_period > 0 and (k + 1) % resync_period == 0:
            r = _update(a_mat, w_in, r, u, alpha)
        else:
            r = _update(a_mat, w_in, r, v, alpha)
    return u_seq, v_seq, f_seq, -1, 0, r


def rosenstein_curve(pts, ref_idx, theiler, follow):
    n = pts.shape[0]
    limit = n - follow
    cand = pts[:limit]
    sum_log = np.zeros(follow + 1)
    counts = np.zeros(follow + 1, dtype=np.int64)
    skipped = 0
    for i in ref_idx:
        d2 = ((cand - pts[i]) ** 2).sum(axis=1)
        lo = max(0, i - theiler)
        hi = min(limit, i + theiler + 1)
        d2[lo:hi] = np.inf
        if not np.isfinite(d2).any():
            skipped += 1
            continue
        j = int(np.argmin(d2))
        track = ((pts[i:i + follow + 1] - pts[j:j + follow + 1]) ** 2).sum(axis=1)
        good = track > 0.0
        sum_log[good] += 0.5 * np.log(track[good])
        counts += good
    return sum_log, counts, skipped


def corr_counts(pts, radii):
    n = pts.shape[0]
    nr = radii.shape[0]
    hist = np.zeros(nr + 1, dtype=np.int64)
    for i in range(n - 1):
        diff = pts[i + 1:] - pts[i]
        dist = np.sqrt((diff * diff).sum(axis=1))
        pos = np.searchsorted(radii, dist, side="right")
        np.add.at(hist, pos, 1)
    return np.cumsum(hist[:nr])
