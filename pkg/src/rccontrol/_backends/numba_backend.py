"""Numba-compiled kernels (default backend).

Every function here has a signature-identical twin in ``numpy_backend``;
``rccontrol._backends`` picks one module at import time.  Kernels avoid
fastmath so that arithmetic stays IEEE-ordered: the generic Python RK4 path
in ``dynamics`` mirrors these expression trees and the two must agree
bit-for-bit on the built-in systems.
"""

import numpy as np
from numba import njit

LORENZ = 0
ROESSLER = 1

#: guard threshold shared by all loops; crossing it aborts with a step index
DIVERGENCE_LIMIT = 1.0e6


@njit(cache=True, nogil=True)
def _deriv(code, x, p, out):
    if code == LORENZ:
        out[0] = p[0] * (x[1] - x[0])
        out[1] = x[0] * (p[1] - x[2]) - x[1]
        out[2] = x[0] * x[1] - p[2] * x[2]
    else:
        out[0] = -(x[1] + x[2])
        out[1] = x[0] + p[0] * x[1]
        out[2] = p[1] + (x[0] - p[2]) * x[2]


@njit(cache=True, nogil=True)
def _rk4_step(code, x, h, p, f, k1, k2, k3, k4, xt, out):
    # classical RK4 on dx/dt = deriv(x) + f, with f held constant
    _deriv(code, x, p, k1)
    for i in range(3):
        k1[i] = k1[i] + f[i]
    for i in range(3):
        xt[i] = x[i] + 0.5 * h * k1[i]
    _deriv(code, xt, p, k2)
    for i in range(3):
        k2[i] = k2[i] + f[i]
    for i in range(3):
        xt[i] = x[i] + 0.5 * h * k2[i]
    _deriv(code, xt, p, k3)
    for i in range(3):
        k3[i] = k3[i] + f[i]
    for i in range(3):
        xt[i] = x[i] + h * k3[i]
    _deriv(code, xt, p, k4)
    for i in range(3):
        k4[i] = k4[i] + f[i]
    for i in range(3):
        out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def integrate_sys(code, x0, n_steps, dt, p, force, n_substeps):
    """Integrate a built-in system; ``force[k]`` is held over sample step k.

    Returns (samples, status): samples has n_steps+1 rows starting at x0,
    status is -1 on success or the index of the first diverged step.
    """
    out = np.empty((n_steps + 1, 3))
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    xt = np.empty(3)
    cur = np.empty(3)
    nxt = np.empty(3)
    for i in range(3):
        out[0, i] = x0[i]
        cur[i] = x0[i]
    h = dt / n_substeps
    for k in range(n_steps):
        f = force[k]
        for _ in range(n_substeps):
            _rk4_step(code, cur, h, p, f, k1, k2, k3, k4, xt, nxt)
            for i in range(3):
                cur[i] = nxt[i]
        ok = True
        for i in range(3):
            if not np.isfinite(cur[i]) or abs(cur[i]) > DIVERGENCE_LIMIT:
                ok = False
        if not ok:
            return out, k
        for i in range(3):
            out[k + 1, i] = cur[i]
    return out, -1


@njit(cache=True, nogil=True)
def _reservoir_update(a_data, a_indices, a_indptr, w_in, r, feed, alpha, pre, r_new):
    # r_new = alpha*r + (1-alpha)*tanh(A r + W_in feed), A in CSR form
    d_r = r.shape[0]
    dim = w_in.shape[1]
    for i in range(d_r):
        s = 0.0
        for idx in range(a_indptr[i], a_indptr[i + 1]):
            s += a_data[idx] * r[a_indices[idx]]
        for d in range(dim):
            s += w_in[i, d] * feed[d]
        pre[i] = s
    for i in range(d_r):
        r_new[i] = alpha * r[i] + (1.0 - alpha) * np.tanh(pre[i])


@njit(cache=True, nogil=True)
def _readout(p_out, r, v):
    # v = P @ [r, r^2]
    d_r = r.shape[0]
    dim = p_out.shape[0]
    for d in range(dim):
        s = 0.0
        for j in range(d_r):
            s += p_out[d, j] * r[j]
        for j in range(d_r):
            s += p_out[d, d_r + j] * (r[j] * r[j])
        v[d] = s


@njit(cache=True, nogil=True)
def drive_loop(a_data, a_indices, a_indptr, w_in, u_seq, r0, alpha):
    """Teacher-forced reservoir run; returns the state after each input."""
    n = u_seq.shape[0]
    d_r = r0.shape[0]
    states = np.empty((n, d_r))
    r = r0.copy()
    pre = np.empty(d_r)
    r_new = np.empty(d_r)
    for k in range(n):
        _reservoir_update(a_data, a_indices, a_indptr, w_in, r, u_seq[k], alpha, pre, r_new)
        for i in range(d_r):
            r[i] = r_new[i]
            states[k, i] = r[i]
    return states


@njit(cache=True, nogil=True)
def predict_loop(a_data, a_indices, a_indptr, w_in, p_out, r0, n_steps, alpha):
    """Closed-loop run feeding the readout back as input.

    Returns (outputs, final_state, status); status -1 on success, else the
    step whose readout violated the divergence guard.
    """
    d_r = r0.shape[0]
    dim = p_out.shape[0]
    v_seq = np.empty((n_steps, dim))
    v = np.empty(dim)
    r = r0.copy()
    pre = np.empty(d_r)
    r_new = np.empty(d_r)
    for k in range(n_steps):
        _readout(p_out, r, v)
        ok = True
        for d in range(dim):
            if not np.isfinite(v[d]) or abs(v[d]) > DIVERGENCE_LIMIT:
                ok = False
        if not ok:
            return v_seq, r, k
        for d in range(dim):
            v_seq[k, d] = v[d]
        _reservoir_update(a_data, a_indices, a_indptr, w_in, r, v, alpha, pre, r_new)
        for i in range(d_r):
            r[i] = r_new[i]
    return v_seq, r, -1


@njit(cache=True, nogil=True)
def controlled_loop(code, a_data, a_indices, a_indptr, w_in, p_out, r0, u0,
                    n_steps, dt, p_sys, k_gain, alpha, n_substeps, resync_period):
    """Closed-loop control: plant under p_sys plus force pinning it to the
    reservoir prediction.

    The force is recomputed from the current plant state at every integrator
    substep (target held over the sample interval).  Returns
    (plant, target, force, status, fail_kind, reservoir_final); status is -1
    on success, else the failing step index, with fail_kind 1 for a diverged
    readout and 2 for a diverged plant.
    """
    d_r = r0.shape[0]
    u_seq = np.empty((n_steps, 3))
    v_seq = np.empty((n_steps, 3))
    f_seq = np.empty((n_steps, 3))
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    xt = np.empty(3)
    nxt = np.empty(3)
    v = np.empty(3)
    f = np.empty(3)
    u = np.empty(3)
    for i in range(3):
        u[i] = u0[i]
    r = r0.copy()
    pre = np.empty(d_r)
    r_new = np.empty(d_r)
    h = dt / n_substeps
    for k in range(n_steps):
        _readout(p_out, r, v)
        ok = True
        for d in range(3):
            if not np.isfinite(v[d]) or abs(v[d]) > DIVERGENCE_LIMIT:
                ok = False
        if not ok:
            return u_seq, v_seq, f_seq, k, 1, r
        for i in range(3):
            u_seq[k, i] = u[i]
            v_seq[k, i] = v[i]
            f_seq[k, i] = k_gain * (v[i] - u[i])
        for _ in range(n_substeps):
            for i in range(3):
                f[i] = k_gain * (v[i] - u[i])
            _rk4_step(code, u, h, p_sys, f, k1, k2, k3, k4, xt, nxt)
            for i in range(3):
                u[i] = nxt[i]
        ok = True
        for i in range(3):
            if not np.isfinite(u[i]) or abs(u[i]) > DIVERGENCE_LIMIT:
                ok = False
        if not ok:
            return u_seq, v_seq, f_seq, k, 2, r
        if resync_period > 0 and (k + 1) % resync_period == 0:
            _reservoir_update(a_data, a_indices, a_indptr, w_in, r, u, alpha, pre, r_new)
        else:
            _reservoir_update(a_data, a_indices, a_indptr, w_in, r, v, alpha, pre, r_new)
        for i in range(d_r):
            r[i] = r_new[i]
    return u_seq, v_seq, f_seq, -1, 0, r


@njit(cache=True, nogil=True)
def rosenstein_curve(pts, ref_idx, theiler, follow):
    """Mean log neighbor-divergence curve.

    For each reference index, the nearest neighbor (Euclidean, temporal
    separation > theiler, trackable for ``follow`` steps) is found and the
    pair distance followed.  Returns (sum_log_d, counts, skipped): per-lag
    totals of log distance, the number of pairs contributing at each lag,
    and how many references had no admissible neighbor.
    """
    n, dim = pts.shape
    m = ref_idx.shape[0]
    limit = n - follow
    sum_log = np.zeros(follow + 1)
    counts = np.zeros(follow + 1, dtype=np.int64)
    skipped = 0
    for mi in range(m):
        i = ref_idx[mi]
        best = np.inf
        best_j = -1
        for j in range(limit):
            sep = i - j
            if sep < 0:
                sep = -sep
            if sep <= theiler:
                continue
            d2 = 0.0
            for d in range(dim):
                diff = pts[i, d] - pts[j, d]
                d2 += diff * diff
            if d2 < best:
                best = d2
                best_j = j
        if best_j < 0:
            skipped += 1
            continue
        for k in range(follow + 1):
            d2 = 0.0
            for d in range(dim):
                diff = pts[i + k, d] - pts[best_j + k, d]
                d2 += diff * diff
            if d2 > 0.0:
                sum_log[k] += 0.5 * np.log(d2)
                counts[k] += 1
    return sum_log, counts, skipped


@njit(cache=True, nogil=True)
def corr_counts(pts, radii):
    """Unordered pair counts with distance strictly below each radius.

    ``radii`` must be sorted ascending.  counts[m] is the number of pairs
    i<j with |x_i - x_j| < radii[m].
    """
    n, dim = pts.shape
    nr = radii.shape[0]
    hist = np.zeros(nr + 1, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for d in range(dim):
                diff = pts[i, d] - pts[j, d]
                d2 += diff * diff
            dist = np.sqrt(d2)
            # first radius index with radii[idx] > dist (bisect right)
            lo = 0
            hi = nr
            while lo < hi:
                mid = (lo + hi) // 2
                if radii[mid] <= dist:
                    lo = mid + 1
                else:
                    hi = mid
            hist[lo] += 1
    counts = np.empty(nr, dtype=np.int64)
    total = 0
    for m_i in range(nr):
        total += hist[m_i]
        counts[m_i] = total
    return counts
