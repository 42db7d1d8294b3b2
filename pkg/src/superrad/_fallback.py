"""Pure-Python (numpy/scipy) versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same functions with the same semantics; the
package picks the compiled one at import when it is available.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0
SQRT3 = math.sqrt(3.0)


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_uniform(seed: int, stream, step: int, component: int):
    """Uniform [0, 1) variates keyed by (seed, stream, step, component).

    A splitmix64-style hash of the counter tuple; ``stream`` may be an
    array.  Independent of evaluation order by construction.
    """
    with np.errstate(over="ignore"):
        s = np.asarray(stream, dtype=np.uint64)
        z = _mix(np.uint64(seed & MASK64) * _GOLDEN + np.uint64(1))
        z = _mix(z ^ (s * _M1 + np.uint64(0x632BE59BD9B4E019)))
        z = _mix(z ^ np.uint64((step * 0x2545F4914F6CDD1D + component) & MASK64))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def three_point(u):
    """Map uniforms to the three-point law {-sqrt3: 1/6, 0: 2/3, +sqrt3: 1/6}."""
    return np.where(u < 1.0 / 6.0, -SQRT3, np.where(u >= 5.0 / 6.0, SQRT3, 0.0))


# --- Langevin ensemble step -------------------------------------------------

def langevin_drift(y, pars, out=None):
    """Drift of (q, p, Sx, Sy, Sz) for every trajectory; y has shape (5, M).

    ``pars`` = (kappa, Gamma, wg, d0, delta, N, Omega).
    """
    kappa, Gamma, wg, d0, delta, N, Om = pars
    q, p, x, yy, z = y
    if out is None:
        out = np.empty_like(y)
    hk = 0.5 * kappa
    hG = 0.5 * Gamma
    nO = 0.5 * N * Om
    hO = 0.5 * Om
    out[0] = -hk * q - nO * yy
    out[1] = -hk * p + nO * x
    out[2] = -hG * x - delta * yy + hO * p * z
    out[3] = -hG * yy + delta * x - hO * q * z
    out[4] = -wg * (z - d0) + 2.0 * Om * (q * yy - p * x)
    return out


def langevin_step(y, pars, B, dt, seed, step, first_traj=0):
    """One explicit order-2.0 weak step with additive noise, in place.

    ``B`` (5 x 5) satisfies B B^T = 2 D dt and is shared by all
    trajectories.  Returns ``y``.
    """
    M = y.shape[1]
    traj = np.arange(first_traj, first_traj + M, dtype=np.uint64)
    xi = np.empty((5, M))
    for c in range(5):
        xi[c] = three_point(counter_uniform(seed, traj, step, c))
    noise = B @ xi
    a0 = langevin_drift(y, pars)
    ybar = y + a0 * dt + noise
    a1 = langevin_drift(ybar, pars)
    y += 0.5 * (a0 + a1) * dt + noise
    return y


# --- quantum-jump effective evolution --------------------------------------

def csr_matvec(L, v):
    return L @ v


def _rk4(L, v, h):
    k1 = L @ v
    k2 = L @ (v + 0.5 * h * k1)
    k3 = L @ (v + 0.5 * h * k2)
    k4 = L @ (v + h * k3)
    return v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def advance(L: sp.csr_matrix, v: np.ndarray, t: float, t_stop: float, dt: float,
            u: float, trace_w: np.ndarray, tol: float = 1e-9):
    """Integrate dv/dt = L v from t toward t_stop with RK4 steps of at most dt.

    Stops early once the trace functional ``trace_w . Re v`` falls to the
    jump threshold ``u``; the crossing is located by regula falsi on the
    log trace.  ``v`` is updated in place.  Returns (t, crossed, n_rk_steps).
    """
    n_steps = 0
    tr = float(trace_w @ v.real)
    while t < t_stop:
        h = min(dt, t_stop - t)
        if t_stop - (t + h) < 1e-12 * max(1.0, abs(t_stop)):
            h = t_stop - t
        w = _rk4(L, v, h)
        n_steps += 1
        tr_new = float(trace_w @ w.real)
        if tr_new > u:
            v[:] = w
            t = t + h if h != t_stop - t else t_stop
            tr = tr_new
            continue
        lo, hi = 0.0, h
        f_lo, f_hi = math.log(tr / u), math.log(max(tr_new, 1e-300) / u)
        side = 0
        best = w
        for _ in range(60):
            x = lo + (hi - lo) * f_lo / (f_lo - f_hi)
            if not (lo < x < hi):
                x = 0.5 * (lo + hi)
            cand = _rk4(L, v, x)
            n_steps += 1
            tr_c = float(trace_w @ cand.real)
            f_c = math.log(max(tr_c, 1e-300) / u)
            best = cand
            if abs(tr_c - u) <= tol * u or hi - lo < 1e-14:
                hi = x
                break
            if f_c > 0:
                lo, f_lo = x, f_c
                if side == 1:
                    f_hi *= 0.5
                side = 1
            else:
                hi, f_hi = x, f_c
                if side == -1:
                    f_lo *= 0.5
                side = -1
        v[:] = best
        return t + x, True, n_steps
    return t_stop, False, n_steps


# --- full-loop kernels (same signatures as the compiled module) -----------

OK, QUANTA_ERROR, DEAD_STATE, NQ_OVERFLOW, DIVERGED, NONPOSITIVE = 0, 1, 2, 3, 4, 5


def _scalar_uniform(seed, stream, step, comp):
    return float(counter_uniform(seed, np.uint64(stream), step, comp))


def mc_trajectory(ptr, idx, A, B, C, cnt, j1_ptr, j1_idx, j1_val, j2_ptr, j2_idx, j2_val,
                  j3_diag, kappa, tw, szw, pw, xk, yb, n_atoms, v0, nq0, t_samples,
                  dt_factor, nq_max, seed, traj, out, counts, tol=1e-9):
    """Reference version of the compiled quantum-jump trajectory loop."""
    n = len(v0)
    J1 = sp.csr_matrix((j1_val, j1_idx, j1_ptr), shape=(n, n))
    J2 = sp.csr_matrix((j2_val, j2_idx, j2_ptr), shape=(n, n))
    r1 = J1.T @ tw
    r2 = J2.T @ tw
    v = np.array(v0, dtype=complex)
    counts[:] = 0
    nq = int(nq0)
    cache = {}
    n_evals = 0
    t = 0.0
    jumps = 0
    u = _scalar_uniform(seed, traj, 0, 0)
    trace_el = tw != 0
    for s_i, t_stop in enumerate(t_samples):
        while True:
            if nq > nq_max:
                return NQ_OVERFLOW, nq, n_evals, t
            if nq not in cache:
                xx = (nq - cnt).astype(float)
                data = A + B * nq + C * np.sqrt(np.maximum(xx, 0.0))
                L = sp.csr_matrix((data, idx, ptr), shape=(n, n))
                valid = (xk <= nq) & (yb <= nq)
                rows = np.abs(L).sum(axis=1).A1
                rs = rows[valid].max() if valid.any() else 0.0
                cache[nq] = (L, dt_factor / rs if rs > 0 else 1e300)
            L, dt = cache[nq]
            t, crossed, steps = advance(L, v, t, t_stop, dt, u, tw, tol)
            n_evals += steps
            if not crossed:
                break
            wts = np.array([
                r1 @ v.real,
                r2 @ v.real,
                (j3_diag * tw) @ v.real,
                kappa * (tw * (nq - xk)) @ v.real,
            ])
            tot = wts.sum()
            if not tot > 0:
                return DEAD_STATE, nq, n_evals, t
            jumps += 1
            r = _scalar_uniform(seed, traj, jumps, 1) * tot
            acc = np.cumsum(wts)
            ch = 3
            for k in range(4):
                if r < acc[k] and wts[k] > 0:
                    ch = k
                    break
            if ch == 0:
                jb = J1 @ v
                nq += 1
            elif ch == 1:
                jb = J2 @ v
                nq -= 1
            elif ch == 2:
                jb = j3_diag * v
            else:
                m = (nq - xk).astype(float)
                kk = (nq - yb).astype(float)
                f = np.where((m > 0) & (kk > 0), kappa * np.sqrt(np.maximum(m * kk, 0.0)), 0.0)
                jb = f * v
                nq -= 1
            counts[ch] += 1
            if nq < 0 or nq != nq0 + counts[0] - counts[1] - counts[3]:
                return QUANTA_ERROR, nq, n_evals, t
            tr = float(tw @ jb.real)
            if not tr > 0:
                return DEAD_STATE, nq, n_evals, t
            v[:] = jb / tr
            u = _scalar_uniform(seed, traj, jumps, 0)
        tr = float(tw @ v.real)
        m = np.where(trace_el, nq - xk, 0).astype(float)
        out[s_i, 0] = (szw @ v.real) / (n_atoms * tr)
        out[s_i, 1] = (pw @ v.real) / tr
        out[s_i, 2] = (tw * m) @ v.real / tr
        out[s_i, 3] = (tw * m * (m - 1)) @ v.real / tr
    return OK, nq, n_evals, t


def diffusion_half(kappa, Gamma, wg, N, gamma_minus_w, means, scale=1.0):
    """Matrix D (half of 2D) over (q, p, Sx, Sy, Sz) at the given ensemble means."""
    mx, my, mz = means
    D = np.zeros((5, 5))
    D[0, 0] = D[1, 1] = kappa / 8.0
    D[2, 2] = D[3, 3] = Gamma / (8.0 * N)
    D[2, 4] = D[4, 2] = gamma_minus_w * mx / (2.0 * N)
    D[3, 4] = D[4, 3] = gamma_minus_w * my / (2.0 * N)
    D[4, 4] = (wg + gamma_minus_w * mz) / N
    return scale * D


def sym_sqrt_factor(D, dt, clamp_rel=1e-10):
    """(B, lambda_min) with B = V sqrt(2 lam dt) V^T, or (None, lambda_min) if not PSD."""
    lam, V = np.linalg.eigh(D)
    lmin = float(lam.min())
    if lmin < -clamp_rel * np.trace(D):
        return None, lmin
    s = np.sqrt(np.maximum(2.0 * lam * dt, 0.0))
    return (V * s) @ V.T, lmin


def langevin_run(y, kappa, Gamma, wg, d0, delta, N, Om, gamma_minus_w, diff_scale, dt,
                 n_steps, stride, seed, step0, archive, clamp_rel=1e-10, threads=1):
    """Reference version of the compiled multi-step Langevin loop."""
    M = y.shape[1]
    pars = (kappa, Gamma, wg, d0, delta, N, Om)
    traj = np.arange(M, dtype=np.uint64)
    n_arch = 0
    lmin = 0.0
    for st in range(n_steps):
        means = y[2:].mean(axis=1)
        D = diffusion_half(kappa, Gamma, wg, N, gamma_minus_w, means, diff_scale)
        Bm, lmin = sym_sqrt_factor(D, dt, clamp_rel)
        if Bm is None:
            return NONPOSITIVE, st, -1, lmin
        xi = np.empty((5, M))
        for c in range(5):
            xi[c] = three_point(counter_uniform(seed, traj, step0 + st, c))
        noise = Bm @ xi
        a0 = langevin_drift(y, pars)
        a1 = langevin_drift(y + a0 * dt + noise, pars)
        y += 0.5 * (a0 + a1) * dt + noise
        bad = ~np.isfinite(y).all(axis=0)
        if bad.any():
            return DIVERGED, st, int(np.argmax(bad)), lmin
        if (st + 1) % stride == 0 and n_arch < archive.shape[0]:
            archive[n_arch] = y
            n_arch += 1
    return OK, n_steps, -1, lmin
