# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled hot loops: quantum-jump trajectories and the Langevin ensemble stepper.

Semantics mirror ``_fallback``; see there for the reference implementation.
"""
import numpy as np

from libc.math cimport sqrt, log, fabs, isfinite
from libc.stdint cimport uint64_t
from cython.parallel cimport prange

DEF GOLDEN = 0x9E3779B97F4A7C15
DEF M1 = 0xBF58476D1CE4E5B9
DEF M2 = 0x94D049BB133111EB
DEF C1 = 0x632BE59BD9B4E019
DEF C2 = 0x2545F4914F6CDD1D

cdef double INV53 = 1.0 / 9007199254740992.0
cdef double SQRT3 = 1.7320508075688772

# status codes shared with the fallback
cdef enum:
    S_OK = 0
    S_QUANTA_ERROR = 1
    S_DEAD_STATE = 2
    S_NQ_OVERFLOW = 3
    S_DIVERGED = 4
    S_NONPOSITIVE = 5

OK, QUANTA_ERROR, DEAD_STATE, NQ_OVERFLOW, DIVERGED, NONPOSITIVE = 0, 1, 2, 3, 4, 5


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>M1
    z = (z ^ (z >> 27)) * <uint64_t>M2
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t seed, uint64_t stream, uint64_t step, uint64_t comp) noexcept nogil:
    cdef uint64_t z = _mix(seed * <uint64_t>GOLDEN + 1)
    z = _mix(z ^ (stream * <uint64_t>M1 + <uint64_t>C1))
    z = _mix(z ^ (step * <uint64_t>C2 + comp))
    return <double>(z >> 11) * INV53


def counter_uniform(unsigned long long seed, stream, unsigned long long step,
                    unsigned long long component):
    s = np.atleast_1d(np.asarray(stream, dtype=np.uint64))
    out = np.empty(s.shape[0])
    cdef unsigned long long[::1] sv = s
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(sv.shape[0]):
        ov[i] = _uniform(seed, sv[i], step, component)
    return out if np.ndim(stream) else out[0]


# --- quantum-jump trajectories ---------------------------------------------

cdef inline void _mv(Py_ssize_t n, const long long* ptr, const long long* idx,
                     const double complex* data, const double complex* x,
                     double complex* out) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double complex s
    for i in range(n):
        s = 0
        for k in range(ptr[i], ptr[i + 1]):
            s = s + data[k] * x[idx[k]]
        out[i] = s


cdef inline void _rk4(Py_ssize_t n, const long long* ptr, const long long* idx,
                      const double complex* data, const double complex* v, double h,
                      double complex* k1, double complex* k2, double complex* tmp,
                      double complex* out) noexcept nogil:
    # out = RK4(v, h); k1 holds L v on entry and is preserved
    cdef Py_ssize_t i
    for i in range(n):
        tmp[i] = v[i] + 0.5 * h * k1[i]
        out[i] = k1[i]
    _mv(n, ptr, idx, data, tmp, k2)
    for i in range(n):
        tmp[i] = v[i] + 0.5 * h * k2[i]
        out[i] = out[i] + 2.0 * k2[i]
    _mv(n, ptr, idx, data, tmp, k2)
    for i in range(n):
        tmp[i] = v[i] + h * k2[i]
        out[i] = out[i] + 2.0 * k2[i]
    _mv(n, ptr, idx, data, tmp, k2)
    for i in range(n):
        out[i] = v[i] + h / 6.0 * (out[i] + k2[i])


cdef inline double _trace(Py_ssize_t n, const double* tw, const double complex* v) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0
    for i in range(n):
        if tw[i] != 0:
            s += tw[i] * v[i].real
    return s


def mc_trajectory(long long[::1] ptr, long long[::1] idx, double complex[::1] A,
                  double[::1] B, double complex[::1] C, long long[::1] cnt,
                  long long[::1] j1_ptr, long long[::1] j1_idx, double[::1] j1_val,
                  long long[::1] j2_ptr, long long[::1] j2_idx, double[::1] j2_val,
                  double[::1] j3_diag, double kappa,
                  double[::1] tw, double[::1] szw, double[::1] pw,
                  long long[::1] xk, long long[::1] yb, int n_atoms,
                  double complex[::1] v0, long long nq0, double[::1] t_samples,
                  double dt_factor, long long nq_max,
                  unsigned long long seed, unsigned long long traj,
                  double[:, ::1] out, long long[::1] counts, double tol=1e-9):
    """Run one trajectory; fills ``out`` (n_samples, 4) and ``counts`` (4).

    Returns (status, final N_q, number of RK4 evaluations, time of failure).
    """
    cdef Py_ssize_t n = v0.shape[0], nnz = A.shape[0], ns = t_samples.shape[0]
    cdef Py_ssize_t i, k, it, s_i = 0
    v_a = np.array(v0, dtype=complex)
    buf = np.zeros((6, n), dtype=complex)
    data_a = np.empty(nnz, dtype=complex)
    dtc_a = np.zeros(nq_max + 2)
    r1_a = np.zeros(n)
    r2_a = np.zeros(n)
    cdef double complex[::1] v = v_a
    cdef double complex[:, ::1] bf = buf
    cdef double complex[::1] data = data_a
    cdef double[::1] dtc = dtc_a
    cdef double[::1] r1 = r1_a
    cdef double[::1] r2 = r2_a
    cdef double complex* pv = &v[0]
    cdef double complex* k1 = &bf[0, 0]
    cdef double complex* k2 = &bf[1, 0]
    cdef double complex* tmp = &bf[2, 0]
    cdef double complex* w = &bf[3, 0]
    cdef double complex* cand = &bf[4, 0]
    cdef double complex* jb = &bf[5, 0]
    cdef long long nq = nq0, nq_data = -1, n_evals = 0, jumps = 0
    cdef double t = 0.0, h, t_stop, tr, tr_new, tr_c, u, lo, hi, f_lo, f_hi, f_c, xx
    cdef double dt, rs, amp, tot, r, acc
    cdef double wts[4]
    cdef int side, ch, status = S_OK
    cdef double m, kk, nf = n_atoms
    # trace of the J1 / J2 images as row vectors
    for i in range(n):
        for k in range(j1_ptr[i], j1_ptr[i + 1]):
            r1[j1_idx[k]] += tw[i] * j1_val[k]
        for k in range(j2_ptr[i], j2_ptr[i + 1]):
            r2[j2_idx[k]] += tw[i] * j2_val[k]
    for k in range(4):
        counts[k] = 0

    with nogil:
        u = _uniform(seed, traj, 0, 0)
        while s_i < ns:
            if nq != nq_data:
                if nq > nq_max:
                    status = S_NQ_OVERFLOW
                    break
                for k in range(nnz):
                    xx = <double>(nq - cnt[k])
                    data[k] = A[k] + B[k] * nq + (C[k] * sqrt(xx) if xx > 0 else 0)
                if dtc[nq] == 0:
                    rs = 0
                    for i in range(n):
                        if (xk[i] > nq) or (yb[i] > nq):
                            continue
                        amp = 0
                        for k in range(ptr[i], ptr[i + 1]):
                            amp += sqrt(data[k].real * data[k].real + data[k].imag * data[k].imag)
                        if amp > rs:
                            rs = amp
                    dtc[nq] = dt_factor / rs if rs > 0 else 1e300
                nq_data = nq
                dt = dtc[nq]
            t_stop = t_samples[s_i]
            tr = _trace(n, &tw[0], pv)
            # effective evolution up to the next sample or the jump threshold
            ch = -1
            while t < t_stop:
                h = t_stop - t
                if h > dt:
                    h = dt
                if t_stop - (t + h) < 1e-12 * (1.0 + fabs(t_stop)):
                    h = t_stop - t
                _mv(n, &ptr[0], &idx[0], &data[0], pv, k1)
                _rk4(n, &ptr[0], &idx[0], &data[0], pv, h, k1, k2, tmp, w)
                n_evals += 1
                tr_new = _trace(n, &tw[0], w)
                if tr_new > u:
                    for i in range(n):
                        pv[i] = w[i]
                    if t + h >= t_stop - 1e-12 * (1.0 + fabs(t_stop)):
                        t = t_stop
                    else:
                        t = t + h
                    tr = tr_new
                    continue
                # locate the crossing inside [t, t + h]
                lo = 0
                hi = h
                f_lo = log(tr / u)
                f_hi = log((tr_new if tr_new > 1e-300 else 1e-300) / u)
                side = 0
                xx = h
                for it in range(60):
                    xx = lo + (hi - lo) * f_lo / (f_lo - f_hi)
                    if not (lo < xx < hi):
                        xx = 0.5 * (lo + hi)
                    _rk4(n, &ptr[0], &idx[0], &data[0], pv, xx, k1, k2, tmp, cand)
                    n_evals += 1
                    tr_c = _trace(n, &tw[0], cand)
                    f_c = log((tr_c if tr_c > 1e-300 else 1e-300) / u)
                    if fabs(tr_c - u) <= tol * u or hi - lo < 1e-14:
                        break
                    if f_c > 0:
                        lo = xx
                        f_lo = f_c
                        if side == 1:
                            f_hi *= 0.5
                        side = 1
                    else:
                        hi = xx
                        f_hi = f_c
                        if side == -1:
                            f_lo *= 0.5
                        side = -1
                for i in range(n):
                    pv[i] = cand[i]
                t = t + xx
                ch = 0
                break
            if ch < 0:
                # record normalized observables at the sample time
                tr = _trace(n, &tw[0], pv)
                out[s_i, 0] = 0
                out[s_i, 1] = 0
                out[s_i, 2] = 0
                out[s_i, 3] = 0
                for i in range(n):
                    if tw[i] != 0:
                        m = <double>(nq - xk[i])
                        out[s_i, 0] += szw[i] * pv[i].real
                        out[s_i, 2] += tw[i] * m * pv[i].real
                        out[s_i, 3] += tw[i] * m * (m - 1) * pv[i].real
                    if pw[i] != 0:
                        out[s_i, 1] += pw[i] * pv[i].real
                out[s_i, 0] /= nf * tr
                out[s_i, 1] /= tr
                out[s_i, 2] /= tr
                out[s_i, 3] /= tr
                s_i += 1
                continue
            # jump: channel weights from the traces of the four jump images
            wts[0] = 0
            wts[1] = 0
            wts[3] = 0
            tr = 0
            for i in range(n):
                wts[0] += r1[i] * pv[i].real
                wts[1] += r2[i] * pv[i].real
                if tw[i] != 0:
                    tr += tw[i] * pv[i].real
                    wts[3] += kappa * tw[i] * (nq - xk[i]) * pv[i].real
            wts[2] = 0
            for i in range(n):
                if tw[i] != 0:
                    wts[2] += j3_diag[i] * tw[i] * pv[i].real
            tot = wts[0] + wts[1] + wts[2] + wts[3]
            if not tot > 0:
                status = S_DEAD_STATE
                break
            jumps += 1
            r = _uniform(seed, traj, jumps, 1) * tot
            acc = 0
            ch = 3
            for k in range(4):
                acc += wts[k]
                if r < acc and wts[k] > 0:
                    ch = k
                    break
            if ch == 0:
                _mv_real(n, &j1_ptr[0], &j1_idx[0], &j1_val[0], pv, jb)
                nq += 1
            elif ch == 1:
                _mv_real(n, &j2_ptr[0], &j2_idx[0], &j2_val[0], pv, jb)
                nq -= 1
            elif ch == 2:
                for i in range(n):
                    jb[i] = j3_diag[i] * pv[i]
            else:
                for i in range(n):
                    m = <double>(nq - xk[i])
                    kk = <double>(nq - yb[i])
                    jb[i] = kappa * sqrt(m * kk) * pv[i] if (m > 0 and kk > 0) else 0
                nq -= 1
            counts[ch] += 1
            if nq < 0 or nq != nq0 + counts[0] - counts[1] - counts[3]:
                status = S_QUANTA_ERROR
                break
            tr = _trace(n, &tw[0], jb)
            if not tr > 0:
                status = S_DEAD_STATE
                break
            for i in range(n):
                pv[i] = jb[i] / tr
            u = _uniform(seed, traj, jumps, 0)
    return status, nq, n_evals, t


cdef inline void _mv_real(Py_ssize_t n, const long long* ptr, const long long* idx,
                          const double* data, const double complex* x,
                          double complex* out) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double complex s
    for i in range(n):
        s = 0
        for k in range(ptr[i], ptr[i + 1]):
            s = s + data[k] * x[idx[k]]
        out[i] = s


# --- Langevin ensemble -------------------------------------------------------

cdef inline void _drift(double q, double p, double x, double y, double z,
                        double hk, double hG, double nO, double hO, double Om,
                        double wg, double d0, double delta, double* out) noexcept nogil:
    out[0] = -hk * q - nO * y
    out[1] = -hk * p + nO * x
    out[2] = -hG * x - delta * y + hO * p * z
    out[3] = -hG * y + delta * x - hO * q * z
    out[4] = -wg * (z - d0) + 2.0 * Om * (q * y - p * x)


cdef void _jacobi5(double* a, double* vecs, double* vals) noexcept nogil:
    # cyclic Jacobi eigen-decomposition of a symmetric 5x5 matrix (row-major)
    cdef int i, j, k, sweep
    cdef double off, theta, t, c, s, tau, app, aqq, apq, akp, akq, vkp, vkq
    for i in range(5):
        for j in range(5):
            vecs[i * 5 + j] = 1.0 if i == j else 0.0
    for sweep in range(50):
        off = 0
        for i in range(5):
            for j in range(i + 1, 5):
                off += a[i * 5 + j] * a[i * 5 + j]
        if off < 1e-300:
            break
        for i in range(5):
            for j in range(i + 1, 5):
                apq = a[i * 5 + j]
                if fabs(apq) < 1e-300:
                    continue
                app = a[i * 5 + i]
                aqq = a[j * 5 + j]
                theta = (aqq - app) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(5):
                    akp = a[k * 5 + i]
                    akq = a[k * 5 + j]
                    a[k * 5 + i] = c * akp - s * akq
                    a[k * 5 + j] = s * akp + c * akq
                for k in range(5):
                    akp = a[i * 5 + k]
                    akq = a[j * 5 + k]
                    a[i * 5 + k] = c * akp - s * akq
                    a[j * 5 + k] = s * akp + c * akq
                for k in range(5):
                    vkp = vecs[k * 5 + i]
                    vkq = vecs[k * 5 + j]
                    vecs[k * 5 + i] = c * vkp - s * vkq
                    vecs[k * 5 + j] = s * vkp + c * vkq
    for i in range(5):
        vals[i] = a[i * 5 + i]


cdef int _traj_step(double[:, ::1] y, Py_ssize_t j, const double* Bm, double dt,
                    uint64_t seed, uint64_t step, double hk, double hG, double nO, double hO,
                    double Om, double wg, double d0, double delta) noexcept nogil:
    cdef double xi[5]
    cdef double nz[5]
    cdef double a0[5]
    cdef double a1[5]
    cdef double yb[5]
    cdef double u
    cdef int c, r, bad = 0
    for c in range(5):
        u = _uniform(seed, j, step, c)
        xi[c] = -SQRT3 if u < 1.0 / 6.0 else (SQRT3 if u >= 5.0 / 6.0 else 0.0)
    for r in range(5):
        nz[r] = 0
        for c in range(5):
            nz[r] += Bm[r * 5 + c] * xi[c]
    _drift(y[0, j], y[1, j], y[2, j], y[3, j], y[4, j], hk, hG, nO, hO, Om, wg, d0, delta, a0)
    for c in range(5):
        yb[c] = y[c, j] + a0[c] * dt + nz[c]
    _drift(yb[0], yb[1], yb[2], yb[3], yb[4], hk, hG, nO, hO, Om, wg, d0, delta, a1)
    for c in range(5):
        y[c, j] = y[c, j] + 0.5 * (a0[c] + a1[c]) * dt + nz[c]
        if not isfinite(y[c, j]):
            bad = 1
    return bad


def langevin_run(double[:, ::1] y, double kappa, double Gamma, double wg, double d0,
                 double delta, double N, double Om, double gamma_minus_w,
                 double diff_scale, double dt, long long n_steps, long long stride,
                 unsigned long long seed, long long step0, double[:, :, ::1] archive,
                 double clamp_rel=1e-10, int threads=1):
    """Advance the (5, M) ensemble ``n_steps`` steps, archiving every ``stride``.

    Ensemble means are reduced serially each step, so the result does not
    depend on ``threads``.  Returns (status, steps done, failing trajectory,
    min eigenvalue).
    """
    cdef Py_ssize_t M = y.shape[1], j, c, r, n_arch = 0
    cdef long long st
    cdef double mx, my, mz, trace, lmin = 0, eps, u
    cdef double D[25]
    cdef double V[25]
    cdef double lam[5]
    cdef double Bm[25]
    cdef double hk = 0.5 * kappa, hG = 0.5 * Gamma, nO = 0.5 * N * Om, hO = 0.5 * Om
    cdef int status = S_OK
    cdef long long bad = -1, done = 0
    flags_a = np.zeros(M, dtype=np.intc)
    cdef int[::1] flags = flags_a
    with nogil:
        for st in range(n_steps):
            mx = 0
            my = 0
            mz = 0
            for j in range(M):
                mx += y[2, j]
                my += y[3, j]
                mz += y[4, j]
            mx /= M
            my /= M
            mz /= M
            for c in range(25):
                D[c] = 0
            D[0] = diff_scale * kappa / 8.0
            D[6] = diff_scale * kappa / 8.0
            D[12] = diff_scale * Gamma / (8.0 * N)
            D[18] = diff_scale * Gamma / (8.0 * N)
            D[14] = diff_scale * gamma_minus_w * mx / (2.0 * N)
            D[22] = D[14]
            D[19] = diff_scale * gamma_minus_w * my / (2.0 * N)
            D[23] = D[19]
            D[24] = diff_scale * (wg + gamma_minus_w * mz) / N
            trace = D[0] + D[6] + D[12] + D[18] + D[24]
            _jacobi5(D, V, lam)
            lmin = lam[0]
            for c in range(5):
                if lam[c] < lmin:
                    lmin = lam[c]
            eps = clamp_rel * trace
            if lmin < -eps:
                status = S_NONPOSITIVE
                break
            # symmetric square root B = V sqrt(2 lam dt) V^T
            for c in range(25):
                Bm[c] = 0
            for j in range(5):
                u = 2.0 * lam[j] * dt
                u = sqrt(u) if u > 0 else 0.0
                for r in range(5):
                    for c in range(5):
                        Bm[r * 5 + c] += V[r * 5 + j] * u * V[c * 5 + j]
            if threads > 1:
                for j in prange(M, num_threads=threads, schedule="static"):
                    flags[j] = _traj_step(y, j, Bm, dt, seed, step0 + st, hk, hG, nO, hO,
                                          Om, wg, d0, delta)
            else:
                for j in range(M):
                    flags[j] = _traj_step(y, j, Bm, dt, seed, step0 + st, hk, hG, nO, hO,
                                          Om, wg, d0, delta)
            for j in range(M):
                if flags[j]:
                    bad = j
                    break
            if bad >= 0:
                status = S_DIVERGED
                break
            if (st + 1) % stride == 0 and n_arch < archive.shape[0]:
                for c in range(5):
                    for j in range(M):
                        archive[n_arch, c, j] = y[c, j]
                n_arch += 1
            done += 1
    return status, done, bad, lmin
