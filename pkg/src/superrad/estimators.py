"""Observables from trajectory archives and exact states.

Phase-space samples are symmetrically (Weyl) ordered, so quantum moments
need ordering corrections:

    <a^dag a>          = E|a|^2 - 1/2
    <a^dag a^dag a a>  = E|a|^4 - 2 E|a|^2 + 1/2
    <S+ S->            = E[Sx^2 + Sy^2] + E[Sz] / (2N)

with a = q - i p.  Error bars come from a jackknife over trajectories,
which are the independent units (samples inside one trajectory are
correlated in time).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BelowNoiseFloor, FitQualityWarning, WindowTooShort

FIT_LOW, FIT_HIGH = 0.2, 0.8
FIT_RESIDUAL_LIMIT = 0.05
MIN_WINDOW_POINTS = 4


@dataclass
class ObservableRecord:
    sz: float
    spin_corr: complex
    photons: float
    g2: float
    photons2: float = math.nan
    linewidth: float = math.nan
    sz_err: float = 0.0
    spin_corr_err: float = 0.0
    photons_err: float = 0.0
    g2_err: float = 0.0
    linewidth_err: float = 0.0
    flags: list = field(default_factory=list)

    @classmethod
    def exact(cls, sz, spin_corr, photons, photons2) -> "ObservableRecord":
        g2 = photons2 / photons**2 if photons > 0 else math.nan
        return cls(sz=sz, spin_corr=complex(spin_corr), photons=photons, g2=g2, photons2=photons2)

    def as_array(self) -> np.ndarray:
        """(sz, Re corr, photons, <a+a+aa>) for convergence checks."""
        return np.array([self.sz, self.spin_corr.real, self.photons, self.photons2])

    def to_row(self) -> dict:
        d = asdict(self)
        d["spin_corr"] = complex(self.spin_corr).real
        d["flags"] = ";".join(self.flags)
        return d


def jackknife(per_traj: np.ndarray, func) -> tuple[float, float]:
    """Estimate and jackknife error of ``func(means)``.

    ``per_traj`` has shape (M, k): k per-trajectory averages of M
    independent trajectories; ``func`` maps a length-k vector of means to a
    scalar.
    """
    x = np.asarray(per_traj, float)
    M = x.shape[0]
    total = x.sum(axis=0)
    est = func(total / M)
    if M < 2:
        return float(est), math.nan
    loo = (total[None, :] - x) / (M - 1)
    vals = np.array([func(row) for row in loo])
    err = math.sqrt((M - 1) / M * np.sum((vals - vals.mean()) ** 2))
    return float(est), err


def _intensity(q, p):
    return q * q + p * p


def field_moments(archive, strict: bool = True):
    """Photon number, second factorial moment and g2(0) with jackknife errors.

    Returns a dict with keys photons, photons2, g2 and their ``_err``.
    """
    I = _intensity(np.asarray(archive.q), np.asarray(archive.p))  # (n_samples, M)
    per = np.stack([I.mean(axis=0), (I * I).mean(axis=0)], axis=1)

    def n1(m):
        return m[0] - 0.5

    def n2(m):
        return m[1] - 2.0 * m[0] + 0.5

    def g2(m):
        n = n1(m)
        return n2(m) / (n * n) if n > 0 else math.nan

    photons, photons_err = jackknife(per, n1)
    photons2, photons2_err = jackknife(per, n2)
    if strict and photons + 3.0 * photons_err < 0:
        raise BelowNoiseFloor(f"photon estimate {photons:.3g} +- {photons_err:.2g} below zero")
    g, g_err = jackknife(per, g2) if photons > 0 else (math.nan, math.nan)
    return dict(photons=photons, photons_err=photons_err, photons2=photons2,
                photons2_err=photons2_err, g2=g, g2_err=g_err)


def spin_moments(archive, n_atoms: int):
    """Inversion per atom and pair correlation <sigma_1^+ sigma_2^-> with errors."""
    if n_atoms < 2:
        raise ValueError("pair correlation needs at least two atoms")
    N = n_atoms
    sx, sy, sz = (np.asarray(archive.sx), np.asarray(archive.sy), np.asarray(archive.sz))
    per = np.stack([sz.mean(axis=0), (sx * sx + sy * sy).mean(axis=0)], axis=1)

    def inv(m):
        return m[0]

    def corr(m):
        spsm = m[1] + m[0] / (2.0 * N)
        return (N * N * spsm - N * (1.0 + m[0]) / 2.0) / (N * (N - 1))

    s, s_err = jackknife(per, inv)
    c, c_err = jackknife(per, corr)
    return dict(sz=s, sz_err=s_err, spin_corr=c, spin_corr_err=c_err)


def archive_observables(archive, n_atoms: int, strict: bool = False) -> ObservableRecord:
    f = field_moments(archive, strict=strict)
    s = spin_moments(archive, n_atoms)
    rec = ObservableRecord(
        sz=s["sz"], spin_corr=complex(s["spin_corr"]), photons=f["photons"], g2=f["g2"],
        photons2=f["photons2"], sz_err=s["sz_err"], spin_corr_err=s["spin_corr_err"],
        photons_err=f["photons_err"], g2_err=f["g2_err"])
    if f["photons"] - 3 * f["photons_err"] <= 0:
        rec.flags.append("BELOW_NOISE_FLOOR")
    return rec


@dataclass
class Correlation:
    tau: np.ndarray
    values: np.ndarray
    stderr: np.ndarray


def _autocorr_per_traj(a: np.ndarray, max_lag: int) -> np.ndarray:
    """Per-trajectory sum_t a*(t+k) a(t) / (T-k) for k = 0..max_lag; a has shape (T, M)."""
    T = a.shape[0]
    nfft = 1 << int(math.ceil(math.log2(2 * T)))
    F = np.fft.fft(a, n=nfft, axis=0)
    # ifft(conj(F) F)[k] = sum_t conj(a[t]) a[t+k]; we need conj(a[t+k]) a[t]
    r = np.fft.ifft(F * np.conj(F), axis=0)[: max_lag + 1]
    r = np.conj(r)
    counts = (T - np.arange(max_lag + 1))[:, None]
    return r / counts


def g1_correlation(archive, tau_max: float, n_boot: int = 200, seed: int = 0) -> Correlation:
    """Time- and ensemble-averaged C(tau) = E[a*(t + tau) a(t)].

    Standard errors come from a bootstrap over whole trajectories.
    """
    t = np.asarray(archive.t)
    if len(t) < 2:
        raise ValueError("archive needs at least two samples")
    stride = t[1] - t[0]
    span = t[-1] - t[0]
    if tau_max > span * (1 + 1e-9):
        raise ValueError(f"tau_max={tau_max:g} exceeds archive span {span:g}")
    max_lag = int(round(tau_max / stride))
    a = np.asarray(archive.q) - 1j * np.asarray(archive.p)
    per = _autocorr_per_traj(a, max_lag)  # (lags, M)
    M = per.shape[1]
    mean = per.mean(axis=1)
    rng = np.random.default_rng(seed)
    boots = np.empty((n_boot, per.shape[0]))
    for b in range(n_boot):
        idx = rng.integers(0, M, size=M)
        boots[b] = np.abs(per[:, idx].mean(axis=1))
    return Correlation(tau=np.arange(max_lag + 1) * stride, values=mean, stderr=boots.std(axis=0))


@dataclass
class LinewidthFit:
    linewidth: float
    linewidth_err: float
    rate: float
    residual: float
    window: tuple
    quality_ok: bool


def fit_linewidth(tau, C, C_err=None) -> LinewidthFit:
    """Fit |C(tau)| ~ A exp(-dnu tau / 2) over its 0.8 -> 0.2 decay window.

    Returns the full width dnu = 2 * rate.  Raises WindowTooShort when the
    series never decays below 0.2 |C(0)| or the window holds too few points;
    emits FitQualityWarning when the relative fit residual exceeds 5%.
    """
    tau = np.asarray(tau, float)
    mag = np.abs(np.asarray(C))
    c0 = mag[0]
    if not c0 > 0:
        raise WindowTooShort("C(0) is zero")
    below_hi = np.nonzero(mag <= FIT_HIGH * c0)[0]
    below_lo = np.nonzero(mag <= FIT_LOW * c0)[0]
    if len(below_lo) == 0 or len(below_hi) == 0:
        raise WindowTooShort("correlation does not decay below 0.2 C(0) within the window")
    i0, i1 = below_hi[0], below_lo[0]
    if i1 - i0 + 1 < MIN_WINDOW_POINTS:
        raise WindowTooShort(f"decay window holds only {max(i1 - i0 + 1, 0)} points")
    x = tau[i0 : i1 + 1]
    y = np.log(mag[i0 : i1 + 1])
    if C_err is not None:
        err = np.asarray(C_err, float)[i0 : i1 + 1]
        wts = np.where(err > 0, (mag[i0 : i1 + 1] / np.maximum(err, 1e-300)) ** 2, 1.0)
    else:
        wts = np.ones_like(x)
    W = wts.sum()
    xm = (wts * x).sum() / W
    ym = (wts * y).sum() / W
    sxx = (wts * (x - xm) ** 2).sum()
    slope = (wts * (x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    model = np.exp(intercept + slope * x)
    rel = mag[i0 : i1 + 1] / model - 1.0
    residual = float(np.sqrt(np.mean(rel**2)))
    dof = max(len(x) - 2, 1)
    if C_err is not None:
        slope_err = math.sqrt(1.0 / sxx)
    else:
        s2 = (wts * (y - intercept - slope * x) ** 2).sum() / dof
        slope_err = math.sqrt(s2 / sxx)
    ok = residual <= FIT_RESIDUAL_LIMIT
    if not ok:
        warnings.warn(f"linewidth fit residual {residual:.3f} exceeds {FIT_RESIDUAL_LIMIT}",
                      FitQualityWarning, stacklevel=2)
    rate = -slope
    return LinewidthFit(linewidth=2.0 * rate, linewidth_err=2.0 * slope_err, rate=rate,
                        residual=residual, window=(float(x[0]), float(x[-1])), quality_ok=ok)
