"""Command-line driver: configuration, sweeps, CSV output and figure presets.

Configuration files are INI-style with sections ``params``, ``sweep``,
``numeric`` and ``run``; unknown sections or keys are rejected.  Rates are
in units of gamma.

Exit codes: 1 configuration error, 2 numerical failure of every row,
3 capacity or photon-cutoff failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import (BelowNoiseFloor, CapacityError, CutoffOverflow, FitQualityWarning,
                     NonPositiveDiffusion, WindowTooShort)
from .estimators import ObservableRecord
from .params import (ParameterError, SystemParams, crossover_xi, kappa_for_xi_fixed_coupling,
                     optimal_pump, solve_kappa_for_xi)

CSV_SCHEMA = "superrad-sweep/1"
METHODS = ("analytic", "meanfield", "langevin", "su4-det", "su4-mc", "bruteforce")

EXIT_CONFIG, EXIT_NUMERIC, EXIT_CAPACITY = 1, 2, 3

PARAM_KEYS = {"n_atoms": int, "coupling": float, "coupling_ratio": float, "xi": str,
              "kappa": float, "gamma": float, "w": float, "w_rel": float, "t2_inv": float,
              "omega_a": float, "omega_c": float}
SWEEP_KEYS = {"variable": str, "min": float, "max": float, "points": int, "spacing": str,
              "relative": bool}
NUMERIC_KEYS = {"dt": float, "t_relax": float, "t_collect": float, "t_end": float,
                "n_traj": int, "m_cutoff": int, "tau_max": float, "sample_every": float,
                "max_atoms_exact": int}
RUN_KEYS = {"method": str, "seed": int, "output": str, "backend": str}
SECTIONS = {"params": PARAM_KEYS, "sweep": SWEEP_KEYS, "numeric": NUMERIC_KEYS, "run": RUN_KEYS}

DEFAULT_MAX_ATOMS_EXACT = {"su4-det": 12, "bruteforce": 4, "su4-mc": 60}

CONVENTIONS = ("frame=rotating at omega_c; linewidth=Lorentzian FWHM in angular units, "
               "|g1(tau)| ~ exp(-dnu tau/2); su4-det linewidth=quantum-regression fit; "
               "langevin initial state=vacuum field (var 1/4), atoms ground with "
               "sigma_x,y=+-1; su4-mc initial state=ground, N_q=0; "
               "xi sweep=kappa varied at fixed N and Omega, evaluated at w=w_opt")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: dict
    method: str = "analytic"
    sweep: dict = field(default_factory=dict)
    numeric: dict = field(default_factory=dict)
    seed: int = 0
    output: str = ""
    backend: str = "auto"

    # --- serialization -------------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["params"] = {k: _fmt(v) for k, v in self.params.items()}
        if self.sweep:
            cp["sweep"] = {k: _fmt(v) for k, v in self.sweep.items()}
        if self.numeric:
            cp["numeric"] = {k: _fmt(v) for k, v in self.numeric.items()}
        run = {"method": self.method, "seed": str(self.seed), "backend": self.backend}
        if self.output:
            run["output"] = self.output
        cp["run"] = run
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue().strip() + "\n"

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        data = {}
        for sec in cp.sections():
            if sec not in SECTIONS:
                raise ConfigError(f"unknown section [{sec}]")
            kinds = SECTIONS[sec]
            vals = {}
            for key, raw in cp[sec].items():
                if key not in kinds:
                    raise ConfigError(f"unknown key '{key}' in [{sec}]")
                vals[key] = _parse(kinds[key], raw, f"{sec}.{key}")
            data[sec] = vals
        if "params" not in data:
            raise ConfigError("missing [params] section")
        run = data.get("run", {})
        cfg = cls(params=data["params"], method=run.get("method", "analytic"),
                  sweep=data.get("sweep", {}), numeric=data.get("numeric", {}),
                  seed=run.get("seed", 0), output=run.get("output", ""),
                  backend=run.get("backend", "auto"))
        cfg.validate()
        return cfg

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method '{self.method}'; choose from {', '.join(METHODS)}")
        if self.backend not in ("auto", "compiled", "python"):
            raise ConfigError("backend must be auto, compiled or python")
        p = self.params
        if "n_atoms" not in p:
            raise ConfigError("params.n_atoms is required")
        has_direct = "kappa" in p and "coupling" in p
        has_ratio = "coupling_ratio" in p and "xi" in p
        if not (has_direct or has_ratio):
            raise ConfigError("give either (kappa, coupling) or (coupling_ratio, xi) in [params]")
        if has_ratio:
            try:
                self.xi_values()
            except ValueError as exc:
                raise ConfigError(f"params.xi: {exc}") from exc
        if "w" in p and "w_rel" in p:
            raise ConfigError("give at most one of params.w and params.w_rel")
        if self.sweep:
            for k in ("variable", "min", "max", "points"):
                if k not in self.sweep:
                    raise ConfigError(f"sweep.{k} is required")
            if self.sweep["variable"] not in ("w", "xi"):
                raise ConfigError("sweep.variable must be w or xi")
            if self.sweep.get("spacing", "linear") not in ("linear", "log"):
                raise ConfigError("sweep.spacing must be linear or log")
            if self.sweep["points"] < 1 or not self.sweep["max"] >= self.sweep["min"]:
                raise ConfigError("sweep needs points >= 1 and max >= min")
            if self.sweep["variable"] == "xi" and "coupling" not in p and not has_ratio:
                raise ConfigError("xi sweep needs a fixed coupling")
        if self.method in ("langevin", "su4-mc") and "n_traj" not in self.numeric:
            raise ConfigError(f"method {self.method} requires numeric.n_traj")

    def xi_values(self) -> list:
        raw = self.params.get("xi")
        if raw is None:
            return [None]
        vals = [float(v) for v in str(raw).split(",") if v.strip()]
        if not vals or any(not v > 0 for v in vals):
            raise ValueError("xi values must be positive")
        return vals

    def grid(self) -> np.ndarray:
        s = self.sweep
        if not s:
            return np.array([math.nan])
        if s.get("spacing", "linear") == "log":
            if s["min"] <= 0:
                raise ConfigError("log spacing needs min > 0")
            return np.geomspace(s["min"], s["max"], s["points"])
        return np.linspace(s["min"], s["max"], s["points"])


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(kind, raw: str, name: str):
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse '{raw}' as {kind.__name__}") from exc


# --- parameter construction -------------------------------------------------

def base_params(cfg: RunConfig, xi: float | None) -> SystemParams:
    """SystemParams for one series; the pump defaults to w_opt."""
    p = dict(cfg.params)
    n = int(p["n_atoms"])
    extra = {k: p[k] for k in ("gamma", "t2_inv", "omega_a", "omega_c") if k in p}
    if xi is not None and "coupling_ratio" in p:
        kappa, coupling = solve_kappa_for_xi(n, p["coupling_ratio"], xi, extra.get("gamma", 1.0))
    else:
        kappa, coupling = p["kappa"], p["coupling"]
    sp = SystemParams(n_atoms=n, coupling=coupling, kappa=kappa, **extra)
    if "w" in p:
        return sp.with_(w=p["w"])
    w_opt = optimal_pump(sp)
    return sp.with_(w=max(p.get("w_rel", 1.0) * w_opt, 0.0))


def point_params(cfg: RunConfig, base: SystemParams, value: float) -> SystemParams:
    s = cfg.sweep
    if not s:
        return base
    if s["variable"] == "w":
        w = value * optimal_pump(base) if s.get("relative", False) else value
        return base.with_(w=float(w))
    kappa = kappa_for_xi_fixed_coupling(base.n_atoms, base.coupling, value)
    p = base.with_(kappa=kappa)
    rel = cfg.params.get("w_rel", 1.0)
    return p.with_(w=max(rel * optimal_pump(p), 0.0)) if "w" not in cfg.params else p


# --- method evaluation ------------------------------------------------------

def _analytic(p: SystemParams, cfg) -> tuple[ObservableRecord, dict]:
    from .meanfield import steady_state_analytic
    from .phase_diffusion import linewidth
    ss = steady_state_analytic(p)
    n = max(ss.photons, 0.0)
    corr = p.kappa**2 * n / (p.n_atoms**2 * p.coupling**2) if p.coupling > 0 else 0.0
    sz = ss.sz if ss.above_threshold else p.d0
    rec = ObservableRecord(sz=sz, spin_corr=complex(corr), photons=n,
                           g2=1.0 if n > 0 else math.nan, photons2=n * n)
    lw = linewidth(p)
    rec.linewidth = lw.linewidth
    if not ss.above_threshold:
        rec.flags.append("BELOW_THRESHOLD")
    if lw.far_from_optimum:
        rec.flags.append("FAR_FROM_OPTIMUM")
    return rec, {}


def _meanfield(p: SystemParams, cfg) -> tuple[ObservableRecord, dict]:
    from .meanfield import MeanFieldState, integrate
    t_end = cfg.numeric.get("t_end", 50.0 / min(p.w + p.gamma, p.kappa, p.Gamma))
    # seed the unstable zero-field fixed point with the vacuum amplitude
    tr = integrate(p, MeanFieldState(a0=0.5, s_minus=0.0, sz=-1.0), t_end=t_end,
                   dt=cfg.numeric.get("dt"))
    f = tr.final()
    n = f.photons
    rec = ObservableRecord(sz=f.sz, spin_corr=complex(abs(f.s_minus) ** 2), photons=n,
                           g2=1.0 if n > 0 else math.nan, photons2=n * n)
    if n < 1e-6:
        rec.flags.append("BELOW_THRESHOLD")
    return rec, {}


def _langevin(p: SystemParams, cfg, threads) -> tuple[ObservableRecord, dict]:
    from . import langevin
    from .estimators import archive_observables, fit_linewidth, g1_correlation
    num = cfg.numeric
    ar = langevin.run(p, M=num["n_traj"], t_relax=num.get("t_relax"),
                      t_collect=num.get("t_collect", 10.0), dt=num.get("dt"), seed=cfg.seed,
                      sample_every=num.get("sample_every"), threads=threads,
                      backend=cfg.backend)
    rec = archive_observables(ar, p.n_atoms)
    st = langevin.stationarity(ar)
    if not all(v[2] for v in st.values()):
        rec.flags.append("NONSTATIONARY")
    if "tau_max" in num:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                C = g1_correlation(ar, num["tau_max"], seed=cfg.seed)
                fit = fit_linewidth(C.tau, C.values, C.stderr)
            rec.linewidth, rec.linewidth_err = fit.linewidth, fit.linewidth_err
            if any(issubclass(w.category, FitQualityWarning) for w in caught):
                rec.flags.append("FIT_QUALITY")
        except WindowTooShort:
            rec.flags.append("WINDOW_TOO_SHORT")
    return rec, {"dt": ar.meta["dt"], "t_relax": ar.meta["t_relax"]}


def _capacity(cfg, method, n):
    cap = cfg.numeric.get("max_atoms_exact", DEFAULT_MAX_ATOMS_EXACT[method])
    if n > cap:
        raise CapacityError(f"{method} refuses N={n} above the configured cap {cap}")


def _su4_det(p: SystemParams, cfg) -> tuple[ObservableRecord, dict]:
    from .estimators import fit_linewidth
    from .su4.det import DetSolver
    _capacity(cfg, "su4-det", p.n_atoms)
    solver = DetSolver(p, cfg.numeric.get("m_cutoff"))
    rho = solver.steady_state(dt=cfg.numeric.get("dt"))
    rec = rho.observables()
    if "tau_max" in cfg.numeric:
        tau = np.linspace(0.0, cfg.numeric["tau_max"], 201)
        C = solver.field_correlation(rho, tau, cfg.numeric.get("dt"))
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                fit = fit_linewidth(tau, C)
            rec.linewidth = fit.linewidth
            if caught:
                rec.flags.append("FIT_QUALITY")
        except WindowTooShort:
            rec.flags.append("WINDOW_TOO_SHORT")
    return rec, {"m_cutoff": solver.m_cutoff}


def _su4_mc(p: SystemParams, cfg, threads) -> tuple[ObservableRecord, dict]:
    from .su4.mc import run_mc
    _capacity(cfg, "su4-mc", p.n_atoms)
    num = cfg.numeric
    t_end = num.get("t_end", 20.0)
    t_relax = num.get("t_relax", 0.25 * t_end)
    res = run_mc(p, num["n_traj"], t_end, seed=cfg.seed,
                 n_samples=201, workers=threads, backend=cfg.backend)
    return res.steady_state(t_relax), {"t_relax": t_relax, "t_end": t_end}


def _bruteforce(p: SystemParams, cfg) -> tuple[ObservableRecord, dict]:
    from . import bruteforce as bf
    from .su4.det import default_cutoff
    _capacity(cfg, "bruteforce", p.n_atoms)
    M = cfg.numeric.get("m_cutoff", default_cutoff(p))
    gen = bf.build_generator(p, M)
    dt = cfg.numeric.get("dt", 0.02 / max(p.kappa, p.Gamma, p.coupling * math.sqrt(M * p.n_atoms), 1.0))
    rho = bf.steady_state(gen, dt)
    o = gen.observables(rho)
    rec = ObservableRecord.exact(o["sz"], o["spin_corr"], o["photons"], o["photons2"])
    return rec, {"m_cutoff": M}


def evaluate(method: str, p: SystemParams, cfg: RunConfig, threads: int = 1):
    if method == "analytic":
        return _analytic(p, cfg)
    if method == "meanfield":
        return _meanfield(p, cfg)
    if method == "langevin":
        return _langevin(p, cfg, threads)
    if method == "su4-det":
        return _su4_det(p, cfg)
    if method == "su4-mc":
        return _su4_mc(p, cfg, threads)
    if method == "bruteforce":
        return _bruteforce(p, cfg)
    raise ConfigError(f"unknown method {method}")


# --- sweeps ------------------------------------------------------------------

COLUMNS = ["series", "value", "method", "n_atoms", "kappa", "coupling", "w", "xi", "w_over_wopt",
           "sz", "sz_err", "spin_corr", "spin_corr_err", "photons", "photons_err",
           "photons_scaled", "g2", "g2_err", "linewidth", "linewidth_err",
           "d_omega_d_omega_c", "d_omega_d_omega_a", "flags"]


@dataclass
class SweepResult:
    rows: list
    metadata: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in metadata_lines(self.metadata):
            buf.write(line + "\n")
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _csv_value(r.get(k, "")) for k in COLUMNS})
        return buf.getvalue()


def _csv_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def metadata_lines(meta: dict) -> list:
    lines = [f"# schema={CSV_SCHEMA}", f"# code_version={meta['code_version']}",
             f"# conventions={meta['conventions']}", f"# created={meta.get('created', '')}",
             "# config-begin"]
    lines += ["# " + ln for ln in meta["config"].splitlines()]
    lines.append("# config-end")
    return lines


def read_csv(path_or_text: str):
    """Parse a sweep CSV into (metadata dict incl. RunConfig, list of row dicts)."""
    text = path_or_text
    if "\n" not in path_or_text and os.path.exists(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    meta_lines, body = [], []
    for line in text.splitlines():
        (meta_lines if line.startswith("#") else body).append(line)
    meta, cfg_lines, in_cfg = {}, [], False
    for line in meta_lines:
        content = line[2:] if line.startswith("# ") else line[1:]
        if content == "config-begin":
            in_cfg = True
        elif content == "config-end":
            in_cfg = False
        elif in_cfg:
            cfg_lines.append(content)
        elif "=" in content:
            k, v = content.split("=", 1)
            meta[k] = v
    meta["config"] = RunConfig.from_ini("\n".join(cfg_lines) + "\n")
    rows = list(csv.DictReader(io.StringIO("\n".join(body) + "\n")))
    return meta, rows


def run(cfg: RunConfig, threads: int = 1, created: str | None = None) -> SweepResult:
    """Evaluate every (series, grid point); failures become flagged rows."""
    from .meanfield import sensitivity
    cfg.validate()
    rows = []
    n_fail = 0
    capacity_error = None
    for xi in cfg.xi_values():
        base = base_params(cfg, xi)
        series = "" if xi is None else f"xi={xi:g}"
        for value in cfg.grid():
            row = {"series": series, "value": float(value), "method": cfg.method}
            try:
                p = point_params(cfg, base, float(value))
            except ParameterError as exc:
                row["flags"] = f"INVALID_PARAMS:{exc}"
                rows.append(row)
                n_fail += 1
                continue
            w_opt = optimal_pump(p)
            row.update(n_atoms=p.n_atoms, kappa=p.kappa, coupling=p.coupling, w=p.w,
                       xi=crossover_xi(p), w_over_wopt=p.w / w_opt if w_opt > 0 else math.nan)
            dc, da = sensitivity(p)
            row.update(d_omega_d_omega_c=dc, d_omega_d_omega_a=da)
            try:
                rec, _ = evaluate(cfg.method, p, cfg, threads)
            except (CapacityError, CutoffOverflow) as exc:
                capacity_error = exc
                row["flags"] = f"CAPACITY:{type(exc).__name__}"
                rows.append(row)
                n_fail += 1
                continue
            except NonPositiveDiffusion:
                row["flags"] = "BELOW_THRESHOLD;NONPOSITIVE_DIFFUSION"
                rows.append(row)
                n_fail += 1
                continue
            except (BelowNoiseFloor, ArithmeticError, RuntimeError, ValueError) as exc:
                row["flags"] = f"ERROR:{type(exc).__name__}"
                rows.append(row)
                n_fail += 1
                continue
            d = rec.to_row()
            for k in ("sz", "sz_err", "spin_corr", "spin_corr_err", "photons", "photons_err",
                      "g2", "g2_err", "linewidth", "linewidth_err", "flags"):
                row[k] = d[k]
            xi_p = crossover_xi(p)
            row["photons_scaled"] = rec.photons / (xi_p * p.n_atoms)
            rows.append(row)
    meta = dict(code_version=__version__, conventions=CONVENTIONS, config=cfg.to_ini(),
                created=created if created is not None
                else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    result = SweepResult(rows, meta)
    result.n_failed = n_fail
    result.capacity_error = capacity_error
    return result


def compare(a: SweepResult | list, b: SweepResult | list) -> list:
    """Join two sweeps on (series, value) and add per-observable ratios."""
    ra = a.rows if isinstance(a, SweepResult) else a
    rb = b.rows if isinstance(b, SweepResult) else b
    if len(ra) != len(rb) or any(not _same(x["value"], y["value"]) for x, y in zip(ra, rb)):
        raise ConfigError("sweep grids differ; cannot compare")
    out = []
    for x, y in zip(ra, rb):
        row = {"value": x["value"], "method_a": x["method"], "method_b": y["method"]}
        for k in ("sz", "spin_corr", "photons", "g2", "linewidth"):
            va, vb = _num(x.get(k)), _num(y.get(k))
            row[f"{k}_a"], row[f"{k}_b"] = va, vb
            row[f"{k}_ratio"] = va / vb if (vb not in (0.0,) and not math.isnan(vb)) else math.nan
            row[f"{k}_diff"] = va - vb
        out.append(row)
    return out


def _num(v) -> float:
    if v is None or v == "":
        return math.nan
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def _same(u, v) -> bool:
    u, v = _num(u), _num(v)
    return (math.isnan(u) and math.isnan(v)) or abs(u - v) <= 1e-12 * max(abs(u), abs(v), 1.0)


# --- presets -----------------------------------------------------------------

def preset(name: str, method: str | None = None, xi: str | None = None) -> RunConfig:
    """Figure presets; kappa and Omega come from solve_kappa_for_xi.

    fig1: N=20 desk-scale stand-in for N=40, Omega^2/(kappa gamma) = 1.
          xi=0.2 -> kappa=12.5, Omega^2=12.5; xi=1 -> kappa=2.5, Omega^2=2.5;
          xi=5 -> kappa=0.5, Omega^2=0.5; w_opt = 9 in all three.
    fig2: N=1e4, Omega^2/(kappa gamma) = 0.1.
          xi=0.1 -> kappa=1250, Omega^2=125; xi=1 -> kappa=125, Omega^2=12.5;
          xi=10 -> kappa=12.5, Omega^2=1.25; w_opt = 499 in all three.
    fig3: analytic linewidth and intensity at xi = 1, 10, 100 of the fig2 family
          on one absolute w grid.
    fig4: analytic line-pulling sensitivities versus xi, kappa varied at
          fixed N=1e4 and Omega^2 = 12.5 (the fig2 xi=1 coupling), w = w_opt.
    """
    if name == "fig1":
        cfg = RunConfig(params={"n_atoms": 20, "coupling_ratio": 1.0, "xi": xi or "0.2"},
                        method=method or "su4-mc",
                        sweep={"variable": "w", "min": 0.2, "max": 1.6, "points": 8,
                               "spacing": "linear", "relative": True},
                        numeric={"n_traj": 40, "t_end": 20.0, "t_relax": 5.0,
                                 "t_collect": 40.0})
    elif name == "fig2":
        cfg = RunConfig(params={"n_atoms": 10000, "coupling_ratio": 0.1, "xi": xi or "0.1, 1, 10"},
                        method=method or "langevin",
                        sweep={"variable": "w", "min": 0.05, "max": 2.0, "points": 12,
                               "spacing": "log", "relative": True},
                        numeric={"n_traj": 200, "t_collect": 2.0})
    elif name == "fig3":
        cfg = RunConfig(params={"n_atoms": 10000, "coupling_ratio": 0.1, "xi": xi or "1, 10, 100"},
                        method=method or "analytic",
                        sweep={"variable": "w", "min": 5.0, "max": 5000.0, "points": 61,
                               "spacing": "log", "relative": False})
    elif name == "fig4":
        cfg = RunConfig(params={"n_atoms": 10000, "coupling": math.sqrt(12.5)},
                        method=method or "analytic",
                        sweep={"variable": "xi", "min": 0.01, "max": 100.0, "points": 41,
                               "spacing": "log"})
        cfg.params["kappa"] = 125.0
    else:
        raise ConfigError(f"unknown preset '{name}'")
    cfg.validate()
    return cfg


# --- entry point -------------------------------------------------------------

def _threads(arg) -> int:
    if arg is not None:
        return max(int(arg), 1)
    return max(int(os.environ.get("SUPERRAD_THREADS", "1")), 1)


def _write(text: str, path: str | None):
    if path and path != "-":
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_csv(rows: list) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_value(v) for k, v in r.items()})
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superrad",
                                 description="Superradiance/lasing crossover simulations.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a configured sweep and write CSV")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="INI configuration file")
    src.add_argument("--preset", choices=["fig1", "fig2", "fig3", "fig4"])
    r.add_argument("--xi", help="comma-separated xi values for a preset")
    r.add_argument("--method", choices=METHODS)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output CSV path (default: stdout)")
    r.add_argument("--threads", type=int, help="worker count (env SUPERRAD_THREADS)")
    r.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")

    c = sub.add_parser("compare", help="run or load two sweeps and join them")
    c.add_argument("a", help="config (.ini) or sweep CSV")
    c.add_argument("b", help="config (.ini) or sweep CSV")
    c.add_argument("--out")
    c.add_argument("--threads", type=int)

    k = sub.add_parser("solve-kappa", help="kappa and Omega for (N, Omega^2/kappa gamma, xi)")
    k.add_argument("n_atoms", type=int)
    k.add_argument("coupling_ratio", type=float)
    k.add_argument("xi", type=float)
    k.add_argument("--gamma", type=float, default=1.0)

    a = sub.add_parser("analytic", help="closed-form quantities for one parameter set")
    a.add_argument("--n-atoms", type=int, required=True)
    grp = a.add_argument_group("coupling")
    grp.add_argument("--coupling", type=float)
    grp.add_argument("--kappa", type=float)
    grp.add_argument("--coupling-ratio", type=float)
    grp.add_argument("--xi", type=float)
    a.add_argument("--w", type=float, help="repump rate (default w_opt)")
    a.add_argument("--gamma", type=float, default=1.0)
    a.add_argument("--t2-inv", type=float, default=0.0)
    return ap


def _load_sweep(arg: str, threads: int) -> SweepResult:
    if arg.endswith(".csv"):
        meta, rows = read_csv(arg)
        return SweepResult(rows, {**meta, "config": meta["config"].to_ini()})
    with open(arg) as fh:
        return run(RunConfig.from_ini(fh.read()), threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve-kappa":
            kappa, coupling = solve_kappa_for_xi(args.n_atoms, args.coupling_ratio, args.xi, args.gamma)
            print(f"kappa={kappa!r}\ncoupling={coupling!r}\ncoupling_sq={coupling * coupling!r}")
            return 0
        if args.command == "analytic":
            params = {"n_atoms": args.n_atoms, "gamma": args.gamma, "t2_inv": args.t2_inv}
            for k in ("coupling", "kappa", "coupling_ratio", "xi", "w"):
                v = getattr(args, k)
                if v is not None:
                    params[k] = v
            cfg = RunConfig(params=params, method="analytic")
            cfg.validate()
            res = run(cfg)
            row = res.rows[0]
            for key in COLUMNS[2:]:
                if row.get(key, "") != "":
                    print(f"{key}={row[key]}")
            return 0
        threads = _threads(getattr(args, "threads", None))
        if args.command == "compare":
            ra, rb = _load_sweep(args.a, threads), _load_sweep(args.b, threads)
            _write(_rows_csv(compare(ra, rb)), args.out)
            return 0
        if args.config:
            with open(args.config) as fh:
                cfg = RunConfig.from_ini(fh.read())
            if args.method:
                cfg.method = args.method
        else:
            cfg = preset(args.preset, args.method, args.xi)
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
        if args.dump_config:
            sys.stdout.write(cfg.to_ini())
            return 0
        res = run(cfg, threads)
        _write(res.to_csv(), args.out or cfg.output or None)
        if res.capacity_error is not None and res.n_failed == len(res.rows):
            print(f"capacity error: {res.capacity_error}", file=sys.stderr)
            return EXIT_CAPACITY
        if res.n_failed == len(res.rows):
            print("every row failed", file=sys.stderr)
            return EXIT_NUMERIC
        return 0
    except (ConfigError, ParameterError, configparser.Error, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, CutoffOverflow) as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
