"""Formula-free Monte Carlo oracle: paths, achievement clock, histograms.

Gaussian increments come from counter-based per-path streams (a splitmix64
finalizer keyed on (seed, path, step) with an AS241 inverse-normal map), so
path i is bit-identical regardless of execution order or thread count.

The achievement clock mirrors the definition exactly on the discrete
skeleton: a step counts toward the current sub-level run only when both of
its endpoints are strictly below the level; touching the level resets the
run; an in-progress excursion starts with duration credit.  The optional
Brownian-bridge correction resets the run with the within-step crossing
probability exp(-2(b-x0)(b-x1)/dt) when both endpoints are below, removing
(to first order) the bias of undetected touches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .errors import DomainError, ResourceLimitError, SpecMismatchError
from .excursion import DensityGrid, ExcursionSpec
from .report import CheckResult, VerificationReport

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _mix(x):
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _stream(key, counter):
    return _mix(key + (counter + np.uint64(1)) * _GOLD)


@njit(cache=True, inline="always")
def _uniform(key, counter):
    # open-interval (0, 1) uniform from the counter-based stream
    u = _stream(key, counter)
    return (float(u >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16


def _build_ziggurat():
    # canonical 128-layer normal ziggurat tables, 53-bit magnitude scaling
    m1 = float(1 << 53)
    dn = 3.442619855899
    vn = 9.91256303526217e-3
    kn = np.empty(128, dtype=np.uint64)
    wn = np.empty(128)
    fn = np.empty(128)
    f = np.exp(-0.5 * dn * dn)
    q = vn / f
    kn[0] = np.uint64((dn / q) * m1)
    kn[1] = 0
    wn[0] = q / m1
    wn[127] = dn / m1
    fn[0] = 1.0
    fn[127] = f
    tn = dn
    for i in range(126, 0, -1):
        dn = np.sqrt(-2.0 * np.log(vn / dn + np.exp(-0.5 * dn * dn)))
        kn[i + 1] = np.uint64((dn / tn) * m1)
        tn = dn
        fn[i] = np.exp(-0.5 * dn * dn)
        wn[i] = dn / m1
    return kn, wn, fn


_ZIG_KN, _ZIG_WN, _ZIG_FN = _build_ziggurat()
_ZIG_R = 3.442619855899


@njit(cache=True, inline="always")
def _normal(key, counter, kn, wn, fn):
    """Standard normal via the 128-layer ziggurat.

    One stream value resolves ~98.9% of draws; rejections walk a per-step
    substream so consumption stays a pure function of (key, counter).
    """
    skey = key + counter * _GOLD
    t = np.uint64(0)
    while True:
        u = _mix(skey + (t + np.uint64(1)) * _GOLD)
        iz = u & np.uint64(127)
        m = u >> np.uint64(11)
        x = float(m) * wn[iz]
        sign = -1.0 if (u >> np.uint64(7)) & np.uint64(1) else 1.0
        if m < kn[iz]:
            return sign * x
        if iz == np.uint64(0):
            # tail beyond the base strip
            tt = t
            while True:
                u1 = (float(_mix(skey + (tt + np.uint64(2)) * _GOLD)
                            >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16
                u2 = (float(_mix(skey + (tt + np.uint64(3)) * _GOLD)
                            >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16
                xt = -np.log(u1) / _ZIG_R
                yt = -np.log(u2)
                if yt + yt >= xt * xt:
                    return sign * (_ZIG_R + xt)
                tt += np.uint64(2)
        else:
            uw = (float(_mix(skey + (t + np.uint64(2)) * _GOLD)
                        >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16
            if fn[iz] + uw * (fn[iz - np.uint64(1)] - fn[iz]) < np.exp(-0.5 * x * x):
                return sign * x
        t += np.uint64(3)


@njit(cache=True, parallel=True, fastmath=True)
def _simulate(seed, n_paths, n_steps, dt, b, D, init_run_start, init_in_run,
              bridge, cp_steps, kn, wn, fn, H, WH, Wcp):
    sig = np.sqrt(dt)
    n_cp = len(cp_steps)
    for i in prange(n_paths):
        key = _mix(np.uint64(seed) ^ _mix(np.uint64(i) + np.uint64(1)))
        x = 0.0
        in_run = init_in_run
        run_start = init_run_start
        achieved = False
        h = 0.0
        wh = 0.0
        cpi = 0
        for j in range(n_steps):
            z = _normal(key, np.uint64(2 * j), kn, wn, fn)
            x1 = x + sig * z
            if not achieved:
                if x < b and x1 < b:
                    if not in_run:
                        in_run = True
                        run_start = j * dt
                    if bridge:
                        q = 2.0 * (b - x) * (b - x1) / dt
                        if q < 41.5:
                            if _uniform(key, np.uint64(2 * j + 1)) < np.exp(-q):
                                run_start = (j + 1) * dt  # touched mid-step
                    if (j + 1) * dt >= run_start + D:
                        achieved = True
                        h = run_start + D
                        frac = (h - j * dt) / dt
                        wh = x + (x1 - x) * frac
                else:
                    in_run = False
            if cpi < n_cp and j + 1 == cp_steps[cpi]:
                Wcp[i, cpi] = x1
                cpi += 1
            x = x1
        if achieved:
            H[i] = h
            WH[i] = wh
        else:
            H[i] = np.inf
            WH[i] = np.nan


@dataclass
class McConfig:
    """Simulation request: problem spec, resolution, and reproducibility."""

    spec: ExcursionSpec
    paths: int
    dt: float
    horizon: float
    seed: int = 0
    bridge_correction: bool = True
    checkpoints: tuple = ()
    y_lo: float = -5.0
    y_hi: float = 5.0
    n_bins: int = 40
    max_steps_total: float = 2.5e11

    def __post_init__(self):
        if self.paths < 1:
            raise DomainError("paths must be >= 1")
        if self.dt <= 0.0 or self.dt > self.spec.D / 100.0:
            raise DomainError("dt must satisfy 0 < dt <= D/100 (clock resolution)")
        if self.horizon <= 0.0:
            raise DomainError("horizon must be positive")
        for u in self.checkpoints:
            if not (0.0 < u <= self.horizon + 1e-12):
                raise DomainError("checkpoints must lie in (0, horizon]")


@dataclass
class McRun:
    """Simulation output: achievement times, positions, and histograms."""

    config: McConfig
    H: np.ndarray
    WH: np.ndarray
    W_cp: np.ndarray
    n_achieved: int
    bin_edges: np.ndarray
    histograms: dict = field(default_factory=dict)

    def achieved_by(self, u: float) -> np.ndarray:
        return self.H <= u

    def h_cdf(self, u: float):
        """Estimate and standard error of P(achievement by u)."""
        p = float(np.mean(self.H <= u))
        se = np.sqrt(max(p * (1.0 - p), 1.0 / self.config.paths) / self.config.paths)
        return p, se

    @property
    def bias_note(self) -> str:
        flag = "on" if self.config.bridge_correction else "off"
        return (f"dt={self.config.dt:g}, bridge correction {flag}; without it the "
                "discrete clock misses touches, understating restarts and "
                "overstating early achievement")


def run_mc(cfg: McConfig) -> McRun:
    """Simulate and collect histograms at the configured checkpoints."""
    n_steps = int(round(cfg.horizon / cfg.dt))
    if cfg.paths * float(n_steps) > cfg.max_steps_total:
        raise ResourceLimitError(
            f"paths*steps = {cfg.paths * float(n_steps):.3g} exceeds budget "
            f"{cfg.max_steps_total:.3g}")
    spec = cfg.spec
    if spec.case == "II":
        init_run_start = -(spec.D - spec.delta)
        init_in_run = True
    else:
        init_run_start = 0.0
        init_in_run = False
    cp_steps = np.array(sorted(int(round(u / cfg.dt)) for u in cfg.checkpoints),
                        dtype=np.int64)
    H = np.empty(cfg.paths)
    WH = np.empty(cfg.paths)
    Wcp = np.full((cfg.paths, len(cp_steps)), np.nan)
    _simulate(np.uint64(cfg.seed), cfg.paths, n_steps, cfg.dt, spec.b, spec.D,
              init_run_start, init_in_run, cfg.bridge_correction, cp_steps,
              _ZIG_KN, _ZIG_WN, _ZIG_FN, H, WH, Wcp)
    edges = np.linspace(cfg.y_lo, cfg.y_hi, cfg.n_bins + 1)
    run = McRun(config=cfg, H=H, WH=WH, W_cp=Wcp,
                n_achieved=int(np.sum(np.isfinite(H))), bin_edges=edges)
    for k, u in enumerate(sorted(cfg.checkpoints)):
        mask = H <= u
        vals = Wcp[mask, k]
        counts, _ = np.histogram(vals, bins=edges)
        width = edges[1] - edges[0]
        est = counts / (cfg.paths * width)
        phat = counts / cfg.paths
        se = np.sqrt(np.maximum(phat * (1.0 - phat), 1.0 / cfg.paths)
                     / cfg.paths) / width
        run.histograms[float(u)] = (est, se)
    return run


def achievement_time_of_path(path: np.ndarray, dt: float, b: float, D: float,
                             delta: float | None = None):
    """Reference achievement clock on a sampled path (no bridge correction).

    ``path`` holds positions at 0, dt, 2dt, ...; returns the achievement
    time or None.  Deterministic; mirrors the simulation kernel's semantics
    step for step.
    """
    if delta is not None:
        in_run, run_start = True, -(D - delta)
    else:
        in_run, run_start = False, 0.0
    for j in range(len(path) - 1):
        x, x1 = path[j], path[j + 1]
        if x < b and x1 < b:
            if not in_run:
                in_run = True
                run_start = j * dt
            if (j + 1) * dt >= run_start + D:
                return run_start + D
        else:
            in_run = False
    return None


def compare(grid: DensityGrid, run: McRun, z_warn: float = 3.0,
            z_fail: float = 5.0, warn_frac: float = 0.01) -> VerificationReport:
    """Per-bin z-scores of the analytic surface against the MC histograms.

    Passes when at most ``warn_frac`` of the bins exceed ``z_warn`` standard
    errors and none exceeds ``z_fail``.
    """
    cfg = run.config
    s1, s2 = grid.spec, cfg.spec
    if not (s1.b == s2.b and s1.D == s2.D and s1.delta == s2.delta):
        raise SpecMismatchError(
            f"grid spec {s1} does not match simulation spec {s2}")
    centers = 0.5 * (run.bin_edges[:-1] + run.bin_edges[1:])
    if len(grid.ys) != len(centers) or not np.allclose(grid.ys, centers):
        raise SpecMismatchError("grid states must sit at the histogram bin centers")
    checks = []
    worst = 0.0
    n_over = 0
    n_bins = 0
    for i, u in enumerate(grid.us):
        key = float(u)
        if key not in run.histograms:
            raise SpecMismatchError(f"simulation lacks a checkpoint at u={u}")
        est, se = run.histograms[key]
        z = (est - grid.values[i]) / se
        n_bins += len(z)
        n_over += int(np.sum(np.abs(z) > z_warn))
        worst = max(worst, float(np.max(np.abs(z))))
        checks.append(CheckResult(
            name=f"mc-bins u={u:g}", value=float(np.max(np.abs(z))),
            tolerance=z_fail, passed=bool(np.max(np.abs(z)) <= z_fail)))
    allowed = int(np.ceil(warn_frac * n_bins))
    checks.append(CheckResult(
        name=f"bins over {z_warn} sigma", value=float(n_over),
        tolerance=float(allowed), passed=n_over <= allowed))
    return VerificationReport(name="analytic vs mc", checks=checks)
