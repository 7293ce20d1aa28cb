"""Assembly of the excursion-conditioned law of Brownian motion.

A problem instance fixes the excursion level ``b`` (relative to the starting
point), the minimal excursion duration ``D``, and, when an excursion is
already in progress (b > 0), the remaining duration ``delta``.  Two regimes:

* case I  (b <= 0): wait for a future full-length sub-level excursion; the
  density is a single alternating layer sum.
* case II (b > 0, 0 < delta < D): the in-progress excursion either survives
  ``delta`` more time units or the clock restarts at the first passage to
  ``b``; the density is a four-term sum (two closed forms plus two
  first-passage-smeared layer sums).

All layer kernels live in dimensionless time tau = u/(2D) with scaled level
b/sqrt(D) and scaled state gap (b-y)/sqrt(D); physical time enters only at
this module's boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _si

from . import specialfn as sf
from .convolve import GridFn, LayerKernel, convolve, layer_kernel_nfold, \
    layer_sum, state_kernel, survivor_state_kernel
from .errors import DomainError

_GAUSS_CUTOFF = np.sqrt(2.0 * np.log(1.0 / np.finfo(float).eps))


@dataclass(frozen=True)
class ExcursionSpec:
    """Problem parameters: level b, duration D, remaining duration delta."""

    b: float
    D: float
    delta: float | None = None

    def __post_init__(self):
        if self.D <= 0.0:
            raise DomainError("minimal duration D must be positive")
        if self.b > 0.0:
            if self.delta is None:
                raise DomainError("b > 0 needs the remaining duration delta")
            if not (0.0 < self.delta < self.D):
                raise DomainError("remaining duration must satisfy 0 < delta < D")
        elif self.delta is not None:
            raise DomainError("delta only applies to an in-progress excursion (b > 0)")

    @property
    def case(self) -> str:
        return "II" if self.b > 0.0 else "I"

    @property
    def delta0(self) -> float:
        # case I convention: a full duration remains
        return self.delta if self.delta is not None else self.D

    @property
    def b_scaled(self) -> float:
        return self.b / np.sqrt(self.D)

    def beta(self, y):
        return (self.b - np.asarray(y, dtype=float)) / np.sqrt(self.D)


@dataclass
class DensityGrid:
    """Evaluated density surface with its provenance tag."""

    spec: ExcursionSpec
    us: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # shape (len(us), len(ys))
    method: str

    def __post_init__(self):
        if self.method not in ("analytic", "inversion", "mc"):
            raise DomainError(f"unknown method tag {self.method!r}")
        if np.min(self.values) < -1e-8:
            warnings.warn(
                f"density grid dips to {np.min(self.values):.3e} < -1e-8",
                stacklevel=2)


def default_step(spec: ExcursionSpec) -> float:
    return min(spec.D, 1.0) / 512.0


def _tau_horizon(spec: ExcursionSpec, u_max: float) -> float:
    return u_max / (2.0 * spec.D) + 1.0


def case1_kernel(spec: ExcursionSpec, y: float, u_max: float,
                 step: float | None = None) -> LayerKernel:
    """Layer kernel of the case-I sum at state y, with its 1/(2 sqrt(D)) scale."""
    step = default_step(spec) if step is None else step
    rho = state_kernel(spec.b_scaled, float(spec.beta(y)),
                       _tau_horizon(spec, u_max), step)
    return LayerKernel(rho=rho, scale=1.0 / (2.0 * np.sqrt(spec.D)))


def case1_density(spec: ExcursionSpec, u, y: float, step: float | None = None):
    """Case-I density at times ``u`` (scalar or array) and state ``y``.

    Zero for u <= D (no excursion can have finished).  The sqrt(D) carried
    by the scaled per-layer kernels and the 1/(2D) of the inversion
    normalization combine into the single 1/(2 sqrt(D)) prefactor here.
    """
    if spec.case != "I":
        raise DomainError("case1_density requires a case-I spec (b <= 0)")
    us = np.atleast_1d(np.asarray(u, dtype=float))
    kern = case1_kernel(spec, y, float(np.max(us)), step)
    out = layer_sum(kern, us, spec.D)
    return out if np.ndim(u) else float(out[0])


def _rayleigh_propagated(spec: ExcursionSpec, u: float, y: float) -> float:
    # integral_0^inf x exp(-x^2/(2D) - (b-x-y)^2/(2(u-delta))) dx
    D, b, delta = spec.D, spec.b, spec.delta
    s = u - delta
    x_peak = max(0.0, (b - y) * D / (D + s))
    x_hi = x_peak + _GAUSS_CUTOFF * np.sqrt(D) + 1.0

    def f(x):
        return x * np.exp(-x * x / (2.0 * D) - (b - x - y) ** 2 / (2.0 * s))

    val, _ = _si.quad(f, 0.0, x_hi, epsabs=1e-12, epsrel=1e-10, limit=200)
    return val


def case2_direct_terms(spec: ExcursionSpec, u: float, y: float,
                       killed_time: str = "u"):
    """The two closed-form case-II terms (both zero for u <= delta).

    The first propagates the scaled depth law reached at achievement freely
    over u - delta; the second weighs the killed transition density by the
    no-passage probability.  ``killed_time`` selects the time argument of
    the killed factor: "u" as printed, or the "u-delta" variant the
    verification suite compares against simulation.
    """
    if spec.case != "II":
        raise DomainError("case2_direct_terms requires a case-II spec")
    if killed_time not in ("u", "u-delta"):
        raise DomainError("killed_time must be 'u' or 'u-delta'")
    if u <= spec.delta:
        return 0.0, 0.0
    q_le = sf.passage_prob(spec.b, spec.delta)
    q_gt = 1.0 - q_le
    ray = (q_gt * q_le / spec.D) / np.sqrt(2.0 * np.pi * (u - spec.delta)) \
        * _rayleigh_propagated(spec, u, y)
    t_killed = u if killed_time == "u" else u - spec.delta
    killed = q_gt * sf.killed_density(spec.b, t_killed, y)
    return ray, killed


def _passage_weighted_layers(spec: ExcursionSpec, us, rho: GridFn) -> np.ndarray:
    """sum_n (-1)^(n-1) (2 pi)^(-n/2) int_0^(delta ^ (u-Dn)) mu_b(w)
    (rho * nu_(n-1))((u - Dn - w)/(2D)) dw, per requested u.

    The layer count n < u/D uses the outer time u; for w near the upper
    limit the kernel argument reaches 0 where the kernel vanishes.
    """
    D, b, delta = spec.D, spec.b, spec.delta
    us = np.atleast_1d(np.asarray(us, dtype=float))
    out = np.zeros_like(us)
    u_max = float(np.max(us))
    n_terms = int(np.ceil(u_max / D)) - 1 if u_max > D else 0
    if n_terms == 0:
        return out
    # breakpoints resolving the first-passage spike at w ~ b^2/3
    spike = [b * b / 3.0, 3.0 * b * b, 10.0 * b * b]
    conv = rho
    coef = 1.0 / np.sqrt(2.0 * np.pi)
    for n in range(1, n_terms + 1):
        if n > 1:
            conv = convolve(rho, layer_kernel_nfold(n - 1, rho.horizon, rho.step))
        for i, u in enumerate(us):
            w_hi = min(delta, u - n * D)
            if w_hi <= 0.0:
                continue
            pts = [p for p in spike if 0.0 < p < w_hi]

            def f(w):
                return sf.first_passage_density(b, w) \
                    * conv((u - n * D - w) / (2.0 * D))

            val, _ = _si.quad(f, 0.0, w_hi, points=pts or None,
                              epsabs=1e-12, epsrel=1e-9, limit=200)
            out[i] += coef * val
        coef *= -1.0 / np.sqrt(2.0 * np.pi)
    return out


def case2_layer_survivor(spec: ExcursionSpec, u, y: float,
                         step: float | None = None):
    """Case-II layer term for achievement without restart of the state clock.

    First-passage-time integration against the layer expansion built on the
    killed-density-smoothing kernel; net prefactor 1/(2 sqrt(D)).
    """
    if spec.case != "II":
        raise DomainError("case2_layer_survivor requires a case-II spec")
    us = np.atleast_1d(np.asarray(u, dtype=float))
    step = default_step(spec) if step is None else step
    rho = survivor_state_kernel(spec.b, spec.delta, spec.D, y,
                                _tau_horizon(spec, float(np.max(us))), step)
    out = _passage_weighted_layers(spec, us, rho) / (2.0 * np.sqrt(spec.D))
    return out if np.ndim(u) else float(out[0])


def case2_layer_restart(spec: ExcursionSpec, u, y: float,
                        step: float | None = None):
    """Case-II layer term with the state clock restarted at the passage time.

    Identical layer structure to case I at level zero (the restart erases
    the level), weighted by the passage probability within delta.
    """
    if spec.case != "II":
        raise DomainError("case2_layer_restart requires a case-II spec")
    us = np.atleast_1d(np.asarray(u, dtype=float))
    step = default_step(spec) if step is None else step
    rho = state_kernel(0.0, float(spec.beta(y)),
                       _tau_horizon(spec, float(np.max(us))), step)
    q_le = sf.passage_prob(spec.b, spec.delta)
    out = q_le * _passage_weighted_layers(spec, us, rho) / (2.0 * np.sqrt(spec.D))
    return out if np.ndim(u) else float(out[0])


def density(spec: ExcursionSpec, u, y: float, step: float | None = None,
            killed_time: str = "u", representation: str = "four-term"):
    """The excursion density at (u, y).

    Case I: the alternating layer sum.  Case II offers two representations:

    * ``"four-term"`` (default): the printed closed forms plus the two
      first-passage-smeared layer sums.  The verification suite shows this
      sum disagrees with path simulation (it even goes negative above the
      level); it is kept as stated, not patched.
    * ``"subcase"``: the exact no-restart/restart decomposition
      (`case2_subcase_reference`), which simulation confirms.
    """
    if spec.case == "I":
        return case1_density(spec, u, y, step)
    us = np.atleast_1d(np.asarray(u, dtype=float))
    if representation == "subcase":
        out = np.array([case2_subcase_reference(spec, float(uu), y, step)
                        for uu in us])
        return out if np.ndim(u) else float(out[0])
    if representation != "four-term":
        raise DomainError("representation must be 'four-term' or 'subcase'")
    out = case2_layer_survivor(spec, us, y, step) \
        + case2_layer_restart(spec, us, y, step)
    for i, uu in enumerate(us):
        ray, killed = case2_direct_terms(spec, float(uu), y, killed_time)
        out[i] += ray + killed
    return out if np.ndim(u) else float(out[0])


def case2_subcase_reference(spec: ExcursionSpec, u: float, y: float,
                            step: float | None = None) -> float:
    """Independent case-II reference: exact subcase decomposition.

    Splits on whether the level is reached before delta.  No restart: the
    killed time-delta density propagates freely over u - delta.  Restart:
    the passage time convolves the level-zero case-I law shifted to b.
    Used by the verification suite to adjudicate the four-term sum against
    simulation; not part of the printed representation.
    """
    if spec.case != "II":
        raise DomainError("case2_subcase_reference requires a case-II spec")
    b, D, delta = spec.b, spec.D, spec.delta
    no_restart = 0.0
    if u > delta:
        s = u - delta

        def f(x):
            return sf.killed_density(b, delta, x) \
                * np.exp(-(x - y) ** 2 / (2.0 * s)) / np.sqrt(2.0 * np.pi * s)

        x_lo = -8.6 * np.sqrt(delta) - abs(y)
        pts = [y] if x_lo < y < b else None
        no_restart, _ = _si.quad(f, x_lo, b, points=pts,
                                 epsabs=1e-12, epsrel=1e-10, limit=200)
    restart = 0.0
    w_hi = min(delta, u)
    level0 = ExcursionSpec(b=0.0, D=D)
    if w_hi > 0.0 and u > D:
        kern = case1_kernel(level0, y - b, u, step)

        def g(w):
            return sf.first_passage_density(b, w) * layer_sum(kern, u - w, D)

        spike = [p for p in (b * b / 3.0, 3.0 * b * b, 10.0 * b * b) if p < w_hi]
        restart, _ = _si.quad(g, 0.0, w_hi, points=spike or None,
                              epsabs=1e-12, epsrel=1e-9, limit=200)
    return no_restart + restart


def shifted_density(a: float, t: float, x_t: float, D: float,
                    delta: float | None = None):
    """Time-t view of the law for level ``a`` given the current value x_t.

    Returns the map (T, x) -> density for the normalized problem at level
    a - x_t, evaluated at (T - t, x - x_t); zero for T <= t.
    """
    if t < 0.0:
        raise DomainError("shifted_density requires t >= 0")
    b = a - x_t
    spec = ExcursionSpec(b=b, D=D, delta=delta if b > 0.0 else None)

    def h(T: float, x: float) -> float:
        if T <= t:
            return 0.0
        return float(density(spec, T - t, x - x_t))

    return h


def achievement_cdf(spec: ExcursionSpec, u: float, method: str = "layers",
                    step: float | None = None,
                    representation: str = "four-term") -> float:
    """P(the length-D sub-level excursion is achieved by time u).

    ``method='layers'`` integrates the density over the state variable with
    Gaussian-envelope tails; ``method='inversion'`` (case I only) inverts
    the transform of the distribution function directly.
    """
    if u <= 0.0:
        raise DomainError("achievement_cdf requires u > 0")
    if method == "inversion":
        if spec.case != "I":
            raise DomainError("inversion route applies to case I only")
        if u <= spec.D:
            return 0.0
        from .laplace import invert_cdf
        return invert_cdf(spec, u)
    if method != "layers":
        raise DomainError(f"unknown cdf method {method!r}")
    if u <= min(spec.delta0, spec.D):
        return 0.0
    spread = 9.0 * np.sqrt(u) + 1.0
    lo = min(spec.b, 0.0) - spread
    hi = max(spec.b, 0.0) + spread
    pts = sorted({p for p in (2.0 * spec.b, spec.b, 0.0) if lo < p < hi})

    def f(y):
        return float(density(spec, u, float(y), step,
                             representation=representation))

    val, _ = _si.quad(f, lo, hi, points=pts or None,
                      epsabs=1e-10, epsrel=1e-7, limit=100)
    return val


def density_grid(spec: ExcursionSpec, us, ys, method: str = "analytic",
                 step: float | None = None, refine: bool = True,
                 refine_tol: float = 1e-6,
                 representation: str = "four-term") -> DensityGrid:
    """Evaluate the density on a (u, y) product grid.

    With ``refine`` the grid step is halved (at most twice) until probe
    values move by less than ``refine_tol``.
    """
    us = np.atleast_1d(np.asarray(us, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if method == "inversion":
        from .laplace import invert_density
        vals = np.array([[invert_density(spec, float(u), float(y)) for y in ys]
                         for u in us])
        return DensityGrid(spec=spec, us=us, ys=ys, values=vals, method=method)
    if method != "analytic":
        raise DomainError("density_grid computes 'analytic' or 'inversion'")
    step = default_step(spec) if step is None else step
    if refine:
        u_probe = float(np.max(us))
        y_probe = [float(ys[len(ys) // 2]), float(ys[len(ys) // 3])]
        for _ in range(2):
            coarse = [density(spec, u_probe, yp, step,
                              representation=representation) for yp in y_probe]
            fine = [density(spec, u_probe, yp, step / 2.0,
                            representation=representation) for yp in y_probe]
            if np.max(np.abs(np.subtract(coarse, fine))) < refine_tol:
                break
            step /= 2.0
    vals = np.empty((len(us), len(ys)))
    for j, y in enumerate(ys):
        vals[:, j] = density(spec, us, float(y), step,
                             representation=representation)
    return DensityGrid(spec=spec, us=us, ys=ys, values=vals, method="analytic")
