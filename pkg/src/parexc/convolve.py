"""Grid-based convolution arithmetic on [0, infinity).

Functions live on uniform grids (`GridFn`) with an endpoint tag describing
power behavior f(u) ~ c * u^sing0 as u -> 0+ (sing0 in {0, +1/2, -1/2}).
Convolution uses an endpoint-corrected trapezoid rule: the two panels next
to a tagged endpoint are integrated against a local power-law model fitted
from the first grid values, which restores second-order accuracy that plain
trapezoid loses at square-root endpoints.

`layer_sum` evaluates the alternating sum that adds one kernel convolution
layer per elapsed multiple of the minimal excursion duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import beta as _beta

from . import specialfn as sf
from .errors import DomainError

_INV_SQRT_PI = 1.0 / np.sqrt(np.pi)


class Impulse:
    """Unit impulse at 0: the neutral element of convolution."""

    def __repr__(self):  # pragma: no cover
        return "Impulse()"


IMPULSE = Impulse()


@dataclass(eq=False)
class GridFn:
    """Uniformly sampled function on [0, (N-1)*step].

    values[k] is f(k*step), except when sing0 == -1/2: then values[0] stores
    the coefficient c of the u^(-1/2) blow-up, not a function value.
    Evaluation beyond the support raises unless ``decaying`` is set, in which
    case it returns 0.
    """

    step: float
    values: np.ndarray
    sing0: float = 0.0
    decaying: bool = False
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.step <= 0.0:
            raise DomainError("GridFn step must be positive")
        if self.sing0 not in (0.0, 0.5, -0.5):
            raise DomainError("sing0 must be one of 0, +1/2, -1/2")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("GridFn samples must be finite")

    @property
    def horizon(self) -> float:
        return (len(self.values) - 1) * self.step

    @property
    def nodes(self) -> np.ndarray:
        return self.step * np.arange(len(self.values))

    def origin_model(self):
        """Coefficients (p, c) with f(s) ~ sum_m c[m] s^(p+m) near 0.

        Fitted from the first grid values; the -1/2 tag uses the stored
        blow-up coefficient plus two correction terms.
        """
        h = self.step
        v = self.values
        if self.sing0 == -0.5:
            c0 = v[0]
            r1 = v[1] * np.sqrt(h) - c0
            r2 = v[2] * np.sqrt(2.0 * h) - c0
            b = (r2 - 2.0 * r1) / (2.0 * h * h)
            a = (4.0 * r1 - r2) / (2.0 * h)
            return -0.5, np.array([c0, a, b])
        if self.sing0 == 0.5:
            q1 = v[1] / np.sqrt(h)
            q2 = v[2] / np.sqrt(2.0 * h)
            return 0.5, np.array([2.0 * q1 - q2, (q2 - q1) / h])
        return 0.0, np.array([v[0], (v[1] - v[0]) / h])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.empty_like(t)
        inside = (t >= 0.0) & (t <= self.horizon + 1e-12 * self.step)
        if not np.all(inside):
            if not self.decaying:
                raise DomainError("evaluation beyond GridFn support")
            out[~inside & (t > 0)] = 0.0
            if np.any(t < 0.0):
                raise DomainError("GridFn argument must be >= 0")
        if self._interp is None:
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                if self.sing0 == -0.5:
                    self._interp = PchipInterpolator(self.nodes[1:], self.values[1:],
                                                     extrapolate=False)
                else:
                    self._interp = PchipInterpolator(self.nodes, self.values,
                                                     extrapolate=False)
        first = self.step if self.sing0 != 0.0 else 0.0
        lo = inside & (t < first)
        hi = inside & ~lo
        tc = np.clip(t[hi], 0.0, self.horizon)
        out[hi] = self._interp(tc)
        if np.any(lo):
            p, c = self.origin_model()
            s = t[lo]
            with np.errstate(divide="ignore"):
                acc = np.zeros_like(s)
                for m, cm in enumerate(c):
                    acc += cm * s ** (p + m)
            out[lo] = acc
        return out[0] if scalar else out


@dataclass
class LayerKernel:
    """Per-layer convolution kernel plus the scalar prefactor of its sum."""

    rho: GridFn
    scale: float = 1.0


def _moment(q: float, lo: float, hi: float) -> float:
    # integral of s^q over [lo, hi], q > -1
    return (hi ** (q + 1.0) - lo ** (q + 1.0)) / (q + 1.0)


# zeta values entering the singular Euler-Maclaurin endpoint corrections
_ZETA = {0.5: -1.4603545088095868, -0.5: -0.20788622497735457,
         -1.5: -0.025485201889833036}


def _navot_correction(model, other: np.ndarray, h: float, kmin: int = 4):
    """Singular Euler-Maclaurin correction at a u^gamma endpoint.

    For an integrand s^gamma * G(s) near s = 0, the trapezoid sum misses
    -zeta(-gamma) G(0) h^(gamma+1) - zeta(-gamma-1) G'(0) h^(gamma+2) + ...
    Here G(s) = f_reg(s) * g(t-s) with f_reg from the origin model and the
    co-factor values/slopes read off the other operand's grid.
    """
    gamma, c = model
    n = len(other)
    corr = np.zeros(n)
    if n <= kmin or gamma == 0.0:
        return corr
    k = np.arange(kmin, n)
    v = other[k]
    # one-sided second-order slope of the co-factor at the endpoint
    vp = (3.0 * other[k] - 4.0 * other[k - 1] + other[k - 2]) / (2.0 * h)
    g0 = c[0] * v
    g1 = c[1] * v - c[0] * vp
    corr[kmin:] = -(_ZETA[-gamma] * g0 * h ** (gamma + 1.0)
                    + _ZETA[-gamma - 1.0] * g1 * h ** (gamma + 2.0))
    return corr


def convolve(f, g):
    """Sampled convolution (f*g)(k*step) with endpoint-corrected trapezoid.

    Square-root endpoint behavior (sing0 = +-1/2) is handled by Navot-type
    Euler-Maclaurin corrections built from each operand's origin model; the
    first few grid points are replaced by exact two-sided power-model
    integrals.  Preconditions: equal steps; at most one operand carries the
    -1/2 tag.  An `Impulse` operand returns the other operand unchanged.
    """
    if isinstance(f, Impulse):
        return g
    if isinstance(g, Impulse):
        return f
    h = f.step
    if not np.isclose(h, g.step, rtol=1e-12, atol=0.0):
        raise DomainError("convolve requires equal grid steps")
    if f.sing0 == -0.5 and g.sing0 == -0.5:
        raise DomainError("convolve cannot take two u^(-1/2)-singular inputs")
    n = min(len(f.values), len(g.values))
    fe = f.values[:n].copy()
    ge = g.values[:n].copy()
    if f.sing0 == -0.5:
        fe[0] = 0.0
    if g.sing0 == -0.5:
        ge[0] = 0.0

    full = np.convolve(fe, ge)[:n]
    out = h * (full - 0.5 * (fe[0] * ge + fe * ge[0]))
    out[0] = 0.0

    fmod = f.origin_model()
    gmod = g.origin_model()
    if f.sing0 != 0.0:
        out += _navot_correction(fmod, ge, h)
    if g.sing0 != 0.0:
        out += _navot_correction(gmod, fe, h)

    # very small arguments: integrate the two fitted power models exactly
    if f.sing0 != 0.0 or g.sing0 != 0.0:
        pf, cf = fmod
        pg, cg = gmod
        for k in range(1, min(4, n)):
            t = k * h
            acc = 0.0
            for mf, cmf in enumerate(cf):
                for mg, cmg in enumerate(cg):
                    qf = pf + mf
                    qg = pg + mg
                    acc += cmf * cmg * t ** (qf + qg + 1.0) * _beta(qf + 1.0, qg + 1.0)
            out[k] = acc

    sing_out = 0.5 if (f.sing0 + g.sing0 + 1.0) == 0.5 else 0.0
    return GridFn(step=h, values=out, sing0=sing_out,
                  decaying=f.decaying and g.decaying)


_NFOLD_CACHE: dict = {}


def layer_kernel_grid(horizon: float, step: float) -> GridFn:
    """The layer kernel sampled on [0, horizon] (sqrt-endpoint tagged)."""
    nodes = step * np.arange(int(round(horizon / step)) + 1)
    return GridFn(step=step, values=sf.layer_kernel(nodes), sing0=0.5)


def layer_kernel_nfold(n: int, horizon: float, step: float):
    """n-fold self-convolution of the layer kernel; n = 0 is the impulse.

    Results are cached per (n, horizon, step); cached grids must not be
    mutated by callers.
    """
    if n < 0:
        raise DomainError("layer_kernel_nfold requires n >= 0")
    if n == 0:
        return IMPULSE
    npts = int(round(horizon / step)) + 1
    key = (n, npts, float(step))
    hit = _NFOLD_CACHE.get(key)
    if hit is not None:
        return hit
    if n == 1:
        out = layer_kernel_grid(horizon, step)
    else:
        out = convolve(layer_kernel_nfold(n - 1, horizon, step),
                       layer_kernel_grid(horizon, step))
    _NFOLD_CACHE[key] = out
    return out


def _chi_grid(alpha: float, horizon: float, step: float) -> GridFn:
    """Gauss-type pair original 1/sqrt(pi u) exp(-alpha^2/(4u)) on a grid."""
    nodes = step * np.arange(int(round(horizon / step)) + 1)
    if alpha == 0.0:
        vals = np.empty_like(nodes)
        vals[0] = _INV_SQRT_PI  # u^(-1/2) coefficient, not a sample
        vals[1:] = _INV_SQRT_PI / np.sqrt(nodes[1:])
        return GridFn(step=step, values=vals, sing0=-0.5)
    vals = np.zeros_like(nodes)
    vals[1:] = sf.heat_kernel("gauss", alpha, nodes[1:])
    return GridFn(step=step, values=vals, sing0=0.0)


def state_kernel(a: float, c: float, horizon: float, step: float) -> GridFn:
    """Per-layer kernel for scaled level ``a`` <= 0 and scaled gap ``c``.

    Dimensionless-time kernel: convolution of a Gauss-type original with the
    layer kernel (target at or above the level, c <= 0) or with the depth
    kernel (target strictly below the level, c > 0).  The sqrt-of-duration
    prefactor used by the excursion-law assemblers is NOT included here.
    """
    if a > 0.0:
        raise DomainError("state_kernel requires a <= 0")
    if c <= 0.0:
        chi = _chi_grid(abs(a + c), horizon, step)
        return convolve(chi, layer_kernel_nfold(1, horizon, step))
    chi = _chi_grid(abs(a), horizon, step)
    nodes = step * np.arange(int(round(horizon / step)) + 1)
    gvals = np.empty_like(nodes)
    gvals[0] = 2.0 * c * np.exp(-0.5 * c * c)  # u -> 0+ limit
    gvals[1:] = sf.depth_kernel(c, nodes[1:])
    sing = 0.5 if c == 0.0 else 0.0
    return convolve(chi, GridFn(step=step, values=gvals, sing0=sing))


def survivor_state_kernel(b: float, delta: float, D: float, y: float,
                          horizon: float, step: float,
                          tol: float = 1e-10) -> GridFn:
    """Kernel smoothing the killed time-delta density toward state ``y``.

    Samples tau -> integral_{-inf}^{b} killed_density(b, delta, x)
    * Erfc(|x-y| / (2 sqrt(D tau))) dx on [0, horizon], by a node-doubling
    Gauss rule split at x = y.  The large-tau limit is the no-passage
    probability.  No sqrt-of-duration prefactor (see `state_kernel`).
    """
    if b <= 0.0 or not (0.0 < delta < D):
        raise DomainError("survivor_state_kernel requires b > 0 and 0 < delta < D")
    nodes = step * np.arange(int(round(horizon / step)) + 1)
    tau = nodes[1:]
    x_lo = -8.6 * np.sqrt(delta)
    cuts = [x_lo, y, b] if x_lo < y < b else [x_lo, b]

    def estimate(n_nodes):
        xs, ws = np.polynomial.legendre.leggauss(n_nodes)
        total = np.zeros_like(tau)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            x = 0.5 * (hi - lo) * xs + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * ws
            phi = sf.killed_density(b, delta, x)
            # rows: x nodes, cols: tau nodes
            arg = np.abs(x - y)[:, None] / (2.0 * np.sqrt(D * tau)[None, :])
            total += (w * phi) @ sf.erfc(arg)
        return total

    n_nodes = 64
    prev = estimate(n_nodes)
    while n_nodes < 2048:
        n_nodes *= 2
        cur = estimate(n_nodes)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, np.max(np.abs(cur))):
            prev = cur
            break
        prev = cur
    vals = np.zeros_like(nodes)
    vals[1:] = prev
    return GridFn(step=step, values=vals, sing0=0.0)


def layer_sum(kernel: LayerKernel, us, D: float):
    """Alternating layer sum at physical times ``us``.

    For each u: scale * sum over integers 1 <= n < u/D of
    (-1)^(n-1) (2 pi)^(-n/2) (rho * nu_(n-1))((u/D - n)/2),
    evaluated by monotone cubic interpolation on the convolved grids.
    The sum is finite; the only error is grid error.
    """
    us = np.atleast_1d(np.asarray(us, dtype=float))
    if np.any(us < 0.0):
        raise DomainError("layer_sum requires u >= 0")
    out = np.zeros_like(us)
    n_terms = int(np.ceil(np.max(us) / D)) - 1 if np.max(us) > D else 0
    if n_terms == 0:
        return out if out.shape != () else float(out)
    rho = kernel.rho
    tau_need = (np.max(us) / D - 1.0) / 2.0
    if rho.horizon + 1e-12 < tau_need:
        raise DomainError(
            f"kernel support {rho.horizon:.6g} short of required {tau_need:.6g}")
    conv = rho
    coef = 1.0 / np.sqrt(2.0 * np.pi)
    for n in range(1, n_terms + 1):
        if n > 1:
            conv = convolve(rho, layer_kernel_nfold(n - 1, rho.horizon, rho.step))
        taus = (us / D - n) / 2.0
        live = taus > 0.0
        if np.any(live):
            out[live] += coef * conv(taus[live])
        coef *= -1.0 / np.sqrt(2.0 * np.pi)
    out *= kernel.scale
    return out if out.shape != () else float(out)
