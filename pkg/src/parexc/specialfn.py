"""Scalar special functions used by the excursion-law formulas.

Everything here is a pure function of its arguments.  The central object is
the exponentially tilted half-Gaussian moment

    tilt_moment(w) = integral_0^inf x exp(-x^2/2 + w x) dx,

an entire function whose reciprocal (at a rescaled argument) is the Laplace
transform of the level-zero achievement time.  The remaining functions are
the heat-equation transform pairs, the layer kernel driving the convolution
construction, and the Gaussian first-passage/killed densities.

Domain conventions: ``z`` arguments of transform-side functions live on the
cut plane C \\ (-inf, 0] with the principal square root (Re sqrt(z) > 0);
``erfc`` is guaranteed accurate on the sector |arg z| <= pi/4 and on the
real line, and refuses other inputs.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp
from scipy import integrate as _si

from .errors import DomainError

_SQRT_PI = np.sqrt(np.pi)
_SQRT_2 = np.sqrt(2.0)
_SQRT_2PI = np.sqrt(2.0 * np.pi)
# truncation radius for half-Gaussian integrands: exp(-x^2/2) < eps beyond it
_GAUSS_CUTOFF = np.sqrt(2.0 * np.log(1.0 / np.finfo(float).eps))  # ~8.49


def require_cut_plane(z):
    """Validate that ``z`` avoids the branch cut (-inf, 0]; return complex z.

    The principal square root of any admissible point has positive real part.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0:
        raise DomainError(f"z={z} lies on the cut (-inf, 0]")
    return z


def require_sector(alpha):
    """Validate |arg(alpha)| <= pi/4 (i.e. Re >= |Im| >= 0); return complex."""
    a = complex(alpha)
    if a.real < 0.0 or abs(a.imag) > a.real + 1e-14 * (1.0 + abs(a)):
        raise DomainError(f"alpha={a} outside the sector |arg| <= pi/4")
    return a


def erfc(z):
    """Complementary error function on the sector |arg z| <= pi/4 and on R.

    Real arguments of either sign are accepted (the entire continuation
    satisfies erfc(-x) = 2 - erfc(x)); complex arguments must lie in the
    sector, where the relative accuracy is ~1e-12 or better.
    """
    z = np.asarray(z)
    if np.isrealobj(z) or np.all(z.imag == 0.0):
        out = _sp.erfc(z.real)
        return out if out.ndim else float(out)
    bad = (z.real < 0.0) | (np.abs(z.imag) > z.real + 1e-14 * (1.0 + np.abs(z)))
    if np.any(bad & (z.imag != 0.0)):
        raise DomainError("complex erfc argument outside the sector |arg| <= pi/4")
    out = _sp.erfc(z)
    return out if out.ndim else complex(out)


def tilt_moment(w):
    """First moment of the half-line Gaussian weight under exponential tilt.

    Returns integral_0^inf x exp(-x^2/2 + w x) dx for any complex ``w``,
    evaluated through the scaled complementary error function:

        tilt_moment(w) = 1 - sqrt(pi) * u * erfcx(u),   u = -w / sqrt(2),

    which is a single machine-accurate code path for all ``w`` (the erfcx
    factor absorbs the exp(w^2/2) growth).  Entire function; no domain
    restrictions.
    """
    w = np.asarray(w)
    u = -w / _SQRT_2
    out = 1.0 - _SQRT_PI * u * _sp.erfcx(u)
    if out.ndim:
        return out
    return float(out.real) if np.isrealobj(w) else complex(out)


def tilt_moment_series(w, nterms: int = 60):
    """Power-series evaluation of ``tilt_moment`` (independent cross-check).

    Sum of a_n w^n with a_n = 2^(n/2) Gamma((n+2)/2) / n!.  Adequate for
    |w| <= 3 with the default number of terms; not intended for large |w|.
    """
    w = complex(w)
    n = np.arange(nterms + 1)
    log_a = 0.5 * n * np.log(2.0) + _sp.gammaln(0.5 * (n + 2)) - _sp.gammaln(n + 1)
    a = np.exp(log_a)
    return complex(np.polyval(a[::-1], w)) if w.imag else float(np.polyval(a[::-1], w).real)


def heat_kernel(kind: str, alpha, u):
    """Heat-equation Laplace-pair originals on the half line.

    kind='passage' : alpha/(2 sqrt(pi u^3)) exp(-alpha^2/(4u)),  transform e^(-a sqrt z)
    kind='gauss'   : 1/sqrt(pi u) exp(-alpha^2/(4u)),            transform e^(-a sqrt z)/sqrt z
    kind='erfc'    : erfc(alpha/(2 sqrt u)),                     transform e^(-a sqrt z)/z

    ``u`` must be positive (scalar or array); 'passage' additionally needs
    Re(alpha) > 0.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise DomainError("heat_kernel requires u > 0")
    a = require_sector(alpha)
    if a.imag == 0.0:
        a = a.real
    if kind == "passage":
        if np.real(a) <= 0.0:
            raise DomainError("'passage' kernel requires Re(alpha) > 0")
        out = a / (2.0 * np.sqrt(np.pi * u**3)) * np.exp(-(a * a) / (4.0 * u))
    elif kind == "gauss":
        out = np.exp(-(a * a) / (4.0 * u)) / np.sqrt(np.pi * u)
    elif kind == "erfc":
        out = erfc(a / (2.0 * np.sqrt(u)))
    else:
        raise ValueError(f"unknown heat kernel kind {kind!r}")
    out = np.asarray(out)
    return out if out.ndim else out.item()


def layer_kernel(u):
    """The kernel (2/sqrt(pi)) sqrt(u)/(2u+1) convolved once per layer.

    Not a probability density (the tail ~ 1/(2 sqrt(u)) is non-integrable);
    it is used strictly as a convolution kernel.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0):
        raise DomainError("layer_kernel requires u >= 0")
    out = (2.0 / _SQRT_PI) * np.sqrt(u) / (2.0 * u + 1.0)
    return out if out.ndim else float(out)


def layer_kernel_lt(z):
    """Laplace transform of ``layer_kernel``: tilt_moment(-sqrt z)/sqrt z.

    Its n-th power is the transform of the n-fold self-convolution.
    """
    z = require_cut_plane(z)
    rz = np.sqrt(z)
    return tilt_moment(-rz) / rz


def depth_kernel(alpha, u):
    """Time-domain kernel whose transform is ``depth_kernel_lt(alpha, z)[1]``.

    Closed form obtained by carrying out the Gaussian integral in

        g(u) = 1/sqrt(pi u) * integral_0^inf x e^(-x^2/2 - (alpha-x)^2/(4u)) dx:

        g(u) = e^(-(a^2/2)/(1+2u)) * ( layer_kernel(u) e^(-a^2/(4u(1+2u)))
               + a (1+2u)^(-3/2) Erfc(-a / sqrt(4u(1+2u))) ).

    For the excursion law this encodes a target state strictly below the
    excursion level (scaled gap ``alpha`` > 0).  At alpha = 0 it reduces
    exactly to ``layer_kernel``; as u -> 0+ it tends to 2 a e^(-a^2/2).
    """
    if alpha < 0.0:
        raise DomainError("depth_kernel requires alpha >= 0")
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0):
        raise DomainError("depth_kernel requires u > 0")
    opu = 1.0 + 2.0 * u
    a2 = alpha * alpha
    core = layer_kernel(u) * np.exp(-a2 / (4.0 * u * opu))
    edge = alpha * opu ** -1.5 * _sp.erfc(-alpha / np.sqrt(4.0 * u * opu))
    out = np.exp(-0.5 * a2 / opu) * (core + edge)
    return out if out.ndim else float(out)


def depth_kernel_lt(alpha: float, z):
    """Transform-side pair (F, G): the tilted-moment generalization.

        F(z) = integral_0^inf x exp(-x^2/2 - |alpha - x| sqrt(z)) dx,
        G(z) = F(z) / sqrt(z).

    Evaluated in closed form: completing the square on the two panels
    (split at x = alpha) and absorbing every exp(v^2/2) growth factor into
    the scaled complementary error function gives, for alpha > 0 and
    v = sqrt(z),

        F = e^(-alpha v) + v sqrt(pi/2) [ e^(-alpha^2/2)
            (erfcx((v-alpha)/sqrt 2) - erfcx((v+alpha)/sqrt 2))
            - e^(-alpha v) erfcx(v/sqrt 2) ],

    which is stable on the whole cut plane (contour nodes included); for
    alpha <= 0, F = e^(alpha v) tilt_moment(-v).  `depth_kernel_lt_quad`
    is the direct-quadrature oracle for this closed form.
    """
    z = require_cut_plane(z)
    v = np.sqrt(z)
    if alpha <= 0.0:
        F = np.exp(alpha * v) * tilt_moment(-v)
    else:
        s2 = _SQRT_2
        F = np.exp(-alpha * v) + v * np.sqrt(np.pi / 2.0) * (
            np.exp(-0.5 * alpha * alpha)
            * (_sp.erfcx((v - alpha) / s2) - _sp.erfcx((v + alpha) / s2))
            - np.exp(-alpha * v) * _sp.erfcx(v / s2))
    F = complex(F)
    return F, F / v


def depth_kernel_lt_quad(alpha: float, z):
    """Adaptive-quadrature evaluation of `depth_kernel_lt` (test oracle).

    Integrand split at x = alpha, truncated at max(alpha, 0) plus the
    machine-precision Gaussian cutoff.
    """
    z = require_cut_plane(z)
    rz = np.sqrt(z)
    x_hi = max(alpha, 0.0) + _GAUSS_CUTOFF

    def integrand(x, part):
        val = x * np.exp(-0.5 * x * x - abs(alpha - x) * rz)
        return val.real if part == 0 else val.imag

    pieces = [(0.0, alpha), (alpha, x_hi)] if 0.0 < alpha < x_hi else [(0.0, x_hi)]
    total = 0.0 + 0.0j
    for lo, hi in pieces:
        re, _ = _si.quad(integrand, lo, hi, args=(0,), epsabs=1e-13, epsrel=1e-11, limit=200)
        im, _ = _si.quad(integrand, lo, hi, args=(1,), epsabs=1e-13, epsrel=1e-11, limit=200)
        total += re + 1j * im
    return total, total / rz


def killed_exp_smoothing(b: float, delta: float, y: float, kappa):
    """integral_{-inf}^b killed_density(b, delta, x) e^(-kappa |x-y|) dx.

    Closed form via half-line Gaussian-exponential integrals, stabilized
    with erfcx so every factor stays bounded for cut-plane kappa = sqrt(2z)
    (Re kappa > 0).  This is the transform-side numerator integral of the
    no-restart branch of the in-progress-excursion law.
    """
    kappa = complex(kappa)
    sd = np.sqrt(delta)
    beta = kappa * sd

    def mass_exp(y_, m):
        # integral over (-inf, b] of gauss(x-m) e^{-kappa|x-y_|}
        if y_ >= b:
            a_b = (b - m) / sd
            return 0.5 * np.exp(kappa * (b - y_) - 0.5 * a_b * a_b) \
                * _sp.erfcx((beta - a_b) / _SQRT_2)
        a_y = (y_ - m) / sd
        a_b = (b - m) / sd
        lo = 0.5 * np.exp(-0.5 * a_y * a_y) * _sp.erfcx((beta - a_y) / _SQRT_2)
        hi = 0.5 * (np.exp(-0.5 * a_y * a_y) * _sp.erfcx((beta + a_y) / _SQRT_2)
                    - np.exp(kappa * (y_ - b) - 0.5 * a_b * a_b)
                    * _sp.erfcx((beta + a_b) / _SQRT_2))
        return lo + hi

    return mass_exp(y, 0.0) - mass_exp(y, 2.0 * b)


def first_passage_density(b: float, w):
    """Density of the first passage time of Brownian motion to level b > 0."""
    if b <= 0.0:
        raise DomainError("first_passage_density requires b > 0")
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0.0):
        raise DomainError("first_passage_density requires w > 0")
    out = b / np.sqrt(2.0 * np.pi * w**3) * np.exp(-b * b / (2.0 * w))
    return out if out.ndim else float(out)


def passage_prob(b: float, delta: float) -> float:
    """P(first passage to level b > 0 happens by time delta) = Erfc(b/sqrt(2 delta))."""
    if b <= 0.0 or delta <= 0.0:
        raise DomainError("passage_prob requires b > 0 and delta > 0")
    return float(_sp.erfc(b / np.sqrt(2.0 * delta)))


def survival_prob(b: float, delta: float) -> float:
    """P(no passage to level b by time delta)."""
    return 1.0 - passage_prob(b, delta)


def killed_density(b: float, u: float, y):
    """Transition density from 0 of Brownian motion absorbed at level b > 0.

    Reflection form (1/sqrt(2 pi u)) [exp(-y^2/2u) - exp(-(y-2b)^2/2u)];
    nonnegative for y <= b and zero at the barrier.
    """
    if b <= 0.0:
        raise DomainError("killed_density requires b > 0")
    if u <= 0.0:
        raise DomainError("killed_density requires u > 0")
    y = np.asarray(y, dtype=float)
    norm = 1.0 / np.sqrt(2.0 * np.pi * u)
    out = norm * (np.exp(-y * y / (2.0 * u)) - np.exp(-((y - 2.0 * b) ** 2) / (2.0 * u)))
    return out if out.ndim else float(out)
