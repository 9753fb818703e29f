"""Analytics of the stationary Gaussian limit process.

Numeric CDF of the spectrally negative stable marginal, the limit
covariance in two independently computed forms, the variance constant,
the regime scaling functions, and a Gaussian-process sampler.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from .dist import stable_scale_const
from .rng import RandomStream


def _c1(alpha: float) -> float:
    if alpha == 2.0:
        return 0.0
    return math.gamma(1.0 - alpha) * math.sin(math.pi * alpha / 2.0)


def stable_cdf(alpha: float, x: float) -> float:
    """P{S_alpha(1) <= x} for the spectrally negative normalization.

    alpha=2 is the standard normal (chf exp(-z^2/2)).  For alpha in (1,2)
    the half-line inversion F(x) = 1/2 + (1/pi) int_0^inf
    exp(-c0 z^alpha) sin(z x + c1 z^alpha) / z dz is integrated to the
    point where the damping factor reaches the 1e-20 scale.
    """
    if not (1.0 < alpha <= 2.0):
        raise ValueError("alpha must lie in (1, 2]")
    if alpha == 2.0:
        return float(special.ndtr(x))
    c0 = stable_scale_const(alpha)
    c1 = _c1(alpha)
    zmax = (46.0 / c0) ** (1.0 / alpha)
    f = lambda z: math.exp(-c0 * z**alpha) * math.sin(z * x + c1 * z**alpha) / z
    limit = int(200 + 60 * abs(x) * zmax / (2.0 * math.pi))
    val, err = integrate.quad(f, 0.0, zmax, limit=limit, epsabs=1e-11, epsrel=1e-10)
    if err > 1e-6:
        raise ArithmeticError(f"stable CDF inversion error estimate {err:.2e}")
    return min(max(0.5 + val / math.pi, 0.0), 1.0)


def stable_left_tail_consts(alpha: float):
    """(k1, k2) with P{S_alpha(1) <= -x} = k1 x^-alpha (1 + k2 x^-alpha + ...).

    k1 is the exact first-order tail constant; k2 is fitted against the
    inversion integral at moderate depth and only steers the correction
    term of truncated-integral tails.
    """
    c0 = stable_scale_const(alpha)
    k1 = 2.0 * math.gamma(alpha) * math.sin(math.pi * alpha / 2.0) * c0 / math.pi
    x0 = 50.0
    F0 = stable_cdf(alpha, -x0)
    k2 = (F0 / (k1 * x0**-alpha) - 1.0) * x0**alpha
    return k1, k2


@dataclass(frozen=True)
class StableCdfTable:
    """Monotone interpolant of the stable CDF with an analytic far-left tail."""

    alpha: float
    x_lo: float
    x_hi: float
    grid: np.ndarray
    values: np.ndarray
    k1: float
    k2: float
    _interp: PchipInterpolator

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        left = x < self.x_lo
        right = x > self.x_hi
        mid = ~(left | right)
        out[mid] = np.clip(self._interp(x[mid]), 0.0, 1.0)
        ax = np.abs(x[left])
        out[left] = self.k1 * ax**-self.alpha * (1.0 + self.k2 * ax**-self.alpha)
        out[right] = 1.0
        return out if out.shape else float(out)


@lru_cache(maxsize=8)
def stable_cdf_table(alpha: float, x_lo: float = -120.0, x_hi: float = 40.0
                     ) -> StableCdfTable:
    if alpha == 2.0:
        grid = np.linspace(-12.0, 12.0, 481)
        vals = special.ndtr(grid)
        interp = PchipInterpolator(grid, vals)
        return StableCdfTable(alpha=2.0, x_lo=-12.0, x_hi=12.0, grid=grid,
                              values=vals, k1=0.0, k2=0.0, _interp=interp)
    dense = np.arange(-24.0, min(x_hi, 24.0) + 1e-9, 0.05)
    coarse_l = np.arange(x_lo, -24.0, 0.5)
    coarse_r = np.arange(24.5, x_hi + 1e-9, 0.5) if x_hi > 24.0 else np.empty(0)
    grid = np.concatenate([coarse_l, dense, coarse_r])
    vals = np.array([stable_cdf(alpha, float(x)) for x in grid])
    vals = np.maximum.accumulate(np.clip(vals, 0.0, 1.0))
    interp = PchipInterpolator(grid, vals)
    k1, k2 = stable_left_tail_consts(alpha)
    return StableCdfTable(alpha=alpha, x_lo=float(grid[0]), x_hi=float(grid[-1]),
                          grid=grid, values=vals, k1=k1, k2=k2, _interp=interp)


def i_integral(F, a: float, left_tail=None, x_lo: float = -40.0,
               x_hi: float = 40.0) -> float:
    """int F(x + a) (1 - F(x)) dx for a centered CDF F.

    For light two-sided tails the truncated quadrature suffices.  A heavy
    left tail F(-x) ~ k1 x^-alpha (1 + k2 x^-alpha) must be declared via
    left_tail=(k1, k2, alpha) with alpha > 1, and contributes a closed-form
    correction below the truncation point.
    """
    g = lambda x: F(x + a) * (1.0 - F(x))
    val = 0.0
    for lo, hi in ((x_lo, -10.0), (-10.0, 10.0), (10.0, x_hi)):
        if hi <= lo:
            continue
        with warnings.catch_warnings():
            # the explicit error check below supersedes quad's warning
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            v, err = integrate.quad(g, lo, hi, limit=400, epsabs=1e-11,
                                    epsrel=1e-9)
        if err > 1e-7:
            raise ArithmeticError(f"i_integral quadrature error {err:.2e}")
        val += v
    if left_tail is not None:
        k1, k2, al = left_tail
        if al <= 1.0:
            raise ValueError("left tail index must exceed 1 for integrability")
        X = abs(x_lo) - a  # tail depth of F(x+a) at the truncation point
        # int_{-inf}^{x_lo} F(x+a) dx with the two-term expansion; the
        # product's second factor is 1 up to another O(X^-alpha) absorbed in k2
        val += k1 * X ** (1.0 - al) / (al - 1.0)
        val += k1 * (k2 - k1) * X ** (1.0 - 2.0 * al) / (2.0 * al - 1.0)
    return val


def var_const(alpha: float) -> float:
    """Variance of the limit process marginal.

    pi**-1 Gamma(1 - 1/alpha) (2 Gamma(1-alpha) cos(pi alpha/2))**(1/alpha),
    continuously extended to pi**-0.5 at alpha=2.
    """
    if not (1.0 < alpha <= 2.0):
        raise ValueError("alpha must lie in (1, 2]")
    if alpha == 2.0:
        return math.pi**-0.5
    return (
        math.gamma(1.0 - 1.0 / alpha)
        * (2.0 * stable_scale_const(alpha)) ** (1.0 / alpha)
        / math.pi
    )


@dataclass(frozen=True)
class CovarianceSpec:
    """Limit-process parameters; a_alpha = mu**(1/alpha) * alpha/(alpha-1)."""

    alpha: float
    mu: float = 1.0

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise ValueError("alpha must lie in (1, 2]")
        if self.mu <= 0:
            raise ValueError("mu must be positive")

    @property
    def a_alpha(self) -> float:
        return self.mu ** (1.0 / self.alpha) * self.alpha / (self.alpha - 1.0)


def _cov_at_distance(alpha: float, d: float) -> float:
    """Covariance at scaled distance d = a_alpha |u - v|.

    Equals (E|D + d| - d)/2 with D the symmetrized stable difference,
    whose chf is exp(-2 c0 |y|^alpha); E|D+d| comes from the standard
    second-moment-free identity E|W| = (2/pi) int (1 - Re chf_W(y))/y^2 dy.
    This equals the x-space product-of-CDFs integral (cross-checked by
    y_cov_whitenoise_form) but needs no numeric CDF.
    """
    d = abs(float(d))
    cc = 2.0 * stable_scale_const(alpha)
    Y = (45.0 / cc) ** (1.0 / alpha)
    f = lambda y: (1.0 - math.cos(d * y) * math.exp(-cc * y**alpha)) / y**2
    limit = int(200 + 40 * d * Y / (2.0 * math.pi))
    with warnings.catch_warnings():
        # the explicit error check below supersedes quad's warning
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v, err = integrate.quad(f, 0.0, Y, limit=limit, epsabs=1e-12,
                                epsrel=1e-11)
    if err > 1e-8:
        raise ArithmeticError(f"covariance quadrature error {err:.2e}")
    ED = (2.0 / math.pi) * (v + 1.0 / Y)
    return 0.5 * (ED - d)


def _cov_closed_a2(d: float) -> float:
    """alpha=2 closed form at scaled distance d."""
    d = abs(float(d))
    return math.pi**-0.5 * math.exp(-d * d / 4.0) - d * (
        1.0 - special.ndtr(d / math.sqrt(2.0))
    )


def cov_X(spec: CovarianceSpec, u: float, v: float, method: str | None = None
          ) -> float:
    """Cov(X(u), X(v)); stationary, depends only on a_alpha |u - v|."""
    d = spec.a_alpha * abs(u - v)
    if method is None:
        method = "closed" if spec.alpha == 2.0 else "quad"
    if method == "closed":
        if spec.alpha != 2.0:
            raise ValueError("closed form only at alpha=2")
        return _cov_closed_a2(d)
    if method == "quad":
        return _cov_at_distance(spec.alpha, d)
    raise ValueError(f"unknown method {method!r}")


def y_cov_whitenoise_form(alpha: float, u: float, v: float, mu: float = 1.0
                          ) -> float:
    """Covariance via the white-noise representation's x-space integral.

    int F(x) (1 - F(x + d)) dx with F the numeric stable CDF table and
    d = a_alpha |u - v|; far-left truncation corrected with the two-term
    tail expansion.  Independent of cov_X's chf route by construction.
    """
    spec = CovarianceSpec(alpha, mu)
    d = spec.a_alpha * abs(u - v)
    tab = stable_cdf_table(alpha)
    if alpha == 2.0:
        F = lambda x: special.ndtr(x)
        g = lambda x: F(x) * (1.0 - F(x + d))
        v1, _ = integrate.quad(g, -40.0, 40.0, limit=400, epsabs=1e-11, epsrel=1e-9)
        return v1
    X = 100.0
    xs = np.arange(-X, 34.0, 0.005)
    gs = tab(xs) * (1.0 - tab(xs + d))
    body = float(integrate.simpson(gs, x=xs))
    k1, k2 = tab.k1, tab.k2
    al = alpha
    # below -X the integrand is F(x)(1 - F(x+d)) = F(x) - F(x)F(x+d); the
    # first term integrates in closed form, the product enters at order 2a
    tail = k1 * X ** (1.0 - al) / (al - 1.0)
    tail += k1 * (k2 - k1) * X ** (1.0 - 2.0 * al) / (2.0 * al - 1.0)
    return body + tail


@dataclass(frozen=True)
class ScalingFunctions:
    """Regime scalings: space scale c, inverse time change h, variance scale b."""

    regime: str
    mu: float
    sigma2: float | None = None
    alpha: float | None = None

    def c(self, t: float) -> float:
        if self.regime == "A1":
            return math.sqrt(self.sigma2 * t)
        return t ** (1.0 / self.alpha)

    def h(self, t: float) -> float:
        if self.regime == "A1":
            return self.sigma2 * t * t
        return t ** (self.alpha / (self.alpha - 1.0))

    def h_prime(self, t: float) -> float:
        if self.regime == "A1":
            return 2.0 * self.sigma2 * t
        e = self.alpha / (self.alpha - 1.0)
        return e * t ** (e - 1.0)

    def b(self, t: float) -> float:
        # mu**(-1-1/alpha) c(h(t)); alpha=2 in regime A1
        if self.regime == "A1":
            return self.mu ** -1.5 * self.sigma2 * t
        return self.mu ** (-1.0 - 1.0 / self.alpha) * t ** (1.0 / (self.alpha - 1.0))


def scaling(regime: str, mu: float, sigma2: float | None = None,
            alpha: float | None = None) -> ScalingFunctions:
    """Scaling functions for regime "A1" (finite variance) or "A3-pareto".

    The slowly varying regime with a nonconstant truncated second moment is
    not supported.
    """
    if regime == "A1":
        if sigma2 is None or sigma2 <= 0:
            raise ValueError("regime A1 needs sigma2 > 0")
        return ScalingFunctions(regime="A1", mu=mu, sigma2=sigma2)
    if regime == "A3-pareto":
        if alpha is None or not (1.0 < alpha < 2.0):
            raise ValueError("regime A3-pareto needs alpha in (1, 2)")
        return ScalingFunctions(regime="A3", mu=mu, alpha=alpha)
    raise ValueError(f"regime {regime!r} not supported")


def sample_gp(spec: CovarianceSpec, grid, stream: RandomStream, size=None):
    """Draw from the centered Gaussian law of (X(u))_{u in grid}.

    Symmetric (Cholesky) factorization with doubling diagonal jitter on
    failure; the jitter actually used is attached to the returned array as
    the `jitter` item of the (draw, jitter) pair.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or grid.size > 2048:
        raise ValueError("grid must be a 1-D vector of length <= 2048")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    dists = np.abs(grid[:, None] - grid[None, :])
    uniq, inv = np.unique(np.round(dists.ravel(), 12), return_inverse=True)
    cvals = np.array([
        _cov_closed_a2(spec.a_alpha * d) if spec.alpha == 2.0
        else _cov_at_distance(spec.alpha, spec.a_alpha * d)
        for d in uniq
    ])
    C = cvals[inv].reshape(dists.shape)
    jitter = 0.0
    L = None
    for attempt in range(11):
        try:
            L = np.linalg.cholesky(C + jitter * np.eye(C.shape[0]))
            break
        except np.linalg.LinAlgError:
            jitter = 1e-10 if jitter == 0.0 else jitter * 2.0
    if L is None:
        raise ArithmeticError("covariance factorization failed even with jitter")
    shape = (C.shape[0],) if size is None else ((size, C.shape[0]))
    Z = stream.generator.standard_normal(shape)
    return Z @ L.T, jitter
