"""Parametric increment laws and exact samplers.

Families: Exponential, Gamma, Pareto (power tail), Weibull (stretched
exponential tail).  Also houses the spectrally negative stable law used as
the functional-limit marginal, the positive stable subordinator marginal,
the Mittag-Leffler law of the inverse subordinator at time 1, and a few
special-function helpers (regularized Erlang tail, Riemann zeta).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .rng import RandomStream

_FAMILIES = ("exponential", "gamma", "pareto", "weibull")


@dataclass(frozen=True)
class IncrementLaw:
    """Nonnegative increment distribution with closed-form moments and tails.

    Parameter conventions:
      exponential(rate)            survival exp(-rate*t)
      gamma(shape, rate)           sum of `shape` exponential-like stages
      pareto(index, cutoff)        survival (cutoff/t)**index for t >= cutoff
      weibull(shape, scale)        survival exp(-scale * t**shape)
    """

    family: str
    p1: float
    p2: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.p1 <= 0 or (self.family != "exponential" and self.p2 <= 0):
            raise ValueError("law parameters must be positive")

    # constructors -------------------------------------------------------

    @staticmethod
    def exponential(rate: float) -> "IncrementLaw":
        return IncrementLaw("exponential", rate)

    @staticmethod
    def gamma(shape: float, rate: float) -> "IncrementLaw":
        return IncrementLaw("gamma", shape, rate)

    @staticmethod
    def pareto(index: float, cutoff: float) -> "IncrementLaw":
        return IncrementLaw("pareto", index, cutoff)

    @staticmethod
    def weibull(shape: float, scale: float) -> "IncrementLaw":
        return IncrementLaw("weibull", shape, scale)

    # moments ------------------------------------------------------------

    @property
    def mean(self) -> float:
        if self.family == "exponential":
            return 1.0 / self.p1
        if self.family == "gamma":
            return self.p1 / self.p2
        if self.family == "pareto":
            a, xm = self.p1, self.p2
            return a * xm / (a - 1.0) if a > 1.0 else math.inf
        a, c = self.p1, self.p2
        return c ** (-1.0 / a) * math.gamma(1.0 + 1.0 / a)

    @property
    def variance(self) -> float:
        if self.family == "exponential":
            return 1.0 / self.p1**2
        if self.family == "gamma":
            return self.p1 / self.p2**2
        if self.family == "pareto":
            a, xm = self.p1, self.p2
            if a <= 2.0:
                return math.inf
            return a * xm**2 / ((a - 1.0) ** 2 * (a - 2.0))
        a, c = self.p1, self.p2
        m2 = c ** (-2.0 / a) * math.gamma(1.0 + 2.0 / a)
        return m2 - self.mean**2

    # distribution functions --------------------------------------------

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "exponential":
            out = -np.expm1(-self.p1 * np.maximum(t, 0.0))
        elif self.family == "gamma":
            out = special.gammainc(self.p1, self.p2 * np.maximum(t, 0.0))
        elif self.family == "pareto":
            a, xm = self.p1, self.p2
            out = np.where(t < xm, 0.0, -np.expm1(a * np.log(xm / np.maximum(t, xm))))
        else:
            a, c = self.p1, self.p2
            out = -np.expm1(-c * np.maximum(t, 0.0) ** a)
        return out if out.shape else float(out)

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "exponential":
            out = np.exp(-self.p1 * np.maximum(t, 0.0))
        elif self.family == "gamma":
            out = special.gammaincc(self.p1, self.p2 * np.maximum(t, 0.0))
        elif self.family == "pareto":
            a, xm = self.p1, self.p2
            out = np.where(t < xm, 1.0, np.exp(a * np.log(xm / np.maximum(t, xm))))
        else:
            a, c = self.p1, self.p2
            out = np.exp(-c * np.maximum(t, 0.0) ** a)
        return out if out.shape else float(out)

    def log_survival(self, t: float) -> float:
        """log P{xi > t} from the family closed form; no underflow via log(1-cdf)."""
        t = float(t)
        if t <= 0.0:
            return 0.0
        if self.family == "exponential":
            return -self.p1 * t
        if self.family == "gamma":
            return _log_gammaincc(self.p1, self.p2 * t)
        if self.family == "pareto":
            a, xm = self.p1, self.p2
            return 0.0 if t <= xm else a * math.log(xm / t)
        a, c = self.p1, self.p2
        return -c * t**a

    # tail descriptor ----------------------------------------------------

    @property
    def tail(self):
        """("regvar", index, ell_const) or ("logtail", index, coeff) or ("light",).

        regvar: survival(t) = ell_const * t**(-index) for large t.
        logtail: -log survival(t) = coeff * t**index.
        """
        if self.family == "pareto":
            return ("regvar", self.p1, self.p2**self.p1)
        if self.family == "weibull":
            return ("logtail", self.p1, self.p2)
        return ("light",)

    # sampling -----------------------------------------------------------

    def sample(self, stream: RandomStream, size=None):
        g = stream.generator
        if self.family == "exponential":
            return g.exponential(1.0 / self.p1, size)
        if self.family == "gamma":
            return g.gamma(self.p1, 1.0 / self.p2, size)
        if self.family == "pareto":
            # inversion: survival (xm/t)**a  =>  t = xm * U**(-1/a)
            return self.p2 * g.random(size) ** (-1.0 / self.p1)
        # weibull: -log survival = c t**a  =>  t = (E/c)**(1/a)
        return (g.exponential(1.0, size) / self.p2) ** (1.0 / self.p1)

    def __str__(self):
        if self.family == "exponential":
            return f"exp:{self.p1:g}"
        return f"{self.family}:{self.p1:g},{self.p2:g}"


def _log_gammaincc(k: float, x: float) -> float:
    """log Q(k, x), stable for large x where gammaincc underflows."""
    if float(k) == int(k) and k <= 10_000:
        return log_erlang_survival(int(k), x, 1.0)
    q = special.gammaincc(k, x)
    if q > 1e-280:
        return math.log(q)
    # asymptotic: Q(k,x) = x**(k-1) e**-x / Gamma(k) * (1 + (k-1)/x + ...)
    s, term = 1.0, 1.0
    for j in range(1, 40):
        term *= (k - j) / x
        s += term
        if abs(term) < 1e-18 * s:
            break
    return (k - 1.0) * math.log(x) - x - special.gammaln(k) + math.log(s)


def parse_law(text: str) -> IncrementLaw:
    """Parse the `family:param1[,param2]` mini-grammar.

    Families: exp:rate | gamma:shape,rate | pareto:index,cutoff |
    weibull:shape,scale.
    """
    try:
        name, _, rest = text.partition(":")
        params = [float(p) for p in rest.split(",") if p]
    except ValueError as e:
        raise ValueError(f"cannot parse law {text!r}: {e}") from None
    name = name.strip().lower()
    if name in ("exp", "exponential"):
        if len(params) != 1:
            raise ValueError("exponential law takes one parameter (rate)")
        return IncrementLaw.exponential(params[0])
    if name == "gamma" and len(params) == 2:
        return IncrementLaw.gamma(*params)
    if name == "pareto" and len(params) == 2:
        return IncrementLaw.pareto(*params)
    if name == "weibull" and len(params) == 2:
        return IncrementLaw.weibull(*params)
    raise ValueError(f"cannot parse law {text!r}")


# spec-facing free functions ------------------------------------------------


def moments(law: IncrementLaw):
    """(mean, variance); +inf is returned for divergent moments."""
    return law.mean, law.variance


def distribution_functions(law: IncrementLaw, t: float):
    """(cdf, survival, log_survival) at t >= 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return law.cdf(t), law.survival(t), law.log_survival(t)


def mgf_domain_sup(law: IncrementLaw) -> float:
    """sup of {s >= 0 : E exp(s xi) < inf}."""
    if law.family in ("exponential", "gamma"):
        return law.p1 if law.family == "exponential" else law.p2
    if law.family == "pareto":
        return 0.0
    a, c = law.p1, law.p2
    if a > 1.0:
        return math.inf
    return c if a == 1.0 else 0.0


def mgf(law: IncrementLaw, s: float) -> float:
    """E exp(s xi); +inf outside the finiteness domain.

    Closed form for exponential/gamma; quadrature against the survival
    function otherwise (E e^{sX} = 1 + s * int e^{sx} P{X>x} dx).
    """
    s = float(s)
    if s == 0.0:
        return 1.0
    sup = mgf_domain_sup(law)
    if s > 0 and s >= sup:
        return math.inf
    if law.family == "exponential":
        return law.p1 / (law.p1 - s)
    if law.family == "gamma":
        return (law.p2 / (law.p2 - s)) ** law.p1
    if s < 0:
        # the survival-function form cancels catastrophically here, so
        # integrate e^{sx} against the density instead
        if law.family == "pareto":
            a, xm = law.p1, law.p2
            f = lambda x: math.exp(s * x) * a * xm**a * x ** (-a - 1.0)
            lo = xm
        else:
            a, c = law.p1, law.p2
            f = lambda x: math.exp(s * x - c * x**a) * c * a * x ** (a - 1.0)
            lo = 0.0
        with warnings.catch_warnings():
            # the explicit error check below supersedes quad's warning
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, lo, math.inf, epsrel=1e-11,
                                      epsabs=1e-300, limit=400)
        if err > 1e-8 * max(abs(val), 1e-280):
            raise ArithmeticError(
                f"mgf quadrature did not converge: achieved abs error {err:.2e}"
            )
        return max(val, 5e-324)
    f = lambda x: math.exp(s * x + law.log_survival(x))
    val, err = integrate.quad(f, 0.0, math.inf, epsrel=1e-11, epsabs=1e-13, limit=400)
    out = 1.0 + s * val
    if err > 1e-8 * max(abs(val), 1.0):
        raise ArithmeticError(
            f"mgf quadrature did not converge: achieved abs error {err:.2e}"
        )
    return out


def sample(law: IncrementLaw, stream: RandomStream, size=None):
    return law.sample(stream, size)


# stable laws ----------------------------------------------------------------


def stable_scale_const(alpha: float) -> float:
    """c0 = Gamma(1-alpha) cos(pi alpha/2); positive on (1,2), set to 1/2 at alpha=2.

    The alpha=2 value is the continuous extension making the characteristic
    function exp(-z**2/2), i.e. the standard normal.
    """
    if alpha == 2.0:
        return 0.5
    c0 = math.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2.0)
    if not c0 > 0.0:
        raise ValueError("scale constant must be positive for alpha in (1,2)")
    return c0


@dataclass(frozen=True)
class SpectrallyNegativeStable:
    """Stable law with only negative jumps, chf exp{-|z|^a c0 (1 + i tan-like skew)}.

    Normalized so that the characteristic exponent is
    |z|^alpha * Gamma(1-alpha) * (cos(pi alpha/2) + i sin(pi alpha/2) sign z).
    """

    alpha: float

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise ValueError("alpha must lie in (1, 2]")

    @property
    def c0(self) -> float:
        return stable_scale_const(self.alpha)

    @property
    def c1(self) -> float:
        # imaginary part coefficient; 0 at alpha=2
        if self.alpha == 2.0:
            return 0.0
        return math.gamma(1.0 - self.alpha) * math.sin(math.pi * self.alpha / 2.0)


def sample_stable(spec: SpectrallyNegativeStable, stream: RandomStream, size=None):
    """Chambers-Mallows-Stuck draw mapped onto the target normalization.

    CMS in the 1-parameterization with skew beta=-1 produces a standard
    totally skewed stable; multiplying by c0**(1/alpha) matches the target
    characteristic function exactly (validated by the empirical-chf test).
    """
    if not isinstance(spec, SpectrallyNegativeStable):
        spec = SpectrallyNegativeStable(float(spec))
    a = spec.alpha
    g = stream.generator
    if a == 2.0:
        return g.normal(0.0, 1.0, size)
    beta = -1.0
    gam = spec.c0 ** (1.0 / a)
    U = math.pi * (g.random(size) - 0.5)
    W = g.exponential(1.0, size)
    bt = beta * math.tan(math.pi * a / 2.0)
    B = math.atan(bt) / a
    S = (1.0 + bt**2) ** (1.0 / (2.0 * a))
    X = (
        S
        * np.sin(a * (U + B))
        / np.cos(U) ** (1.0 / a)
        * (np.cos(U - a * (U + B)) / W) ** ((1.0 - a) / a)
    )
    return gam * X


@dataclass(frozen=True)
class SubordinatorMarginal:
    """Positive stable marginal W_alpha(t), Laplace exponent Gamma(1-alpha) t z^alpha."""

    alpha: float
    t: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.t <= 0:
            raise ValueError("t must be positive")


def _sample_pos_stable_unit(alpha: float, g: np.random.Generator, size=None):
    # Kanter representation: Laplace transform exp(-z**alpha)
    a = alpha
    U = math.pi * g.random(size)
    E = g.exponential(1.0, size)
    A = (np.sin(a * U) ** a * np.sin((1 - a) * U) ** (1 - a) / np.sin(U)) ** (
        1.0 / (1.0 - a)
    )
    return (A / E) ** ((1.0 - a) / a)


def sample_subordinator(spec: SubordinatorMarginal, stream: RandomStream, size=None):
    """Draw of W_alpha(t); scaling by (Gamma(1-alpha) t)**(1/alpha) fixes the exponent."""
    a = spec.alpha
    scale = (math.gamma(1.0 - a) * spec.t) ** (1.0 / a)
    return scale * _sample_pos_stable_unit(a, stream.generator, size)


@dataclass(frozen=True)
class MittagLefflerLaw:
    """Law of the inverse subordinator at time 1: distributed as W_alpha(1)**(-alpha)."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")


def sample_mittag_leffler(alpha: float, stream: RandomStream, size=None):
    """Draw of W_alpha(1)**(-alpha) via the positive-stable power representation.

    With S the unit positive stable (Laplace transform e^{-z^alpha}),
    W_alpha(1) = Gamma(1-alpha)**(1/alpha) S, so the output is
    S**(-alpha) / Gamma(1-alpha).  Exact in law, O(1) per draw.
    """
    MittagLefflerLaw(alpha)  # domain check
    S = _sample_pos_stable_unit(alpha, stream.generator, size)
    return S ** (-alpha) / math.gamma(1.0 - alpha)


def ml_mgf_series(alpha: float, s: float) -> float:
    """sum_{n>=0} s**n / Gamma(1 + n*alpha), the scaled moment generating value."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    total, n = 0.0, 0
    while True:
        term = math.exp(n * math.log(s) - special.gammaln(1.0 + n * alpha)) if s > 0 else (
            1.0 if n == 0 else 0.0
        )
        total += term
        if n > 0 and term < 1e-14 * total:
            return total
        n += 1
        if n > 100_000:
            raise ArithmeticError("series did not converge within max terms")


# special functions ----------------------------------------------------------


def riemann_zeta(x: float) -> float:
    """zeta(x) for x > 1 by direct summation plus a midpoint integral tail."""
    if x <= 1.0:
        raise ValueError("zeta requires x > 1")
    N = 2_000_000
    k = np.arange(1, N + 1, dtype=np.float64)
    head = math.fsum(k**-x)
    m = N + 0.5
    # sum_{k>N} k^-x = int_m^inf t^-x dt + x/24 m^{-x-1} + O(m^{-x-3})
    tail = m ** (1.0 - x) / (x - 1.0) + x / 24.0 * m ** (-x - 1.0)
    return head + tail


def erlang_survival(n: int, t: float, rate: float = 1.0) -> float:
    """Q(n, rate*t) = P{Gamma(n, rate) > t}, exact regularized upper tail."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return float(special.gammaincc(n, rate * t))


def log_erlang_survival(n: int, t: float, rate: float = 1.0) -> float:
    """log Q(n, rate*t) computed in log space; safe for rate*t in the thousands."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    x = rate * t
    if x == 0.0:
        return 0.0
    k = np.arange(n)
    return float(special.logsumexp(k * math.log(x) - special.gammaln(k + 1)) - x)
