"""Large-deviation rate functions and hole-probability asymptotics.

Lambda(t) := -log P{min_n S-hat_n > t} = sum_n -log P{S_n > t} by
independence of the decoupled values.  This module evaluates Lambda with
rigorous brackets at finite t, and provides the limit constants against
which the normalized curves converge in the light-tailed, regularly
varying, and stretched-exponential regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar

from .dist import (
    IncrementLaw,
    log_erlang_survival,
    mgf,
    mgf_domain_sup,
    riemann_zeta,
    sample_mittag_leffler,
)
from .lattice import chernoff_remainder, survival_table
from .rng import RandomStream

HOLE_CASES = ("min-a", "min-b1", "min-b2", "heavy-a", "heavy-b", "semi")


@dataclass(frozen=True)
class RateFunction:
    """Legendre transform machinery for one increment law."""

    law: IncrementLaw
    s_tol: float = 1e-10
    value_tol: float = 1e-9

    @property
    def domain_sup(self) -> float:
        return mgf_domain_sup(self.law)

    def legendre_full(self, x: float, one_sided: bool = False):
        """(value, argmax s, boundary flag) of the Legendre transform at x.

        By default the supremum runs over every s with a finite moment
        generating value (negative s included, relevant below the mean).
        one_sided=True restricts to s >= 0, the version entering the
        Chernoff survival inequality, which vanishes at and below the mean.
        """
        if x <= 0:
            raise ValueError("x must be positive")
        sup = self.domain_sup

        def neg(s):
            m = mgf(self.law, s)
            return math.log(m) - s * x if math.isfinite(m) else math.inf

        mu = self.law.mean
        ascending = (not math.isfinite(mu)) or x >= mu  # optimal s >= 0
        if ascending and sup == 0.0:
            return 0.0, 0.0, True
        if not ascending and one_sided:
            return 0.0, 0.0, False
        if ascending:
            # expand upward until the objective turns or the domain ends
            hi = min(1.0, sup * 0.5) if math.isfinite(sup) else 1.0
            while True:
                if math.isfinite(sup):
                    hi = min(hi, sup * (1.0 - 1e-12))
                if neg(hi) > neg(hi * 0.5) or (
                    math.isfinite(sup) and hi >= sup * (1.0 - 1e-9)
                ):
                    break
                if hi > 1e8:
                    break
                hi *= 2.0
            lo = 0.0
        else:
            lo = -1.0
            while neg(lo) < neg(lo * 0.5):
                lo *= 2.0
                if lo < -1e8:
                    break
            hi = 0.0
        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                              options={"xatol": self.s_tol})
        s_star = float(res.x)
        val = max(-res.fun, 0.0)
        boundary = math.isfinite(sup) and s_star > sup * (1.0 - 1e-6)
        return val, s_star, boundary


def legendre(rf: RateFunction, x: float, one_sided: bool = False) -> float:
    """Legendre transform I(x) = sup_s (s x - log E exp(s xi))."""
    return rf.legendre_full(x, one_sided=one_sided)[0]


_LIGHT_OK = "light-tail integrability (finite mgf neighborhood, Gaussian-to-Weibull tail)"


def _check_light(law: IncrementLaw):
    if law.family in ("exponential", "gamma"):
        return
    if law.family == "weibull" and 1.0 <= law.p1 < 2.0:
        return
    raise ValueError(
        f"law {law} does not satisfy the light-tail conditions ({_LIGHT_OK})"
    )


def rate_light(rf: RateFunction) -> float:
    """int_0^{1/mu} y I(1/y) dy, the quadratic-scale hole-probability limit."""
    _check_light(rf.law)
    mu = rf.law.mean
    f = lambda y: y * legendre(rf, 1.0 / y)
    val, err = integrate.quad(f, 0.0, 1.0 / mu, epsrel=1e-9, epsabs=1e-12, limit=400)
    if err > 1e-6 * max(abs(val), 1.0):
        raise ArithmeticError(f"rate quadrature error {err:.2e} too large")
    return val


def closed_form_constant(case: str, **params) -> float:
    """Limit constants with closed forms.

    case="b2": c * zeta(alpha - 1), needs alpha > 2 (regularly varying with
    finite variance, quadratic-with-slowly-varying normalization).
    case="heavy-b": (alpha - 1)/mu for a Pareto-type law with alpha > 1.
    case="semi": 1/(mu (alpha + 1)) for a stretched-exponential law,
    alpha in (0, 1).
    """
    if case == "b2":
        a, c = params["alpha"], params.get("c", 1.0)
        if a <= 2.0:
            raise ValueError("case b2 requires a tail index alpha > 2")
        return c * riemann_zeta(a - 1.0)
    if case == "heavy-b":
        law = params["law"]
        if law.family != "pareto" or law.p1 <= 1.0:
            raise ValueError("case heavy-b requires a Pareto law with index > 1")
        return (law.p1 - 1.0) / law.mean
    if case == "semi":
        law = params["law"]
        if law.family != "weibull" or not (0.0 < law.p1 < 1.0):
            raise ValueError("case semi requires a Weibull law with shape in (0,1)")
        return 1.0 / (law.mean * (law.p1 + 1.0))
    raise ValueError(f"unknown case {case!r}")


def ell_star(t: float, ell=("const", 1.0)) -> float:
    """int_1^t y**-1 ell(y) dy for a slowly varying ell.

    ell is ("const", c) or ("logpow", beta) meaning ell(y) = (log y)**beta;
    anything else must be a callable and is integrated numerically.
    """
    if t < 1.0:
        raise ValueError("t must be >= 1")
    if isinstance(ell, tuple) and ell[0] == "const":
        return ell[1] * math.log(t)
    if isinstance(ell, tuple) and ell[0] == "logpow":
        b = ell[1]
        return math.log(t) ** (b + 1.0) / (b + 1.0)
    val, _ = integrate.quad(lambda y: ell(y) / y, 1.0, t, limit=200)
    return val


def rate_heavy_a(alpha: float, reps: int, stream: RandomStream,
                 x_min: float = 1e-3, x_max: float | None = None):
    """(estimate, std_error) of int_0^inf -log P{W_alpha_inv(1) <= x} dx.

    The empirical CDF of Mittag-Leffler draws supplies the integrand on
    [x_min, x_max].  Below x_min the exact small-x behaviour F(x) ~ x is
    used: P{W_inv(1) <= x} = P{W(x) > 1} and by self-similarity
    W(x) =d x**(1/alpha) W(1), so F(x) = P{W(1) > x**(-1/alpha)} which is
    asymptotically linear in x by the subordinator tail (the head integral
    of -log x is done in closed form).  Beyond x_max the bound
    -log F <= (1 - F)/F is applied to the empirical tail and reported
    inside the estimate.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    if reps < 1000:
        raise ValueError("need at least 1000 draws")
    raw = sample_mittag_leffler(alpha, stream, reps)
    draws = np.sort(raw)
    if x_max is None:
        x_max = float(draws[-1])
    batches = 20
    per = reps // batches
    vals = np.empty(batches)
    for b in range(batches):
        # contiguous blocks of the raw draw order: each block is an
        # independent sample, so their spread is an honest standard error
        sub = np.sort(raw[b * per:(b + 1) * per])
        vals[b] = _hole_integral_from_ecdf(sub, x_min, min(x_max, float(sub[-1])))
    est = _hole_integral_from_ecdf(draws, x_min, x_max)
    se = float(vals.std(ddof=1) / math.sqrt(batches))
    return est, se


def _hole_integral_from_ecdf(sorted_draws: np.ndarray, x_min: float, x_max: float):
    n = sorted_draws.size
    a = max(x_min, float(sorted_draws[0]))
    # head: exact small-x behaviour F(x) ~ x gives int_0^a -log x dx
    head = a * (1.0 - math.log(a))
    b = min(x_max, float(sorted_draws[-1]))
    # step integration of -log(ECDF): on [x_(k), x_(k+1)) the ECDF is (k+1)/n
    knots = np.concatenate([[a], sorted_draws[(sorted_draws > a) & (sorted_draws < b)], [b]])
    counts = np.searchsorted(sorted_draws, knots[:-1], side="right")
    widths = np.diff(knots)
    body = float(np.sum(-np.log(counts / n) * widths))
    # tail beyond b via -log F <= (1-F)/F on the remaining empirical steps
    rest = sorted_draws[sorted_draws >= b]
    tail = 0.0
    if rest.size > 1:
        kn = np.concatenate([[b], rest[1:]])
        cts = np.searchsorted(sorted_draws, kn[:-1], side="right")
        tail = float(np.sum((n - cts) / cts * np.diff(kn)))
    return head + body + tail


def hole_log_prob(law: IncrementLaw, t: float, h: float = 0.01,
                  N: int | None = None):
    """Bracket (lo, hi) on Lambda(t) = sum_n -log P{S_n > t}.

    Exponential/Gamma laws bypass the lattice: their walk marginals are
    Gamma laws with exactly computable log tails, so the bracket collapses
    to the truncation remainder.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    mu = law.mean
    if law.family in ("exponential", "gamma"):
        if N is None:
            N = int(math.ceil(2.0 * t / mu)) + 50
        shape, rate = (1.0, law.p1) if law.family == "exponential" else (law.p1, law.p2)
        total = 0.0
        for n in range(1, N + 1):
            if float(shape) == int(shape):
                total -= log_erlang_survival(int(n * shape), t, rate)
            else:
                total -= _log_gamma_sf(n * shape, rate * t)
        rem = chernoff_remainder(law, t, N)
        # the exact-path bracket would otherwise be as tight as the Chernoff
        # remainder; widen by the accumulated float error of the log-tail sum
        slack = 1e-12 * (N + 1) + 1e-13 * abs(total)
        return total - slack, total + rem + slack
    if N is None:
        if not math.isfinite(mu):
            raise ValueError("horizon N required for infinite-mean laws")
        N = int(math.ceil(2.0 * t / mu))
    tab = survival_table(law, t, h, N)
    lo = -math.fsum(np.log(np.clip(tab.hi, 1e-300, 1.0)))
    hi = -math.fsum(np.log(np.clip(tab.lo, 1e-300, 1.0)))
    if tab.remainder is not None:
        hi += tab.remainder
    return lo, hi


def _log_gamma_sf(k: float, x: float):
    from .dist import _log_gammaincc

    return _log_gammaincc(k, x)


@dataclass(frozen=True)
class HoleCurve:
    """Normalized hole-probability exponents along a level grid."""

    law: IncrementLaw
    case: str
    t_grid: np.ndarray
    lam_lo: np.ndarray
    lam_hi: np.ndarray
    norm: np.ndarray
    limit: float | None

    @property
    def normalized_lo(self):
        return self.lam_lo / self.norm

    @property
    def normalized_hi(self):
        return self.lam_hi / self.norm

    def to_csv(self, path):
        rows = np.column_stack([
            self.t_grid, self.lam_lo, self.lam_hi, self.norm,
            self.normalized_lo, self.normalized_hi,
            np.full_like(self.t_grid, self.limit if self.limit is not None else np.nan),
        ])
        np.savetxt(path, rows, delimiter=",", comments="",
                   header="t,lambda_lo,lambda_hi,norm,normalized_lo,normalized_hi,"
                          "theoretical_limit")


def _case_norm(law: IncrementLaw, case: str, t: float) -> float:
    if case == "min-a":
        return t * t
    if case == "min-b1":
        tail = law.tail
        if tail[0] != "logtail" or law.p1 != 2.0:
            raise ValueError("case min-b1 applies to Weibull shape-2 type laws")
        return t * t * ell_star(max(t, 1.0), ("const", tail[2]))
    if case == "min-b2":
        tail = law.tail
        if tail[0] != "regvar" or tail[1] <= 2.0:
            raise ValueError("case min-b2 needs a regularly varying tail, index > 2")
        return t ** tail[1] * tail[2]
    if case == "heavy-a":
        return 1.0 / law.survival(t)
    if case == "heavy-b":
        return t * math.log(t)
    if case == "semi":
        tail = law.tail
        if tail[0] != "logtail" or not (0.0 < tail[1] < 1.0):
            raise ValueError("case semi needs a stretched-exponential tail, shape < 1")
        return t ** (tail[1] + 1.0) * tail[2]
    raise ValueError(f"unknown case {case!r}")


def _case_limit(law: IncrementLaw, case: str, stream: RandomStream | None):
    if case == "min-a":
        return rate_light(RateFunction(law))
    if case == "min-b2":
        return closed_form_constant("b2", alpha=law.p1, c=law.tail[2])
    if case == "heavy-b":
        return closed_form_constant("heavy-b", law=law)
    if case == "semi":
        return closed_form_constant("semi", law=law)
    if case == "heavy-a":
        if stream is None:
            return None
        return rate_heavy_a(law.p1, 200_000, stream)[0]
    return None  # min-b1: limit involves the user's slowly varying scale


_CASE_FAMILY = {
    "min-a": ("exponential", "gamma", "weibull"),
    "min-b1": ("weibull",),
    "min-b2": ("pareto",),
    "heavy-a": ("pareto",),
    "heavy-b": ("pareto",),
    "semi": ("weibull",),
}


def normalized_hole_curve(law: IncrementLaw, t_grid, case: str,
                          h: float = 0.01, stream: RandomStream | None = None,
                          N: int | None = None) -> HoleCurve:
    """Lambda(t)/norm(t) along the grid, with the regime's limit attached."""
    if case not in HOLE_CASES:
        raise ValueError(f"unknown case {case!r}")
    if law.family not in _CASE_FAMILY[case]:
        raise ValueError(f"case {case} does not match family {law.family}")
    if case == "min-a":
        _check_light(RateFunction(law).law)
    if case == "heavy-a" and law.p1 >= 1.0:
        raise ValueError("case heavy-a needs a Pareto index in (0, 1)")
    if case == "heavy-b" and law.p1 <= 1.0:
        raise ValueError("case heavy-b needs a Pareto index > 1")
    t_grid = np.asarray(t_grid, dtype=float)
    lam_lo = np.empty_like(t_grid)
    lam_hi = np.empty_like(t_grid)
    norm = np.empty_like(t_grid)
    for i, t in enumerate(t_grid):
        lam_lo[i], lam_hi[i] = hole_log_prob(law, t, h=h, N=N)
        norm[i] = _case_norm(law, case, t)
    limit = _case_limit(law, case, stream)
    return HoleCurve(law=law, case=case, t_grid=t_grid, lam_lo=lam_lo,
                     lam_hi=lam_hi, norm=norm, limit=limit)
