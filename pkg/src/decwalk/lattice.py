"""Bracketed marginal laws of the walk by discretized convolution.

Two-sided stochastic rounding of the increment law onto a step-h grid gives
stochastically smaller (down) and larger (up) lattice laws.  Convolution
powers of these yield rigorous per-n brackets [lo_n, hi_n] on P{S_n > t},
a bracketed renewal function, and a Chernoff bound on everything beyond the
computed horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import fftconvolve

from .dist import IncrementLaw, mgf

# absolute slack added to each bracket side so that float rounding in the
# convolution pipeline can never break containment of the true value
_FLOAT_SLACK = 1e-11


@dataclass(frozen=True)
class LatticeLaw:
    """Probability masses on {0, h, ..., (K-1)h} plus an overflow lump."""

    h: float
    masses: np.ndarray
    lump: float

    def __post_init__(self):
        if self.h <= 0 or self.masses.ndim != 1 or self.masses.size < 1:
            raise ValueError("invalid lattice law")
        total = math.fsum(self.masses) + self.lump
        if abs(total - 1.0) > 1e-10 or self.lump < -1e-15 or self.masses.min() < -1e-15:
            raise ValueError("lattice masses must be nonnegative and sum to 1")

    @property
    def K(self) -> int:
        return self.masses.size


def discretize(law: IncrementLaw, h: float, K: int, direction: str) -> LatticeLaw:
    """Round the increment law onto the grid.

    direction="down": mass at jh is F((j+1)h) - F(jh); the rounded variable is
    stochastically below the true one, so convolution powers under-shoot and
    survival probabilities become lower bounds.
    direction="up": mass at jh is F(jh) - F((j-1)h) (atom F(0) at zero); the
    rounded variable dominates the true one, giving survival upper bounds.
    Mass at or beyond the grid end goes to the overflow lump.
    """
    if direction not in ("down", "up"):
        raise ValueError("direction must be 'down' or 'up'")
    edges = np.arange(K + 1) * h
    F = law.cdf(edges)
    if direction == "down":
        masses = np.diff(F)
        lump = 1.0 - F[K]
    else:
        masses = np.empty(K)
        masses[0] = F[0]
        masses[1:] = np.diff(F[: K])
        lump = 1.0 - F[K - 1]
    if lump > 0.5:
        raise ValueError(
            f"grid covers too little mass (lump {lump:.3f} > 0.5); increase K*h"
        )
    return LatticeLaw(h, np.clip(masses, 0.0, None), max(lump, 0.0))


def convolve(a: LatticeLaw, b: LatticeLaw, method: str = "fft") -> LatticeLaw:
    """Distribution of the sum of independent lattice variables.

    Grid mass beyond the shorter operand's length K folds into the lump, as
    does every cross term involving a lump (a lumped summand stays beyond
    the grid once any nonnegative amount is added).
    """
    if a.h != b.h:
        raise ValueError("lattice steps differ")
    K = max(a.K, b.K)
    if method == "fft":
        full = fftconvolve(a.masses, b.masses)
        np.clip(full, 0.0, None, out=full)
    elif method == "direct":
        full = np.convolve(a.masses, b.masses)
    else:
        raise ValueError("method must be 'fft' or 'direct'")
    grid = full[:K]
    overflow = math.fsum(full[K:])
    lump = a.lump + b.lump - a.lump * b.lump + overflow
    total = math.fsum(grid) + lump
    return LatticeLaw(a.h, grid / total, lump / total)


@dataclass(frozen=True)
class SurvivalTable:
    """Rows (n, lo_n, hi_n) bracketing P{S_n > t} for n = 1..N."""

    t: float
    h: float
    N: int
    lo: np.ndarray
    hi: np.ndarray
    remainder: float | None  # bound on sum_{n>N} -log P{S_n > t}; None if unavailable
    law: IncrementLaw = field(compare=False)

    def row(self, n: int):
        return self.lo[n - 1], self.hi[n - 1]

    def to_csv(self, path):
        rows = np.column_stack([np.arange(1, self.N + 1), self.lo, self.hi])
        np.savetxt(path, rows, delimiter=",", header="n,lo,hi", comments="",
                   fmt=["%d", "%.17g", "%.17g"])


def survival_table(law: IncrementLaw, t: float, h: float, N: int | None = None
                   ) -> SurvivalTable:
    """Bracket P{S_n > t} for n = 1..N by iterated lattice convolution.

    The grid only needs to resolve [0, t]: any mass at or above t already
    counts toward the survival event, so both iterations truncate at
    J = floor(t/h) and read survival as one minus the on-grid mass.
    The n=1 row is taken exactly from the increment survival function at
    the rounded grid points rather than from grid sums.
    """
    if t <= 0 or h <= 0:
        raise ValueError("t and h must be positive")
    mu = law.mean
    if N is None:
        if not math.isfinite(mu):
            raise ValueError("horizon N must be given when the mean is infinite")
        N = int(math.ceil(2.0 * t / mu))
    J = int(math.floor(t / h))
    edges = np.arange(J + 2) * h
    F = np.asarray(law.cdf(edges))
    down = np.clip(np.diff(F), 0.0, None)            # masses at 0..J*h
    up = np.empty(J + 1)
    up[0] = F[0]
    up[1:] = np.clip(np.diff(F[: J + 1]), 0.0, None)
    lo = np.empty(N)
    hi = np.empty(N)
    # exact first row: down-rounding shifts mass below, so its survival at t
    # equals the true survival at (J+1)h; up-rounding gives survival at Jh
    lo[0] = math.exp(law.log_survival((J + 1) * h))
    hi[0] = math.exp(law.log_survival(J * h))
    cd = down.copy()
    cu = up.copy()
    for n in range(2, N + 1):
        cd = fftconvolve(cd, down)[: J + 1]
        np.clip(cd, 0.0, None, out=cd)
        cu = fftconvolve(cu, up)[: J + 1]
        np.clip(cu, 0.0, None, out=cu)
        lo[n - 1] = 1.0 - math.fsum(cd)
        hi[n - 1] = 1.0 - math.fsum(cu)
    lo = np.clip(lo - _FLOAT_SLACK, 0.0, 1.0)
    hi = np.clip(hi + _FLOAT_SLACK, 0.0, 1.0)
    remainder = None
    if math.isfinite(mu) and N >= 2.0 * t / mu:
        try:
            remainder = chernoff_remainder(law, t, N)
        except ValueError:
            remainder = None
    return SurvivalTable(t=t, h=h, N=N, lo=lo, hi=hi, remainder=remainder, law=law)


def _chernoff_tail(law: IncrementLaw, t: float, N: int):
    """(sum bound S, first-term bound pbar) for the tail n > N.

    For u > 0, P{S_n <= t} <= exp(u t) m(u)^n with m(u) = E exp(-u xi);
    u is chosen by numeric minimization of the first retained term.
    """
    if not math.isfinite(law.mean):
        raise ValueError("Chernoff tail needs a finite mean")

    def logterm(logu):
        u = math.exp(logu)
        return u * t + (N + 1) * math.log(mgf(law, -u))

    grid = np.linspace(-14.0, 7.0, 43)
    vals = [logterm(x) for x in grid]
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(logterm, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    u0 = math.exp(res.x)
    m = mgf(law, -u0)
    logpbar = u0 * t + (N + 1) * math.log(m)
    if logpbar >= 0.0:
        raise ValueError(
            f"Chernoff bound exceeds 1 at n={N + 1}; increase the horizon N"
        )
    pbar = math.exp(logpbar)
    S = pbar * 1.0 / (1.0 - m) if m < 1.0 else math.inf
    return S, pbar


def chernoff_remainder(law: IncrementLaw, t: float, N: int) -> float:
    """Upper bound on sum_{n>N} -log P{S_n > t}.

    Uses -log(1-x) <= x/(1-xbar) for 0 <= x <= xbar < 1 on the geometric
    sequence of Chernoff term bounds.
    """
    if N < 2.0 * t / law.mean:
        raise ValueError("need N >= 2 t / mean for the remainder bound")
    S, pbar = _chernoff_tail(law, t, N)
    return S / (1.0 - pbar)


def renewal_V(law: IncrementLaw, t: float, h: float = 1e-4, N: int | None = None):
    """Bracket on V(t) = sum_n P{S_n <= t}, the expected decoupled count.

    The horizon defaults to mean-plus-many-sigmas so the Chernoff tail sum
    is negligible against the bracket width.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    mu, var = law.mean, law.variance
    if not math.isfinite(mu):
        raise ValueError("renewal function needs a finite mean")
    if t == 0:
        return 0.0, 0.0
    if N is None:
        sig = math.sqrt(var) if math.isfinite(var) else mu
        N = int(math.ceil(t / mu + 12.0 * sig * math.sqrt(max(t / mu, 1.0)) / mu + 30))
    tab = survival_table(law, t, h, N)
    lo = math.fsum(1.0 - tab.hi)
    hi = math.fsum(1.0 - tab.lo)
    S, _ = _chernoff_tail(law, t, N)
    return lo, hi + S
