"""Simulation of the decoupled walk and its derived functionals.

The decoupled sequence S-hat_1, S-hat_2, ... consists of independent draws
where S-hat_n has the marginal law of the walk position S_n.  Derived
objects: the count N-hat(t) of values at or below t, running maxima M_n,
the decoupled passage time tau-hat(t) = inf{n : M_n > t}, and (for the
inverse-stable limit check) the coupled walk's passage time tau(t).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .dist import IncrementLaw
from .lattice import SurvivalTable, _chernoff_tail, survival_table
from .rng import RandomStream

# replications are consumed in fixed-size chunks, one spawned stream per
# chunk, so merged results do not depend on how work was split across workers
CHUNK = 256


@dataclass(frozen=True)
class DecoupledPath:
    """Realized independent values s-hat_1..s-hat_N."""

    values: np.ndarray
    method: str  # closed-form | lattice-inversion | naive-sum

    @property
    def running_max(self):
        return np.maximum.accumulate(self.values)

    def counting(self, t: float) -> int:
        return int(np.count_nonzero(self.values <= t))

    def to_csv(self, path):
        n = np.arange(1, self.values.size + 1)
        np.savetxt(path, np.column_stack([n, self.values, self.running_max]),
                   delimiter=",", comments="", header="n,s_hat,running_max")


@dataclass(frozen=True)
class PassageResult:
    """Passage index and the maxima path up to it."""

    t: float
    tau: int
    maxima: np.ndarray

    def __post_init__(self):
        if self.maxima[-1] <= self.t:
            raise ValueError("final maximum must exceed the level")


def _marginal_p(law: IncrementLaw, ns: np.ndarray, t: float) -> np.ndarray:
    """P{S_n <= t} for exponential/gamma families (walk marginal is Gamma)."""
    shape = 1.0 if law.family == "exponential" else law.p1
    rate = law.p1 if law.family == "exponential" else law.p2
    return special.gammainc(ns * shape, rate * t)


def sample_decoupled(law: IncrementLaw, N: int, stream: RandomStream,
                     method: str | None = None, h: float = 1e-3) -> DecoupledPath:
    """Independent draws of S_1, ..., S_N (one per index).

    Exponential/Gamma use the closed-form Gamma marginal.  Other
    finite-mean laws invert the down-rounded lattice CDF with a uniform
    jitter inside the grid cell (worst-case CDF bias equals the bracket
    width at the cell).  naive-sum draws n fresh increments per index and
    is the oracle path for modest N.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    g = stream.generator
    if method is None:
        if law.family in ("exponential", "gamma"):
            method = "closed-form"
        elif math.isfinite(law.mean):
            method = "lattice-inversion"
        else:
            method = "naive-sum"
    if method == "closed-form":
        if law.family not in ("exponential", "gamma"):
            raise ValueError("closed form only for exponential/gamma")
        shape = 1.0 if law.family == "exponential" else law.p1
        rate = law.p1 if law.family == "exponential" else law.p2
        vals = g.gamma(np.arange(1, N + 1) * shape, 1.0 / rate)
        return DecoupledPath(values=vals, method=method)
    if method == "lattice-inversion":
        return _sample_lattice_inversion(law, N, stream, h)
    if method == "naive-sum":
        total = N * (N + 1) // 2
        if total > 50_000_000:
            raise ValueError("naive-sum horizon too large; use lattice-inversion")
        incs = law.sample(stream, total)
        offs = np.concatenate([[0], np.cumsum(np.arange(1, N + 1))])
        vals = np.add.reduceat(incs, offs[:-1])
        return DecoupledPath(values=vals, method=method)
    raise ValueError(f"unknown method {method!r}")


@functools.lru_cache(maxsize=8)
def _lattice_cdfs(law: IncrementLaw, N: int, h: float):
    # shared down-rounded lattice of the increment law, convolved up once;
    # entry n-1 is the on-grid CDF of the lattice minorant of S_n
    from scipy.signal import fftconvolve

    mu = law.mean
    span = N * mu + 10.0 * math.sqrt(N * max(law.variance, mu * mu)
                                     if math.isfinite(law.variance) else N) * mu
    K = int(span / h) + 2
    edges = np.arange(K + 1) * h
    F = np.asarray(law.cdf(edges))
    step = np.clip(np.diff(F), 0.0, None)
    cur = step.copy()
    cdfs = []
    for n in range(1, N + 1):
        if n > 1:
            cur = fftconvolve(cur, step)[:K]
            np.clip(cur, 0.0, None, out=cur)
        cdfs.append(np.cumsum(cur))
    return tuple(cdfs)


def _sample_lattice_inversion(law: IncrementLaw, N: int, stream: RandomStream,
                              h: float):
    # invert the on-grid CDF by a uniform draw, jittering inside the grid
    # cell; mass that escaped the grid (the far tail plus convolution
    # truncation) falls back to an exact sum of fresh increments
    g = stream.generator
    cdfs = _lattice_cdfs(law, N, h)
    vals = np.empty(N)
    for n in range(1, N + 1):
        cdf = cdfs[n - 1]
        u = g.random()
        if u > cdf[-1]:
            vals[n - 1] = float(np.sum(law.sample(stream, n)))
            continue
        j = int(np.searchsorted(cdf, u))
        vals[n - 1] = (j + g.random()) * h
    return DecoupledPath(values=vals, method="lattice-inversion")


def _active_window(law: IncrementLaw, t: float, eps: float, h: float | None = None):
    """(certain, ns, p) with p the nondegenerate P{S_n <= t} values.

    `certain` counts indices whose probability is within eps-budget of 1;
    beyond the window the Chernoff tail certifies sum p_n <= eps/2.
    """
    mu = law.mean
    if not math.isfinite(mu):
        raise ValueError("counting needs a finite mean")
    if law.family in ("exponential", "gamma"):
        shape = 1.0 if law.family == "exponential" else law.p1
        n0 = int(t / mu)
        sig = math.sqrt(law.variance)
        half = int(12.0 * sig * math.sqrt(max(t / mu, 1.0)) / mu) + 30
        lo = max(1, n0 - half)
        ns = np.arange(lo, n0 + half + 1)
        p = _marginal_p(law, ns, t)
        # indices below the window: their miss probability is certified tiny
        below = lo - 1
        hi_mask = p >= 1.0 - 1e-15
        certain = below + int(hi_mask.sum())
        keep = (~hi_mask) & (p > 1e-15)
        S, _ = _chernoff_tail(law, t, int(ns[-1]))
        if S > eps / 2.0:
            raise ValueError("truncation budget unreachable; widen the window")
        return certain, ns[keep], p[keep]
    # lattice-backed: midpoints of the survival brackets; the bracket width
    # scales linearly with h, so one pilot table predicts the step needed
    N = int(math.ceil(2.0 * t / mu)) + 20
    max_cells = 2_000_000
    if h is None:
        h = t / 5_000.0
    tab = survival_table(law, t, h=h, N=N)
    width = float(np.sum(tab.hi - tab.lo))
    if width > eps / 2.0:
        h_need = h * (eps / 2.0) / width * 0.5
        if t / h_need > max_cells:
            raise ValueError(
                "lattice bracket width exceeds the TV budget at a feasible "
                "step; relax eps or pass a coarser budget")
        tab = survival_table(law, t, h=h_need, N=N)
        width = float(np.sum(tab.hi - tab.lo))
        if width > eps / 2.0:
            raise ValueError("lattice bracket width exceeds the TV budget")
    p = 1.0 - 0.5 * (tab.lo + tab.hi)
    keep = (p > 1e-15) & (p < 1.0 - 1e-15)
    certain = int(np.count_nonzero(p >= 1.0 - 1e-15))
    ns = np.arange(1, N + 1)
    S, _ = _chernoff_tail(law, t, N)
    if S > eps / 2.0:
        raise ValueError("truncation budget unreachable; widen the window")
    return certain, ns[keep], p[keep]


def counting(law: IncrementLaw, t: float, stream: RandomStream,
             eps: float = 1e-9, h: float | None = None) -> int:
    """One exact-in-law sample of N-hat(t), total-variation error <= eps."""
    return int(counting_many(law, t, 1, stream, eps, h)[0])


def counting_many(law: IncrementLaw, t: float, reps: int, stream: RandomStream,
                  eps: float = 1e-9, h: float | None = None) -> np.ndarray:
    """Vectorized replications of N-hat(t) = sum_n 1{S-hat_n <= t}.

    Only the indices whose inclusion is genuinely random are simulated as
    independent Bernoulli variables; everything below the active window
    counts deterministically.  Replications are generated in fixed chunks
    with one spawned stream each, so results are reproducible regardless
    of any outer work splitting.
    """
    if t <= 0:
        return np.zeros(reps, dtype=np.int64)
    certain, ns, p = _active_window(law, t, eps, h)
    out = np.empty(reps, dtype=np.int64)
    for c, s in enumerate(range(0, reps, CHUNK)):
        m = min(CHUNK, reps - s)
        g = stream.spawn(1000 + c).generator
        U = g.random((m, p.size))
        out[s:s + m] = certain + (U < p).sum(axis=1)
    return out


def first_passage(law: IncrementLaw, t: float, stream: RandomStream,
                  cap: int = 10**9) -> PassageResult:
    """Sample tau-hat(t) and the maxima path M_1..M_tau.

    Fresh independent S_n-copies are drawn blockwise until the running
    maximum exceeds t.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    g = stream.generator
    if law.family in ("exponential", "gamma"):
        shape = 1.0 if law.family == "exponential" else law.p1
        rate = law.p1 if law.family == "exponential" else law.p2
        pieces = []
        n = 0
        # most passages happen near t/mu, so start the block there and grow
        block = min(4096, max(32, int(1.2 * t / law.mean) + 16))
        while True:
            vals = g.gamma((np.arange(n + 1, n + block + 1)) * shape, 1.0 / rate)
            pieces.append(vals)
            if vals.max() > t:
                break
            n += block
            block = min(4096, 2 * block)
            if n > cap:
                raise RuntimeError("passage cap reached")
        values = np.concatenate(pieces)
    else:
        # naive-sum blocks; block size grows with the index
        values_list = []
        n = 0
        while True:
            block = min(max(64, n // 2), 4096)
            incs = law.sample(stream, (block * (2 * n + block + 1)) // 2)
            offs = np.concatenate([[0], np.cumsum(np.arange(n + 1, n + block + 1))])
            vals = np.add.reduceat(incs, offs[:-1])
            values_list.append(vals)
            if vals.max() > t:
                break
            n += block
            if n > cap:
                raise RuntimeError("passage cap reached")
        values = np.concatenate(values_list)
    M = np.maximum.accumulate(values)
    tau = int(np.argmax(M > t)) + 1
    return PassageResult(t=t, tau=tau, maxima=M[:tau])


def passage_tail_exact(law: IncrementLaw, t: float, n: int,
                       table: SurvivalTable | None = None, h: float = 1e-3):
    """Bracket on P{tau-hat(t) > n} = prod_{k<=n} P{S_k <= t}.

    Also returns the domination bound P{tau(t) > n} = P{S_n <= t} (upper
    bracket endpoint) for cross-checking against the coupled walk.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if law.family in ("exponential", "gamma"):
        p = _marginal_p(law, np.arange(1, n + 1), t)
        prod = float(np.prod(p))
        return prod, prod, float(p[-1])
    if table is None:
        table = survival_table(law, t, h=h, N=n)
    if table.N < n:
        raise ValueError("survival table horizon too small")
    cdf_lo = 1.0 - table.hi[:n]
    cdf_hi = 1.0 - table.lo[:n]
    lo = float(np.prod(np.clip(cdf_lo, 0.0, 1.0)))
    hi = float(np.prod(np.clip(cdf_hi, 0.0, 1.0)))
    return lo, hi, float(np.clip(cdf_hi[-1], 0.0, 1.0))


def coupled_first_passage(law: IncrementLaw, t: float, stream: RandomStream) -> int:
    """tau(t) = inf{n : S_n > t} for the standard (coupled) walk."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    s = 0.0
    n = 0
    block = 4096
    while True:
        c = np.cumsum(law.sample(stream, block))
        idx = int(np.searchsorted(c, t - s, side="right"))
        if idx < block:
            return n + idx + 1
        n += block
        s += float(c[-1])
