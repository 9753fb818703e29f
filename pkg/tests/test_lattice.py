"""Lattice discretization, bracketed convolution and survival tables.

The rigor contract: down-rounded tables are certified lower bounds on the
walk's survival probabilities and up-rounded ones upper bounds, up to the
declared float slack.
"""

import math

import numpy as np
import pytest
from scipy import special

from decwalk.dist import IncrementLaw, erlang_survival
from decwalk.lattice import (
    chernoff_remainder,
    convolve,
    discretize,
    renewal_V,
    survival_table,
)

EXP1 = IncrementLaw.exponential(1.0)
GAMMA21 = IncrementLaw.gamma(2.0, 1.0)
PAR25 = IncrementLaw.pareto(2.5, 1.0)


class TestDiscretize:
    def test_mass_accounting(self):
        for direction in ("down", "up"):
            lat = discretize(EXP1, 0.01, 3000, direction)
            total = float(np.sum(lat.masses)) + lat.lump
            assert total == pytest.approx(1.0, abs=1e-12)
            assert np.all(lat.masses >= 0.0)

    def test_down_vs_up_bracket_cdf(self):
        # at every grid point the down CDF must dominate the true CDF and
        # the up CDF must undershoot it (survival brackets flip accordingly)
        h, K = 0.01, 2000
        down = discretize(EXP1, h, K, "down")
        up = discretize(EXP1, h, K, "up")
        grid = np.arange(1, K + 1) * h
        true_cdf = EXP1.cdf(grid)
        cdf_down = np.cumsum(down.masses)[: K]
        cdf_up = np.cumsum(up.masses)[: K]
        assert np.all(cdf_down >= true_cdf - 1e-12)
        assert np.all(cdf_up <= true_cdf + 1e-12)

    def test_rejects_large_lump(self):
        with pytest.raises(ValueError):
            discretize(EXP1, 0.01, 10, "down")  # grid too short: lump > 0.5


class TestConvolve:
    def test_fft_matches_direct(self):
        a = discretize(EXP1, 0.05, 400, "down")
        b = discretize(GAMMA21, 0.05, 400, "down")
        f = convolve(a, b, method="fft")
        d = convolve(a, b, method="direct")
        np.testing.assert_allclose(f.masses, d.masses, atol=1e-15)
        assert f.lump == pytest.approx(d.lump, abs=1e-15)

    def test_lump_propagation(self):
        a = discretize(EXP1, 0.05, 400, "down")
        c = convolve(a, a)
        # lump can only grow under convolution and mass stays a probability
        assert c.lump >= a.lump - 1e-15
        assert float(np.sum(c.masses)) + c.lump == pytest.approx(1.0, abs=1e-9)


class TestSurvivalTable:
    @pytest.mark.parametrize("t,h", [(10.0, 0.002), (20.0, 0.001)])
    def test_exponential_containment(self, t, h):
        tab = survival_table(EXP1, t, h)
        for n in range(1, tab.N + 1):
            truth = erlang_survival(n, t, 1.0)
            assert tab.lo[n - 1] <= truth <= tab.hi[n - 1], n

    def test_gamma_containment(self):
        tab = survival_table(GAMMA21, 10.0, 0.002)
        for n in range(1, tab.N + 1):
            truth = float(special.gammaincc(2 * n, 10.0))
            assert tab.lo[n - 1] <= truth <= tab.hi[n - 1], n

    def test_first_row_exact(self):
        tab = survival_table(EXP1, 10.0, 0.002)
        # n=1 rows come from the exact survival function: hi = sf(J h),
        # lo = sf((J+1) h), up to the documented 1e-11 float slack
        assert tab.hi[0] == pytest.approx(math.exp(-10.0), abs=2e-11)
        assert tab.lo[0] == pytest.approx(math.exp(-10.002), abs=2e-11)

    def test_width_shrinks_with_h(self):
        w = []
        for h in (0.02, 0.005):
            tab = survival_table(EXP1, 5.0, h)
            w.append(float(np.max(tab.hi - tab.lo)))
        assert w[1] < w[0]

    def test_heavy_tail_rows_monotone_sane(self):
        tab = survival_table(PAR25, 20.0, 0.01)
        assert np.all(tab.hi >= tab.lo)
        assert np.all(tab.lo >= -1e-12) and np.all(tab.hi <= 1.0 + 1e-12)

    def test_row_and_csv(self, tmp_path):
        tab = survival_table(EXP1, 5.0, 0.01)
        lo, hi = tab.row(3)
        assert (lo, hi) == (tab.lo[2], tab.hi[2])
        p = tmp_path / "tab.csv"
        tab.to_csv(p)
        lines = p.read_text().strip().splitlines()
        assert lines[0].startswith("n,") and len(lines) == tab.N + 1


class TestChernoffRemainder:
    def test_dominates_frozen_truth(self):
        # the remainder upper-bounds the tail sum over n > N; [DERIVED]
        # mpmath puts that tail at 2.01955676245e-13 for Exponential(1),
        # t=20, N=60 (VALUES), so the bound must sit above it
        rem = chernoff_remainder(EXP1, 20.0, 60)
        assert rem >= 2.01955676245e-13
        assert rem < 1e-10  # magnitude sanity pinned by the same pre-run

    def test_decreasing_in_horizon(self):
        r1 = chernoff_remainder(EXP1, 20.0, 50)
        r2 = chernoff_remainder(EXP1, 20.0, 80)
        assert r2 <= r1


class TestRenewalV:
    def test_exponential_exact_value(self):
        # V(t) = t for Exponential(1) with the convention V(t) = E N(t)
        lo, hi = renewal_V(EXP1, 5.0)
        assert lo <= 5.0 <= hi
        assert hi - lo < 0.01

    def test_lorden_bound(self):
        # V(t) - t/mu <= E xi^2 / mu^2 - 1 (uniform in t)
        law = GAMMA21
        for t in (3.0, 8.0):
            lo, hi = renewal_V(law, t)
            bound = (law.variance + law.mean**2) / law.mean**2 - 1.0
            assert hi - t / law.mean <= bound + 0.01


class TestValidation:
    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            survival_table(EXP1, -1.0, 0.01)
        with pytest.raises(ValueError):
            survival_table(EXP1, 5.0, 0.0)
