import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simbound import bounds as b

eps_r_st = st.floats(0.0, 1.0)
eps_t_st = st.floats(0.0, 2.0)
gamma_st = st.floats(0.0, 0.999)


class TestOriginal:
    def test_zero(self):
        assert b.original_bound(0, 0, 0.9) == 0.0

    def test_vacuous_example(self):
        # 0.1 / 0.1 + 0.9 * 0.2 / (2 * 0.01)
        assert b.original_bound(0.1, 0.2, 0.9) == pytest.approx(10.0, abs=1e-12)

    def test_reward_only(self):
        assert b.original_bound(0.1, 0.0, 0.5) == pytest.approx(0.2)

    def test_rejects_gamma_one(self):
        with pytest.raises(ValueError):
            b.original_bound(0.1, 0.1, 1.0)


class TestTight:
    def test_gamma_zero(self):
        assert b.tight_bound(0.37, 1.2, 0.0) == pytest.approx(0.37, abs=1e-15)

    def test_full_reward_error(self):
        assert b.tight_bound(1.0, 0.7, 0.8) == pytest.approx(5.0)

    def test_identical(self):
        assert b.tight_bound(0.0, 0.0, 0.95) == pytest.approx(0.0, abs=1e-12)

    def test_example(self):
        assert b.tight_bound(0.1, 0.2, 0.9) == pytest.approx(10 - 0.9 / 0.19, abs=1e-12)
        assert b.tight_bound(0.1, 0.2, 0.9) == pytest.approx(5.26316, abs=1e-5)

    @pytest.mark.parametrize("er,et", [(-0.1, 0.0), (1.1, 0.0), (0.0, 2.1), (0.0, -0.5)])
    def test_rejects_out_of_range(self, er, et):
        with pytest.raises(ValueError):
            b.tight_bound(er, et, 0.5)

    @given(eps_r_st, eps_t_st, gamma_st)
    def test_below_vmax_and_original(self, er, et, g):
        t = b.tight_bound(er, et, g)
        assert -1e-12 <= t <= 1 / (1 - g) + 1e-9
        assert t <= b.original_bound(er, et, g) + 1e-9

    @given(eps_r_st, eps_t_st, gamma_st, st.floats(0, 0.5))
    def test_monotone(self, er, et, g, d):
        t = b.tight_bound(er, et, g)
        assert b.tight_bound(min(er + d, 1), et, g) >= t - 1e-12
        assert b.tight_bound(er, min(et + d, 2), g) >= t - 1e-12
        assert b.tight_bound(er, et, min(g + d, 0.999)) >= t - 1e-12


class TestOverlapDrift:
    def test_overlap(self):
        assert b.overlap_lower_bound(0.7, 0) == 1.0
        assert b.overlap_lower_bound(2.0, 1) == 0.0
        assert b.overlap_lower_bound(2.0, 5) == 0.0
        assert b.overlap_lower_bound(0.4, 10) == pytest.approx(0.10737, abs=1e-5)

    def test_drift(self):
        assert b.l1_drift_bound(0.5, 0) == 0.0
        assert b.l1_drift_bound(0.5, 3) == 1.5
        assert b.l1_drift_bound(0.5, 10) == 2.0


class TestFiniteHorizon:
    def test_original(self):
        assert b.fh_original_bound(0.3, 1.5, 1) == 0.3
        assert b.fh_original_bound(0.0, 0.2, 5) == pytest.approx(1.0)
        assert b.fh_original_bound(0, 0, 17) == 0.0

    def test_tight(self):
        assert b.fh_tight_bound(0.25, 0.0, 8) == 2.0
        assert b.fh_tight_bound(1.0, 0.9, 6) == pytest.approx(6.0)
        assert b.fh_tight_bound(0.0, 0.5, 3) == pytest.approx(0.6875, abs=1e-15)

    @pytest.mark.parametrize("h", [1, 2, 5, 20, 50])
    def test_continuity_at_zero(self, h):
        assert abs(b.fh_tight_bound(0.3, 1e-9, h) - 0.3 * h) <= 1e-6

    @pytest.mark.parametrize("h", [1, 20, 100, 1000])
    def test_small_eps_exact_rational(self, h):
        from fractions import Fraction as F
        er, et = F(3, 10), F(1, 10**9)
        exact = h - (1 - er) * sum((1 - et / 2) ** t for t in range(h))
        assert b.fh_tight_bound(0.3, 1e-9, h) == pytest.approx(float(exact), rel=1e-12)

    def test_tight_matches_sum(self):
        # direct sum of (1 - eps_r)(1 - eps_t/2)^t, independent of the closed form
        for er, et, h in [(0.1, 0.3, 7), (0.0, 1.9, 40), (0.8, 0.01, 3)]:
            s = sum((1 - er) * (1 - et / 2) ** t for t in range(h))
            assert b.fh_tight_bound(er, et, h) == pytest.approx(h - s, abs=1e-12)

    @given(eps_r_st, st.floats(1e-12, 2.0), st.integers(1, 50))
    def test_dominance(self, er, et, h):
        assert b.fh_tight_bound(er, et, h) <= b.fh_original_bound(er, et, h) + 1e-9
        assert b.fh_tight_bound(er, et, h) <= h + 1e-9


class TestHierarchy:
    def test_zero(self):
        assert b.hierarchy_existing_bound(0, 0, 0.9, 7, 2.0) == 0.0
        assert b.hierarchy_tight_bound(0, 0, 0.9, 7, 2.0) == pytest.approx(0.0, abs=1e-12)

    def test_examples(self):
        assert b.hierarchy_existing_bound(0.1, 0.01, 0.9, 10, 1) == pytest.approx(20.0)
        assert b.hierarchy_tight_bound(0.1, 0.01, 0.9, 10, 1) == pytest.approx(10 - 0.9 / 0.19, abs=1e-12)

    def test_rmax_linearity(self):
        base = b.hierarchy_existing_bound(0.0, 0.02, 0.8, 5, 1.0)
        assert b.hierarchy_existing_bound(0.0, 0.02, 0.8, 5, 3.0) == pytest.approx(3 * base)

    def test_saturated_reward(self):
        assert b.hierarchy_tight_bound(2.5, 0.03, 0.9, 4, 2.5) == pytest.approx(25.0)

    @given(st.floats(0, 1), st.floats(0, 1), gamma_st, st.integers(2, 20))
    def test_dominance(self, fr, ft, g, n):
        er, et = fr * 1.0, ft / (n - 1)
        assert b.hierarchy_tight_bound(er, et, g, n) <= b.hierarchy_existing_bound(er, et, g, n) + 1e-9


class TestOptimalLoss:
    def test_values(self):
        assert b.optimal_policy_loss_bound(0, 0, 0.9) == pytest.approx(0.0, abs=1e-12)
        assert b.optimal_policy_loss_bound(0.1, 0.2, 0.9) == pytest.approx(10.52632, abs=1e-5)

    @given(eps_r_st, eps_t_st, gamma_st)
    def test_twice_tight(self, er, et, g):
        assert b.optimal_policy_loss_bound(er, et, g) == 2 * b.tight_bound(er, et, g)


class TestLinearization:
    def test_zero(self):
        assert b.linearization_gap(0, 0, 0.9) == 0.0

    def test_example(self):
        assert b.linearization_gap(0.1, 0.2, 0.9) == pytest.approx(4.73684, abs=1e-5)

    @given(eps_r_st, eps_t_st, gamma_st)
    def test_equals_difference(self, er, et, g):
        diff = b.original_bound(er, et, g) - b.tight_bound(er, et, g)
        gap = b.linearization_gap(er, et, g)
        assert gap >= 0
        assert gap == pytest.approx(diff, rel=1e-9, abs=1e-9 / (1 - g) ** 2)

    def test_second_order(self):
        ratios = [b.linearization_gap(2 * e, 2 * e, 0.9) / b.linearization_gap(e, e, 0.9)
                  for e in (5e-3, 2.5e-3, 1e-3, 1e-4)]
        assert abs(ratios[-1] - 4) < 0.01
        dist = [abs(r - 4) for r in ratios]
        assert all(x > y for x, y in zip(dist, dist[1:]))
        scaled = [b.linearization_gap(e, e, 0.9) / e ** 2 for e in (1e-2, 1e-3, 1e-4, 1e-5)]
        assert scaled[-1] > 0 and abs(scaled[-1] - scaled[-2]) / scaled[-1] < 1e-3


class TestInputs:
    def test_exactly_one_of(self):
        with pytest.raises(ValueError):
            b.BoundInputs(0.1, 0.1)
        with pytest.raises(ValueError):
            b.BoundInputs(0.1, 0.1, gamma=0.5, horizon=3)

    def test_report(self):
        r = b.bound_report(b.BoundInputs(0.1, 0.2, gamma=0.9))
        assert r.original == pytest.approx(10.0)
        assert r.ratio_original_over_tight == pytest.approx(r.original / r.tight)
        assert r.to_dict()["tight_normalized"] == pytest.approx(0.526316, abs=1e-6)
        fh = b.bound_report(b.BoundInputs(0.1, 0.2, horizon=5))
        assert fh.v_max == 5.0 and fh.family == "finite_horizon"

    def test_report_zero_tight(self):
        assert b.bound_report(b.BoundInputs(0, 0, gamma=0.5)).ratio_original_over_tight is None


def test_dense_dominance_grid():
    er = np.linspace(0, 1, 60)[:, None, None]
    et = np.linspace(0, 2, 60)[None, :, None]
    g = np.linspace(0, 0.999, 20)[None, None, :]
    orig = er / (1 - g) + g * et / (2 * (1 - g) ** 2)
    tight = 1 / (1 - g) - (1 - er) / (1 - g * (1 - et / 2))
    assert np.all(tight <= orig + 1e-9)
    # spot-check the library against the vectorised formula
    for i, j, k in [(3, 7, 2), (59, 59, 19), (0, 30, 10)]:
        assert b.tight_bound(er[i, 0, 0], et[0, j, 0], g[0, 0, k]) == pytest.approx(tight[i, j, k])
        assert math.isclose(b.original_bound(er[i, 0, 0], et[0, j, 0], g[0, 0, k]), orig[i, j, k])
