import math

import numpy as np
import pytest

from panelseg.cusum import (
    DcMode, candidate_bounds, cusum_matrix, cusum_series, dc_scan, dc_scan_many, double_cusum,
    ordered_abs_cusums, projection_vector,
)
from panelseg.errors import DimensionError, DomainError, WindowTooShortError

from oracles import cusum_definition, cusum_direct, dc_scan_brute


class TestCusumSeries:
    def test_constant_series_is_zero(self):
        np.testing.assert_allclose(cusum_series(np.full(10, 3.7)), 0.0, atol=1e-12)

    def test_single_step_peaks_at_step(self):
        x = np.r_[np.zeros(6), np.ones(4)]
        c = cusum_series(x)
        assert int(np.argmax(np.abs(c))) + 1 == 6
        # sqrt(6*4/10) * (0 - 1)
        assert c[5] == pytest.approx(-math.sqrt(2.4), rel=1e-14)

    def test_hand_computed_step(self):
        # sqrt(2*2/4) * (1 - 0)
        assert cusum_series([1, 1, 0, 0])[1] == pytest.approx(1.0, rel=1e-15)

    def test_matches_both_definitions(self, rng):
        x = rng.standard_normal(13)
        c = cusum_series(x)
        for b in range(1, 13):
            assert c[b - 1] == pytest.approx(cusum_direct(x, 1, b, 13), abs=1e-12)
            assert c[b - 1] == pytest.approx(cusum_definition(x, 1, b, 13), abs=1e-12)

    def test_level_shift_invariance(self, rng):
        x = rng.standard_normal(40)
        np.testing.assert_allclose(cusum_series(x + 1e3), cusum_series(x), atol=1e-9)

    def test_too_short(self):
        with pytest.raises(DimensionError):
            cusum_series([1.0])


class TestCusumMatrix:
    def test_window_columns(self, rng):
        X = rng.standard_normal((3, 20))
        C = cusum_matrix(X, 4, 15)
        assert C.shape == (3, 11)
        assert C[2, 5 - 4] == pytest.approx(cusum_direct(X[2], 4, 5, 15), abs=1e-12)

    @pytest.mark.parametrize("s,e", [(0, 5), (5, 5), (3, 21)])
    def test_bad_window(self, rng, s, e):
        with pytest.raises(DimensionError):
            cusum_matrix(rng.standard_normal((2, 20)), s, e)


class TestCandidateBounds:
    def test_trimmed(self):
        assert candidate_bounds(1, 100, 5) == (7, 94)

    def test_untrimmed(self):
        assert candidate_bounds(3, 9, None) == (3, 8)

    def test_empty_raises(self):
        with pytest.raises(WindowTooShortError):
            candidate_bounds(1, 12, 5)
        assert candidate_bounds(1, 13, 5) == (7, 7)


class TestDcMode:
    @pytest.mark.parametrize("text,label", [
        ("phi=0", "phi=0"), ("phi=0.5", "phi=0.5"), ("combined", "combined"), ("combined,gamma=3", "combined,gamma=3"),
    ])
    def test_parse_round_trip(self, text, label):
        assert DcMode.parse(text).label == label

    @pytest.mark.parametrize("text", ["phi=2", "phi=x", "bogus", "combined,gamma=-1"])
    def test_parse_rejects(self, text):
        with pytest.raises(DomainError):
            DcMode.parse(text)

    def test_combined_weights_default_gamma(self):
        n = 7
        w = DcMode.combined().weights(n)
        m = np.arange(1, n + 1)
        np.testing.assert_allclose(w, math.log(n) + np.sqrt(m * (2 * n - m) / (2 * n)))


class TestDoubleCusum:
    def test_zero_vector(self):
        assert double_cusum(np.zeros(5), 3, DcMode.exponent(0.5)) == 0.0

    def test_equal_entries_closed_form(self):
        # top/m - rest/(2n-m) = c - (n-m)c/(2n-m) = c n/(2n-m)
        n, m, c = 6, 2, 1.5
        mode = DcMode.exponent(1.0)
        w = m * (2 * n - m) / (2 * n)
        assert double_cusum(np.full(n, c), m, mode) == pytest.approx(w * c * n / (2 * n - m), rel=1e-14)

    def test_two_series_hand_values(self):
        assert double_cusum([2.0, 0.0], 1, DcMode.exponent(0.5)) == pytest.approx(math.sqrt(3), rel=1e-12)
        assert double_cusum([2.0, 0.0], 2, DcMode.exponent(0.0)) == pytest.approx(1.0, rel=1e-15)

    def test_single_component(self):
        assert double_cusum([2.5], 1, DcMode.exponent(0.0)) == pytest.approx(2.5)

    def test_rejects_unsorted_and_bad_m(self):
        with pytest.raises(DomainError):
            double_cusum([1.0, 2.0], 1, DcMode())
        with pytest.raises(DomainError):
            double_cusum([2.0, 1.0], 3, DcMode())


class TestOrderedAbsCusums:
    def test_two_series_order(self):
        X = np.array([[0.0, 0.3], [0.0, -0.9]]) * math.sqrt(2.0)
        a, order, _ = ordered_abs_cusums(X, 1, 1, 2)
        np.testing.assert_allclose(a, [0.9, 0.3])
        assert list(order) == [1, 0]

    def test_singleton(self):
        a, order, _ = ordered_abs_cusums(np.array([[1.0, 2.0, 5.0]]), 1, 2, 3)
        assert list(order) == [0]

    def test_ties_keep_index_order(self):
        X = np.array([[0, 0, 1, 1], [0, 0, -1, -1], [0, 0, 0, 0.5]], dtype=float)
        a, order, signs = ordered_abs_cusums(X, 1, 2, 4)
        assert list(order) == [0, 1, 2]
        assert a[0] == a[1]
        assert list(signs) == [-1, 1, -1]


class TestDcScan:
    @pytest.mark.parametrize("mode", [DcMode.exponent(0), DcMode.exponent(0.5), DcMode.exponent(1), DcMode.combined()])
    def test_matches_brute_force(self, rng, mode):
        X = rng.standard_normal((4, 15))
        r = dc_scan(X, 2, 14, mode, d_T=1)
        stat, b, m = dc_scan_brute(X, 2, 14, mode.kind, mode.phi, mode.gamma, 4, 12)
        assert r.stat == pytest.approx(stat, abs=1e-10)
        assert (r.b_hat, r.m_hat) == (b, m)

    def test_contributors_are_top_m(self, rng):
        X = rng.standard_normal((6, 30))
        X[[1, 4], 15:] += 5
        r = dc_scan(X, 1, 30, DcMode.exponent(0.5), d_T=2)
        assert r.b_hat == 15
        assert list(r.contributors) == [1, 4]

    def test_many_matches_single(self, rng):
        X = rng.standard_normal((5, 25))
        modes = [DcMode.exponent(0), DcMode.combined()]
        many = dc_scan_many(X, 1, 25, modes, 3)
        for md, r in zip(modes, many):
            one = dc_scan(X, 1, 25, md, 3)
            assert (one.stat, one.b_hat, one.m_hat) == (r.stat, r.b_hat, r.m_hat)

    def test_noiseless_step_found_exactly(self, rng):
        X = np.zeros((5, 40))
        X[:, 17:] += rng.uniform(0.5, 2, (5, 1))
        assert dc_scan(X, mode=DcMode.combined(), d_T=0).b_hat == 17

    def test_two_by_ten_random(self, rng):
        X = rng.standard_normal((2, 10))
        r = dc_scan(X, mode=DcMode.exponent(0.5), d_T=None)
        stat, b, m = dc_scan_brute(X, 1, 10, "exponent", 0.5)
        assert (r.b_hat, r.m_hat) == (b, m) and r.stat == pytest.approx(stat, abs=1e-12)

    def test_constant_panel_is_zero(self):
        r = dc_scan(np.ones((3, 20)), mode=DcMode.exponent(0.5), d_T=2)
        assert r.stat == 0.0


class TestProjection:
    def test_identity(self, rng):
        X = rng.standard_normal((5, 20)) * rng.uniform(0.5, 2, (5, 1))
        scales = rng.uniform(0.5, 2.0, 5)
        Z = X / scales[:, None]
        mode = DcMode.exponent(0.5)
        b, m = 9, 2
        a, order, signs = ordered_abs_cusums(Z, 1, b, 20)
        p = projection_vector(order, signs, m, scales, mode)
        proj = p @ X
        assert cusum_direct(proj, 1, b, 20) == pytest.approx(double_cusum(a, m, mode), abs=1e-10)

    def test_combined_rejected(self):
        with pytest.raises(DomainError):
            projection_vector(np.arange(3), np.ones(3), 1, np.ones(3), DcMode.combined())
