import math
from fractions import Fraction

import numpy as np
import pytest

from qkdbound.bounds import (
    Curve,
    bound_report,
    collision_bound,
    delayed_shannon_bound,
    delayed_tau1_bound,
    disturbance_floor,
    eta_bar_collision,
    eta_bar_shannon,
    shannon_linear_bound,
    shannon_sharp_bound,
    tabulate_curve,
    tau1_bound,
)


def naive_eta_bar(d):
    """Unrationalized inversion, valid away from d = 1/4."""
    return (1 - 2 * math.sqrt(2) * math.sqrt((1 - 2 * d) * d)) / (1 - 4 * d)


def d_of_eta(eta):
    return (1 - eta) ** 2 / (4 * (1 + eta**2))


class TestEtaBar:
    @pytest.mark.parametrize("d", [0.0, 0.003, 0.01, 0.05, 0.1, 0.2, 0.24, 0.26, 0.4])
    def test_matches_naive_form(self, d):
        assert eta_bar_collision(d) == pytest.approx(naive_eta_bar(d), abs=1e-12)

    def test_exact_rational_points(self):
        # 8 d (1 - 2d) is a perfect square at both points
        for d, eta in [(Fraction(1, 100), Fraction(3, 4)), (Fraction(1, 20), Fraction(1, 2))]:
            root = Fraction(math.isqrt((8 * d * (1 - 2 * d)).numerator), math.isqrt((8 * d * (1 - 2 * d)).denominator))
            assert root**2 == 8 * d * (1 - 2 * d)
            assert (1 - 4 * d) / (1 + root) == eta
        assert eta_bar_shannon(0.01) == pytest.approx(0.75, abs=1e-15)
        assert eta_bar_shannon(0.05) == pytest.approx(0.5, abs=1e-15)

    def test_continuous_at_quarter(self):
        assert eta_bar_collision(0.25) == 0.0
        assert eta_bar_collision(0.25 - 1e-9) == pytest.approx(0.0, abs=1e-4)
        assert eta_bar_collision(0.25 + 1e-9) == pytest.approx(0.0, abs=1e-4)

    def test_inverts_disturbance(self):
        for eta in np.linspace(-0.99, 1.0, 40):
            assert eta_bar_collision(d_of_eta(eta)) == pytest.approx(eta, abs=1e-9)

    def test_clipping(self):
        assert eta_bar_shannon(0.3) == 0.0
        assert eta_bar_collision(0.5) == -1.0
        assert eta_bar_collision(0.9) == -1.0

    def test_spot_negative(self):
        assert eta_bar_collision(0.26) == pytest.approx(-0.020008, abs=1e-6)

    @pytest.mark.parametrize("bad", [-0.01, 1.01, float("nan")])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            eta_bar_shannon(bad)

    def test_floor(self):
        assert disturbance_floor(0.5) == pytest.approx(0.05, abs=1e-15)
        assert disturbance_floor([0.0, 1.0], [0.5, 0.5]) == pytest.approx(0.125, abs=1e-15)


class TestShannonBounds:
    def test_endpoints(self):
        assert shannon_sharp_bound(0.0) == 0.0
        for d in (0.25, 0.3, 0.5, 1.0):
            assert shannon_sharp_bound(d) == pytest.approx(0.5, abs=1e-9)

    def test_spot_values(self):
        # eta = 1/2: (1 - log2(5/4) + (1/5) log2(1/4)) / 2
        assert shannon_sharp_bound(0.05) == pytest.approx(0.5 * (1 - math.log2(1.25) - 0.4), abs=1e-12)
        assert shannon_sharp_bound(0.04) == pytest.approx(0.112125, abs=1e-6)

    def test_below_linear(self):
        for d in np.linspace(0, 0.3, 61):
            assert shannon_sharp_bound(d) <= shannon_linear_bound(d) + 1e-12

    def test_linear_slope_at_origin(self):
        assert shannon_sharp_bound(1e-7) / 1e-7 == pytest.approx(2 / math.log(2), rel=2e-3)

    def test_monotone(self):
        v = [shannon_sharp_bound(d) for d in np.linspace(0, 0.3, 301)]
        assert all(b >= a - 1e-15 for a, b in zip(v, v[1:]))

    def test_delayed(self):
        assert delayed_shannon_bound(0.05) == pytest.approx(2 * shannon_sharp_bound(0.05))
        assert delayed_shannon_bound(0.3) == 1.0


class TestCollisionBounds:
    @pytest.mark.parametrize("eta, expected", [(1.0, 0.5), (0.0, 17 / 18), (-1.0, 0.5)])
    def test_collision_bound(self, eta, expected):
        assert collision_bound(eta) == pytest.approx(expected, abs=1e-15)

    def test_collision_spot(self):
        assert collision_bound(0.5) == pytest.approx(0.599723, abs=1e-6)

    def test_tau1_endpoints(self):
        assert tau1_bound(0.0) == pytest.approx(0.0, abs=1e-9)
        assert tau1_bound(1 / 3) == 1.0
        assert tau1_bound(0.5) == 1.0
        # the formula itself reaches 1 at d = 1/3
        assert math.log2(2 * collision_bound(eta_bar_collision(1 / 3 - 1e-12))) == pytest.approx(1.0, abs=1e-6)

    def test_tau1_spot(self):
        assert tau1_bound(0.01) == pytest.approx(0.0565779, abs=1e-7)
        assert tau1_bound(0.05) == pytest.approx(0.262368, abs=1e-6)
        assert round(tau1_bound(0.01), 2) == 0.06
        assert round(tau1_bound(0.05), 2) == 0.26

    def test_tau1_monotone(self):
        v = [tau1_bound(d) for d in np.linspace(0, 0.4, 401)]
        assert all(b >= a - 1e-15 for a, b in zip(v, v[1:]))

    def test_delayed_dominates(self):
        for d in np.linspace(0, 0.4, 81):
            assert delayed_tau1_bound(d) >= tau1_bound(d) - 1e-12

    def test_delayed_quarter(self):
        assert delayed_tau1_bound(0.25) == 1.0
        assert delayed_tau1_bound(0.2499) < 1.0
        assert delayed_tau1_bound(0.0) == pytest.approx(0.0, abs=1e-12)


class TestTables:
    def test_tabulate(self):
        rows = tabulate_curve(Curve.TAU1, 0.01, 0.05, 5)
        assert [d for d, _ in rows] == pytest.approx([0.01, 0.02, 0.03, 0.04, 0.05])
        assert rows[0][1] == tau1_bound(0.01)

    def test_tabulate_rejects(self):
        with pytest.raises(ValueError):
            tabulate_curve("tau1", 0.2, 0.1, 5)
        with pytest.raises(ValueError):
            tabulate_curve("tau1", 0.0, 0.1, 1)
        with pytest.raises(ValueError):
            tabulate_curve("nope", 0.0, 0.1, 3)

    def test_report(self):
        r = bound_report(0.05).as_dict()
        assert r["eta_bar_shannon"] == pytest.approx(0.5)
        assert r["tau1"] == tau1_bound(0.05)
        assert set(r) >= {"shannon_sharp", "shannon_linear", "tau1_delayed"}


from hypothesis import given, settings
from hypothesis import strategies as st

unit_d = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestProperties:
    @given(st.floats(min_value=-0.999, max_value=1.0))
    def test_inversion_roundtrip(self, eta):
        assert eta_bar_collision(d_of_eta(eta)) == pytest.approx(eta, abs=1e-7)

    @given(unit_d, unit_d)
    def test_monotone_pairs(self, d1, d2):
        lo, hi = sorted((d1, d2))
        assert shannon_sharp_bound(lo) <= shannon_sharp_bound(hi) + 1e-12
        assert tau1_bound(lo) <= tau1_bound(hi) + 1e-12
        assert delayed_tau1_bound(lo) <= delayed_tau1_bound(hi) + 1e-12

    @settings(max_examples=200)
    @given(unit_d)
    def test_ranges(self, d):
        assert 0.0 <= shannon_sharp_bound(d) <= 0.5 + 1e-12
        assert 0.0 <= tau1_bound(d) <= delayed_tau1_bound(d) + 1e-12 <= 1.0 + 2e-12
        assert 0.0 <= eta_bar_shannon(d) <= 1.0
        assert -1.0 <= eta_bar_collision(d) <= 1.0
