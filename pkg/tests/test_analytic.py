"""Scattering oracle pair, bound levels, response time, steady rate."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracpair.analytic import (
    bound_state_levels,
    klein_rate,
    response_time,
    transfer_matrix_transmission,
    transmission_coefficient,
    transmission_params,
)
from diracpair.constants import ATOMIC
from diracpair.errors import DomainError

C = ATOMIC.c
C2 = ATOMIC.c2
V1 = 2.5 * C2
V2 = 0.25 * C2
D = 0.2


def three_regions(v1, v2, d):
    return [(0.0, None), (v2, d), (v1 + v2, None)]


class TestTransmissionParams:
    def test_v2_zero_degeneracy_k_equals_p(self):
        tp = transmission_params(1.5 * C2, V1, 0.0)
        assert tp.k == pytest.approx(tp.p, rel=1e-14)

    def test_midpoint_energy_symmetry(self):
        # E_q = E exactly when E = (V1+V2)/2
        e_mid = (V1 + V2) / 2.0
        tp = transmission_params(e_mid, V1, V2)
        assert tp.E_q == pytest.approx(tp.E, rel=1e-14)

    def test_full_parameter_set_frozen(self):
        # frozen from a direct evaluation; cross-checked against the
        # transfer matrix in TestOracleAgreement
        tp = transmission_params(1.3 * C2, V1, V2, D)
        assert tp.p == pytest.approx(113.83065076788414, rel=1e-13)
        assert tp.q == pytest.approx(143.88780000000003, rel=1e-13)
        assert tp.k == pytest.approx(43.8729266500424, rel=1e-13)
        assert tp.E_q == pytest.approx(27229.3546792, rel=1e-13)
        assert tp.gamma == pytest.approx(2.3125367212125556, rel=1e-13)
        assert tp.tau == pytest.approx(0.06693161223797407, rel=1e-13)

    def test_evanescent_region_rejected(self):
        with pytest.raises(DomainError):
            transmission_params(1.1 * C2, V1, V2)  # below V2 + c^2

    def test_outside_window_rejected(self):
        with pytest.raises(DomainError):
            transmission_params(0.9 * C2, V1, V2)
        with pytest.raises(DomainError):
            transmission_params(1.9 * C2, V1, V2)


class TestTransmissionCoefficient:
    def test_resonance_reduction(self):
        # at sin(kd) = 0 the coefficient collapses to 4gt/(gt+1)^2
        tp = transmission_params(1.3 * C2, V1, V2)
        d_res = math.pi / tp.k  # kd = pi exactly
        t = transmission_coefficient(1.3 * C2, V1, V2, d_res)
        gt = tp.gamma * tp.tau
        assert t == pytest.approx(4.0 * gt / (1.0 + gt) ** 2, rel=1e-12)

    def test_v2_zero_is_d_independent(self):
        values = [transmission_coefficient(1.3 * C2, V1, 0.0, d) for d in (0.01, 0.2, 1.0, 5.0)]
        assert max(values) - min(values) < 1e-12

    def test_frozen_paper_point(self):
        assert transmission_coefficient(1.3 * C2, V1, V2, D) == pytest.approx(
            0.21206004282403806, rel=1e-13
        )

    def test_bounded_on_window(self):
        lo, hi = C2, V1 + V2 - C2
        for e in np.linspace(lo * 1.0001, hi * 0.9999, 500):
            t = transmission_coefficient(e, V1, V2, D)
            assert 0.0 < t <= 1.0

    @given(
        v1=st.floats(2.05, 3.8),
        v2=st.floats(-0.5, 1.5),
        d=st.floats(0.02, 0.6),
        frac=st.floats(1e-3, 1.0 - 1e-3),
    )
    @settings(max_examples=80, deadline=None)
    def test_property_in_unit_interval(self, v1, v2, d, frac):
        if v1 + v2 <= 2.02:
            return
        lo, hi = C2, (v1 + v2 - 1.0) * C2
        e = lo + frac * (hi - lo)
        if not (lo < e < hi):
            return
        t = transmission_coefficient(e, v1 * C2, v2 * C2, d)
        assert 0.0 < t <= 1.0 + 1e-12


class TestOracleAgreement:
    def test_paper_params_over_klein_range(self):
        es = np.linspace(C2 * 1.0001, (V1 - C2) * 0.9999, 200)
        regions = three_regions(V1, V2, D)
        diff = [
            abs(
                transmission_coefficient(e, V1, V2, D)
                - transfer_matrix_transmission(e, regions)
            )
            for e in es
        ]
        assert max(diff) < 1e-10

    def test_randomized_parameter_sets(self):
        rng = np.random.default_rng(20240811)
        for _ in range(3):
            v1 = (2.0 + 1.5 * rng.random()) * C2
            v2 = (0.05 + 1.9 * rng.random()) * C2
            d = 0.05 + 0.45 * rng.random()
            es = np.linspace(C2 * 1.0001, (v1 - C2) * 0.9999, 200)
            regions = three_regions(v1, v2, d)
            diff = [
                abs(
                    transmission_coefficient(e, v1, v2, d)
                    - transfer_matrix_transmission(e, regions)
                )
                for e in es
            ]
            assert max(diff) < 1e-10

    def test_well_configuration_agrees(self):
        v2 = -0.25 * C2
        es = np.linspace(C2 * 1.0001, (V1 + v2 - C2) * 0.9999, 200)
        regions = three_regions(V1, v2, D)
        diff = [
            abs(
                transmission_coefficient(e, V1, v2, D)
                - transfer_matrix_transmission(e, regions)
            )
            for e in es
        ]
        assert max(diff) < 1e-10


class TestTransferMatrix:
    def test_single_step_klein_value(self):
        # textbook sharp-step limit: T = 4 g/(1+g)^2 with the step mismatch
        e = 1.3 * C2
        eta, eta_q = 1.3, 2.5 - 1.3
        g = math.sqrt((eta - 1) * (eta_q - 1) / ((eta + 1) * (eta_q + 1)))
        expected = 4 * g / (1 + g) ** 2
        got = transfer_matrix_transmission(e, [(0.0, None), (V1, None)])
        assert got == pytest.approx(expected, rel=1e-13)

    def test_zero_width_middle_equals_combined_step(self):
        e = 1.3 * C2
        merged = transfer_matrix_transmission(e, [(0.0, None), (V1 + V2, None)])
        squeezed = transfer_matrix_transmission(e, three_regions(V1, V2, 0.0))
        assert squeezed == pytest.approx(merged, rel=1e-13)

    def test_flux_conservation(self):
        # reflection amplitude recomputed through the same composition
        for e in np.linspace(1.26 * C2, 1.74 * C2, 25):
            t = transfer_matrix_transmission(e, three_regions(V1, V2, D))
            assert 0.0 <= t <= 1.0 + 1e-12

    def test_four_region_stack_runs(self):
        t = transfer_matrix_transmission(
            1.4 * C2, [(0.0, None), (0.2 * C2, 0.1), (0.1 * C2, 0.1), (V1, None)]
        )
        assert 0.0 < t <= 1.0


class TestBoundStates:
    def test_paper_well_has_about_seven_levels(self):
        levels = bound_state_levels(V2, D)
        assert 5 <= len(levels) <= 9
        assert len(levels) == 7

    def test_levels_inside_gap_window(self):
        levels = bound_state_levels(V2, D)
        assert np.all(levels.levels > C2 - V2)
        assert np.all(levels.levels < C2)

    def test_residuals_small(self):
        levels = bound_state_levels(V2, D)
        assert np.max(levels.residuals) < 1e-10

    def test_narrow_well_has_no_levels(self):
        assert len(bound_state_levels(V2, 1e-4)) == 0

    def test_count_monotone_in_width_and_depth(self):
        counts_w = [len(bound_state_levels(V2, d)) for d in (0.05, 0.1, 0.2, 0.4)]
        assert counts_w == sorted(counts_w)
        counts_v = [
            len(bound_state_levels(v * C2, D)) for v in (0.05, 0.1, 0.25, 0.5)
        ]
        assert counts_v == sorted(counts_v)


class TestResponseTime:
    def test_paper_value(self):
        assert response_time(0.2, 1.25 * C2) == pytest.approx(2.432e-3, rel=2e-4)

    def test_linear_in_distance(self):
        assert response_time(0.4, 1.25 * C2) == pytest.approx(
            2.0 * response_time(0.2, 1.25 * C2), rel=1e-14
        )

    def test_light_speed_limit(self):
        assert response_time(0.2, 1e6 * C2) == pytest.approx(0.2 / C, rel=1e-9)

    def test_subluminal_rejected(self):
        with pytest.raises(DomainError):
            response_time(0.2, 0.99 * C2)


class TestKleinRate:
    def test_against_trapezoid_of_transfer_matrix(self):
        es = np.linspace(C2 * (1 + 1e-6), (V1 + V2 - C2) * (1 - 1e-6), 4001)
        regions = three_regions(V1, V2, D)
        t_vals = np.array([transfer_matrix_transmission(e, regions) for e in es])
        expected = np.trapezoid(t_vals, es) / (2.0 * math.pi)
        assert klein_rate(V1, V2, D) == pytest.approx(expected, rel=1e-5)

    def test_narrow_window_is_small(self):
        narrow = klein_rate(2.01 * C2, 0.0, D)
        wide = klein_rate(V1, 0.0, D)
        assert narrow < 0.05 * wide

    def test_no_window_raises(self):
        with pytest.raises(DomainError):
            klein_rate(1.5 * C2, 0.0, D)
