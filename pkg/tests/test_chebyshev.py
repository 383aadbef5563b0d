from __future__ import annotations

import numpy as np
import pytest
from conftest import LANDETE, LANDETE_SPACE, models, random_model
from hypothesis import given
from hypothesis import strategies as st

from invquad.chebyshev import (
    chebyshev_points,
    equioscillation_coefficients,
    in_a_star,
    optimal_weights_for_c,
    system_determinant,
)
from invquad.closed_form import d1_weights_printed, e_chebyshev_vector, geometric_support, scaling_factor_d1
from invquad.design import DesignSpace
from invquad.errors import SingularSystem, ValidationError
from invquad.model import ModelSpec, gradient, peak_location

P1 = ModelSpec("P1", (1, 0, 1))
P2 = ModelSpec("P2", (1, 1, 1))
TABLE51_POINTS = [1, 3.3561, 14]


def assert_equioscillates(model, sol, space):
    np.testing.assert_allclose(sol.phi(model, sol.points), [1, -1, 1], atol=1e-8)
    p = peak_location(model)
    hi = space.t if space.bounded else 1e3 * p
    lo = space.s if space.s > 0 else p * 1e-4
    g = np.union1d(np.geomspace(lo, hi, 20000), np.linspace(lo, hi, 20000))
    assert np.max(np.abs(sol.phi(model, g))) <= 1 + 1e-8


class TestSystemDeterminant:
    def test_nonzero(self):
        assert system_determinant(P1, [1, 2, 3]) != 0

    @pytest.mark.parametrize("pts", [[1, 1, 2], [1, 2], [0, 1, 2]])
    def test_rejects(self, pts):
        with pytest.raises(ValidationError):
            system_determinant(P1, pts)

    @given(models(), st.lists(st.floats(0.05, 20), min_size=3, max_size=3, unique=True))
    def test_chebyshev_sign(self, m, r):
        # a Chebyshev system keeps one determinant sign on ordered triples
        r = sorted(r)
        if min(np.diff(r)) < 1e-2:
            return
        p = peak_location(m)
        ref = np.sign(system_determinant(m, [0.5 * p, p, 2 * p]))
        assert np.sign(system_determinant(m, np.array(r) * p)) == ref


class TestInAStar:
    def test_examples(self):
        assert in_a_star([0, 0, 1], LANDETE, LANDETE_SPACE)
        assert in_a_star(gradient(LANDETE, 21.0), LANDETE, LANDETE_SPACE)
        assert not in_a_star(gradient(LANDETE, 5.0), LANDETE, LANDETE_SPACE)

    def test_d1_vector_p1_unbounded(self):
        assert in_a_star([0, 0, 1], P1, DesignSpace())

    def test_zero_vector(self):
        with pytest.raises(ValidationError):
            in_a_star([0, 0, 0], P1, DesignSpace())


class TestChebyshevPoints:
    def test_p1_unbounded(self):
        sol = chebyshev_points(P1)
        rho = 4.611582
        np.testing.assert_allclose(sol.points, [1 / rho, 1, rho], rtol=1e-6)
        assert_equioscillates(P1, sol, DesignSpace())

    def test_landete(self):
        sol = chebyshev_points(LANDETE, LANDETE_SPACE)
        np.testing.assert_allclose(sol.points, TABLE51_POINTS, atol=1e-4)
        assert sol.points[0] == 1 and sol.points[2] == 14
        assert sol.form == "BothPinned"
        assert_equioscillates(LANDETE, sol, LANDETE_SPACE)

    def test_p2_unbounded(self):
        sol = chebyshev_points(P2)
        assert sol.points[1] == pytest.approx(1.0, rel=1e-9)
        assert_equioscillates(P2, sol, DesignSpace())

    def test_sign_convention(self):
        sol = chebyshev_points(LANDETE, LANDETE_SPACE)
        assert sol.phi(LANDETE, sol.points[2]) == pytest.approx(1.0)
        half = sol.scaled(0.5)
        assert half.phi(LANDETE, sol.points[2]) == pytest.approx(0.5)

    @pytest.mark.parametrize("kind", ["P1", "P2"])
    def test_closed_form_consistency(self, kind, rng):
        for _ in range(50):
            m = random_model(rng, kind)
            sol = chebyshev_points(m)
            rho = scaling_factor_d1(m).rho
            np.testing.assert_allclose(sol.points, geometric_support(m, rho), rtol=1e-9)
            np.testing.assert_allclose(sol.coefficients, e_chebyshev_vector(m, rho), rtol=1e-7)

    @pytest.mark.parametrize("space", [DesignSpace(0.5, 100), DesignSpace(0, 2), DesignSpace(0.5, 2),
                                       DesignSpace(0.9, 1.3)])
    def test_bounded_forms(self, space):
        sol = chebyshev_points(P1, space)
        assert_equioscillates(P1, sol, space)
        assert space.contains(sol.points)

    def test_pinned_points_exact(self):
        sol = chebyshev_points(P1, DesignSpace(0.5, 2))
        assert sol.points[0] == 0.5 and sol.points[2] == 2.0

    def test_deterministic(self):
        a = chebyshev_points(LANDETE, LANDETE_SPACE)
        b = chebyshev_points(LANDETE, LANDETE_SPACE)
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)


class TestOptimalWeights:
    def test_table51_d1(self):
        w = optimal_weights_for_c(TABLE51_POINTS, [0, 0, 1], LANDETE)
        np.testing.assert_allclose(w, [0.1239, 0.2884, 0.5877], atol=1e-4)

    def test_table51_extrapolation(self):
        w = optimal_weights_for_c(TABLE51_POINTS, gradient(LANDETE, 21.0), LANDETE)
        np.testing.assert_allclose(w, [0.0582, 0.1535, 0.7883], atol=1e-4)

    def test_table51_e(self):
        sol = chebyshev_points(LANDETE, LANDETE_SPACE)
        w = optimal_weights_for_c(sol.points, sol.coefficients, LANDETE)
        np.testing.assert_allclose(w, [0.3972, 0.3914, 0.2114], atol=1e-4)

    def test_theorem_weights_random(self, rng):
        for _ in range(100):
            m = random_model(rng, "P1")
            rho = scaling_factor_d1(m).rho
            w = optimal_weights_for_c(geometric_support(m, rho), [0, 0, 1], m)
            np.testing.assert_allclose(w, d1_weights_printed(m, rho), atol=1e-10)

    @given(models(), st.floats(-1e3, 1e3).filter(lambda k: abs(k) > 1e-3))
    def test_scaling_invariance(self, m, k):
        pts = geometric_support(m, 3.0)
        c = np.array([0.3, -1.0, 2.0])
        np.testing.assert_allclose(optimal_weights_for_c(pts, k * c, m),
                                   optimal_weights_for_c(pts, c, m), rtol=1e-12)

    def test_singular(self):
        with pytest.raises(SingularSystem):
            optimal_weights_for_c([0, 1, 2], [0, 0, 1], P1)

    def test_equioscillation_coefficients(self):
        pts = [0.5, 1, 3]
        a = equioscillation_coefficients(P1, pts)
        np.testing.assert_allclose(gradient(P1, np.array(pts)) @ a, [1, -1, 1])
