from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest
from conftest import LANDETE, LANDETE_SPACE, XI_U_POINTS, models
from hypothesis import assume, given
from hypothesis import strategies as st

from invquad.design import _equilibrate
from invquad.design import (
    Criterion,
    Design,
    DesignSpace,
    apportion,
    criterion_value,
    d1_value,
    design_from_json,
    design_to_json,
    efficiency,
    estimable,
    generalized_c_form,
    ginverse_apply,
    information_matrix,
    load_design,
    mixture,
    pseudo_inverse,
    rank,
    save_design,
    uniform_design,
)
from invquad.errors import (
    InfeasibleApportionment,
    NotEstimable,
    SingularMatrix,
    ValidationError,
)
from invquad.model import ModelSpec, gradient, peak_location
from invquad.optimize import grid_oracle, optimal_design

P1 = ModelSpec("P1", (1, 0, 1))
TABLE51_D1 = Design([1, 3.3561, 14], [0.1239, 0.2884, 0.5877])


@st.composite
def designs(draw, max_points=6):
    n = draw(st.integers(1, max_points))
    pts = sorted(set(draw(st.lists(st.floats(0.05, 20), min_size=n, max_size=n))))
    pts = [p for i, p in enumerate(pts) if i == 0 or p - pts[i - 1] > 1e-3]
    raw = np.array(draw(st.lists(st.floats(0.05, 1), min_size=len(pts), max_size=len(pts))))
    return Design(pts, raw / raw.sum())


class TestDesignSpaceAndDesign:
    def test_space_validation(self):
        with pytest.raises(ValidationError):
            DesignSpace(-1, 2)
        with pytest.raises(ValidationError):
            DesignSpace(3, 3)
        assert not DesignSpace().bounded
        assert str(DesignSpace(1, 14)) == "[1, 14]"

    @pytest.mark.parametrize("pts, w", [
        ([1, 2], [0.5, 0.6]),
        ([1, 2], [1.0, 0.0]),
        ([2, 1], [0.5, 0.5]),
        ([-1, 1], [0.5, 0.5]),
        ([1, 2, 3], [0.5, 0.5]),
    ])
    def test_rejects(self, pts, w):
        with pytest.raises(ValidationError):
            Design(pts, w)

    def test_outside_space_and_duplicates(self):
        with pytest.raises(ValidationError):
            Design([0.5, 2], [0.5, 0.5], LANDETE_SPACE)
        with pytest.raises(ValidationError):
            Design([2, 2 + 1e-9], [0.5, 0.5], LANDETE_SPACE)

    def test_immutable(self):
        d = uniform_design([1, 2, 3])
        with pytest.raises(ValueError):
            d.weights[0] = 1.0


class TestInformationMatrix:
    def test_one_point(self):
        np.testing.assert_allclose(information_matrix(Design([1], [1]), P1), np.full((3, 3), 0.0625))

    def test_origin_contributes_nothing(self):
        np.testing.assert_array_equal(information_matrix(Design([0], [1]), P1), np.zeros((3, 3)))

    @given(models(), designs(), designs(), st.floats(0, 1))
    def test_linear_in_weights(self, m, a, b, alpha):
        mix = mixture(a, b, alpha) if 0 < alpha < 1 else (a if alpha == 1 else b)
        lhs = information_matrix(mix, m)
        rhs = alpha * information_matrix(a, m) + (1 - alpha) * information_matrix(b, m)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12 * np.abs(rhs).max())

    @given(models(), designs(max_points=2))
    def test_det_zero_below_three_points(self, m, d):
        assert criterion_value(d, Criterion.D(), m) == 0.0
        assert rank(information_matrix(d, m)) <= 2

    def test_zero_point_excluded_from_rank(self):
        d = Design([0, 1, 2], [0.4, 0.3, 0.3])
        assert criterion_value(d, Criterion.D(), P1) == 0.0

    def test_landete_d_design_matches_grid_maximum(self):
        d, _ = optimal_design(LANDETE, Criterion.D(), LANDETE_SPACE)
        g = grid_oracle(LANDETE, Criterion.D(), LANDETE_SPACE, grid_size=201)
        det_opt = np.linalg.det(information_matrix(d, LANDETE))
        det_grid = np.linalg.det(information_matrix(g, LANDETE))
        assert det_opt >= det_grid
        assert det_opt == pytest.approx(det_grid, rel=1e-3)


class TestEstimability:
    def test_examples(self):
        c = [0, 0, 1]
        assert not estimable(c, np.zeros((3, 3)))
        u0 = 2.0
        m1 = information_matrix(Design([u0], [1]), P1)
        assert estimable(gradient(P1, u0), m1)
        m3 = information_matrix(uniform_design([0.5, 1, 4]), P1)
        assert estimable(c, m3)

    def test_generalized_c_form_examples(self):
        assert generalized_c_form([0, 0, 1], np.eye(3)) == pytest.approx(1.0)
        assert generalized_c_form([1, 0, 0], np.diag([1.0, 1.0, 0.0])) == pytest.approx(1.0)
        with pytest.raises(NotEstimable):
            generalized_c_form([0, 0, 1], np.diag([1.0, 1.0, 0.0]))

    @given(models(), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.05, 0.95))
    def test_rank2_ridge_limit(self, m, a, b, w):
        # ridge bias is eps / lambda_min, so keep the two gradients well apart
        assume(max(a, b) / min(a, b) > 1.25)
        p = peak_location(m)
        d = Design(sorted([a * p, b * p]), [w, 1 - w] if a < b else [1 - w, w])
        M = information_matrix(d, m)
        assert rank(M) == 2
        c = 0.3 * gradient(m, a * p) - 1.7 * gradient(m, b * p)
        val = generalized_c_form(c, M)
        # the point a*p always carries weight w
        assert val == pytest.approx(0.09 / w + 2.89 / (1 - w), rel=1e-9)
        # ridge limit in equilibrated coordinates so the 1e-8 and 1e-10 ridges
        # are meaningful relative to M
        dd = np.sqrt(np.diag(M))
        S = M / np.outer(dd, dd)
        ridge = [(c / dd) @ np.linalg.solve(S + eps * np.eye(3), c / dd) for eps in (1e-8, 1e-10)]
        assert ridge[1] == pytest.approx(val, rel=1e-6)
        assert abs(ridge[1] - val) <= abs(ridge[0] - val) + 1e-12 * val

    @given(models(), designs())
    def test_ginverse_invariance(self, m, d):
        d = Design(d.points * peak_location(m) / 2, d.weights)
        M = information_matrix(d, m)
        a = np.linspace(1.0, 0.5, d.size)
        c = a @ gradient(m, d.points)
        assume(estimable(c, M))
        v = generalized_c_form(c, M)
        if d.size <= 3:
            # independent gradients: c^T M^- c = a^T W^-1 a exactly, up to the
            # conditioning of the equilibrated gradient matrix
            F = gradient(m, d.points)
            tol = 1e-9 + 100 * np.linalg.cond(F / np.linalg.norm(F, axis=0)) ** 2 * np.finfo(float).eps
            assert v == pytest.approx(float(np.sum(a * a / d.weights)), rel=tol)
        assert c @ ginverse_apply(M, c) == pytest.approx(v, rel=1e-9)
        # the explicit M^+ matrix carries roundoff of order cond(S) * eps
        S, _ = _equilibrate(M)
        cond = np.linalg.cond(S) if np.linalg.matrix_rank(S) == 3 else 1e6
        rel = 1e-9 + 10 * cond * np.finfo(float).eps
        assert c @ pseudo_inverse(M) @ c == pytest.approx(v, rel=rel)

    def test_pseudo_inverse_penrose(self):
        d = Design([0.5, 2.0], [0.3, 0.7])
        M = information_matrix(d, P1)
        G = pseudo_inverse(M)
        np.testing.assert_allclose(M @ G @ M, M, atol=1e-12 * np.abs(M).max())
        np.testing.assert_allclose(G @ M @ G, G, atol=1e-10 * np.abs(G).max())
        np.testing.assert_allclose(G, np.linalg.pinv(M), rtol=1e-8, atol=1e-10 * np.abs(G).max())

    def test_d1_identity(self):
        for pts in ([0.5, 1, 4], [1, 3.3561, 14]):
            M = information_matrix(uniform_design(pts), LANDETE)
            assert d1_value(M) == pytest.approx(1.0 / generalized_c_form([0, 0, 1], M), rel=1e-8)

    def test_d1_singular_block(self):
        with pytest.raises(SingularMatrix):
            d1_value(np.diag([1.0, 0.0, 1.0]))


class TestEfficiency:
    def test_self_efficiency(self):
        d = uniform_design([1, 3, 14])
        for c in (Criterion.D(), Criterion.E(), Criterion.D1(), Criterion.extrapolation(21)):
            assert efficiency(d, c, d, LANDETE) == pytest.approx(100.0)

    def test_landete_uniform_design(self):
        xi_u = uniform_design(XI_U_POINTS, LANDETE_SPACE)
        d_opt, _ = optimal_design(LANDETE, Criterion.D(), LANDETE_SPACE)
        assert efficiency(xi_u, Criterion.D(), d_opt, LANDETE) == pytest.approx(69.92, abs=0.05)

    def test_d_conventions(self):
        xi_u = uniform_design(XI_U_POINTS, LANDETE_SPACE)
        d_opt, _ = optimal_design(LANDETE, Criterion.D(), LANDETE_SPACE)
        det_ratio = efficiency(xi_u, Criterion.D(), d_opt, LANDETE, "det") / 100
        assert efficiency(xi_u, Criterion.D(), d_opt, LANDETE, "sqrt") / 100 == pytest.approx(det_ratio**0.5)
        assert efficiency(xi_u, Criterion.D(), d_opt, LANDETE, "cbrt") / 100 == pytest.approx(det_ratio ** (1 / 3))

    def test_reference_cell_is_d_efficiency_of_e_design(self):
        # the 94.18 cell of the efficiency table is the D-efficiency of the
        # E-optimal design; the E-efficiency of the D-optimal design is 93.96
        d_opt, _ = optimal_design(LANDETE, Criterion.D(), LANDETE_SPACE)
        e_opt, _ = optimal_design(LANDETE, Criterion.E(), LANDETE_SPACE)
        assert efficiency(e_opt, Criterion.D(), d_opt, LANDETE) == pytest.approx(94.18, abs=0.05)
        assert efficiency(d_opt, Criterion.E(), e_opt, LANDETE) == pytest.approx(93.96, abs=0.05)

    @pytest.mark.parametrize("crit", [Criterion.D(), Criterion.E(), Criterion.D1(), Criterion.extrapolation(21)])
    def test_bounded_by_certified_optimum(self, crit, rng):
        opt, report = optimal_design(LANDETE, crit, LANDETE_SPACE)
        assert report.passed
        for _ in range(30):
            k = rng.integers(3, 7)
            pts = np.sort(rng.choice(np.linspace(1, 14, 131), size=k, replace=False))
            w = rng.dirichlet(np.ones(k))
            d = Design(pts, w, LANDETE_SPACE)
            assert efficiency(d, crit, opt, LANDETE) <= 100 + 1e-9


def quota_feasible(w, n):
    lo = np.maximum(1, np.floor(n * w))
    hi = np.maximum(1, np.ceil(n * w))
    return lo.sum() <= n <= hi.sum()


class TestApportion:
    def test_examples(self):
        eq = uniform_design([1, 2, 3])
        np.testing.assert_array_equal(apportion(eq, 9), [3, 3, 3])
        k = apportion(eq, 10)
        assert k.sum() == 10 and set(k.tolist()) <= {3, 4}
        k = apportion(TABLE51_D1, 100)
        assert k.sum() == 100
        assert np.all(np.abs(k - 100 * TABLE51_D1.weights) <= 1)

    def test_infeasible(self):
        with pytest.raises(InfeasibleApportionment):
            apportion(uniform_design([1, 2, 3]), 2)

    @given(st.lists(st.floats(1e-3, 1), min_size=1, max_size=8), st.integers(1, 500))
    def test_quota_bound(self, raw, n):
        raw = np.array(raw)
        d = Design(np.arange(1, raw.size + 1), raw / raw.sum())
        if n < d.size:
            return
        k = apportion(d, n)
        assert k.sum() == n
        assert np.all(k >= 1)
        if quota_feasible(d.weights, n):
            assert np.all(np.abs(k - n * d.weights) <= 1 + 1e-9)

    def test_exhaustive_small(self):
        for w in itertools.product(range(1, 8), repeat=3):
            w = np.array(w, float) / sum(w)
            d = Design([1, 2, 3], w)
            for n in (3, 4, 7, 10, 37):
                k = apportion(d, n)
                assert k.sum() == n
                if quota_feasible(w, n):
                    assert np.all(np.abs(k - n * w) <= 1 + 1e-12)


class TestDesignFile:
    def test_round_trip(self, tmp_path):
        d = Design([1, 3.3561, 14], [0.1239, 0.2884, 0.5877], LANDETE_SPACE)
        crit = Criterion.extrapolation(21)
        path = tmp_path / "d.json"
        save_design(path, LANDETE, LANDETE_SPACE, d, crit)
        back = load_design(path)
        np.testing.assert_array_equal(back.design.points, d.points)
        np.testing.assert_allclose(back.design.weights, d.weights, rtol=1e-15)
        assert back.model == LANDETE and back.criterion == crit
        assert back.space == LANDETE_SPACE

    def test_unbounded_space_json(self):
        d = Design([0.5, 1, 2], [0.2, 0.3, 0.5])
        data = json.loads(json.dumps(design_to_json(P1, DesignSpace(), d)))
        assert data["space"]["t"] == "inf"
        assert math.isinf(design_from_json(data).space.t)

    def test_weight_sum_tolerance(self):
        base = {"model": {"kind": "P1", "theta": [1, 0, 1]}, "space": {"s": 0, "t": "inf"},
                "points": [1, 2], "weights": [0.5, 0.5 + 5e-10]}
        f = design_from_json(base)
        assert f.design.weights.sum() == pytest.approx(1.0, abs=1e-15)
        base["weights"] = [0.5, 0.5 + 1e-8]
        with pytest.raises(ValidationError):
            design_from_json(base)

    def test_malformed(self):
        with pytest.raises(ValidationError):
            design_from_json({"points": [1]})
