import math

import numpy as np
import pytest

from latmin.coefficients import CoefficientField
from latmin.functionals import (
    ProblemParams,
    gateaux_gradient,
    j1,
    j2,
    phi,
    phi_bar,
    residual_norm,
)
from latmin.lattice import LatticeBox, LatticeFunction, delta, embed, translate

from conftest import make_params


def random_fn(box, rng):
    return LatticeFunction(box, rng.uniform(-1.0, 1.0, box.site_count))


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            make_params(p=4, q=2)
        with pytest.raises(ValueError):
            make_params(p=2, q=2)  # degenerate p = q
        with pytest.raises(ValueError):
            make_params(p=1.5, q=3)
        with pytest.raises(ValueError):
            make_params(dim=1)
        with pytest.raises(ValueError):
            make_params(beta=0.0)

    def test_a_const_requires_constant_field(self):
        params = make_params()
        varying = CoefficientField.radial_limit(1.0, {(0, 0): 1.0})
        varied = ProblemParams(dim=2, p=2, q=4, a=varying, b=params.b)
        with pytest.raises(ValueError):
            varied.a_const


class TestJ1:
    def test_spike(self, std_params):
        assert j1(delta(LatticeBox(2, 2)), std_params) == pytest.approx(2.5)

    def test_zero(self, std_params):
        assert j1(LatticeFunction.zeros(LatticeBox(2, 2)), std_params) == 0.0

    def test_quadratic_scaling_at_p2(self, std_params):
        u = delta(LatticeBox(2, 2), height=2.0)
        assert j1(u, std_params) == pytest.approx(10.0)

    def test_scaling_bound(self, rng):
        params = make_params(p=3, q=5)
        u = random_fn(LatticeBox(2, 3), rng)
        base = j1(u, params)
        for t in (0.25, 0.9, 1.7, 3.0):
            assert j1(t * u, params) <= max(t**2, t**params.p) * base + 1e-12

    def test_variable_a_rejected(self):
        varying = CoefficientField.radial_limit(1.0, {(0, 0): 1.0})
        params = ProblemParams(dim=2, p=2, q=4, a=varying, b=CoefficientField.constant(1.0))
        with pytest.raises(ValueError):
            j1(delta(LatticeBox(2, 1)), params)


class TestJ2:
    def test_spike(self, std_params):
        assert j2(delta(LatticeBox(2, 2)), std_params) == 1.0

    def test_unit_spike_of_the_comparison_function(self):
        # the height beta^(-1/q) spike always has J2 = 1
        for beta in (0.25, 1.0, 16.0):
            params = make_params(beta=beta)
            v0 = delta(LatticeBox(2, 2), height=beta ** (-1 / 4))
            assert j2(v0, params) == pytest.approx(1.0, abs=1e-15)

    def test_zero(self, std_params):
        assert j2(LatticeFunction.zeros(LatticeBox(2, 1)), std_params) == 0.0

    def test_homogeneity(self, std_params, rng):
        u = random_fn(LatticeBox(2, 3), rng)
        base = j2(u, std_params)
        for t in (0.0, 0.5, 2.0):
            assert j2(t * u, std_params) == pytest.approx(t**4 * base, rel=1e-13)


class TestPhi:
    def test_spike_balanced(self, std_params):
        assert phi(delta(LatticeBox(2, 2)), std_params) == pytest.approx(2.25)

    def test_zero(self, std_params):
        assert phi(LatticeFunction.zeros(LatticeBox(2, 2)), std_params) == 0.0

    def test_spike_strong_b(self):
        params = make_params(b=9.0)
        assert phi(delta(LatticeBox(2, 2)), params) == pytest.approx(0.25)

    def test_equals_phi_bar_for_constant_fields(self, std_params, rng):
        u = random_fn(LatticeBox(2, 3), rng)
        assert phi(u, std_params) == phi_bar(u, std_params)

    def test_translation_invariance_inside_box(self, std_params, rng):
        box = LatticeBox(2, 8)
        u = embed(random_fn(LatticeBox(2, 3), rng), box)
        for shift in [(2, 0), (-1, 2), (0, -3)]:
            v = translate(u, shift)
            assert phi(v, std_params) == pytest.approx(phi(u, std_params), rel=1e-13)
            assert j1(v, std_params) == pytest.approx(j1(u, std_params), rel=1e-13)
            assert j2(v, std_params) == pytest.approx(j2(u, std_params), rel=1e-13)


class TestGateauxGradient:
    def test_spike_values(self, std_params):
        g = gateaux_gradient(delta(LatticeBox(2, 2)), std_params)
        assert g.value_at((0, 0)) == 4.0
        assert g.value_at((1, 0)) == -1.0

    def test_zero_function(self, std_params):
        g = gateaux_gradient(LatticeFunction.zeros(LatticeBox(2, 2)), std_params)
        assert not np.any(g.values)

    def test_directional_derivative_second_order(self, rng):
        # central differences of phi converge at rate h^2 to the pairing; the
        # h=1e-5 error sits near the float noise floor, so assert the order on
        # the median ratio (structurally ~10 for a first-order scheme)
        from statistics import median

        for p, q in [(2, 4), (3, 5)]:
            params = make_params(p=p, q=q)
            box = LatticeBox(2, 3)
            ratios = []
            for _ in range(50):
                u, direction = random_fn(box, rng), random_fn(box, rng)
                pairing = float(np.dot(gateaux_gradient(u, params).values, direction.values))
                errors = []
                for h in (1e-4, 1e-5):
                    fd = (
                        phi(LatticeFunction(box, u.values + h * direction.values), params)
                        - phi(LatticeFunction(box, u.values - h * direction.values), params)
                    ) / (2 * h)
                    errors.append(abs(fd - pairing))
                    assert abs(fd - pairing) <= 1e-6 * max(1.0, abs(pairing))
                if errors[1] > 0:
                    ratios.append(errors[0] / errors[1])
            assert 15 <= median(ratios) <= 500

    def test_variable_fields(self):
        a = CoefficientField.radial_limit(1.0, {(0, 0): 2.0})
        params = ProblemParams(dim=2, p=2, q=4, a=a, b=CoefficientField.constant(1.0))
        g = gateaux_gradient(delta(LatticeBox(2, 2)), params)
        # a(0,0) = 3, so g(0) = 4 + 3 - 1
        assert g.value_at((0, 0)) == 6.0


class TestResidualNorm:
    def test_zero(self, std_params):
        assert residual_norm(LatticeFunction.zeros(LatticeBox(2, 2)), std_params) == 0.0

    def test_spike(self, std_params):
        res = residual_norm(delta(LatticeBox(2, 2)), std_params)
        assert res == pytest.approx(math.sqrt(20.0))

    def test_solver_output_is_small(self, std_params, solved_r8):
        # independently recompute the residual at the returned b
        params = std_params.with_constant_b(solved_r8.b_tilde)
        assert residual_norm(solved_r8.u0, params) <= 1e-8
