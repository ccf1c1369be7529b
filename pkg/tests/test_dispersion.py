import numpy as np
import pytest

import kpilab as kl
from kpilab.errors import ParameterError


def central_difference(f, x, step=1e-5):
    return (f(x + step) - f(x - step)) / (2.0 * step)


def second_difference(f, x, step=1e-5):
    return (f(x + step) - 2.0 * f(x) + f(x - step)) / step**2


def bisect_root(f, lo, hi, tol=1e-14):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


class TestFrequency:
    def test_kp1_values(self, kp_params):
        assert kl.dispersion_relation(1, 0, kp_params) == 1.0
        assert kl.dispersion_relation(2, 3, kp_params) == 12.5
        assert kl.dispersion_relation(-1, 1, kp_params) == -2.0

    def test_oddness(self, kp_params, rng):
        for _ in range(50):
            k = int(rng.integers(1, 40)) * (1 if rng.random() < 0.5 else -1)
            l = int(rng.integers(-20, 21))
            assert kl.dispersion_relation(-k, l, kp_params) == -kl.dispersion_relation(
                k, l, kp_params
            )

    def test_zero_mode_rejected(self, kp_params):
        with pytest.raises(ParameterError):
            kl.dispersion_relation(0, 3, kp_params)

    def test_reduced_mode_uses_lam(self):
        p = kl.DispersionParams.reduced(2.0, 3.0)
        assert kl.dispersion_relation(1, 99, p) == 1.0 + 9.0


class TestGroupVelocity:
    def test_kdv_value(self):
        p = kl.DispersionParams.reduced(2.0, 1.0)
        assert kl.group_velocity(1.0, p) == 2.0

    def test_vanishes_at_critical(self):
        p = kl.DispersionParams.reduced(2.0, 1.0)
        assert abs(kl.group_velocity(3.0**-0.25, p)) < 1e-12
        p1 = kl.DispersionParams.reduced(1.0, 1.0)
        assert abs(kl.group_velocity(2.0 ** (-1.0 / 3.0), p1)) < 1e-12

    def test_matches_finite_differences(self, rng):
        for alpha, lam in [(2.0, 1.0), (0.5, 1.0), (1.3, 2.5)]:
            p = kl.DispersionParams.reduced(alpha, lam)
            phi = lambda x: abs(x) ** alpha * x + lam**2 / x
            for _ in range(100):
                xi = float(rng.uniform(0.1, 10.0))
                fd = central_difference(phi, xi)
                assert abs(kl.group_velocity(xi, p) - fd) < 1e-6 * max(1.0, abs(fd))

    def test_monotone_dichotomy(self):
        p = kl.DispersionParams.reduced(2.0, 1.0)
        xi0 = 3.0**-0.25
        for xi in np.linspace(0.02, xi0 * 0.999, 50):
            assert kl.group_velocity(float(xi), p) < 0
        for xi in np.linspace(xi0 * 1.001, 20.0, 50):
            assert kl.group_velocity(float(xi), p) > 0

    def test_zero_rejected(self):
        with pytest.raises(ParameterError):
            kl.group_velocity(0.0, kl.DispersionParams.reduced(2.0, 1.0))


class TestCriticalPoints:
    def test_kdv_lambda_one(self):
        plus, minus = kl.critical_points(kl.DispersionParams.reduced(2.0, 1.0))
        assert abs(plus.xi0 - 3.0**-0.25) < 1e-14
        assert minus.xi0 == -plus.xi0
        assert abs(plus.phi_pp - 12.0 / 3.0**0.25) < 1e-12

    def test_lambda_two_against_bisection(self):
        p = kl.DispersionParams.reduced(2.0, 2.0)
        root = bisect_root(lambda x: kl.group_velocity(x, p), 0.5, 2.0)
        plus, _ = kl.critical_points(p)
        assert abs(plus.xi0 - root) < 1e-12
        assert abs(plus.xi0 - (4.0 / 3.0) ** 0.25) < 1e-12

    def test_alpha_one_closed_form(self):
        plus, _ = kl.critical_points(kl.DispersionParams.reduced(1.0, 1.0))
        assert abs(plus.xi0 - 2.0 ** (-1.0 / 3.0)) < 1e-14

    def test_no_transverse_no_critical_point(self):
        assert kl.critical_points(kl.DispersionParams.reduced(2.0, 0.0)) == ()


class TestSemiclassicalTranslation:
    def test_offset_arithmetic(self):
        p = kl.DispersionParams.reduced(2.0, 1.0)
        data = kl.semiclassical_translation(0.1, p)
        xi0 = 3.0**-0.25
        assert abs(data.xi0 - xi0) < 1e-14
        assert abs(data.sigma_h - (xi0 - 0.7)) < 1e-14
        assert abs(data.r_h - data.sigma_h / 0.1) < 1e-14
        assert 0.0 <= data.sigma_h < 0.1

    def test_curvature_translates_exactly(self):
        p = kl.DispersionParams.reduced(2.0, 1.0)
        data = kl.semiclassical_translation(0.1, p)
        assert abs(data.phi_pp - 12.0 / 3.0**0.25) < 1e-10

    def test_half_curvature_alpha_one_fd_oracle(self):
        # step 1e-4: the roundoff floor of the second difference at 1e-5
        # already exceeds the 1e-6 tolerance
        p = kl.DispersionParams.reduced(1.0, 1.0)
        data = kl.semiclassical_translation(0.05, p)
        phi = lambda x: abs(x) * x + 1.0 / x
        fd = second_difference(phi, data.xi0, step=1e-4)
        assert abs(2.0 * data.a0 - fd) < 1e-6

    def test_h_range(self):
        p = kl.DispersionParams.reduced(2.0, 1.0)
        with pytest.raises(ParameterError):
            kl.semiclassical_translation(1.5, p)
        with pytest.raises(ParameterError):
            kl.semiclassical_translation(0.1, kl.DispersionParams.reduced(2.0, 0.0))


class TestModularPair:
    def test_examples(self):
        assert kl.modular_pair(0.0) == (0.5, 0.5)
        assert kl.modular_pair(0.3) == (0.3, 0.3)
        assert kl.modular_pair(0.45) == (0.45, 0.45)

    def test_window_and_identity(self, rng):
        r = rng.random(10_000)
        for ri in r:
            mu1, mu2 = kl.modular_pair(float(ri))
            assert 0.125 <= mu1 <= 0.875 and mu1 == mu2
            defect = (mu1 + mu2 - 2.0 * ri) % 1.0
            assert min(defect, 1.0 - defect) < 1e-12

    def test_range_check(self):
        with pytest.raises(ParameterError):
            kl.modular_pair(1.0)
        with pytest.raises(ParameterError):
            kl.modular_pair(-0.1)
