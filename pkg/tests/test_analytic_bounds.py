import numpy as np
import pytest

from pydantic import ValidationError

from hyperco.analytic_bounds import (
    BoundInput, gaussian_s, ex1_bound, ex2_bound, ex3_bound, ex3_mcor, theorem2_scalings, bound_sweep,
)
from hyperco.core_types import DomainError


class TestGaussian:
    @pytest.mark.parametrize("rho, expected", [(0.0, 0.0), (0.5, 0.25), (-0.9, 0.81)])
    def test_values(self, rho, expected):
        assert gaussian_s(rho) == pytest.approx(expected)

    def test_unit_correlation_rejected(self):
        with pytest.raises(DomainError):
            gaussian_s(1.0)


class TestExampleBounds:
    def test_ex1_vanishes_without_correlation(self):
        assert ex1_bound(1e-6, 0.3) == pytest.approx(0.0, abs=1e-9)

    def test_ex1_full_mass(self):
        assert ex1_bound(0.8, 1.0) == pytest.approx(0.5158, abs=1e-3)
        assert ex1_bound(0.8, 1.0) <= gaussian_s(0.8)

    def test_ex1_grows_with_alpha(self):
        values = [ex1_bound(0.8, a) for a in (0.05, 0.2, 0.5, 1.0)]
        assert values == sorted(values)

    @pytest.mark.parametrize("k, alpha, expected", [(2, 0.5, 0.5), (3, 1.0, 1.0), (4, 0.1, 0.3758)])
    def test_ex2(self, k, alpha, expected):
        assert ex2_bound(k, alpha) == pytest.approx(expected, abs=1e-4)

    def test_ex3_without_noise_is_ex2(self):
        assert ex3_bound(3, 0.2, 0.0) == pytest.approx(ex2_bound(3, 0.2))

    def test_ex3_fully_noisy(self):
        assert ex3_bound(2, 0.3, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_ex3_value(self):
        assert ex3_bound(3, 0.1, 0.1) == pytest.approx(0.2073, abs=1e-3)

    def test_ex3_eps_out_of_range(self):
        with pytest.raises(DomainError):
            ex3_bound(2, 0.5, 0.6)

    @pytest.mark.parametrize("k, alpha, eps, expected", [(3, 1.0, 0.0, 1.0), (3, 0.5, 2 / 3, 0.0), (3, 0.1, 0.1, 0.2688)])
    def test_ex3_mcor(self, k, alpha, eps, expected):
        assert ex3_mcor(k, alpha, eps) == pytest.approx(expected, abs=1e-4)


class TestScalings:
    def test_full_mass_is_identity(self):
        assert theorem2_scalings(1.0, (0.7, 0.6, 0.5)) == pytest.approx((0.7, 0.6, 0.5))

    def test_rare_mass(self):
        pred = theorem2_scalings(0.25, (1.0, 0.8, 0.9))
        assert pred.mcor == pytest.approx(0.5)
        assert pred.dcor == pytest.approx(0.2)
        assert pred.mic_upper == pytest.approx(0.225)
        assert theorem2_scalings(0.1, (1.0, 0.8, 1.0)).dcor == pytest.approx(0.08)

    def test_base_out_of_range(self):
        with pytest.raises(DomainError):
            theorem2_scalings(0.5, (1.2, 0.5, 0.5))


class TestSweep:
    def test_default_grid(self):
        frame = bound_sweep(2, k=2)
        assert list(frame.columns) == ["alpha", "s_lower_bound"]
        assert len(frame) == 100
        assert np.all(np.diff(frame["s_lower_bound"]) >= 0)

    def test_example3_has_mcor(self):
        frame = bound_sweep(3, k=3, eps=0.1, alphas=[0.1, 0.5])
        assert list(frame.columns) == ["alpha", "s_lower_bound", "mcor"]
        assert frame["mcor"].iloc[0] == pytest.approx(0.2688, abs=1e-4)

    def test_unknown_example(self):
        with pytest.raises(DomainError):
            bound_sweep(4)

    def test_input_model(self):
        with pytest.raises(ValidationError):
            BoundInput(k=2, eps=0.6)
        assert BoundInput(alpha=0.5, k=3, eps=0.5).eps == 0.5
