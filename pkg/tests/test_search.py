import math

import numpy as np
import pytest

from histentropy.decoherence import from_chain, from_single_time, from_two_time
from histentropy.entropy import i_norm, is_consistent
from histentropy.histories import (
    homogeneous_window,
    standard_basis_window,
    trivial_window,
    window_from_unitary,
)
from histentropy.linalg import random_density_matrix, random_resolution, random_unitary, vn_entropy
from histentropy.search import (
    StrategyError,
    homogeneous_lower_bound,
    max_rank1_probability,
    minimize_exhaustive,
    minimize_greedy_refinement,
    minimize_parametrized_1d,
    minimize_spectral,
    rank1_probability,
    spectral_window,
)

LOG2 = math.log(2)
SPECTRAL_34 = -0.8239592165010823


def check_result(d, res, tol=1e-9):
    assert is_consistent(d, res.best_window, tol)
    assert abs(res.best_value - i_norm(d, res.best_window, tol)) <= 1e-12
    assert -2 * math.log(d.dim_v) - 1e-9 <= res.best_value <= 1e-9


class TestSpectral:
    def test_diag_rho(self):
        d = from_single_time(np.diag([0.75, 0.25]))
        res = minimize_spectral(d)
        assert res.best_value == pytest.approx(SPECTRAL_34, abs=1e-12)
        assert not res.is_bound
        check_result(d, res)

    def test_maximally_mixed(self):
        res = minimize_spectral(from_single_time(np.eye(2) / 2))
        assert res.best_value == pytest.approx(-LOG2, abs=1e-12)

    def test_two_time_pure(self, rng):
        v = random_unitary(2, rng)[:, 0]
        rho = np.outer(v, v.conj())
        d = from_chain(rho, [random_unitary(2, rng) for _ in range(3)], 2)
        res = minimize_spectral(d)
        assert res.best_value == pytest.approx(-4 * LOG2, abs=1e-9)
        check_result(d, res)

    def test_degenerate_rho(self):
        d = from_single_time(np.diag([0.5, 0.25, 0.25]))
        res = minimize_spectral(d)
        assert res.best_window.dims == [1, 1, 1]
        assert res.best_value == pytest.approx(homogeneous_lower_bound(d), abs=1e-12)

    def test_needs_recipe(self, d_x2):
        with pytest.raises(StrategyError):
            minimize_spectral(d_x2)

    def test_non_unitary(self):
        d = from_chain(np.eye(2) / 2, [np.eye(2), 0.5 * np.eye(2)], 1)
        with pytest.raises(StrategyError):
            spectral_window(d)


class TestParametrized:
    def test_x1(self, d_x1):
        res = minimize_parametrized_1d(d_x1)
        assert res.best_value == 0.0
        assert res.best_window.dims == [2]
        assert res.diagnostics["min_rank1_residual"] >= 0.25 - 1e-9
        assert res.is_bound

    def test_x2(self, d_x2):
        res = minimize_parametrized_1d(d_x2)
        assert res.best_value == pytest.approx(-2 * LOG2, abs=1e-12)
        check_result(d_x2, res)

    def test_single_time(self, rng):
        d = from_single_time(random_density_matrix(3, rng))
        res = minimize_parametrized_1d(d, samples=16, seed=1)
        check_result(d, res)
        assert res.best_value >= homogeneous_lower_bound(d) - 1e-9
        assert res.best_value <= homogeneous_lower_bound(d) + 1e-6

    def test_deterministic(self, d_x2):
        a = minimize_parametrized_1d(d_x2, seed=7)
        b = minimize_parametrized_1d(d_x2, seed=7)
        assert a.as_dict() == b.as_dict()


class TestGreedy:
    def test_x1(self, d_x1):
        res = minimize_greedy_refinement(d_x1)
        assert res.best_value == 0.0 and res.best_window.dims == [2]

    def test_x2(self, d_x2):
        res = minimize_greedy_refinement(d_x2)
        assert res.best_value == pytest.approx(-2 * LOG2, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_single_time(self, n):
        rng = np.random.default_rng(100 + n)
        d = from_single_time(random_density_matrix(n, rng))
        res = minimize_greedy_refinement(d, seed=n)
        check_result(d, res)
        assert abs(res.best_value - minimize_spectral(d).best_value) < 1e-6

    def test_needs_explicit(self):
        d = from_chain(np.eye(2) / 2, [np.eye(2)] * 3, 2)
        with pytest.raises(StrategyError):
            minimize_greedy_refinement(d)

    def test_deterministic(self, rng):
        d = from_single_time(random_density_matrix(3, rng))
        assert minimize_greedy_refinement(d, seed=4).as_dict() == minimize_greedy_refinement(d, seed=4).as_dict()


class TestExhaustive:
    def test_diagonal_rho(self):
        rho = np.diag([0.5, 0.3, 0.2])
        d = from_single_time(rho)
        res = minimize_exhaustive(d, np.eye(3))
        assert res.evaluations == 5
        assert res.best_value == pytest.approx(vn_entropy(rho) - 2 * math.log(3), abs=1e-12)

    def test_trivial_only(self, rng):
        d = from_single_time(random_density_matrix(2, rng))
        assert minimize_exhaustive(d, [trivial_window(2)]).best_value == 0.0

    def test_nothing_else_consistent(self, d_x1):
        res = minimize_exhaustive(d_x1, [trivial_window(2), standard_basis_window(2)])
        assert res.best_value == 0.0 and res.best_window.dims == [2]

    def test_empty(self, d_x1):
        with pytest.raises(ValueError):
            minimize_exhaustive(d_x1, [])

    def test_not_worse_than_spectral(self, rng):
        for _ in range(10):
            d = from_single_time(random_density_matrix(3, rng))
            fam = [spectral_window(d), window_from_unitary(random_unitary(3, rng))]
            assert minimize_exhaustive(d, fam).best_value <= minimize_spectral(d).best_value + 1e-9


class TestTwoTimeMixed:
    @pytest.mark.parametrize("n", [2, 3])
    def test_spectral(self, n):
        d = from_two_time(np.eye(n) / n)
        assert minimize_spectral(d).best_value == pytest.approx(-3 * math.log(n), abs=1e-9)

    def test_symmetric_amplitudes_attain(self):
        d = from_two_time(np.eye(2) / 2)
        v = np.array([1, 0.3, 0.3, -0.5], dtype=complex)
        assert rank1_probability(d, v) == pytest.approx(0.5, abs=1e-14)

    def test_max_probability(self):
        p, _ = max_rank1_probability(from_two_time(np.eye(2) / 2), samples=100, seed=0)
        assert 0.5 - 1e-6 <= p <= 0.5 + 1e-9


class TestHomogeneousBound:
    @pytest.mark.parametrize("h,n", [(2, 1), (3, 1), (2, 2), (3, 2)])
    def test_sampled_windows_do_not_beat_spectral(self, h, n):
        rng = np.random.default_rng(10 * h + n)
        rho = random_density_matrix(h, rng)
        d = from_chain(rho, [random_unitary(h, rng) for _ in range(n + 1)], n)
        bound = homogeneous_lower_bound(d)
        assert minimize_spectral(d).best_value == pytest.approx(bound, abs=1e-9)
        for _ in range(40):
            w = homogeneous_window([random_resolution(h, rng, parts=h) for _ in range(n)], tol=1e-8)
            if is_consistent(d, w):
                assert i_norm(d, w) >= bound - 1e-9
