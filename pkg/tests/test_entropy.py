import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ALPHA, BETA
from histentropy.decoherence import (
    InconsistentWindowError,
    from_chain,
    from_single_time,
    from_two_time,
    tensor_product,
)
from histentropy.entropy import (
    consistency_residual,
    entropy_report,
    i_hat,
    i_norm,
    i_x,
    is_consistent,
    localized_i,
    monotonicity_gap,
    nats_to_bits,
    resolved_block_entropy,
    resolved_trace_entropy,
)
from histentropy.histories import (
    HomogeneousHistory,
    Window,
    coarse_grainings,
    homogeneous_to_proposition,
    homogeneous_window,
    insert_trivial_time,
    make_window,
    merge_blocks,
    product_window,
    standard_basis_window,
    trivial_window,
    window_from_unitary,
)
from histentropy.linalg import (
    herm_eig,
    operator_entropy,
    random_density_matrix,
    random_resolution,
    random_unitary,
)

LOG2 = math.log(2)
SPECTRAL_34 = -0.8239592165010823


class TestConsistency:
    def test_trivial_always(self, rng, d_x1, d_x2):
        for d in (d_x1, d_x2, from_two_time(random_density_matrix(2, rng))):
            assert is_consistent(d, trivial_window(d.dim_v))

    @pytest.mark.parametrize("a", np.linspace(0, 1, 21))
    def test_x1_no_rank1_window(self, d_x1, a):
        from conftest import bloch_projector

        p = bloch_projector(a, 1.3)
        w = make_window([p, np.eye(2) - p])
        assert consistency_residual(d_x1, w) >= 0.25 - 1e-12
        assert not is_consistent(d_x1, w)

    def test_single_time_every_window(self, rng):
        d = from_single_time(random_density_matrix(4, rng))
        for _ in range(20):
            w = make_window(random_resolution(4, rng, parts=int(rng.integers(1, 5))), tol=1e-8)
            assert is_consistent(d, w)

    def test_inconsistent_raises(self, d_x1):
        with pytest.raises(InconsistentWindowError) as info:
            i_norm(d_x1, standard_basis_window(2))
        assert info.value.residual == pytest.approx(0.5)


class TestEntropy:
    def test_trivial(self, rng):
        d = from_single_time(random_density_matrix(3, rng))
        w = trivial_window(3)
        assert i_hat(d, w) == pytest.approx(2 * math.log(3), abs=1e-14)
        assert i_norm(d, w) == pytest.approx(0, abs=1e-14)

    def test_x2(self, d_x2):
        assert abs(i_norm(d_x2, make_window([ALPHA, BETA])) + 2 * LOG2) < 1e-12

    def test_single_time_spectral(self):
        d = from_single_time(np.diag([0.75, 0.25]))
        v = i_norm(d, standard_basis_window(2))
        assert v == pytest.approx(SPECTRAL_34, abs=1e-12)

    def test_report_identity(self, rng):
        d = from_single_time(random_density_matrix(3, rng))
        w = window_from_unitary(random_unitary(3, rng))
        rep = entropy_report(d, w, xs=[0, 1, 2])
        assert rep.i_norm == rep.i_hat - 2 * math.log(3)
        assert sum(rep.probabilities) == pytest.approx(1, abs=1e-12)
        assert rep.i_x[2.0] == pytest.approx(rep.i_norm, abs=1e-12)
        d_bits = rep.as_dict(bits=True)
        assert d_bits["bits"]["i_norm"] == pytest.approx(rep.i_norm / LOG2)

    def test_zero_probability_block(self, d_x2):
        assert i_hat(d_x2, make_window([ALPHA, BETA])) == 0.0

    def test_bits(self):
        assert nats_to_bits(LOG2) == pytest.approx(1.0)


class TestIx:
    def test_x2_equals_i_norm(self, rng):
        d = from_single_time(random_density_matrix(4, rng))
        w = window_from_unitary(random_unitary(4, rng))
        assert i_x(d, w, 2) == pytest.approx(i_norm(d, w), abs=1e-12)

    def test_trial_trivial(self, rng):
        d = from_single_time(random_density_matrix(3, rng))
        assert i_x(d, trivial_window(3), 0) == 0.0

    def test_trial_is_shannon(self):
        d = from_single_time(np.diag([0.75, 0.25]))
        expected = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
        assert i_x(d, standard_basis_window(2), 0) == pytest.approx(expected)

    def test_kullback_self(self):
        # probabilities (1/2, 1/4, 1/4) equal the relative dimensions (2/4, 1/4, 1/4)
        d = from_single_time(np.diag([0.5, 0.0, 0.25, 0.25]))
        w = make_window([np.diag([1, 1, 0, 0]), np.diag([0, 0, 1, 0]), np.diag([0, 0, 0, 1])])
        assert i_x(d, w, 1) == pytest.approx(0, abs=1e-15)

    def test_negative_x(self, d_x2):
        with pytest.raises(ValueError):
            i_x(d_x2, trivial_window(2), -1)


class TestGap:
    def test_values(self):
        assert monotonicity_gap(1, 1) == pytest.approx(2 * LOG2, abs=1e-15)
        assert monotonicity_gap(0, 1) == pytest.approx(2 * LOG2, abs=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            monotonicity_gap(-1, 1)
        with pytest.raises(ValueError):
            monotonicity_gap(1, 0.5)

    def test_grid(self):
        a = np.concatenate([[0.0], np.logspace(-6, 2, 199)])
        b = np.logspace(0, 2, 200)
        worst = min(monotonicity_gap(x, y) for x in a for y in b)
        assert worst >= -1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100), st.floats(1, 100))
def test_gap_property(a, b):
    assert monotonicity_gap(a, b) >= -1e-12


class TestLocalized:
    def test_consistent_w0(self, rng):
        rho = random_density_matrix(3, rng)
        d = from_single_time(rho)
        w0 = window_from_unitary(random_unitary(3, rng))
        val, win = localized_i(d, w0)
        assert val <= i_norm(d, w0) + 1e-12
        assert val == pytest.approx(i_norm(d, w0), abs=1e-12)
        assert win.dims == [1, 1, 1]

    def test_x1(self, d_x1):
        val, win = localized_i(d_x1, standard_basis_window(2))
        assert val == 0.0
        assert win.dims == [2]

    def test_x2(self, d_x2):
        val, win = localized_i(d_x2, standard_basis_window(2))
        assert val == pytest.approx(-2 * LOG2, abs=1e-12)

    def test_order_preserving(self, rng):
        d = from_two_time(random_density_matrix(2, rng))
        for _ in range(5):
            w0 = window_from_unitary(random_unitary(4, rng))
            base, _ = localized_i(d, w0)
            for coarse in coarse_grainings(w0):
                val, _ = localized_i(d, coarse)
                assert base <= val + 1e-12

    def test_matches_brute_force(self, rng):
        d = from_two_time(random_density_matrix(2, rng))
        w0 = window_from_unitary(random_unitary(4, rng))
        brute = min(i_norm(d, w) for w in coarse_grainings(w0) if is_consistent(d, w))
        assert localized_i(d, w0)[0] == pytest.approx(brute, abs=1e-12)

    def test_cap(self, rng):
        with pytest.raises(ValueError):
            localized_i(from_single_time(np.eye(13) / 13), standard_basis_window(13))


def _refinement_triple(rng):
    n = int(rng.integers(2, 5))
    d = from_single_time(random_density_matrix(n, rng))
    fine = window_from_unitary(random_unitary(n, rng))
    parts = list(coarse_grainings(fine))
    coarse = parts[int(rng.integers(len(parts)))]
    return d, coarse, fine


class TestMonotonicity:
    def test_refinement(self, rng):
        for _ in range(300):
            d, w1, w2 = _refinement_triple(rng)
            for x in (1, 1.5, 2, 3):
                assert i_x(d, w1, x) - i_x(d, w2, x) >= -1e-9

    def test_bounds(self, rng):
        for _ in range(200):
            d, w1, w2 = _refinement_triple(rng)
            for w in (w1, w2):
                assert i_hat(d, w) >= -1e-9
                assert -2 * math.log(d.dim_v) - 1e-9 <= i_norm(d, w) <= 1e-9

    def test_trial_entropy_not_monotone_counterexample(self):
        # x = 0 rewards refining: Shannon entropy grows with the number of blocks
        d = from_single_time(np.eye(2) / 2)
        assert i_x(d, standard_basis_window(2), 0) > i_x(d, trivial_window(2), 0)


class TestTimeInsertion:
    def test_two_time(self, rng):
        rho = random_density_matrix(2, rng)
        d1 = from_single_time(rho)
        res = random_resolution(2, rng, parts=2)
        w1 = homogeneous_window([res])
        d2 = from_two_time(rho)
        for pos in (0, 1):
            w2 = Window(tuple(
                homogeneous_to_proposition(insert_trivial_time(HomogeneousHistory([q], tol=1e-8), pos))
                for q in res
            ))
            assert i_norm(d2, w2) == pytest.approx(i_norm(d1, w1), abs=1e-10)

    def test_chain_three_time(self, rng):
        rho = random_density_matrix(2, rng)
        us = [random_unitary(2, rng) for _ in range(3)]
        d2 = from_chain(rho, us, 2)
        qs = herm_eig(rho, mode="rank1").projectors
        w1, w2 = us[0], us[0] @ us[1]
        r1 = [w1.conj().T @ q @ w1 for q in qs]
        r2 = [w2.conj().T @ q @ w2 for q in qs]
        w2 = homogeneous_window([r1, r2], tol=1e-8)
        d3 = from_chain(rho, [us[0], np.eye(2), us[1], us[2]], 3)
        blocks = [
            homogeneous_to_proposition(insert_trivial_time(HomogeneousHistory([a, b], tol=1e-8), 1))
            for a in r1 for b in r2
        ]
        w3 = Window(tuple(blocks))
        assert i_norm(d3, w3) == pytest.approx(i_norm(d2, w2), abs=1e-10)


class TestTensorAdditivity:
    def test_product(self, rng):
        d1 = from_single_time(random_density_matrix(2, rng))
        d2 = from_single_time(random_density_matrix(3, rng))
        w1 = window_from_unitary(random_unitary(2, rng))
        w2 = merge_blocks(window_from_unitary(random_unitary(3, rng)), [[0, 1], [2]])
        d = tensor_product(d1, d2)
        w = product_window(w1, w2)
        assert i_norm(d, w) == pytest.approx(i_norm(d1, w1) + i_norm(d2, w2), abs=1e-9)


class TestResolvedEntropies:
    def test_bounds(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 5))
            k = random_density_matrix(n, rng) * rng.uniform(0.1, 3)
            res = random_resolution(n, rng, parts=int(rng.integers(1, n + 1)))
            floor = operator_entropy(k)
            assert resolved_trace_entropy(k, res) >= floor - 1e-9
            assert resolved_block_entropy(k, res) >= floor - 1e-9

    def test_spectral_attains(self, rng):
        k = random_density_matrix(3, rng)
        res = herm_eig(k, mode="rank1").projectors
        assert resolved_trace_entropy(k, res) == pytest.approx(operator_entropy(k), abs=1e-12)
