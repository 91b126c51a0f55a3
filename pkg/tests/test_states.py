import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq
from scipy.special import lambertw

from qdeform.operators import DimensionError, eig_hermitian
from qdeform.states import (
    Direction,
    FaithfulDensity,
    NotCenteredError,
    NotFaithfulError,
    alpha_derivative,
    alpha_of,
    center_direction,
    classical_oracle_alpha,
    escort,
    expectation,
    geodesic_sample,
    make_state,
    normalization_root,
    normalization_value,
    recover_Y,
    solve_alpha,
    verify_alpha_bounds,
)
from qdeform.verify import random_instance

HALF = np.eye(2) / 2
SIGMA_Z = np.diag([1.0, -1.0])


def W(x):
    return float(lambertw(x).real)


def ev(u):
    return W(math.exp(1.0 + u))


def qubit_alpha_oracle():
    return brentq(lambda a: 0.5 * (ev(1 - a) + ev(-1 - a)) - 1.0, 0.0, 1.0, xtol=1e-15)


@pytest.fixture
def qubit():
    rho = FaithfulDensity.from_matrix(HALF)
    return rho, Direction.checked(rho, SIGMA_Z)


def instance(seed, n=None, **kw):
    rng = np.random.default_rng(seed)
    return random_instance(rng, n or int(rng.integers(2, 9)), **kw)


class TestDensity:
    def test_rejects_non_faithful(self):
        with pytest.raises(NotFaithfulError):
            FaithfulDensity.from_matrix(np.diag([1.0, 0.0]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            FaithfulDensity.from_matrix(np.eye(2))

    def test_sqrt_factors(self):
        rho, _ = instance(1, 5)
        assert np.allclose(rho.sqrt @ rho.sqrt, rho.rho, atol=1e-12)
        assert np.allclose(rho.sqrt @ rho.inv_sqrt, np.eye(5), atol=1e-9)


class TestDirection:
    def test_expectation_examples(self):
        assert expectation(HALF, np.zeros((2, 2))) == 0.0
        assert expectation(HALF, SIGMA_Z) == 0.0
        assert expectation(np.diag([0.7, 0.3]), SIGMA_Z) == pytest.approx(0.4, abs=1e-15)

    def test_center(self):
        d = center_direction(np.diag([0.7, 0.3]), SIGMA_Z)
        assert np.allclose(d.K, np.diag([0.6, -1.4]), atol=1e-15)
        assert np.allclose(center_direction(HALF, np.eye(2)).K, 0.0)
        assert np.allclose(center_direction(np.diag([0.7, 0.3]), d.K).K, d.K, atol=1e-15)

    def test_uncentered_rejected(self):
        with pytest.raises(NotCenteredError):
            Direction.checked(HALF, np.diag([2.0, 0.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            expectation(HALF, np.eye(3))


class TestNormalization:
    def test_examples(self, qubit):
        rho, d = qubit
        assert normalization_value(rho, Direction.checked(rho, np.zeros((2, 2))), 0.0) == 1.0
        n0 = normalization_value(rho, d, 0.0)
        assert n0 == pytest.approx(0.5 * (ev(1.0) + ev(-1.0)), rel=1e-13)
        assert n0 == pytest.approx(1.06214, abs=1e-5)
        assert normalization_value(rho, d, 0.5) < n0

    @given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(0.01, 3))
    def test_strictly_decreasing(self, seed, b, gap):
        rho, d = instance(seed)
        assert normalization_value(rho, d, b + gap) < normalization_value(rho, d, b)

    def test_limits(self, qubit):
        rho, d = qubit
        assert normalization_value(rho, d, -1e3) > 1e2
        assert normalization_value(rho, d, 50.0) < 1e-20


class TestAlpha:
    def test_zero_direction(self):
        rho = FaithfulDensity.from_matrix(HALF)
        assert solve_alpha(rho, Direction.checked(rho, np.zeros((2, 2)))) == 0.0

    def test_qubit_reference(self, qubit):
        a = solve_alpha(*qubit)
        assert a == pytest.approx(0.1299, abs=5e-4)
        assert a == pytest.approx(qubit_alpha_oracle(), abs=1e-13)
        assert classical_oracle_alpha([0.5, 0.5], [1.0, -1.0]) == pytest.approx(a, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_residual_and_sign(self, seed):
        rho, d = instance(seed)
        a = solve_alpha(rho, d)
        assert abs(normalization_value(rho, d, a) - 1.0) <= 1e-11
        assert a >= -1e-10

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-10, 10))
    def test_shift_covariance(self, seed, c):
        rho, d = instance(seed)
        n = d.dim
        a = solve_alpha(rho, d)
        assert alpha_of(rho, d.K + c * np.eye(n)) == pytest.approx(a + c, abs=1e-10)
        assert normalization_root(rho, d.K + c * np.eye(n)) == pytest.approx(a + c, abs=1e-10)

    def test_uncentered_rejected(self):
        rho = FaithfulDensity.from_matrix(HALF)
        K = np.diag([2.0, 0.0])
        with pytest.raises(NotCenteredError):
            solve_alpha(rho, Direction(K, eig_hermitian(K)))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
    def test_midpoint_convex_in_t(self, seed, t1, t2):
        rho, d = instance(seed)
        am = solve_alpha(rho, d.scaled(0.5 * (t1 + t2)))
        assert am <= 0.5 * (solve_alpha(rho, d.scaled(t1)) + solve_alpha(rho, d.scaled(t2))) + 1e-10

    def test_diagonal_matches_brent(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            p = rng.uniform(0.05, 1, n)
            p /= p.sum()
            k = rng.normal(size=n)
            k -= p @ k
            f = lambda b: sum(pi * ev(ki - b) for pi, ki in zip(p, k)) - 1.0
            ref = brentq(f, 0.0, 10.0, xtol=1e-15)
            a = solve_alpha(np.diag(p), Direction.checked(np.diag(p), np.diag(k)))
            assert a == pytest.approx(ref, abs=1e-11)
            assert classical_oracle_alpha(p, k) == pytest.approx(ref, abs=1e-11)

    def test_generic_lambda(self):
        rho, d = instance(5, 4)
        for lam in (0.3, 2.5):
            a = solve_alpha(rho, d, lam)
            assert abs(normalization_value(rho, d, a, lam) - 1.0) <= 1e-11


class TestBounds:
    def test_qubit(self, qubit):
        checks = {c.name: c for c in verify_alpha_bounds(*qubit)}
        assert all(c.ok for c in checks.values())
        assert checks["alpha_quadratic_lower"].lhs == pytest.approx(6 - math.sqrt(35), abs=1e-12)
        assert checks["alpha_below_norm_squared"].status == "skipped"  # s = 1 is not < 1
        assert checks["alpha_below_norm"].status == "pass"

    def test_half_scaled_direction(self, qubit):
        rho, d = qubit
        checks = {c.name: c for c in verify_alpha_bounds(rho, d.scaled(0.5))}
        assert checks["alpha_below_norm_squared"].status == "pass"
        assert checks["alpha_below_norm_squared"].lhs < 0.25

    def test_zero_direction(self):
        rho = FaithfulDensity.from_matrix(HALF)
        checks = verify_alpha_bounds(rho, Direction.checked(rho, np.zeros((2, 2))))
        assert all(c.ok for c in checks)

    def test_large_norm_skips(self):
        rho = FaithfulDensity.from_matrix(HALF)
        checks = {c.name: c for c in verify_alpha_bounds(rho, Direction.checked(rho, 7 * SIGMA_Z))}
        assert checks["alpha_quadratic_lower"].status == "skipped"
        assert checks["alpha_below_norm"].status == "skipped"

    def test_quadratic_upper_bound_holds(self):
        for seed in range(30):
            rho, d = instance(seed, scale=2.5)
            s2 = float(np.trace(rho.rho @ d.K @ d.K).real)
            assert solve_alpha(rho, d) <= 3 - math.sqrt(9 - s2) + 1e-10

    def test_quadratic_lower_bound_fails_on_skewed_instance(self):
        # a rare large negative eigenvalue carries most of tr(rho K^2) but
        # barely moves N(beta); the claimed lower bound 6 - sqrt(36 - s^2) fails
        p = np.array([1e-4, 1 - 1e-4])
        k = np.array([-99.99, 0.0])
        k -= p @ k
        rho = FaithfulDensity.from_matrix(np.diag(p))
        d = Direction.checked(rho, np.diag(k))
        a = solve_alpha(rho, d)
        s2 = float(p @ k**2)
        assert a == pytest.approx(classical_oracle_alpha(p, k), abs=1e-12)
        assert a < 6 - math.sqrt(36 - s2)
        assert a <= 3 - math.sqrt(9 - s2)
        checks = {c.name: c for c in verify_alpha_bounds(rho, d)}
        assert checks["alpha_quadratic_lower"].status == "fail"
        assert checks["alpha_quadratic_upper"].status == "pass"


class TestStates:
    def test_zero_direction(self):
        rho = FaithfulDensity.from_matrix(np.diag([0.7, 0.3]))
        mp = make_state(rho, Direction.checked(rho, np.zeros((2, 2))))
        assert np.allclose(mp.Y, np.eye(2))
        assert np.allclose(mp.sigma, rho.rho)
        esc = escort(rho, mp)
        assert esc.z == pytest.approx(0.5)
        assert np.allclose(esc.rho_tilde, rho.rho)

    def test_qubit_sigma(self, qubit):
        rho, d = qubit
        mp = make_state(rho, d)
        a = qubit_alpha_oracle()
        ref = np.diag([ev(1 - a), ev(-1 - a)]) / 2
        assert np.allclose(mp.sigma, ref, atol=1e-12)
        assert np.trace(mp.sigma).real == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(recover_Y(rho, mp.sigma) - mp.Y)) <= 1e-9
        esc = escort(rho, mp)
        y = np.array([ev(1 - a), ev(-1 - a)])
        assert esc.z == pytest.approx(0.5 * np.sum(y / (1 + y)), abs=1e-12)
        assert 0 < esc.z <= 0.5

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_state_invariants(self, seed):
        rho, d = instance(seed, 4)
        mp = make_state(rho, d)
        assert np.linalg.eigvalsh(mp.sigma)[0] > 0
        assert np.trace(mp.sigma).real == pytest.approx(1.0, abs=1e-10)
        assert mp.normalization == pytest.approx(1.0, abs=1e-10)
        esc = escort(rho, mp)
        assert np.all((esc.phi_eigenvalues > 0) & (esc.phi_eigenvalues < 1))
        assert 0 < esc.z <= 0.5 + 1e-15
        assert np.trace(esc.rho_tilde).real == pytest.approx(1.0, abs=1e-10)
        assert np.max(np.abs(recover_Y(rho, mp.sigma) - mp.Y)) <= 1e-8

    def test_recover_identity(self):
        rho, _ = instance(2, 3)
        assert np.allclose(recover_Y(rho, rho.rho), np.eye(3), atol=1e-10)

    def test_distinct_directions_distinct_states(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            rho, d1 = random_instance(rng, 3)
            d2 = center_direction(rho, d1.K + 0.01 * np.diag(rng.normal(size=3)))
            s1 = make_state(rho, d1).sigma
            s2 = make_state(rho, d2).sigma
            assert np.max(np.abs(s1 - s2)) > 1e-8


class TestDerivative:
    def test_zero_at_origin(self, qubit):
        assert alpha_derivative(*qubit, 0.0) == pytest.approx(0.0, abs=1e-14)

    def test_qubit_finite_difference(self, qubit):
        rho, d = qubit
        h = 1e-4
        fd = (solve_alpha(rho, d.scaled(1 + h)) - solve_alpha(rho, d.scaled(1 - h))) / (2 * h)
        assert abs(alpha_derivative(rho, d, 1.0) - fd) <= 1e-6

    def test_nondecreasing_in_t(self):
        rho, d = instance(4, 5)
        grid = np.linspace(-3, 3, 61)
        vals = [alpha_derivative(rho, d, t) for t in grid]
        assert np.all(np.diff(vals) >= -1e-12)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-2, 2))
    def test_random_finite_difference(self, seed, t):
        rho, d = instance(seed)
        h = 1e-4
        fd = (solve_alpha(rho, d.scaled(t + h)) - solve_alpha(rho, d.scaled(t - h))) / (2 * h)
        assert abs(alpha_derivative(rho, d, t) - fd) <= 1e-6

    def test_equals_escort_expectation_when_commuting(self):
        # K acts on the commutant side; the identity needs [rho, K] = 0
        rho, d = instance(9, 4, diagonal=True)
        mp = make_state(rho, d.scaled(0.7))
        assert alpha_derivative(rho, d, 0.7) == pytest.approx(escort(rho, mp).expect(d.K), abs=1e-12)


class TestGeodesic:
    def test_at_origin(self):
        rho, d = instance(12, 3)
        A = np.diag([1.0, 2.0, -1.0])
        (pt,) = geodesic_sample(rho, d, [0.0], [np.eye(3), A])
        assert pt.omega[0] == pytest.approx(1.0, abs=1e-12)
        assert pt.omega[1] == pytest.approx(np.trace(rho.rho @ A).real, abs=1e-12)
        assert pt.tangent[0] == pytest.approx(0.0, abs=1e-12)
        half = 0.5 * np.trace(rho.sqrt @ A @ rho.sqrt @ d.K).real
        assert pt.tangent[1] == pytest.approx(half, abs=1e-12)

    def test_qubit_tangent_matches_fd(self, qubit):
        rho, d = qubit
        A = np.diag([1.0, 0.0])
        h = 1e-4
        mid, lo, hi = geodesic_sample(rho, d, [0.8, 0.8 - h, 0.8 + h], [A])
        assert abs((hi.omega[0] - lo.omega[0]) / (2 * h) - mid.tangent[0]) <= 1e-5

    def test_random_probes(self):
        rng = np.random.default_rng(13)
        rho, d = random_instance(rng, 4)
        probes = []
        for _ in range(5):
            G = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            probes.append(0.5 * (G + G.conj().T))
        h = 1e-4
        mid, lo, hi = geodesic_sample(rho, d, [-0.6, -0.6 - h, -0.6 + h], probes)
        fd = (np.array(hi.omega) - np.array(lo.omega)) / (2 * h)
        assert np.max(np.abs(fd - np.array(mid.tangent))) <= 1e-5

    def test_probe_dimension_checked(self, qubit):
        with pytest.raises(DimensionError):
            geodesic_sample(*qubit, [0.0], [np.eye(3)])


class TestClassicalOracle:
    def test_zero(self):
        assert classical_oracle_alpha([0.3, 0.7], [0.0, 0.0]) == 0.0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            classical_oracle_alpha([0.5, 0.6], [1.0, -1.0])
        with pytest.raises(NotCenteredError):
            classical_oracle_alpha([0.5, 0.5], [1.0, 0.0])

    def test_diagonal_pipeline(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            rho, d = random_instance(rng, int(rng.integers(2, 7)), diagonal=True)
            p, k = np.diag(rho.rho).real, np.diag(d.K).real
            a = classical_oracle_alpha(p, k)
            mp = make_state(rho, d)
            assert abs(mp.alpha - a) <= 1e-10
            y = np.array([ev(x) for x in k - a])
            assert np.max(np.abs(mp.sigma - np.diag(p * y))) <= 1e-10
