import numpy as np
import pytest
from numpy.testing import assert_allclose

from saddlescape.errors import SimulationFailure
from saddlescape.forces import ForceOracle, dimer_hv, evaluate_counted
from saddlescape.linalg import fd_jacobian_sym, symmetrize


@pytest.fixture
def linear_oracle():
    a = symmetrize(np.array([[1.0, 0.3], [0.3, -2.0]]))
    return ForceOracle(lambda x: a @ x, dim=2), a


class TestCounting:
    def test_counter_increments_per_call(self):
        oracle = ForceOracle(lambda x: x, dim=3)
        assert oracle.query_counter == 0
        for _ in range(3):
            evaluate_counted(oracle, np.zeros(3))
        assert oracle.query_counter == 3

    def test_counter_counts_points_not_components(self):
        oracle = ForceOracle(lambda x: x, dim=7)
        oracle.evaluate(np.zeros(7))
        assert oracle.query_counter == 1

    def test_peek_is_uncounted(self):
        oracle = ForceOracle(lambda x: x, dim=2)
        oracle.peek(np.ones(2))
        assert oracle.query_counter == 0

    def test_deterministic_same_input_same_bits(self):
        oracle = ForceOracle(lambda x: np.sin(3.0 * x) / (1.0 + x * x), dim=4)
        x = np.array([0.1, -0.7, 2.2, 0.0])
        first = oracle.evaluate(x)
        second = oracle.evaluate(x)
        assert np.array_equal(first, second)

    def test_dimension_checked(self):
        oracle = ForceOracle(lambda x: x, dim=2)
        with pytest.raises(ValueError):
            oracle.evaluate(np.zeros(3))

    def test_simulation_nan_raises(self):
        oracle = ForceOracle(lambda x: np.array([np.nan]), dim=1, kind="simulation")
        with pytest.raises(SimulationFailure):
            oracle.evaluate(np.zeros(1))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ForceOracle(lambda x: x, dim=1, kind="oracle-of-delphi")


class TestDimer:
    def test_linear_force_is_exact(self, linear_oracle):
        oracle, a = linear_oracle
        v = np.array([0.6, 0.8])
        out = dimer_hv(oracle, np.array([0.4, -1.0]), v, l=0.37)
        assert_allclose(out.hv, a @ v, atol=1e-12)
        assert oracle.query_counter == 2

    def test_hand_value_cubic(self):
        oracle = ForceOracle(lambda x: x**3, dim=1)
        out = dimer_hv(oracle, np.array([1.0]), np.array([1.0]), l=0.1)
        assert out.hv[0] == pytest.approx(3.01, abs=1e-12)

    def test_halving_l_quarters_error(self):
        oracle = ForceOracle(lambda x: x**3, dim=1)
        x = np.array([1.0])
        v = np.array([1.0])
        exact = fd_jacobian_sym(lambda y: y**3, x, 1e-6) @ v
        err = lambda l: abs(dimer_hv(oracle, x, v, l).hv[0] - exact[0])
        ratio = err(0.2) / err(0.1)
        assert 3.5 <= ratio <= 4.5

    def test_antisymmetric_in_direction(self, linear_oracle):
        # flipping v flips the estimated product, matching H(-v) = -(Hv)
        oracle, _ = linear_oracle
        x = np.array([0.2, 0.5])
        v = np.array([1.0, 0.0])
        plus = dimer_hv(oracle, x, v, 0.05).hv
        minus = dimer_hv(oracle, x, -v, 0.05).hv
        assert_allclose(minus, -plus, atol=1e-13)

    def test_unit_norm_required(self, linear_oracle):
        oracle, _ = linear_oracle
        with pytest.raises(ValueError):
            dimer_hv(oracle, np.zeros(2), np.array([1.0, 1.0]), 0.1)

    def test_positive_length_required(self, linear_oracle):
        oracle, _ = linear_oracle
        with pytest.raises(ValueError):
            dimer_hv(oracle, np.zeros(2), np.array([1.0, 0.0]), 0.0)

    def test_quadratic_stationary_point_product_exact(self):
        h = symmetrize(np.array([[1.0, 0.2, 0.0], [0.2, -1.0, 0.1], [0.0, 0.1, 0.5]]))
        oracle = ForceOracle(lambda x: h @ x, dim=3)  # F = Hx, F(0) = 0
        v = np.array([0.0, 1.0, 0.0])
        out = dimer_hv(oracle, np.zeros(3), v, l=0.3)
        assert_allclose(out.hv, h @ v, atol=1e-13)


class TestConcurrency:
    def test_counter_atomic_under_threads(self):
        import concurrent.futures

        oracle = ForceOracle(lambda x: x, dim=1)
        with concurrent.futures.ThreadPoolExecutor(8) as pool:
            list(pool.map(lambda _: oracle.evaluate(np.zeros(1)), range(400)))
        assert oracle.query_counter == 400

    def test_simulation_oracles_not_reentrant(self):
        oracle = ForceOracle(lambda x: x, dim=1, kind="simulation", reentrant=True)
        assert oracle.reentrant is False
