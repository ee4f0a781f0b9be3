"""Tests for the multilinear PageRank problem definition."""

import itertools

import numpy as np
import pytest

from multilinear_pagerank.errors import (
    DegenerateProjectionError,
    ParameterError,
    ShapeError,
    StochasticityError,
)
from multilinear_pagerank.problem import (
    PageRankProblem,
    check_regularity,
    fixed_point_map,
    is_stochastic,
    project,
    residual,
)
from multilinear_pagerank.tensor_ops import FlattenedTensor
from tests.conftest import random_stochastic_tensor


class TestPageRankProblem:
    """Test cases for PageRankProblem construction and evaluation."""

    def setup_method(self):
        """Set up a seeded 4-state third-order tensor."""
        self.rng = np.random.default_rng(3)
        self.array = random_stochastic_tensor(self.rng, 4, 3)
        self.tensor = FlattenedTensor.from_tensor(self.array)

    def test_default_teleportation_is_uniform(self):
        """Test v defaults to e/n."""
        prob = PageRankProblem(self.tensor, 0.85)
        np.testing.assert_array_equal(prob.v, np.full(4, 0.25))
        assert prob.dim == 4
        assert prob.order == 3

    def test_teleportation_is_read_only(self):
        """Test v cannot be mutated."""
        prob = PageRankProblem(self.tensor, 0.85)
        with pytest.raises(ValueError):
            prob.v[0] = 1.0

    @pytest.mark.parametrize("alpha", [1.0, -0.1, 1.5])
    def test_rejects_alpha_outside_unit_interval(self, alpha):
        """Test alpha outside [0, 1)."""
        with pytest.raises(ParameterError):
            PageRankProblem(self.tensor, alpha)

    def test_rejects_bad_teleportation(self):
        """Test non-stochastic and misshapen v."""
        with pytest.raises(StochasticityError):
            PageRankProblem(self.tensor, 0.5, np.array([0.5, 0.5, 0.5, 0.5]))
        with pytest.raises(StochasticityError):
            PageRankProblem(self.tensor, 0.5, np.array([1.5, -0.5, 0.0, 0.0]))
        with pytest.raises(ShapeError):
            PageRankProblem(self.tensor, 0.5, np.array([0.5, 0.5]))

    def test_residual_matches_brute_force(self):
        """Test the residual and fixed-point map against an index loop."""
        alpha = 0.7
        v = np.array([0.1, 0.2, 0.3, 0.4])
        prob = PageRankProblem(self.tensor, alpha, v)
        x = self.rng.random(4)
        x /= x.sum()

        image = np.zeros(4)
        for i, j, k in itertools.product(range(4), repeat=3):
            image[i] += self.array[i, j, k] * x[j] * x[k]
        expected = alpha * image + (1 - alpha) * v - x

        np.testing.assert_allclose(residual(prob, x), expected, atol=1e-13)
        np.testing.assert_allclose(fixed_point_map(prob, x), expected + x, atol=1e-13)

    def test_alpha_zero_solution_is_v(self):
        """Test v solves the alpha = 0 problem."""
        v = np.array([0.1, 0.2, 0.3, 0.4])
        prob = PageRankProblem(self.tensor, 0.0, v)
        np.testing.assert_allclose(prob.residual(v), np.zeros(4), atol=1e-16)

    def test_residual_sums_to_zero_on_the_simplex(self):
        """Test e^T f(x) = 0 for stochastic x."""
        prob = PageRankProblem(self.tensor, 0.95)
        for _ in range(5):
            x = self.rng.random(4)
            x /= x.sum()
            assert abs(prob.residual(x).sum()) <= 1e-12

    def test_with_alpha_keeps_tensor_and_v(self):
        """Test rebinding the damping factor."""
        prob = PageRankProblem(self.tensor, 0.3)
        other = prob.with_alpha(0.9)
        assert other.alpha == 0.9
        assert other.tensor is prob.tensor
        np.testing.assert_array_equal(other.v, prob.v)
        with pytest.raises(ParameterError):
            prob.with_alpha(1.0)

    def test_validation_can_be_skipped(self):
        """Test tensor validation can be deferred."""
        broken = FlattenedTensor.from_dense(np.full((2, 4), 0.3), 3, validate=False)
        PageRankProblem(broken, 0.5, validate_tensor=False)
        with pytest.raises(StochasticityError):
            PageRankProblem(broken, 0.5)


class TestProjection:
    """Stochastic projection z+ / ||z+||_1."""

    def test_clips_and_normalizes(self):
        """Test negative entries are clipped before normalizing."""
        projected = project(np.array([0.2, -0.1, 0.3]))
        np.testing.assert_allclose(projected, [0.4, 0.0, 0.6])

    def test_stochastic_vector_is_a_fixed_point(self):
        """Test stochastic vectors are unchanged."""
        x = np.array([0.25, 0.25, 0.5])
        np.testing.assert_array_equal(project(x), x)

    def test_nonpositive_vector_is_degenerate(self):
        """Test vectors without positive mass."""
        with pytest.raises(DegenerateProjectionError):
            project(np.array([-1.0, 0.0, -2.0]))
        with pytest.raises(DegenerateProjectionError):
            project(np.array([np.nan, 1.0]))

    @pytest.mark.parametrize("seed", range(5))
    def test_idempotent(self, seed):
        """Test projecting twice changes nothing."""
        z = np.random.default_rng(seed).standard_normal(12)
        once = project(z)
        np.testing.assert_allclose(project(once), once, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("scale", [1e-3, 3.0, 7.5e4])
    def test_scale_invariant(self, scale):
        """Test positive multiples project to the same vector."""
        z = np.random.default_rng(1).standard_normal(12)
        np.testing.assert_allclose(project(scale * z), project(z), rtol=0, atol=1e-15)

    def test_is_stochastic(self):
        """Test the stochasticity predicate and its tolerance."""
        assert is_stochastic(np.array([0.5, 0.5]))
        assert is_stochastic(np.array([0.5, 0.5 + 1e-13]))
        assert not is_stochastic(np.array([0.5, 0.6]))
        assert not is_stochastic(np.array([1.5, -0.5]))


class TestRegularity:
    """The alpha < 1/(m-1) diagnostic."""

    def setup_method(self):
        """Set up third- and fourth-order tensors."""
        rng = np.random.default_rng(5)
        self.third = FlattenedTensor.from_tensor(random_stochastic_tensor(rng, 3, 3))
        self.fourth = FlattenedTensor.from_tensor(random_stochastic_tensor(rng, 3, 4))

    def test_regular_regime(self):
        """Test a third-order problem below 1/2."""
        report = check_regularity(PageRankProblem(self.third, 0.4))
        assert report.regular
        assert report.threshold == 0.5
        assert report.margin == pytest.approx(0.1)
        assert report.dense_newton_feasible

    def test_outside_regular_regime(self):
        """Test problems at or above 1/(m-1)."""
        assert not check_regularity(PageRankProblem(self.third, 0.6)).regular
        report = check_regularity(PageRankProblem(self.fourth, 0.4))
        assert report.threshold == pytest.approx(1 / 3)
        assert not report.regular

    @pytest.mark.parametrize(
        "order, alpha, regular, margin",
        [(3, 0.49, True, 0.01), (3, 0.5, False, 0.0), (4, 0.3, True, 1 / 3 - 0.3)],
    )
    def test_threshold_examples(self, order, alpha, regular, margin):
        """Test regularity and margin at and around 1/(m-1)."""
        tensor = self.third if order == 3 else self.fourth
        report = check_regularity(PageRankProblem(tensor, alpha))
        assert report.regular is regular
        assert report.margin == pytest.approx(margin, abs=1e-12)
