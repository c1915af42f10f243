import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_prediction, random_predictions
from fintrust.density import (
    DensityConfig,
    bandwidth,
    estimate_density,
    read_density_tsv,
    scenario_densities,
    trapezoid_mass,
    unit_grid,
    write_density_tsv,
)
from fintrust.errors import DomainError, ValidationError
from fintrust.trust import score_all


def gauss(u, h):
    return math.exp(-0.5 * (u / h) ** 2) / (h * math.sqrt(2 * math.pi))


def naive_density(samples, weight, h, g):
    """Three-term reflected kernel sum, one grid point, plain loop."""
    total = 0.0
    for q in samples:
        total += gauss(g - q, h) + gauss(g + q, h) + gauss(g - (2 - q), h)
    return weight * total / len(samples)


# the three-term reflection only keeps 1 +- 1e-3 of mass once h <= ~0.3, i.e. n >= 3
q_lists = st.lists(st.floats(0.0, 1.0), min_size=3, max_size=300)


class TestBandwidth:
    @pytest.mark.parametrize("n, gamma, expected", [(1, 0.5, 0.5), (100, 0.5, 0.05), (4, 1.0, 0.5)])
    def test_values(self, n, gamma, expected):
        assert bandwidth(n, gamma) == expected

    def test_zero(self):
        with pytest.raises(ValidationError):
            bandwidth(0)


class TestEstimateDensity:
    def test_single_boundary_sample(self):
        h = 0.5
        f = estimate_density([0.0], 1.0, h, np.array([0.0]))
        expected = (2.0 + math.exp(-0.5 * (2.0 / h) ** 2)) / (h * math.sqrt(2 * math.pi))
        assert f[0] == pytest.approx(expected, rel=1e-14)

    def test_symmetric_samples(self):
        grid = unit_grid(1001)
        f = estimate_density([0.1, 0.9, 0.3, 0.7], 1.0, 0.2, grid)
        np.testing.assert_allclose(f, f[::-1], rtol=0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_naive_oracle(self, seed):
        rng = np.random.default_rng(seed)
        q = rng.uniform(size=30)
        h = bandwidth(30)
        grid = rng.uniform(size=10)
        f = estimate_density(q, 0.7, h, grid)
        for g, value in zip(grid, f):
            assert abs(value - naive_density(q, 0.7, h, g)) <= 1e-9

    def test_chunking_is_invisible(self):
        q = np.random.default_rng(0).uniform(size=5000)
        grid = unit_grid(1000)
        f = estimate_density(q, 1.0, bandwidth(5000), grid)
        subset = grid[::97]
        for g, value in zip(subset, f[::97]):
            assert abs(value - naive_density(q, 1.0, bandwidth(5000), g)) <= 1e-9

    @pytest.mark.parametrize("bad", [[-0.1], [1.2], [float("nan")]])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            estimate_density(bad, 1.0, 0.1, unit_grid(10))

    @pytest.mark.parametrize("weight", [0.0, 1.5])
    def test_weight_domain(self, weight):
        with pytest.raises(DomainError):
            estimate_density([0.5], weight, 0.1, unit_grid(10))

    def test_single_sample_mass_is_closed_form(self):
        # one reflection per side keeps Phi((1+q)/h) - Phi((q-2)/h) of the mass;
        # at n=1 (h=0.5) that is visibly short of 1
        grid = unit_grid(1000)
        f = estimate_density([0.5], 1.0, 0.5, grid)
        phi = lambda x: 0.5 * (1 + math.erf(x / math.sqrt(2)))  # noqa: E731
        assert trapezoid_mass(grid, f) == pytest.approx(phi(3.0) - phi(-3.0), abs=1e-6)

    @given(q_lists)
    @settings(max_examples=100, deadline=None)
    def test_mass_and_positivity(self, q):
        grid = unit_grid(1000)
        f = estimate_density(q, 1.0, bandwidth(len(q)), grid)
        assert np.all(f >= 0.0)
        assert abs(trapezoid_mass(grid, f) - 1.0) <= 1e-3

    @given(q_lists)
    @settings(max_examples=30, deadline=None)
    def test_doubling_multiplicity_keeps_mass(self, q):
        grid = unit_grid(1000)
        doubled = q + q
        f = estimate_density(doubled, 1.0, bandwidth(len(doubled)), grid)
        assert abs(trapezoid_mass(grid, f) - 1.0) <= 1e-3

    def test_deterministic(self):
        q = np.random.default_rng(1).uniform(size=200)
        a = estimate_density(q, 1.0, 0.05, unit_grid())
        b = estimate_density(q, 1.0, 0.05, unit_grid())
        assert a.tobytes() == b.tobytes()


class TestScenarioDensities:
    def test_weights_three_to_one(self):
        preds = [make_prediction(i, 1, 1, 0.9) for i in range(3)] + [make_prediction(3, 0, 1, 0.8)]
        curve = scenario_densities(score_all(preds), 1)
        assert curve.n_samples == 4 and curve.n_correct == 3
        assert curve.bandwidth == bandwidth(4)
        h = curve.bandwidth
        g = 0.5
        i = np.argmin(np.abs(curve.grid - g))
        gi = curve.grid[i]
        assert curve.cond_correct[i] == pytest.approx(naive_density([0.9] * 3, 0.75, h, gi), abs=1e-12)
        assert curve.cond_incorrect[i] == pytest.approx(naive_density([0.2], 0.25, h, gi), abs=1e-12)
        np.testing.assert_allclose(curve.cond_correct + curve.cond_incorrect, curve.total, atol=1e-9)

    def test_all_correct(self):
        preds = [make_prediction(i, 0, 0, 0.6 + 0.1 * i) for i in range(4)]
        curve = scenario_densities(score_all(preds), 0)
        assert np.all(curve.cond_incorrect == 0.0)
        np.testing.assert_allclose(curve.cond_correct, curve.total, atol=1e-9)

    def test_empty_scenario(self):
        preds = [make_prediction(1, 0, 0, 0.9)]
        with pytest.raises(ValidationError, match="scenario 1"):
            scenario_densities(score_all(preds), 1)

    def test_group_by_toggle(self):
        preds = [make_prediction(1, 0, 1, 0.9), make_prediction(2, 1, 1, 0.7), make_prediction(3, 1, 0, 0.6)]
        scored = score_all(preds)
        assert scenario_densities(scored, 1).n_samples == 2
        assert scenario_densities(scored, 1, DensityConfig(group_by="oracle")).n_samples == 2
        assert scenario_densities(scored, 0).n_samples == 1
        assert scenario_densities(scored, 0, DensityConfig(group_by="oracle")).n_samples == 1
        by_pred = {s.prediction.id for s in scored if s.prediction.predicted_label == 1}
        assert by_pred == {1, 2}

    def test_random_group_matches_oracle(self):
        rng = np.random.default_rng(5)
        scored = score_all(random_predictions(rng, 60))
        curve = scenario_densities(scored, 1)
        group = [s.q for s in scored if s.prediction.predicted_label == 1]
        for i in rng.choice(len(curve.grid), size=10, replace=False):
            assert abs(curve.total[i] - naive_density(group, 1.0, bandwidth(len(group)), curve.grid[i])) <= 1e-9

    @given(st.integers(0, 2**32 - 1), st.integers(6, 200))
    @settings(max_examples=40, deadline=None)
    def test_additivity_and_mass(self, seed, n):
        scored = score_all(random_predictions(np.random.default_rng(seed), n, min_confidence=0.0))
        for scenario in (0, 1):
            if not any(s.prediction.predicted_label == scenario for s in scored):
                continue
            curve = scenario_densities(scored, scenario)
            if curve.n_samples < 3:
                continue
            assert np.all(curve.cond_correct >= 0) and np.all(curve.cond_incorrect >= 0)
            assert np.max(np.abs(curve.cond_correct + curve.cond_incorrect - curve.total)) <= 1e-9
            assert abs(curve.mass() - 1.0) <= 1e-3

    @pytest.mark.parametrize("kwargs", [{"gamma": 0}, {"grid_points": 1}, {"group_by": "both"}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValidationError):
            DensityConfig(**kwargs)


def test_tsv_round_trip(tmp_path):
    scored = score_all(random_predictions(np.random.default_rng(2), 40))
    curve = scenario_densities(scored, 0)
    path = tmp_path / "d.tsv"
    write_density_tsv(path, curve)
    lines = path.read_text().splitlines()
    assert lines[0] == "q\ttotal\tcond_correct\tcond_incorrect"
    assert len(lines) == 1001
    back = read_density_tsv(path)
    np.testing.assert_allclose(back["total"], curve.total, rtol=1e-11)
    np.testing.assert_allclose(back["q"], curve.grid, rtol=0, atol=1e-12)
