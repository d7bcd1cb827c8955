import itertools
import random

import numpy as np
import pytest
from sklearn.base import clone

from cehpo.baselines import BaselineConfig, grid_history, grid_search, random_search
from cehpo.ce_engine import CeConfig, Direction
from cehpo.estimators import CrossEntropySearch, GridSearch, RandomSearch
from cehpo.hyperspace import DecreasingSequenceSpace, Scalar, ScalarIntervalSpace, Sequence
from cehpo.multitask import TaskGrid, run_grid, select_consensus, select_consensus_index
from cehpo.objectives import FunctionObjective, analytic_objective


def consensus_oracle(values):
    sums = []
    for x in values:
        sums.append(sum((y - x) ** 2 for y in values))
    best = min(sums)
    return values[sums.index(best)], sums


class TestConsensus:
    def test_three_points(self):
        value, sums = consensus_oracle([0.1, 0.2, 0.9])
        assert sums == pytest.approx([0.65, 0.50, 1.13])
        assert value == 0.2
        assert select_consensus([Scalar(0.1), Scalar(0.2), Scalar(0.9)]) == Scalar(0.2)

    def test_single(self):
        assert select_consensus([Scalar(0.4)]) == Scalar(0.4)

    def test_tie_goes_to_lowest_index(self):
        _, sums = consensus_oracle([0.3, 0.5])
        assert sums[0] == sums[1]
        assert select_consensus([Scalar(0.3), Scalar(0.5)]) == Scalar(0.3)
        assert select_consensus([Scalar(0.5), Scalar(0.3)]) == Scalar(0.5)

    def test_errors(self):
        with pytest.raises(ValueError):
            select_consensus([])
        with pytest.raises(TypeError):
            select_consensus([Scalar(0.3), Sequence([0.3])])

    def test_random_lists_match_oracle(self):
        rng = random.Random(0)
        for _ in range(300):
            vals = [rng.choice([0.0, 0.25, 0.5, 1.0]) if rng.random() < 0.3 else rng.random()
                    for _ in range(rng.randint(1, 10))]
            expected, _ = consensus_oracle(vals)
            got = select_consensus([Scalar(v) for v in vals])
            assert got.value == expected

    def test_permutation(self):
        vals = [0.1, 0.35, 0.4, 0.8, 0.95]
        ref = select_consensus([Scalar(v) for v in vals])
        for perm in itertools.permutations(vals):
            assert select_consensus([Scalar(v) for v in perm]) == ref

    def test_sequences(self):
        cands = [Sequence([0.9, 0.1]), Sequence([0.8, 0.2]), Sequence([0.1, 0.0])]
        assert select_consensus_index(cands) == 1


def _quadratic_grid(n_d=2, n_p=2):
    return TaskGrid(
        datasets=range(n_d), problems=range(n_p),
        factory=lambda d, p: analytic_objective("quadratic"),
        space=ScalarIntervalSpace(0, 1),
    )


class TestGrid:
    def test_one_cell(self):
        out = run_grid(_quadratic_grid(1, 1), CeConfig(max_rounds=10))
        assert out.consensus == out.cells[0][0].best_value
        assert out.consensus_cell == (0, 0)

    def test_two_by_two(self):
        out = run_grid(_quadratic_grid(), CeConfig(max_rounds=50))
        for row in out.cell_best:
            for value, _ in row:
                assert abs(value.value - 0.7) <= 0.02
        assert abs(out.consensus.value - 0.7) <= 0.02
        assert out.consensus in [v for row in out.cell_best for v, _ in row]

    def test_cells_are_seeded_independently(self):
        out = run_grid(_quadratic_grid(), CeConfig(max_rounds=3, window=10))
        bests = {c.best_value for row in out.cells for c in row}
        assert len(bests) == 4

    def test_deterministic_and_thread_safe(self):
        a = run_grid(_quadratic_grid(), CeConfig(max_rounds=5, seed=3))
        b = run_grid(_quadratic_grid(), CeConfig(max_rounds=5, seed=3), n_jobs=4)
        assert a == b

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            TaskGrid([], [1], lambda d, p: None, ScalarIntervalSpace(0, 1))


class TestBaselines:
    def test_grid_hits_vertex(self):
        obj = analytic_objective("quadratic")
        history = grid_history(ScalarIntervalSpace(0, 1), obj, 11)
        assert [v.value for v, _ in history] == pytest.approx([i / 10 for i in range(11)])
        value, score = grid_search(ScalarIntervalSpace(0, 1), obj, 11)
        assert value.value == pytest.approx(0.7) and score == pytest.approx(0.0)
        best = min(history, key=lambda vs: vs[1])
        assert (value, score) == best

    def test_two_points(self):
        value, _ = grid_search(ScalarIntervalSpace(0.25, 0.9), analytic_objective("quadratic"), 2)
        assert value == Scalar(0.9)

    def test_constant_returns_lowest(self):
        value, _ = grid_search(ScalarIntervalSpace(-1, 1), FunctionObjective(lambda v, s: 3.0), 5)
        assert value == Scalar(-1.0)

    def test_grid_rejects_sequences(self):
        with pytest.raises(TypeError):
            grid_search(DecreasingSequenceSpace(2, 0, 1), analytic_objective("quadratic"), 5)
        with pytest.raises(ValueError):
            grid_search(ScalarIntervalSpace(0, 1), analytic_objective("quadratic"), 1)

    def test_random_budget_one(self):
        seen = []
        obj = FunctionObjective(lambda v, s: seen.append(v) or v.value)
        value, score = random_search(ScalarIntervalSpace(0, 1), obj, 1, seed=5)
        assert seen == [value] and score == value.value

    def test_random_is_seeded(self):
        obj = analytic_objective("gramacy_lee")
        space = ScalarIntervalSpace(0.5, 2.5)
        assert random_search(space, obj, 50, 9) == random_search(space, obj, 50, 9)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_recovers_vertex(self, seed):
        value, _ = random_search(ScalarIntervalSpace(0, 1), analytic_objective("quadratic"),
                                 10_000, seed)
        assert abs(value.value - 0.7) <= 0.02

    def test_bounds_respected(self):
        space = ScalarIntervalSpace(0.9, 0.9999)
        seen = []
        obj = FunctionObjective(lambda v, s: seen.append(v.value) or 0.0)
        random_search(space, obj, 500, 0)
        grid_search(space, obj, 37)
        assert all(0.9 <= x <= 0.9999 for x in seen)

    def test_maximize(self):
        obj = analytic_objective("quadratic", Direction.MAXIMIZE)
        value, _ = grid_search(ScalarIntervalSpace(0, 1), obj, 11)
        assert value == Scalar(0.0)

    def test_config(self):
        with pytest.raises(ValueError):
            BaselineConfig(budget=0)
        with pytest.raises(ValueError):
            BaselineConfig(grid_points=1)


class TestEstimators:
    def test_get_params_and_clone(self):
        est = CrossEntropySearch(n_samples=50, rho=0.1, favorability=5)
        params = est.get_params()
        assert params["n_samples"] == 50 and params["rho"] == 0.1
        twin = clone(est)
        assert twin.get_params() == params and twin is not est
        est.set_params(max_rounds=7)
        assert est.max_rounds == 7

    def test_fit_quadratic(self):
        est = CrossEntropySearch(max_rounds=50, random_state=0).fit(analytic_objective("quadratic"))
        assert abs(est.best_value_.value - 0.7) <= 0.02
        assert est.n_evaluations_ == est.result_.n_evaluations
        assert est.space_ == ScalarIntervalSpace(0.0, 1.0)

    def test_fit_matches_functional_core(self):
        from cehpo.ce_engine import run_cehpo
        obj = analytic_objective("gramacy_lee")
        est = CrossEntropySearch(max_rounds=6, random_state=11).fit(obj)
        res = run_cehpo(obj.default_space(), obj, CeConfig(max_rounds=6, seed=11))
        assert est.result_.rounds == res.rounds

    def test_baseline_estimators(self):
        obj = analytic_objective("quadratic")
        rs = RandomSearch(budget=200, random_state=1).fit(obj)
        assert rs.n_evaluations_ == 200
        assert rs.best_score_ == min(s for _, s in rs.history_)
        gs = GridSearch(points=11).fit(obj)
        assert gs.best_value_.value == pytest.approx(0.7)

    def test_invalid_inputs(self):
        with pytest.raises(TypeError):
            CrossEntropySearch().fit(lambda v: v)
        with pytest.raises(TypeError):
            CrossEntropySearch(random_state="x").fit(analytic_objective("quadratic"))
        with pytest.raises(ValueError):
            CrossEntropySearch().fit(FunctionObjective(lambda v, s: 0.0))
