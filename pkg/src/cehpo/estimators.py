"""scikit-learn style front ends for the tuners.

The estimators take their settings in ``__init__`` (so ``get_params``,
``set_params`` and ``sklearn.base.clone`` work) and do all work in
``fit(objective, space=None)``. Fitted state lives in attributes with a
trailing underscore.

>>> from cehpo.estimators import CrossEntropySearch
>>> from cehpo.objectives import analytic_objective
>>> search = CrossEntropySearch(max_rounds=20, random_state=0)
>>> search.fit(analytic_objective("quadratic")).best_value_  # doctest: +SKIP
Scalar(value=0.70...)
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .baselines import grid_history, random_history, _pick_best
from .ce_engine import CeConfig, run_cehpo
from .validation import check_objective, check_seed, check_space


class CrossEntropySearch(BaseEstimator):
    """Cross-entropy search; see :class:`cehpo.ce_engine.CeConfig` for the parameters."""

    def __init__(self, n_samples=100, rho=0.05, smoothing=0.7, favorability=10.0,
                 window=5, gamma_tol=1e-9, max_rounds=100, random_state=0):
        self.n_samples = n_samples
        self.rho = rho
        self.smoothing = smoothing
        self.favorability = favorability
        self.window = window
        self.gamma_tol = gamma_tol
        self.max_rounds = max_rounds
        self.random_state = random_state

    def _config(self, direction) -> CeConfig:
        return CeConfig(
            n_samples=self.n_samples, rho=self.rho, smoothing=self.smoothing,
            favorability=self.favorability, window=self.window, gamma_tol=self.gamma_tol,
            max_rounds=self.max_rounds, direction=direction,
            seed=check_seed(self.random_state),
        )

    def fit(self, objective, space=None, callback=None):
        objective = check_objective(objective)
        space = check_space(space, objective)
        self.result_ = run_cehpo(space, objective, self._config(objective.direction), callback)
        self.space_ = space
        self.best_value_ = self.result_.best_value
        self.best_score_ = self.result_.best_score
        self.n_rounds_ = self.result_.n_rounds
        self.n_evaluations_ = self.result_.n_evaluations
        self.stop_reason_ = self.result_.stop_reason
        return self


class RandomSearch(BaseEstimator):
    def __init__(self, budget=100, random_state=0):
        self.budget = budget
        self.random_state = random_state

    def fit(self, objective, space=None):
        objective = check_objective(objective)
        self.space_ = check_space(space, objective)
        self.history_ = random_history(self.space_, objective, self.budget,
                                       check_seed(self.random_state))
        self.best_value_, self.best_score_ = _pick_best(self.history_, objective.direction)
        self.n_evaluations_ = len(self.history_)
        return self


class GridSearch(BaseEstimator):
    """Equally spaced grid including both interval endpoints; ties keep the lowest value."""

    def __init__(self, points=11, random_state=0):
        self.points = points
        self.random_state = random_state

    def fit(self, objective, space=None):
        objective = check_objective(objective)
        self.space_ = check_space(space, objective)
        self.history_ = grid_history(self.space_, objective, self.points,
                                     check_seed(self.random_state))
        self.best_value_, self.best_score_ = _pick_best(self.history_, objective.direction)
        self.n_evaluations_ = len(self.history_)
        return self
