"""EM training, restarts, and BIC-based order selection.

Fitting maximizes the ``model_missing`` likelihood: the E-step computes
latent posteriors (responsibilities), the M-step re-estimates weights, the
per-cell missing probabilities, and the per-family parameters from
responsibility-weighted observed cells. Restarts draw independent random
responsibility matrices from a single seed; the best final negative
log-likelihood wins. Order selection fits a range of component counts and
scores each with BIC(d) = 0.5 * T_d * ln N + NLL.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distributions import DEFAULT_FLOORS, ParamFloors, default_params, weighted_mle
from .model import (MODEL_MISSING, MixtureModel, ZeroLikelihoodError,
                    component_log_likelihoods, parameter_count, total_log_likelihood)
from .schema import Dataset, SchemaViolationError, VariableKind, validate_dataset

COLLAPSE_EPS = 1e-8       # minimum total responsibility per component
MONOTONE_SLACK = 1e-8     # tolerated NLL increase before reverting
ZERO_WEIGHT_EPS = 1e-12   # observed responsibility below this uses default params

RANDOM_RESPONSIBILITIES = "random_responsibilities"


class ComponentCollapseError(RuntimeError):
    """A component's total responsibility fell below the collapse threshold."""


class TrainingError(RuntimeError):
    """No restart produced a usable model."""


@dataclass(frozen=True)
class EmConfig:
    """Knobs for one EM run: iteration cap, tolerance, restarts, seed."""

    max_iterations: int = 500
    rel_tol: float = 1e-6
    restarts: int = 5
    seed: int = 0
    init: str = RANDOM_RESPONSIBILITIES

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.rel_tol > 0):
            raise ValueError("rel_tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.init != RANDOM_RESPONSIBILITIES:
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class TrainingTrace:
    """Per-iteration NLL of the winning restart; non-increasing by construction."""

    nll_per_iteration: tuple
    restart_index: int
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.nll_per_iteration)

    @property
    def final_nll(self) -> float:
        return self.nll_per_iteration[-1]


def e_step(model: MixtureModel, dataset: Dataset) -> np.ndarray:
    """(N, Z) responsibilities under the model_missing likelihood."""
    comp = component_log_likelihoods(model, dataset, MODEL_MISSING)
    totals = logsumexp(comp, axis=1)
    bad = np.flatnonzero(~np.isfinite(totals))
    if bad.size:
        raise ZeroLikelihoodError(
            f"subject {bad[0]} has zero likelihood under every component")
    return np.exp(comp - totals[:, None])


def m_step(dataset: Dataset, responsibilities: np.ndarray, *,
           floors: ParamFloors = DEFAULT_FLOORS) -> MixtureModel:
    """Weighted ML updates for weights, missing probs, and family params.

    Raises ComponentCollapseError if any component's total responsibility is
    below COLLAPSE_EPS. Family parameters use observed cells only; a cell with
    effectively no observed responsibility gets neutral defaults (its missing
    probability is ~1 there, so they never carry likelihood weight).
    """
    alpha = np.asarray(responsibilities, dtype=float)
    n_subjects, n_comp = alpha.shape
    if n_subjects != dataset.n_subjects:
        raise ValueError("responsibility rows do not match the dataset")
    totals = alpha.sum(axis=0)
    if totals.min() < COLLAPSE_EPS:
        z = int(np.argmin(totals))
        raise ComponentCollapseError(
            f"component {z} collapsed (total responsibility {totals[z]:.3e})")
    weights = totals / totals.sum()

    n_vars = dataset.n_variables
    missing_probs = np.empty((n_comp, n_vars))
    params = [[None] * n_vars for _ in range(n_comp)]
    for v in range(n_vars):
        schema = dataset.schemas[v]
        miss = dataset.missing_mask(v)
        obs = ~miss
        missing_probs[:, v] = alpha[miss, :].sum(axis=0) / totals
        if schema.kind is VariableKind.CATEGORICAL:
            observed = dataset.column_codes(v)[obs]
            scale = None
        else:
            observed = dataset.column_numeric(v)[obs]
            scale = dataset.column_scale(v)
        domain = schema.domain if schema.kind.is_finite else None
        for z in range(n_comp):
            wz = alpha[obs, z]
            if wz.sum() <= ZERO_WEIGHT_EPS:
                params[z][v] = default_params(schema.kind, domain=domain,
                                              scale=scale if scale is not None else 1.0)
            else:
                params[z][v] = weighted_mle(schema.kind, observed, wz,
                                            domain=domain, scale=scale, floors=floors)
    return MixtureModel(weights, tuple(tuple(row) for row in params),
                        missing_probs, dataset.schemas)


def _em_once(dataset: Dataset, order: int, config: EmConfig, rng,
             floors: ParamFloors):
    """One restart: random responsibilities, M-step, then EM to convergence."""
    alpha = rng.dirichlet(np.ones(order), size=dataset.n_subjects)
    model = m_step(dataset, alpha, floors=floors)
    nlls: list[float] = []
    previous_model = None
    converged = False
    for _ in range(config.max_iterations):
        comp = component_log_likelihoods(model, dataset, MODEL_MISSING)
        totals = logsumexp(comp, axis=1)
        bad = np.flatnonzero(~np.isfinite(totals))
        if bad.size:
            raise ZeroLikelihoodError(
                f"subject {bad[0]} has zero likelihood under every component")
        nll = float(-totals.sum())
        if nlls:
            if nll > nlls[-1] + MONOTONE_SLACK:
                # approximate M-steps can overshoot; keep the better model
                model = previous_model
                converged = True
                break
            if nlls[-1] - nll <= config.rel_tol * abs(nlls[-1]):
                nlls.append(nll)
                converged = True
                break
        nlls.append(nll)
        previous_model = model
        alpha = np.exp(comp - totals[:, None])
        model = m_step(dataset, alpha, floors=floors)
    else:
        # iteration cap hit with a final un-scored M-step; score it now
        nll = -total_log_likelihood(model, dataset, MODEL_MISSING)
        if nll > nlls[-1]:
            model = previous_model
        else:
            nlls.append(float(nll))
    return model, nlls, converged


def fit(dataset: Dataset, order: int, config: EmConfig = EmConfig(), *,
        floors: ParamFloors = DEFAULT_FLOORS) -> tuple[MixtureModel, TrainingTrace]:
    """Fit a mixture of ``order`` components; returns the best restart.

    The dataset must pass validation (no bad cells, no zero-variability
    columns). Restart seeds are spawned deterministically from config.seed, so
    identical inputs give an identical model. Restarts whose components
    collapse are skipped; if all collapse, TrainingError is raised.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    violations = validate_dataset(dataset)
    if violations:
        raise SchemaViolationError(violations)
    best = None
    failures = []
    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        try:
            model, nlls, converged = _em_once(dataset, order, config, rng, floors)
        except (ComponentCollapseError, ZeroLikelihoodError) as err:
            failures.append(f"restart {r}: {err}")
            continue
        if best is None or nlls[-1] < best[0]:
            best = (nlls[-1], r, model, nlls, converged)
    if best is None:
        raise TrainingError(
            f"all {config.restarts} restart(s) failed for order {order}: "
            + "; ".join(failures))
    _, r, model, nlls, converged = best
    return model, TrainingTrace(tuple(nlls), r, converged)


def bic_score(model: MixtureModel, dataset: Dataset) -> float:
    """0.5 * T_d * ln N + NLL under the model_missing likelihood."""
    nll = -total_log_likelihood(model, dataset, MODEL_MISSING)
    return 0.5 * parameter_count(model) * np.log(dataset.n_subjects) + nll


@dataclass(frozen=True)
class OrderScore:
    """One row of the order-selection table."""

    order: int
    n_params: int | None
    nll: float | None
    bic: float | None
    converged: bool | None
    error: str | None = None


@dataclass(frozen=True)
class OrderSelection:
    """Winning order/model plus the full score table (ascending order)."""

    best_order: int
    best_model: MixtureModel
    best_trace: TrainingTrace
    scores: tuple


def select_order(dataset: Dataset, orders, config: EmConfig = EmConfig(), *,
                 floors: ParamFloors = DEFAULT_FLOORS) -> OrderSelection:
    """Fit every requested order and pick the lowest BIC (ties: fewer components).

    Orders that fail to train are recorded in the table with their error and
    skipped; at least one order must succeed.
    """
    orders = sorted(set(int(k) for k in orders))
    if not orders:
        raise ValueError("no orders requested")
    if orders[0] < 1:
        raise ValueError("orders must be >= 1")
    scores = []
    best = None
    for order in orders:
        try:
            model, trace = fit(dataset, order, config, floors=floors)
        except TrainingError as err:
            warnings.warn(f"order {order} failed: {err}")
            scores.append(OrderScore(order, None, None, None, None, str(err)))
            continue
        bic = bic_score(model, dataset)
        scores.append(OrderScore(order, parameter_count(model),
                                 trace.final_nll, float(bic), trace.converged))
        if best is None or bic < best[0]:
            best = (bic, order, model, trace)
    if best is None:
        raise TrainingError("every requested order failed to train")
    _, order, model, trace = best
    return OrderSelection(order, model, trace, tuple(scores))
