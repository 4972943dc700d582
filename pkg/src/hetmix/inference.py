"""Conditional outcome inference: posterior-weighted mixtures over targets.

Given partial evidence x_in, the predictive distribution of a target is
sum_z Pr[Z = z | x_in] * f(. ; params[z][target]): a finite probability
vector for ordinal/categorical targets, a weighted mixture of the component
densities for continuous ones. Evidence enters through the chosen
missingness mode; variables absent from the evidence mapping contribute
nothing, while an explicit MISSING engages the missingness factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import logsumexp

from .model import (MixtureModel, ZeroLikelihoodError, check_mode,
                    evidence_log_likelihoods)
from .schema import SchemaError


@dataclass(frozen=True)
class InferenceRequest:
    """Evidence mapping, target names, and the missingness mode."""

    evidence: Mapping
    targets: tuple
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "evidence", dict(self.evidence))
        targets = (self.targets,) if isinstance(self.targets, str) else tuple(self.targets)
        object.__setattr__(self, "targets", targets)
        check_mode(self.mode)
        if not self.targets:
            raise ValueError("at least one target is required")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("duplicate targets")
        overlap = set(self.targets) & set(self.evidence)
        if overlap:
            raise ValueError(f"targets also appear in evidence: {sorted(overlap)}")


@dataclass(frozen=True)
class FinitePrediction:
    """Probability vector over the finite domain of one target."""

    domain: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "domain", tuple(self.domain))

    def probability_of(self, value) -> float:
        try:
            return float(self.probabilities[self.domain.index(value)])
        except ValueError:
            raise ValueError(f"{value!r} not in domain {self.domain}") from None


@dataclass(frozen=True)
class MixturePrediction:
    """Posterior-weighted mixture of component densities for a continuous target."""

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", tuple(self.components))

    def log_density(self, x):
        stack = np.stack([c.log_density(np.asarray(x, dtype=float)) for c in self.components])
        with np.errstate(divide="ignore"):
            out = logsumexp(stack, axis=0, b=self.weights[(...,) + (None,) * (stack.ndim - 1)])
        return float(out) if np.ndim(x) == 0 else out

    @property
    def expectation(self) -> float:
        return float(np.dot(self.weights, [c.expectation for c in self.components]))


@dataclass(frozen=True)
class PredictiveDistribution:
    """Per-target predictions plus the component posterior they share."""

    targets: Mapping
    posterior: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "targets", dict(self.targets))
        post = np.asarray(self.posterior, dtype=float)
        post.setflags(write=False)
        object.__setattr__(self, "posterior", post)

    def __getitem__(self, name):
        return self.targets[name]


def infer(model: MixtureModel, request: InferenceRequest) -> PredictiveDistribution:
    """Predictive distributions for every target given the evidence."""
    for name in request.targets:
        model.column_index(name)
    log_comp = evidence_log_likelihoods(model, request.evidence, request.mode)
    total = logsumexp(log_comp)
    if not np.isfinite(total):
        raise ZeroLikelihoodError("evidence has zero likelihood under every component")
    posterior = np.exp(log_comp - total)
    predictions = {}
    for name in request.targets:
        j = model.column_index(name)
        schema = model.schemas[j]
        cells = [model.params[z][j] for z in range(model.n_components)]
        if schema.kind.is_finite:
            mass = posterior @ np.stack([c.masses for c in cells])
            predictions[name] = FinitePrediction(schema.domain, mass)
        else:
            predictions[name] = MixturePrediction(posterior, tuple(cells))
    return PredictiveDistribution(predictions, posterior)


def point_predict(prediction) -> object:
    """Single value summary: argmax for finite targets (first index on ties,
    so the smallest domain value wins), expectation for continuous ones."""
    if isinstance(prediction, FinitePrediction):
        return prediction.domain[int(np.argmax(prediction.probabilities))]
    if isinstance(prediction, MixturePrediction):
        return prediction.expectation
    raise TypeError(f"not a prediction: {prediction!r}")


def rank_outcomes(prediction: FinitePrediction) -> list:
    """(value, probability) pairs sorted by descending probability, stably."""
    if not isinstance(prediction, FinitePrediction):
        raise TypeError("rank_outcomes applies to finite targets only")
    order = np.argsort(-prediction.probabilities, kind="stable")
    return [(prediction.domain[i], float(prediction.probabilities[i])) for i in order]
