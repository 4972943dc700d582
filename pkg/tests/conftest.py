"""Shared builders: random small models, random rows, and a recovery target."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from hetmix import (Categorical, Gaussian, InflatedGamma, MixtureModel,
                    QuantizedGaussian, VariableKind, VariableSchema)

KINDS = (VariableKind.REAL, VariableKind.NONNEGATIVE, VariableKind.ORDINAL,
         VariableKind.CATEGORICAL)

_SYMBOLS = ("ash", "birch", "cedar", "dune", "elm")


def random_schema(name, kind, rng) -> VariableSchema:
    if kind is VariableKind.ORDINAL:
        start = int(rng.integers(-2, 3))
        width = int(rng.integers(2, 7))
        return VariableSchema(name, kind, tuple(range(start, start + width)))
    if kind is VariableKind.CATEGORICAL:
        k = int(rng.integers(2, 6))
        return VariableSchema(name, kind, _SYMBOLS[:k])
    return VariableSchema(name, kind)


def random_cell_params(schema, rng):
    kind = schema.kind
    if kind is VariableKind.REAL:
        return Gaussian(float(rng.uniform(-5, 5)), float(rng.uniform(0.3, 4.0)))
    if kind is VariableKind.NONNEGATIVE:
        return InflatedGamma(float(rng.uniform(0.05, 0.9)),
                             float(rng.uniform(0.5, 6.0)),
                             float(rng.uniform(0.3, 3.0)))
    if kind is VariableKind.ORDINAL:
        lo, hi = schema.domain[0], schema.domain[-1]
        return QuantizedGaussian(float(rng.uniform(lo - 1, hi + 1)),
                                 float(rng.uniform(0.3, 6.0)), schema.domain)
    probs = rng.dirichlet(np.ones(len(schema.domain))) + 0.02
    probs /= probs.sum()
    return Categorical(tuple(probs), schema.domain)


def random_model(rng, *, max_components=3, max_variables=3) -> MixtureModel:
    """Small random model with every parameter in a numerically safe range."""
    n_comp = int(rng.integers(1, max_components + 1))
    n_vars = int(rng.integers(1, max_variables + 1))
    schemas = tuple(random_schema(f"v{j}", KINDS[rng.integers(len(KINDS))], rng)
                    for j in range(n_vars))
    weights = rng.dirichlet(np.ones(n_comp)) + 0.05
    weights /= weights.sum()
    params = tuple(tuple(random_cell_params(s, rng) for s in schemas)
                   for _ in range(n_comp))
    missing = rng.uniform(0.05, 0.6, size=(n_comp, n_vars))
    return MixtureModel(weights, params, missing, schemas)


def random_row(model: MixtureModel, rng) -> tuple:
    """One sampled row (with missing cells) from a model."""
    from hetmix import sample_cohort
    dataset, _ = sample_cohort(model, 1, rng)
    return dataset.row(0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


def recovery_model() -> MixtureModel:
    """Balanced 2-component model, one variable per family, nonuniform q.

    Components are separated by several standard deviations in every
    variable, so EM responsibilities are nearly hard labels and parameter
    estimates approach their supervised values.
    """
    seven = tuple(range(1, 8))
    schemas = (VariableSchema("a_real", "real"),
               VariableSchema("b_conc", "nonnegative"),
               VariableSchema("c_scale", "ordinal", seven),
               VariableSchema("d_code", "categorical", ("north", "south", "east")))
    comp0 = (Gaussian(-3.0, 1.0), InflatedGamma(0.1, 2.0, 3.0),
             QuantizedGaussian(2.0, 0.25, seven),
             Categorical((0.8, 0.1, 0.1), ("north", "south", "east")))
    comp1 = (Gaussian(3.0, 1.0), InflatedGamma(0.5, 5.0, 1.0),
             QuantizedGaussian(6.0, 0.25, seven),
             Categorical((0.1, 0.1, 0.8), ("north", "south", "east")))
    missing = [[0.10, 0.20, 0.05, 0.30],
               [0.30, 0.05, 0.25, 0.10]]
    return MixtureModel((0.6, 0.4), (comp0, comp1), missing, schemas)
