"""Shared fixtures: the worked two-outcome instance used across modules."""

import numpy as np
import pytest

from epibound import Categorical, FiniteTaskDistribution, ModelClass, finite_tasks


@pytest.fixture
def binary_source() -> FiniteTaskDistribution:
    return finite_tasks([
        (Categorical([0.3, 0.7]), 0.5),
        (Categorical([0.5, 0.5]), 0.5),
    ])


@pytest.fixture
def binary_target() -> FiniteTaskDistribution:
    return finite_tasks([(Categorical([0.6, 0.4]), 1.0)])


@pytest.fixture
def binary_model() -> ModelClass:
    return ModelClass.binary_grid([0.0, 0.25, 0.5, 0.75, 1.0])


@pytest.fixture
def binary_predictor() -> Categorical:
    return Categorical([0.25, 0.75])


def random_categorical_pair(rng: np.random.Generator, m: int):
    return Categorical(rng.dirichlet(np.ones(m))), Categorical(rng.dirichlet(np.ones(m)))
