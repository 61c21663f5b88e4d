"""Shared fixtures: the two worked instances used throughout the suite."""

import pytest

from kcover.knapsack import KnapsackInstance


@pytest.fixture
def e1():
    return KnapsackInstance(sizes=(2, 3, 4), demand=5)


@pytest.fixture
def case_b_instance():
    return KnapsackInstance(sizes=(3, 1, 1, 1, 1), demand=4)
