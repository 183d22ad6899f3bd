"""Shared fixtures: hand-built structural models with known effects."""
from __future__ import annotations

import numpy as np
import pytest

from effectlab.graphs import CausalProcessGraph
from effectlab.mechanisms import (
    ConstantMechanism,
    LinearMechanism,
    Mechanism,
    NoiseSpec,
)
from effectlab.scm import ContinuousEquation, NodeSpec, Scm
from effectlab.table import CONTINUOUS


class ProductMechanism(Mechanism):
    """f(a, b) = a * b, for building interaction outcomes in tests."""

    input_dim = 2

    def apply(self, encoded_parents: np.ndarray) -> np.ndarray:
        return encoded_parents[:, 0] * encoded_parents[:, 1]


def linear_txy_scm(slope_t: float = 2.0, slope_x: float = 1.0,
                   noise_scale: float = 1.0) -> Scm:
    """T(0), X(1) independent roots; Y(2) := slope_t*T + slope_x*X + noise."""
    graph = CausalProcessGraph(3, [(0, 2), (1, 2)])
    specs = [
        NodeSpec(CONTINUOUS, ()),
        NodeSpec(CONTINUOUS, ()),
        NodeSpec(CONTINUOUS, (0, 1)),
    ]
    equations = [
        ContinuousEquation(ConstantMechanism(0.0), NoiseSpec(scale=1.0)),
        ContinuousEquation(ConstantMechanism(0.0), NoiseSpec(scale=1.0)),
        ContinuousEquation(
            LinearMechanism([slope_t, slope_x]), NoiseSpec(scale=noise_scale)
        ),
    ]
    return Scm(graph, specs, equations, seed=0)


def interaction_txy_scm(noise_scale: float = 0.5) -> Scm:
    """T(0), X(1) roots; Y(2) := T * X + noise."""
    graph = CausalProcessGraph(3, [(0, 2), (1, 2)])
    specs = [
        NodeSpec(CONTINUOUS, ()),
        NodeSpec(CONTINUOUS, ()),
        NodeSpec(CONTINUOUS, (0, 1)),
    ]
    equations = [
        ContinuousEquation(ConstantMechanism(0.0), NoiseSpec(scale=1.0)),
        ContinuousEquation(ConstantMechanism(0.0), NoiseSpec(scale=1.0)),
        ContinuousEquation(ProductMechanism(), NoiseSpec(scale=noise_scale)),
    ]
    return Scm(graph, specs, equations, seed=0)


@pytest.fixture
def txy_scm() -> Scm:
    return linear_txy_scm()
