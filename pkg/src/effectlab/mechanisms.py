"""Structural mechanisms and noise specifications.

A mechanism maps an encoded parent matrix (categorical parents one-hot
encoded, continuous parents raw) to one output value per row. The library
draws linear mechanisms and one-hidden-layer tanh networks from a prior;
tests and callers may subclass :class:`Mechanism` for bespoke equations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError
from .rng import ensure_rng

GAUSSIAN = "gaussian"
GUMBEL = "gumbel"


class Mechanism:
    """Maps encoded parents (n, d) to outputs (n,)."""

    input_dim: int

    def apply(self, encoded_parents: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise ContractError(f"{type(self).__name__} is not serializable")


class ConstantMechanism(Mechanism):
    """Fixed output regardless of parents; used for roots and do-surgery."""

    input_dim = 0

    def __init__(self, value: float):
        self.value = float(value)

    def apply(self, encoded_parents: np.ndarray) -> np.ndarray:
        n = encoded_parents.shape[0]
        return np.full(n, self.value, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"type": "constant", "value": self.value}


class LinearMechanism(Mechanism):
    def __init__(self, weights: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        self.input_dim = self.weights.size

    def apply(self, encoded_parents: np.ndarray) -> np.ndarray:
        self._check(encoded_parents)
        return encoded_parents @ self.weights

    def _check(self, x):
        if x.shape[1] != self.input_dim:
            raise ContractError(
                f"mechanism expects {self.input_dim} inputs, got {x.shape[1]}"
            )

    def to_dict(self) -> dict:
        return {"type": "linear", "weights": self.weights.tolist()}


class TanhNetworkMechanism(Mechanism):
    """One-hidden-layer tanh network: w_out . tanh(W_in x)."""

    def __init__(self, w_in: np.ndarray, w_out: np.ndarray):
        self.w_in = np.asarray(w_in, dtype=np.float64)
        self.w_out = np.asarray(w_out, dtype=np.float64).reshape(-1)
        if self.w_in.shape[0] != self.w_out.size:
            raise ContractError("hidden sizes of w_in and w_out disagree")
        self.input_dim = self.w_in.shape[1]

    def apply(self, encoded_parents: np.ndarray) -> np.ndarray:
        if encoded_parents.shape[1] != self.input_dim:
            raise ContractError(
                f"mechanism expects {self.input_dim} inputs, got {encoded_parents.shape[1]}"
            )
        return np.tanh(encoded_parents @ self.w_in.T) @ self.w_out

    def to_dict(self) -> dict:
        return {
            "type": "tanh_network",
            "w_in": self.w_in.tolist(),
            "w_out": self.w_out.tolist(),
        }


def mechanism_from_dict(d: dict) -> Mechanism:
    kind = d.get("type")
    if kind == "constant":
        return ConstantMechanism(d["value"])
    if kind == "linear":
        return LinearMechanism(np.asarray(d["weights"]))
    if kind == "tanh_network":
        return TanhNetworkMechanism(np.asarray(d["w_in"]), np.asarray(d["w_out"]))
    raise ContractError(f"unknown mechanism type {kind!r}")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise family and scale for one mechanism."""

    family: str = GAUSSIAN
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in (GAUSSIAN, GUMBEL):
            raise ConfigurationError(f"unknown noise family {self.family!r}")
        if self.scale <= 0:
            raise ConfigurationError(f"noise scale must be > 0, got {self.scale}")

    def standard(self, rng, size) -> np.ndarray:
        """Unit-scale noise draw; multiply by ``scale`` at use time so the
        same standard draw can be reused across interventional arms."""
        rng = ensure_rng(rng)
        if self.family == GAUSSIAN:
            return rng.standard_normal(size)
        return rng.gumbel(0.0, 1.0, size)

    def to_dict(self) -> dict:
        return {"family": self.family, "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(d["family"], d["scale"])


@dataclass(frozen=True)
class MechanismPrior:
    """Distribution over node kinds and structural equations.

    ``categorical_prob`` is the chance a node is categorical;
    ``nonlinear_prob`` the chance a mechanism is a tanh network rather than
    linear. Linear coefficients are uniform on ``coefficient_range``,
    redrawn until |c| >= ``coefficient_min_abs`` (0 disables the floor);
    network weights are zero-mean Gaussians scaled by 1/sqrt(fan-in); all
    noise scales are uniform on ``noise_scale_range``.
    """

    categorical_prob: float = 0.3
    categories_range: tuple[int, int] = (2, 5)
    nonlinear_prob: float = 0.3
    coefficient_range: tuple[float, float] = (-2.0, 2.0)
    coefficient_min_abs: float = 0.0
    noise_scale_range: tuple[float, float] = (0.1, 1.0)
    hidden_units: int = 8
    categorical_noise: str = GAUSSIAN

    def __post_init__(self):
        if not (0.0 <= self.categorical_prob <= 1.0):
            raise ConfigurationError("categorical_prob must be in [0, 1]")
        if not (0.0 <= self.nonlinear_prob <= 1.0):
            raise ConfigurationError("nonlinear_prob must be in [0, 1]")
        lo, hi = self.categories_range
        if lo < 2 or hi < lo:
            raise ConfigurationError(f"categories_range must satisfy 2 <= lo <= hi, got {self.categories_range}")
        lo, hi = self.coefficient_range
        if self.coefficient_min_abs < 0:
            raise ConfigurationError("coefficient_min_abs must be >= 0")
        if self.coefficient_min_abs > 0 and max(abs(lo), abs(hi)) <= self.coefficient_min_abs:
            raise ConfigurationError(
                "coefficient_min_abs leaves no admissible coefficients "
                f"in coefficient_range {self.coefficient_range}"
            )
        lo, hi = self.noise_scale_range
        if lo <= 0 or hi < lo:
            raise ConfigurationError("noise_scale_range must satisfy 0 < lo <= hi")
        if self.hidden_units < 1:
            raise ConfigurationError("hidden_units must be >= 1")
        if self.categorical_noise not in (GAUSSIAN, GUMBEL):
            raise ConfigurationError(f"unknown noise family {self.categorical_noise!r}")

    def draw_mechanism(self, input_dim: int, rng) -> Mechanism:
        rng = ensure_rng(rng)
        if input_dim == 0:
            return ConstantMechanism(0.0)
        if rng.random() < self.nonlinear_prob:
            w_in = rng.standard_normal((self.hidden_units, input_dim)) / np.sqrt(input_dim)
            w_out = rng.standard_normal(self.hidden_units) / np.sqrt(self.hidden_units)
            return TanhNetworkMechanism(w_in, w_out)
        lo, hi = self.coefficient_range
        coefs = rng.uniform(lo, hi, size=input_dim)
        while np.any(weak := np.abs(coefs) < self.coefficient_min_abs):
            coefs[weak] = rng.uniform(lo, hi, size=int(weak.sum()))
        return LinearMechanism(coefs)

    def draw_noise_scale(self, rng) -> float:
        lo, hi = self.noise_scale_range
        return float(ensure_rng(rng).uniform(lo, hi))
