"""Log-distance path-loss model: evaluation, inversion, least-squares fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_MODEL",
    "DegenerateFitError",
    "PathLossModel",
    "RangeSample",
    "fit",
    "residual_variance",
]


class DegenerateFitError(ValueError):
    """Sample set cannot pin down both fit parameters."""


@dataclass(frozen=True)
class RangeSample:
    """One calibration observation: a known distance (m) and the RSSI (dB) measured there."""

    distance: float
    rssi: float


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance signal decay: rssi(x) = rssi0 - 10 * n * log10(x / x0).

    ``n`` is the decay exponent, ``x0`` the reference distance in meters, and
    ``rssi0`` the expected signal strength at ``x0`` in dB. Free space has
    n = 2; values near 1 are typical of cluttered indoor spaces where
    reflections partially compensate the direct-path loss.
    """

    n: float
    x0: float
    rssi0: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.n) and self.n > 0):
            raise ValueError(f"decay exponent must be finite and positive, got {self.n}")
        if not (math.isfinite(self.x0) and self.x0 > 0):
            raise ValueError(f"reference distance must be finite and positive, got {self.x0}")
        if not math.isfinite(self.rssi0):
            raise ValueError(f"reference rssi must be finite, got {self.rssi0}")

    def forward(self, distance: float) -> float:
        """Expected RSSI in dB at a distance in meters. Requires distance > 0."""
        if not (distance > 0):
            raise ValueError(f"distance must be positive, got {distance}")
        return self.rssi0 - 10.0 * self.n * math.log10(distance / self.x0)

    def inverse(self, rssi: float) -> float:
        """Distance in meters whose expected RSSI equals ``rssi``."""
        return self.x0 * 10.0 ** ((self.rssi0 - rssi) / (10.0 * self.n))

    def to_dict(self) -> dict:
        return {"n": self.n, "x0_m": self.x0, "rssi0_db": self.rssi0}

    @classmethod
    def from_dict(cls, d: dict) -> PathLossModel:
        return cls(n=float(d["n"]), x0=float(d["x0_m"]), rssi0=float(d["rssi0_db"]))


#: Default calibration for badge-to-tag ranging in a cluttered indoor space.
DEFAULT_MODEL = PathLossModel(n=1.011, x0=1.0, rssi0=-45.6)


def _validate_samples(samples: Sequence[RangeSample]) -> None:
    for s in samples:
        if not (math.isfinite(s.distance) and s.distance > 0):
            raise ValueError(f"sample distance must be finite and positive, got {s.distance}")
        if not math.isfinite(s.rssi):
            raise ValueError(f"sample rssi must be finite, got {s.rssi}")


def fit(samples: Iterable[RangeSample], x0: float = 1.0) -> PathLossModel:
    """Least-squares fit of (n, rssi0) with the reference distance held fixed.

    The model is linear in the transformed regressor u = -10 * log10(x / x0),
    rssi = rssi0 + n * u, so ordinary least squares has a closed form:
    n is cov(u, rssi) / var(u) and rssi0 the intercept through the means.

    Raises DegenerateFitError when fewer than two distinct distances are
    present, and ValueError for nonpositive or non-finite inputs.
    """
    if not (math.isfinite(x0) and x0 > 0):
        raise ValueError(f"reference distance must be finite and positive, got {x0}")
    samples = list(samples)
    _validate_samples(samples)
    if len({s.distance for s in samples}) < 2:
        raise DegenerateFitError(
            f"need at least 2 distinct distances to fit, got {len(samples)} sample(s)"
        )
    d = np.array([s.distance for s in samples], dtype=float)
    z = np.array([s.rssi for s in samples], dtype=float)
    u = -10.0 * np.log10(d / x0)
    du = u - u.mean()
    n = float(du @ (z - z.mean()) / (du @ du))
    rssi0 = float(z.mean() - n * u.mean())
    return PathLossModel(n=n, x0=x0, rssi0=rssi0)


def residual_variance(model: PathLossModel, samples: Iterable[RangeSample]) -> float:
    """Mean squared residual of ``samples`` against ``model``, in dB^2.

    This is the population variance of the measurement residuals when the
    model is unbiased, i.e. the natural plug-in estimate for a filter's
    measurement-noise variance.
    """
    samples = list(samples)
    _validate_samples(samples)
    if not samples:
        raise ValueError("residual variance needs at least one sample")
    res = np.array([s.rssi - model.forward(s.distance) for s in samples], dtype=float)
    return float(res @ res / len(res))
