"""Scalar extended Kalman filter tracking one wearable-to-tag distance.

The state is the distance itself. There is no usable motion model for a
person relative to a hand-held asset, so the filter predicts a constant
distance and lets relative movement enter through process noise sized from a
walking-speed bound. The measurement is a single RSSI value, nonlinear in the
state through the log-distance curve, linearized at the current estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .pathloss import DEFAULT_MODEL, PathLossModel

__all__ = [
    "DT_LINEAR",
    "DT_SQUARED",
    "EkfParams",
    "EkfState",
    "init",
    "jacobian",
    "predict",
    "process_noise_from_speed",
    "step",
    "update",
]

#: Grow the predicted variance by q * dt^2 (dt treated as a scale on a
#: per-step velocity draw; variance then scales with the square of the gap).
DT_SQUARED = "dt_squared"
#: Grow the predicted variance by q * dt (random-walk accumulation).
DT_LINEAR = "dt_linear"


def process_noise_from_speed(v_max: float = 0.7, tail: float = 0.05) -> float:
    """Velocity variance q such that P(|v| <= v_max) = 1 - tail for v ~ N(0, q).

    Folding a hard speed bound into a Gaussian: |v| <= v_max with probability
    1 - tail requires v_max^2 / q to be the (1 - tail) quantile of a
    chi-squared with one degree of freedom, so q = v_max^2 / chi2_ppf(1 - tail, 1).
    The defaults (0.7 m/s, 5% tail) give q = 0.1276 m^2/s^2.
    """
    from scipy.stats import chi2

    if not (math.isfinite(v_max) and v_max > 0):
        raise ValueError(f"speed bound must be finite and positive, got {v_max}")
    if not 0.0 < tail < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {tail}")
    return v_max**2 / float(chi2.ppf(1.0 - tail, df=1))


@dataclass(frozen=True)
class EkfParams:
    """Filter configuration.

    ``q`` is a velocity variance in m^2/s^2 and ``r`` the measurement-noise
    variance in dB^2. ``d_min``/``d_max`` clamp only the initial estimate: a
    single noisy RSSI inverted through the log curve can land anywhere, and
    the plausible badge-to-asset range is known a priori. ``x_floor`` keeps
    later updates off the singularity of the measurement Jacobian at zero.
    """

    model: PathLossModel = DEFAULT_MODEL
    q: float = 0.1275
    r: float = 43.53
    d_min: float = 0.5
    d_max: float = 20.0
    p0: float = 4.0
    dt_mode: str = DT_SQUARED
    x_floor: float = 0.01

    def __post_init__(self) -> None:
        if not (math.isfinite(self.q) and self.q > 0):
            raise ValueError(f"process noise must be finite and positive, got {self.q}")
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"measurement noise must be finite and positive, got {self.r}")
        if not (math.isfinite(self.d_min) and self.d_min > 0):
            raise ValueError(f"d_min must be finite and positive, got {self.d_min}")
        if not (math.isfinite(self.d_max) and self.d_max > self.d_min):
            raise ValueError(f"d_max must exceed d_min, got {self.d_min}..{self.d_max}")
        if not (math.isfinite(self.p0) and self.p0 > 0):
            raise ValueError(f"initial variance must be finite and positive, got {self.p0}")
        if self.dt_mode not in (DT_SQUARED, DT_LINEAR):
            raise ValueError(f"dt_mode must be {DT_SQUARED!r} or {DT_LINEAR!r}, got {self.dt_mode!r}")
        if not (math.isfinite(self.x_floor) and 0 < self.x_floor <= self.d_min):
            raise ValueError(f"x_floor must lie in (0, d_min], got {self.x_floor}")

    def to_dict(self) -> dict:
        return {
            "n": self.model.n,
            "x0_m": self.model.x0,
            "rssi0_db": self.model.rssi0,
            "q": self.q,
            "r": self.r,
            "d_min_m": self.d_min,
            "d_max_m": self.d_max,
            "p0": self.p0,
            "dt_mode": self.dt_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EkfParams:
        return cls(
            model=PathLossModel(
                n=float(d["n"]), x0=float(d["x0_m"]), rssi0=float(d["rssi0_db"])
            ),
            q=float(d["q"]),
            r=float(d["r"]),
            d_min=float(d["d_min_m"]),
            d_max=float(d["d_max_m"]),
            p0=float(d["p0"]),
            dt_mode=str(d["dt_mode"]),
        )


@dataclass(frozen=True)
class EkfState:
    """Posterior after the last processed observation.

    ``x`` is the distance estimate in meters, ``p`` its variance in m^2, and
    ``ts`` the timestamp of the observation that produced it.
    """

    x: float
    p: float
    ts: float


def init(params: EkfParams, rssi: float, ts: float) -> EkfState:
    """Start a filter from its first observation.

    The raw inversion of one noisy RSSI is clamped into [d_min, d_max];
    subsequent updates run unclamped (apart from the Jacobian floor).
    """
    x = min(max(params.model.inverse(rssi), params.d_min), params.d_max)
    return EkfState(x=x, p=params.p0, ts=ts)


def predict(state: EkfState, ts: float, params: EkfParams) -> EkfState:
    """Propagate the state to a later timestamp: estimate unchanged, variance grown.

    A missed broadcast needs no special case; the next observation simply
    arrives with a larger gap and the variance grows accordingly.
    """
    dt = ts - state.ts
    if dt < 0:
        raise ValueError(f"observations must be processed in time order ({ts} < {state.ts})")
    if params.dt_mode == DT_SQUARED:
        growth = params.q * dt * dt
    else:
        growth = params.q * dt
    return EkfState(x=state.x, p=state.p + growth, ts=ts)


def jacobian(model: PathLossModel, x: float) -> float:
    """Derivative of expected RSSI with respect to distance at ``x``, in dB/m."""
    if not (x > 0):
        raise ValueError(f"jacobian needs a positive distance, got {x}")
    return -10.0 * model.n / (math.log(10.0) * x)


def update(state: EkfState, rssi: float, params: EkfParams) -> EkfState:
    """Fold one RSSI observation into the state (measurement update)."""
    h = jacobian(params.model, state.x)
    y = rssi - params.model.forward(state.x)
    s = h * state.p * h + params.r
    k = state.p * h / s
    x = state.x + k * y
    if x < params.x_floor:
        x = params.x_floor
    p = (1.0 - k * h) * state.p
    return EkfState(x=x, p=p, ts=state.ts)


def step(state: EkfState | None, rssi: float, ts: float, params: EkfParams) -> EkfState:
    """Process one observation: initialize on the first, predict then update after."""
    if state is None:
        return init(params, rssi, ts)
    return update(predict(state, ts, params), rssi, params)
