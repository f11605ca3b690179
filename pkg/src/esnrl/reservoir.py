"""Echo state network: fixed random weights and the leaky-tanh state update.

The reservoir is a recurrent layer whose weights are drawn once and never
trained. Its internal state is a fading summary of the recent input history:

    x_t = (1 - alpha) * x_{t-1} + alpha * tanh(W_in u_t + W_res x_{t-1})

The recurrent matrix is rescaled to a spectral radius below one so that
states driven by the same inputs forget their initial conditions (the echo
state property). Only the linear readout on top of ``x`` is ever trained,
and that lives in :mod:`esnrl.adapt`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import as_matrix, as_vector, check_finite, make_rng, matvec, rescale_to_radius, spectral_radius

_STREAM_W_IN = 1
_STREAM_W_RES = 2
_MAX_BUILD_ATTEMPTS = 3


@dataclass(frozen=True)
class ReservoirConfig:
    """Shape and dynamics of the reservoir.

    n_x: number of reservoir units.
    n_u: input dimension.
    rho: target spectral radius of the recurrent matrix, in (0, 1).
    alpha: leak rate in (0, 1]; 1 means no leaky mixing.
    input_scale: half-width of the uniform distribution for input weights.
    seed: 64-bit seed that fully determines both weight matrices.
    """

    n_x: int
    n_u: int
    rho: float = 0.9
    alpha: float = 0.3
    input_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_x < 1 or self.n_u < 1:
            raise ValueError(f"n_x and n_u must be >= 1, got n_x={self.n_x}, n_u={self.n_u}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.input_scale <= 0.0:
            raise ValueError(f"input_scale must be positive, got {self.input_scale}")


class Reservoir:
    """A built echo state network with mutable internal state.

    Weights are fixed at construction (use :func:`build`); only ``x``
    changes, via :meth:`update` and :meth:`reset_state`. One reservoir
    belongs to one trial; it is never shared across threads.
    """

    def __init__(self, cfg: ReservoirConfig, w_in: np.ndarray, w_res: np.ndarray):
        self.cfg = cfg
        self.w_in = as_matrix(w_in, "w_in")
        self.w_res = as_matrix(w_res, "w_res")
        if self.w_in.shape != (cfg.n_x, cfg.n_u):
            raise ValueError(f"w_in must be {cfg.n_x}x{cfg.n_u}, got {self.w_in.shape}")
        if self.w_res.shape != (cfg.n_x, cfg.n_x):
            raise ValueError(f"w_res must be {cfg.n_x}x{cfg.n_x}, got {self.w_res.shape}")
        self.x = np.zeros(cfg.n_x)

    def update(self, u: np.ndarray) -> np.ndarray:
        """Advance the state by one input and return the new state."""
        u = as_vector(u, "u")
        if u.shape[0] != self.cfg.n_u:
            raise ValueError(f"input length {u.shape[0]} does not match n_u={self.cfg.n_u}")
        check_finite(u, "u")
        alpha = self.cfg.alpha
        self.x = (1.0 - alpha) * self.x + alpha * np.tanh(self.w_in @ u + self.w_res @ self.x)
        return self.x

    def reset_state(self) -> None:
        """Zero the internal state; weights are untouched."""
        self.x = np.zeros(self.cfg.n_x)

    def copy(self) -> "Reservoir":
        r = Reservoir(self.cfg, self.w_in, self.w_res)
        r.x = self.x.copy()
        return r


def build(cfg: ReservoirConfig) -> Reservoir:
    """Draw the fixed random weights for ``cfg`` and return a fresh reservoir.

    Input weights are i.i.d. uniform on [-input_scale, +input_scale]; the
    recurrent matrix is standard normal, then rescaled so its spectral
    radius equals ``cfg.rho``. The state starts at zero. If a drawn
    recurrent matrix has zero spectral radius the next seed substream is
    tried, up to 3 attempts.
    """
    w_in = make_rng(cfg.seed, _STREAM_W_IN).uniform(-cfg.input_scale, cfg.input_scale, size=(cfg.n_x, cfg.n_u))
    last_err: Exception | None = None
    for attempt in range(_MAX_BUILD_ATTEMPTS):
        raw = make_rng(cfg.seed, _STREAM_W_RES, attempt).standard_normal((cfg.n_x, cfg.n_x))
        try:
            w_res = rescale_to_radius(raw, cfg.rho)
        except ValueError as err:
            last_err = err
            continue
        return Reservoir(cfg, w_in, w_res)
    raise ValueError(f"failed to draw a recurrent matrix with nonzero spectral radius after {_MAX_BUILD_ATTEMPTS} attempts: {last_err}")


def readout(w_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear readout ``w_out @ x`` mapping reservoir state to a prediction."""
    return matvec(w_out, x)


def save_reservoir(path: str | Path, r: Reservoir) -> None:
    """Persist (config, w_in, w_res) as a JSON artifact. State is not saved."""
    doc = {
        "format": "esnrl-reservoir",
        "version": 1,
        "config": {
            "n_x": r.cfg.n_x,
            "n_u": r.cfg.n_u,
            "rho": r.cfg.rho,
            "alpha": r.cfg.alpha,
            "input_scale": r.cfg.input_scale,
            "seed": r.cfg.seed,
        },
        "w_in": r.w_in.tolist(),
        "w_res": r.w_res.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_reservoir(path: str | Path) -> Reservoir:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "esnrl-reservoir":
        raise ValueError(f"{path} is not a reservoir artifact")
    cfg = ReservoirConfig(**doc["config"])
    return Reservoir(cfg, np.array(doc["w_in"]), np.array(doc["w_res"]))


def verify_radius(r: Reservoir, tol: float = 1e-6) -> float:
    """Measured spectral radius of the built recurrent matrix.

    Raises if it strays from the configured target by more than ``tol``.
    """
    radius = spectral_radius(r.w_res)
    if abs(radius - r.cfg.rho) > tol:
        raise ValueError(f"recurrent matrix radius {radius} is off target {r.cfg.rho}")
    return radius
