"""Online readout adaptation with recursive least squares.

The readout ``w_out`` maps a reservoir state to a next-observation
prediction. It starts at zero with a high-gain inverse-covariance estimate
``P = delta * I``, so the very first prediction errors move the weights a
long way; no pretraining is needed. Each step performs, in order:

    e = target - w_out @ x                    prediction error
    k = P x / (forgetting + x' P x)           gain vector
    w_out += outer(e, k)                      weight update
    P = (P - outer(k, x' P)) / forgetting     inverse-covariance update

A forgetting factor below one exponentially discounts old pairs, which is
what lets the readout track a dynamics change within a handful of steps.

:func:`ridge_fit` is the batch counterpart (used to pretrain a readout from
logged rollouts); with forgetting factor 1 the recursion reproduces the
batch ridge solution exactly, which the test suite leans on as an oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .numerics import as_matrix, as_vector, check_finite
from .reservoir import Reservoir

_DENOM_GUARD = 1e-12


@dataclass(frozen=True)
class RlsConfig:
    """forgetting: exponential discount on past errors, in (0, 1].
    delta: scale of the initial inverse-covariance estimate (large = plastic).
    p_bound: windup limit on P's diagonal, defaulting to 100x delta. With
    forgetting < 1, directions the data never excites inflate by
    1/forgetting every step (classic estimator windup); within a few
    thousand low-excitation steps their gains amplify tiny novel
    perturbations into weight explosions, and eventually roundoff destroys
    the gain denominator outright. Directions that outgrow the bound are
    congruence-scaled back to it. The default leaves mildly-excited
    directions two decades of headroom above the fresh-filter sensitivity
    (a bound at delta itself throttles convergence by rescaling every
    step) while keeping worst-case transient gains small enough not to
    destabilize anything consuming the predictions. Inactive when
    forgetting = 1 (P only shrinks), so the batch-ridge equivalence is
    untouched.
    """

    forgetting: float = 0.99
    delta: float = 100.0
    p_bound: float | None = None

    def __post_init__(self):
        if not 0.0 < self.forgetting <= 1.0:
            raise ValueError(f"forgetting factor must lie in (0, 1], got {self.forgetting}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.p_bound is not None and self.p_bound < self.delta:
            raise ValueError(f"p_bound must be >= delta, got {self.p_bound}")

    @property
    def effective_p_bound(self) -> float:
        return 100.0 * self.delta if self.p_bound is None else self.p_bound


@dataclass
class PredictionRecord:
    """One adaptation step: the error vector, its norm, and how far the
    weights moved (Frobenius norm of the update)."""

    error: np.ndarray
    error_norm: float
    dw_norm: float


class RlsReadout:
    """Trainable linear readout with recursive least-squares updates.

    Single-owner mutable: ``rls_step`` rewrites ``w_out`` and ``p`` in
    place. ``predict`` is pure.
    """

    def __init__(self, cfg: RlsConfig, n_y: int, n_x: int):
        if n_y < 1 or n_x < 1:
            raise ValueError(f"dimensions must be >= 1, got n_y={n_y}, n_x={n_x}")
        self.cfg = cfg
        self.n_y = n_y
        self.n_x = n_x
        self.w_out = np.zeros((n_y, n_x))
        self.p = cfg.delta * np.eye(n_x)
        self.step_count = 0

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = as_vector(x, "x")
        if x.shape[0] != self.n_x:
            raise ValueError(f"state length {x.shape[0]} does not match n_x={self.n_x}")
        return self.w_out @ x

    def rls_step(self, x: np.ndarray, target: np.ndarray) -> PredictionRecord:
        """One online update toward ``target``; returns the step record."""
        x = as_vector(x, "x")
        target = as_vector(target, "target")
        if x.shape[0] != self.n_x:
            raise ValueError(f"state length {x.shape[0]} does not match n_x={self.n_x}")
        if target.shape[0] != self.n_y:
            raise ValueError(f"target length {target.shape[0]} does not match n_y={self.n_y}")
        check_finite(x, "x")
        check_finite(target, "target")

        lam = self.cfg.forgetting
        e = target - self.w_out @ x
        px = self.p @ x
        denom = lam + x @ px
        if not np.isfinite(denom) or denom <= _DENOM_GUARD:
            raise RuntimeError(
                f"RLS covariance collapsed at step {self.step_count}: gain denominator {denom!r} <= {_DENOM_GUARD} "
                f"(forgetting={lam}, |x|={np.linalg.norm(x):.3g}); the covariance update is no longer trustworthy"
            )
        k = px / denom
        dw = np.outer(e, k)
        self.w_out += dw
        self.p = (self.p - np.outer(k, px)) / lam
        # Symmetry drifts under the rank-1 recursion; re-center every step.
        self.p = 0.5 * (self.p + self.p.T)
        # Windup limit: congruence-scale oversized directions back to the
        # bound (preserves positive definiteness, leaves the rest alone).
        bound = self.cfg.effective_p_bound
        diag = np.diagonal(self.p)
        if diag.max() > bound:
            scale = np.sqrt(np.minimum(1.0, bound / np.maximum(diag, 1e-300)))
            self.p *= scale[:, None]
            self.p *= scale[None, :]
        if not np.all(np.isfinite(self.p)) or not np.all(np.isfinite(self.w_out)):
            raise RuntimeError(f"RLS produced non-finite values at step {self.step_count}")
        self.step_count += 1
        error_norm = float(np.linalg.norm(e))
        return PredictionRecord(error=e, error_norm=error_norm, dw_norm=float(np.linalg.norm(dw)))

    def copy(self) -> "RlsReadout":
        r = RlsReadout(self.cfg, self.n_y, self.n_x)
        r.w_out = self.w_out.copy()
        r.p = self.p.copy()
        r.step_count = self.step_count
        return r


def init(cfg: RlsConfig, n_y: int, n_x: int) -> RlsReadout:
    """Zero-knowledge readout: w_out = 0, P = delta * I."""
    return RlsReadout(cfg, n_y, n_x)


def ridge_fit(states: np.ndarray, targets: np.ndarray, reg: float) -> np.ndarray:
    """Batch ridge regression ``argmin_W sum ||targets_i - W states_i||^2 + reg ||W||_F^2``.

    ``states`` is (n_x, T) with one column per sample, ``targets`` is
    (n_y, T). Returns the (n_y, n_x) weight matrix
    ``targets @ states.T @ inv(states @ states.T + reg I)``.
    """
    states = as_matrix(states, "states")
    targets = as_matrix(targets, "targets")
    if states.shape[1] != targets.shape[1]:
        raise ValueError(f"states has {states.shape[1]} samples but targets has {targets.shape[1]}")
    if states.shape[1] < 1:
        raise ValueError("need at least one sample")
    if reg <= 0.0:
        raise ValueError(f"reg must be positive, got {reg}")
    gram = states @ states.T + reg * np.eye(states.shape[0])
    try:
        solution = np.linalg.solve(gram, states @ targets.T)
    except np.linalg.LinAlgError as err:
        raise RuntimeError(f"regularized normal matrix is singular (reg={reg} too small for these states): {err}") from err
    if not np.all(np.isfinite(solution)):
        raise RuntimeError(f"ridge solve produced non-finite weights (reg={reg} likely too small)")
    return solution.T


def pretrain_readout(
    rollouts: Sequence,
    reservoir: Reservoir,
    reg: float,
    rls_cfg: RlsConfig,
    obs_scale: np.ndarray | None = None,
) -> RlsReadout:
    """Fit a readout offline from logged transitions, then hand it to RLS.

    Drives ``reservoir`` through the observation sequence of each rollout
    episode (state reset at every episode boundary), collects
    (state, next-observation) pairs, and ridge-fits the readout on them.
    Observations are divided by ``obs_scale`` when given, matching the
    scaling used online. The returned readout carries the fitted weights
    but a fresh ``P = delta * I``, so online adaptation continues from it.
    """
    rollouts = list(rollouts)
    if not rollouts:
        raise ValueError("pretraining requires at least one transition")
    scale = None if obs_scale is None else np.asarray(obs_scale, dtype=np.float64)
    reservoir.reset_state()
    xs = []
    ys = []
    for tr in rollouts:
        s = np.asarray(tr.s, dtype=np.float64)
        s_next = np.asarray(tr.s_next, dtype=np.float64)
        if scale is not None:
            s = s / scale
            s_next = s_next / scale
        x = reservoir.update(s)
        xs.append(x.copy())
        ys.append(s_next)
        if tr.done or tr.truncated:
            reservoir.reset_state()
    states = np.stack(xs, axis=1)
    targets = np.stack(ys, axis=1)
    w_out = ridge_fit(states, targets, reg)
    out = RlsReadout(rls_cfg, n_y=targets.shape[0], n_x=states.shape[0])
    out.w_out = w_out
    reservoir.reset_state()
    return out


def save_readout_snapshot(path: str | Path, readout: RlsReadout) -> None:
    """Dump (w_out, p, step_count) for offline inspection of adaptation traces."""
    doc = {
        "format": "esnrl-readout",
        "version": 1,
        "step_count": readout.step_count,
        "forgetting": readout.cfg.forgetting,
        "delta": readout.cfg.delta,
        "w_out": readout.w_out.tolist(),
        "p": readout.p.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_readout_snapshot(path: str | Path) -> RlsReadout:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "esnrl-readout":
        raise ValueError(f"{path} is not a readout snapshot")
    w_out = np.array(doc["w_out"])
    out = RlsReadout(RlsConfig(forgetting=doc["forgetting"], delta=doc["delta"]), n_y=w_out.shape[0], n_x=w_out.shape[1])
    out.w_out = w_out
    out.p = np.array(doc["p"])
    out.step_count = int(doc["step_count"])
    return out
