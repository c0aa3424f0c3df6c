"""Least Squares, Decision Feedback and complex-SVR channel estimators.

Each estimator maps a received frame ``Y(s, k)`` (OFDM symbols by occupied
subcarriers) to a full-grid estimate ``H_hat(s, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import OfdmConfig, clamp_channel, hard_decision, pilot_symbols
from .svr_core import SolverError, SvrHyperparams, gram_matrix, rbf_kernel, solve_dual_batch

METHODS = ("LS", "DecisionFeedback", "SVR")


@dataclass
class ChannelEstimate:
    h_hat: np.ndarray
    method: str
    per_symbol_diagnostics: list[dict] | None = None


def ls_pilot_estimate(y_p, x_p) -> np.ndarray:
    """Per-pilot least squares, ``Y_p / X_p``."""
    y_p = np.asarray(y_p, dtype=complex)
    x_p = np.asarray(x_p, dtype=complex)
    if np.any(x_p == 0):
        raise ValueError("pilot symbols must be nonzero")
    return y_p / x_p


def interpolation_matrix(pilot_columns, n_subcarriers: int, kind: str = "linear") -> np.ndarray:
    """Matrix ``W`` with ``h_full = W @ h_pilots`` along one OFDM symbol.

    ``linear`` holds the end values constant outside the pilot span;
    ``nearest`` copies the closest pilot (ties go to the lower one).
    """
    pilot_columns = np.asarray(pilot_columns)
    k = np.arange(n_subcarriers)
    n_p = pilot_columns.size
    if kind == "linear":
        eye = np.eye(n_p)
        return np.stack([np.interp(k, pilot_columns, eye[m]) for m in range(n_p)], axis=1)
    if kind == "nearest":
        nearest = np.argmin(np.abs(k[:, None] - pilot_columns[None, :]), axis=1)
        return np.eye(n_p)[nearest]
    raise ValueError(f"unknown interpolation {kind!r}")


def _pilot_ls(frame: np.ndarray, config: OfdmConfig, rows=slice(None)) -> np.ndarray:
    return ls_pilot_estimate(frame[:, config.pilot_columns], pilot_symbols(config)[rows])


def ls_estimate_frame(frame, config: OfdmConfig, interpolation: str = "linear") -> ChannelEstimate:
    """Pilot LS on every symbol, interpolated across the occupied subcarriers."""
    frame = np.asarray(frame, dtype=complex)
    h_p = _pilot_ls(frame, config)
    w = interpolation_matrix(config.pilot_columns, config.occupied_subcarriers, interpolation)
    return ChannelEstimate(h_p @ w.T, "LS")


def decision_feedback_estimate(frame, config: OfdmConfig, reanchor_period: int | None = None) -> ChannelEstimate:
    """Decision-directed tracking seeded by the LS estimate of symbol 0.

    Symbol ``i + 1`` is equalized with the estimate of symbol ``i``, sliced to
    the nearest constellation point (known pilots replace the decision on
    pilot cells) and the channel is re-estimated as ``Y / X_decided``.  With
    ``reanchor_period = R`` every R-th symbol falls back to the pilot LS
    estimate instead; ``None`` tracks on decisions alone after symbol 0.
    """
    frame = np.asarray(frame, dtype=complex)
    if reanchor_period is not None and reanchor_period < 1:
        raise ValueError("reanchor_period must be positive")
    pilots = pilot_symbols(config)
    w = interpolation_matrix(config.pilot_columns, config.occupied_subcarriers)
    n_s = frame.shape[0]
    h = np.empty_like(frame)
    h[0] = ls_pilot_estimate(frame[0, config.pilot_columns], pilots[0]) @ w.T
    for i in range(1, n_s):
        if reanchor_period is not None and i % reanchor_period == 0:
            h[i] = ls_pilot_estimate(frame[i, config.pilot_columns], pilots[i]) @ w.T
            continue
        prev, _ = clamp_channel(h[i - 1])
        decided = hard_decision(frame[i] / prev, config)
        decided[config.pilot_columns] = pilots[i]
        h[i] = frame[i] / decided
    return ChannelEstimate(h, "DecisionFeedback")


def svr_estimate_frame(
    frame, config: OfdmConfig, params: SvrHyperparams | None = None, method: str = "active-set"
) -> ChannelEstimate:
    """Complex SVR interpolation of the pilot LS estimates, one fit per OFDM symbol.

    The Gram matrix depends only on the pilot layout and is built once; the
    duals of all symbols are solved together.  A solver failure re-raises
    :class:`SolverError` with ``symbol_index`` set.
    """
    frame = np.asarray(frame, dtype=complex)
    if params is None:
        params = SvrHyperparams.for_pilot_spacing(config.pilot_spacing)
    if config.n_pilots < 2:
        raise ValueError("SVR estimation needs at least two pilots per symbol")
    positions = config.pilot_columns
    h_p = _pilot_ls(frame, config)
    gram = gram_matrix(positions, params.kernel_sigma)
    try:
        solutions = solve_dual_batch(gram, h_p, params, method)
    except SolverError as err:
        err.args = (f"symbol {err.symbol_index}: {err.args[0]}",)
        raise
    kq = rbf_kernel(np.arange(config.occupied_subcarriers)[:, None], positions[None, :].astype(float), params.kernel_sigma)
    psi = np.stack([s.psi for s in solutions])
    bias = np.array([s.bias for s in solutions])
    diagnostics = [
        {"iterations": s.iterations_used, "objective": s.final_objective, "support_vectors": s.n_support}
        for s in solutions
    ]
    return ChannelEstimate(psi @ kq.T + bias[:, None], "SVR", diagnostics)


def estimate(method: str, frame, config: OfdmConfig, svr_params: SvrHyperparams | None = None,
             reanchor_period: int | None = None, svr_method: str = "active-set") -> ChannelEstimate:
    """Dispatch on a short method key: ``ls``, ``df`` or ``svr``."""
    key = method.lower()
    if key == "ls":
        return ls_estimate_frame(frame, config)
    if key == "df":
        return decision_feedback_estimate(frame, config, reanchor_period)
    if key == "svr":
        return svr_estimate_frame(frame, config, svr_params, svr_method)
    raise ValueError(f"unknown estimator {method!r}; expected ls, df or svr")


def is_finite_estimate(est: ChannelEstimate) -> bool:
    return bool(np.all(np.isfinite(est.h_hat)))


__all__ = [
    "ChannelEstimate", "METHODS", "decision_feedback_estimate", "estimate", "interpolation_matrix",
    "is_finite_estimate", "ls_estimate_frame", "ls_pilot_estimate", "svr_estimate_frame",
]
