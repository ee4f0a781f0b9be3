"""Minimal polynomial (MPE) and reduced rank (RRE) vector extrapolation.

Both methods combine a window ``s_0, ..., s_{q+1}`` as ``t = sum_i gamma_i s_i``
with ``sum_i gamma_i = 1`` and evaluate the combination through a QR factor
of the difference matrix ``[s_1 - s_0, ..., s_{q+1} - s_q]``:
``t = s_0 + Q (R xi)`` where ``xi_j = 1 - (gamma_0 + ... + gamma_j)``.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ExtrapolationSingularError, ShapeError
from .models import ExtrapolationMethod

logger = logging.getLogger(__name__)

RANK_TOL = 1e-13
COEFFICIENT_TOL = 1e-13


class SequenceWindow:
    """An ordered window of ``q + 2`` equally sized iterates."""

    def __init__(self, iterates: Sequence[np.ndarray]):
        arrays = [np.asarray(s, dtype=float) for s in iterates]
        if len(arrays) < 3:
            raise ShapeError(f"a window needs at least 3 iterates, got {len(arrays)}")
        n = arrays[0].shape
        if len(n) != 1 or any(s.shape != n for s in arrays):
            raise ShapeError("window iterates must be vectors of one length")
        self.iterates = np.column_stack(arrays)
        self.iterates.setflags(write=False)

    @property
    def q(self) -> int:
        return self.iterates.shape[1] - 2

    @property
    def first(self) -> np.ndarray:
        return self.iterates[:, 0]

    @property
    def last(self) -> np.ndarray:
        return self.iterates[:, -1]

    def __len__(self) -> int:
        return self.iterates.shape[1]


@dataclass
class ExtrapolationResult:
    vector: np.ndarray
    gamma: np.ndarray
    rank: int


def _mgs_qr(differences: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Modified Gram-Schmidt QR, stopping at the first dependent column.

    Returns ``Q``, ``R`` and ``k``: columns ``0..k-1`` are independent and
    ``R[:, k]`` (when ``k`` is a valid column) holds the projection of the
    first dependent column.
    """
    n, cols = differences.shape
    scale = np.linalg.norm(differences)
    Q = np.zeros((n, cols))
    R = np.zeros((cols, cols))
    for j in range(cols):
        w = differences[:, j].copy()
        for i in range(j):
            R[i, j] = Q[:, i] @ w
            w -= R[i, j] * Q[:, i]
        R[j, j] = np.linalg.norm(w)
        if R[j, j] <= RANK_TOL * scale:
            return Q, R, j
        Q[:, j] = w / R[j, j]
    return Q, R, cols


def _combine(
    window: SequenceWindow, Q: np.ndarray, R: np.ndarray, gamma: np.ndarray
) -> np.ndarray:
    k = gamma.size - 1
    xi = 1.0 - np.cumsum(gamma[:k])
    return window.first + Q[:, :k] @ (R[:k, :k] @ xi)


def _mpe_gamma(R: np.ndarray, k: int) -> np.ndarray:
    """Solve ``R_{k-1} c = -r_k`` and normalize ``[c, 1]``."""
    c = scipy.linalg.solve_triangular(R[:k, :k], -R[:k, k], lower=False)
    coefficients = np.append(c, 1.0)
    coefficient_sum = coefficients.sum()
    if abs(coefficient_sum) < COEFFICIENT_TOL * np.abs(coefficients).max():
        raise ExtrapolationSingularError(
            f"MPE coefficient sum {coefficient_sum:.3e} vanishes"
        )
    return coefficients / coefficient_sum


def _rre_gamma(R: np.ndarray, k: int) -> np.ndarray:
    """Solve ``R_k^T R_k d = e`` by two triangular solves and normalize."""
    upper = R[:k, :k]
    z = scipy.linalg.solve_triangular(upper, np.ones(k), trans="T", lower=False)
    d = scipy.linalg.solve_triangular(upper, z, lower=False)
    total = d.sum()
    if abs(total) < COEFFICIENT_TOL * np.abs(d).max():
        raise ExtrapolationSingularError(f"RRE coefficient sum {total:.3e} vanishes")
    return d / total


def extrapolate(
    window: SequenceWindow, method: ExtrapolationMethod | str
) -> ExtrapolationResult:
    """Extrapolate the limit of ``window`` with MPE or RRE.

    A window with no independent difference is treated as converged and
    returns ``s_0``. A rank-deficient window is truncated to its first
    dependent difference; RRE then coincides with MPE since that combination
    already annihilates the differences.

    Raises:
        ExtrapolationSingularError: the coefficients cannot be normalized.
    """
    method = ExtrapolationMethod(method)
    differences = np.diff(window.iterates, axis=1)
    if not np.any(differences):
        return ExtrapolationResult(window.first.copy(), np.array([1.0]), 0)

    Q, R, rank = _mgs_qr(differences)
    if rank == 0:
        return ExtrapolationResult(window.first.copy(), np.array([1.0]), 0)

    full_rank = rank == differences.shape[1]
    if method is ExtrapolationMethod.RRE and full_rank:
        gamma = _rre_gamma(R, rank)
    else:
        if full_rank:
            # MPE uses differences 0..q-1 to predict difference q
            rank -= 1
            if rank == 0:
                raise ExtrapolationSingularError("window too short for MPE")
        elif rank < differences.shape[1] - 1:
            logger.debug(f"Window rank {rank} < q={window.q}; truncating")
        gamma = _mpe_gamma(R, rank)
    return ExtrapolationResult(_combine(window, Q, R, gamma), gamma, rank)


def mpe(window: SequenceWindow) -> np.ndarray:
    """Minimal polynomial extrapolation of ``window``."""
    return extrapolate(window, ExtrapolationMethod.MPE).vector


def rre(window: SequenceWindow) -> np.ndarray:
    """Reduced rank extrapolation of ``window``."""
    return extrapolate(window, ExtrapolationMethod.RRE).vector
