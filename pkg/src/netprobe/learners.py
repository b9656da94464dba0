"""Reward models: online least squares and heavy-tailed median-of-means regression."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .features import N_FEATURES

KPolicy = Union[int, str]
_K_RULES = {"ln": math.log, "log2": math.log2, "log10": math.log10}


@dataclass
class LearnerModel:
    """Parameter vector plus the sliding training buffer.

    ``k_policy`` is either a fixed subsample count or one of ``"ln"``,
    ``"log2"``, ``"log10"`` applied to the current buffer size.
    """

    theta: np.ndarray
    alpha: float = 0.01
    k_policy: KPolicy = "ln"
    lam: float = 0.0
    buffer_cap: int = 2000
    buffer_X: deque = field(default=None, repr=False)
    buffer_Y: deque = field(default=None, repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).copy()
        if self.buffer_X is None:
            self.buffer_X = deque(maxlen=self.buffer_cap)
        if self.buffer_Y is None:
            self.buffer_Y = deque(maxlen=self.buffer_cap)

    @property
    def dim(self) -> int:
        return len(self.theta)

    @property
    def n_samples(self) -> int:
        return len(self.buffer_Y)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.buffer_Y:
            return np.zeros((0, self.dim)), np.zeros(0)
        return np.array(self.buffer_X), np.array(self.buffer_Y, dtype=float)


def init_theta(rng: np.random.Generator, mode: str = "random", dim: int = N_FEATURES) -> np.ndarray:
    """Initial parameters: uniform on [0, 1), zeros, or degree-only (e_1)."""
    if mode == "random":
        return rng.random(dim)
    if mode == "zero":
        return np.zeros(dim)
    if mode == "degree":
        theta = np.zeros(dim)
        theta[0] = 1.0
        return theta
    raise ValueError(f"unknown theta init {mode!r}")


def _check_dim(model: LearnerModel, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.dim,):
        raise ValueError(f"feature dimension {phi.shape} does not match theta ({model.dim},)")
    return phi


def predict(model: LearnerModel, phi) -> float:
    return float(model.theta @ _check_dim(model, phi))


def nol_update(model: LearnerModel, phi, r: float) -> None:
    """One squared-loss gradient step: theta += 2 * alpha * (r - theta.phi) * phi."""
    phi = _check_dim(model, phi)
    if not (np.all(np.isfinite(phi)) and math.isfinite(r)):
        raise ValueError("non-finite input to gradient update")
    residual = r - float(model.theta @ phi)
    grad = -2.0 * residual * phi
    model.theta = model.theta - model.alpha * grad


def append_sample(model: LearnerModel, phi, r: float) -> None:
    """Append a training row; the oldest row is evicted past ``buffer_cap``."""
    phi = _check_dim(model, phi)
    model.buffer_X.append(phi.copy())
    model.buffer_Y.append(float(r))


def pinv(X, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse through the thin SVD."""
    X = np.asarray(X, dtype=float)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if rcond is None:
        rcond = max(X.shape) * np.finfo(float).eps
    cutoff = rcond * (s[0] if len(s) else 0.0)
    inv = np.zeros_like(s)
    np.divide(1.0, s, out=inv, where=s > cutoff)
    return (Vt.T * inv) @ U.T


def pseudo_solve(X_sub, Y_sub, lam: float = 0.0) -> np.ndarray:
    """Minimum-norm solution of ``(X'X + lam I) w = X'Y``.

    With ``lam = 0`` this is ``pinv(X) @ Y``; otherwise the singular values are
    filtered as ``s / (s^2 + lam)``.
    """
    X = np.asarray(X_sub, dtype=float)
    Y = np.asarray(Y_sub, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("need at least one row")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite entries")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    filt = np.zeros_like(s)
    if lam > 0:
        filt = s / (s * s + lam)
    else:
        cutoff = max(X.shape) * np.finfo(float).eps * (s[0] if len(s) else 0.0)
        np.divide(1.0, s, out=filt, where=s > cutoff)
    return Vt.T @ (filt * (U.T @ Y))


def k_from_policy(k_policy: KPolicy, n: int) -> int:
    """Number of subsamples for ``n`` rows, clamped to ``[1, n]``."""
    if isinstance(k_policy, str):
        try:
            raw = _K_RULES[k_policy](n)
        except KeyError:
            raise ValueError(f"unknown k rule {k_policy!r}") from None
    else:
        raw = k_policy
    return max(1, min(n, math.ceil(raw)))


def htr_fit(X, Y, k: int, lam: float = 0.0, rng: np.random.Generator | None = None,
            return_details: bool = False):
    """Generalised median-of-means regression.

    Rows are randomly split into ``k`` near-equal groups, a regression is
    solved on each, and the group solution whose median distance to the
    others is smallest wins. Distances are the quadratic form
    ``<w_i - w_j, (Sigma_j + lam I)(w_i - w_j)>`` with ``Sigma_j`` the
    uncentred second moment of group ``j``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = len(Y)
    if n == 0:
        raise ValueError("empty buffer")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    if k == 1:
        w = pseudo_solve(X, Y, lam)
        return (w, {"omegas": w[None, :], "medians": np.zeros(1), "groups": [np.arange(n)]}) \
            if return_details else w

    rng = rng if rng is not None else np.random.default_rng()
    groups = np.array_split(rng.permutation(n), k)
    omegas = np.stack([pseudo_solve(X[g], Y[g], lam) for g in groups])

    dist = np.empty((k, k))
    for j, g in enumerate(groups):
        proj = X[g] @ omegas.T                       # |S_j| x k
        diff = proj - proj[:, [j]]                   # X_j (w_i - w_j) for each i
        quad = np.einsum("ri,ri->i", diff, diff) / len(g)
        if lam:
            quad += lam * np.sum((omegas - omegas[j]) ** 2, axis=1)
        dist[:, j] = quad
    assert np.all(dist >= 0.0)

    off = ~np.eye(k, dtype=bool)
    medians = np.median(dist[off].reshape(k, k - 1), axis=1)
    best = int(np.argmin(medians))
    if return_details:
        return omegas[best].copy(), {"omegas": omegas, "medians": medians, "groups": groups}
    return omegas[best].copy()
