"""Regularized least-squares solves on empirical Gram matrices.

Three modes share one spec object. The pseudoinverse mode uses a truncated
SVD and returns the minimum-Frobenius-norm solution of the normal equations;
ridge shifts the Gram matrix by beta*I; Tikhonov-with-prior penalizes
deviation from an expected weight matrix W0 through a PSD quadratic form Q,
with the closed form (G + Q)^-1 (B + Q W0).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .empirical import EmpiricalGram
from .errors import ConfigurationError, MissingOutputError, SingularSystemError

logger = logging.getLogger("edmdkit.solver")

MODES = ("pseudoinverse", "ridge", "tikhonov")
ILL_CONDITIONED = 1e12


def _check_psd(Q, name="Q"):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[0] != Q.shape[1]:
        raise ConfigurationError(f"{name} must be square, got {Q.shape}")
    if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12 * max(np.abs(Q).max(), 1.0)):
        raise ConfigurationError(f"{name} must be symmetric")
    evals = np.linalg.eigvalsh(Q)
    scale = max(evals[-1], 0.0)
    if evals[0] < -1e-10 * max(scale, 1e-300):
        raise ConfigurationError(f"{name} must be positive semidefinite")
    return Q


@dataclass(frozen=True)
class RegularizerSpec:
    """Which solve to run and with what parameters.

    Build with the classmethods. ``prior_columns`` uses 0-based column
    indices; columns of W0 outside it must be zero (no prior information on
    those outputs). A scalar ``q_scalar`` stands for Q = q_scalar * I sized
    at solve time.
    """

    mode: str
    svd_rtol: float = 1e-12
    beta: float | None = None
    Q: np.ndarray | None = None
    q_scalar: float | None = None
    W0: np.ndarray | None = None
    prior_columns: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown regularizer mode {self.mode!r}")
        if not (0.0 < self.svd_rtol < 1.0):
            raise ConfigurationError("svd_rtol must lie in (0, 1)")
        if self.mode == "ridge":
            if self.beta is None or self.beta < 0:
                raise ConfigurationError("ridge mode needs beta >= 0")
        if self.mode == "tikhonov":
            if (self.Q is None) == (self.q_scalar is None):
                raise ConfigurationError("tikhonov mode needs exactly one of Q or q_scalar")
            if self.Q is not None:
                object.__setattr__(self, "Q", _check_psd(self.Q))
            if self.q_scalar is not None and self.q_scalar < 0:
                raise ConfigurationError("q_scalar must be >= 0")
            if self.W0 is None:
                raise ConfigurationError("tikhonov mode needs a prior W0")
            W0 = np.atleast_2d(np.asarray(self.W0, dtype=float))
            object.__setattr__(self, "W0", W0)
            if self.prior_columns is not None:
                cols = tuple(int(c) for c in self.prior_columns)
                if any(c < 0 or c >= W0.shape[1] for c in cols):
                    raise ConfigurationError("prior_columns out of range for W0")
                rest = [j for j in range(W0.shape[1]) if j not in cols]
                if rest and np.any(W0[:, rest] != 0.0):
                    raise ConfigurationError(
                        "W0 must be zero outside prior_columns (no prior there)"
                    )
                object.__setattr__(self, "prior_columns", cols)

    @classmethod
    def pseudoinverse(cls, svd_rtol=1e-12):
        return cls("pseudoinverse", svd_rtol=svd_rtol)

    @classmethod
    def ridge(cls, beta):
        return cls("ridge", beta=float(beta))

    @classmethod
    def tikhonov(cls, Q, W0, prior_columns=None):
        """Prior-biased solve; Q may be an n_L-by-n_L PSD matrix or a scalar q (meaning qI)."""
        if np.ndim(Q) == 0:
            return cls("tikhonov", q_scalar=float(Q), W0=W0, prior_columns=prior_columns)
        return cls("tikhonov", Q=Q, W0=W0, prior_columns=prior_columns)

    def q_matrix(self, n_L):
        if self.Q is not None:
            if self.Q.shape[0] != n_L:
                raise ConfigurationError(
                    f"Q has shape {self.Q.shape}, expected ({n_L}, {n_L})"
                )
            return self.Q
        return self.q_scalar * np.eye(n_L)

    def to_json_dict(self):
        d = {"mode": self.mode}
        if self.mode == "pseudoinverse":
            d["svd_rtol"] = self.svd_rtol
        elif self.mode == "ridge":
            d["beta"] = self.beta
        else:
            d["Q"] = {"scalar": self.q_scalar} if self.Q is None else self.Q.tolist()
            d["W0"] = self.W0.tolist()
            if self.prior_columns is not None:
                d["prior_columns"] = list(self.prior_columns)
        return d

    @classmethod
    def from_json_dict(cls, d):
        mode = d.get("mode", "pseudoinverse")
        if mode == "pseudoinverse":
            return cls.pseudoinverse(svd_rtol=d.get("svd_rtol", 1e-12))
        if mode == "ridge":
            if "beta" not in d:
                raise ConfigurationError("ridge spec needs beta")
            return cls.ridge(d["beta"])
        if mode == "tikhonov":
            Q = d.get("Q")
            if isinstance(Q, dict):
                Q = Q.get("scalar")
            if Q is None or "W0" not in d:
                raise ConfigurationError("tikhonov spec needs Q and W0")
            return cls.tikhonov(Q, d["W0"], prior_columns=d.get("prior_columns"))
        raise ConfigurationError(f"unknown regularizer mode {mode!r}")


def truncated_pinv(G, rtol=1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse discarding singular values < rtol * sigma_max."""
    G = np.asarray(G, dtype=float)
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(G.T)
    keep = s >= rtol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def _spd_solve(M, RHS, what):
    """Solve M Z = RHS for symmetric positive-definite M; raise if it is not."""
    try:
        c, low = scipy.linalg.cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"{what} is singular or indefinite; switch to pseudoinverse mode "
            "or raise the regularization strength"
        ) from exc
    cond = np.linalg.cond(M)
    if cond > ILL_CONDITIONED:
        logger.warning("%s condition number %.3e exceeds %.0e", what, cond, ILL_CONDITIONED)
    return scipy.linalg.cho_solve((c, low), RHS)


def koopman_matrix(gram: EmpiricalGram, reg: RegularizerSpec) -> np.ndarray:
    """Estimate the finite-section Koopman matrix from G and A.

    Pseudoinverse mode returns the minimum-Frobenius-norm minimizer of the
    one-step dictionary residual; ridge returns (G + beta I)^-1 A; tikhonov
    (with an n_L-by-n_L operator prior W0) returns (G + Q)^-1 (A + Q W0).
    """
    G, A = gram.G, gram.A
    if reg.mode == "pseudoinverse":
        return truncated_pinv(G, reg.svd_rtol) @ A
    if reg.mode == "ridge":
        return _spd_solve(G + reg.beta * np.eye(G.shape[0]), A, "G + beta*I")
    Q = reg.q_matrix(G.shape[0])
    W0 = reg.W0
    if W0.shape != G.shape:
        raise ConfigurationError(
            f"operator prior W0 has shape {W0.shape}, expected {G.shape}"
        )
    return _spd_solve(G + Q, A + Q @ W0, "G + Q")


def output_weights(gram: EmpiricalGram, reg: RegularizerSpec) -> np.ndarray:
    """Estimate output weight columns, one per output, under the chosen mode.

    In tikhonov mode each column minimizes the empirical squared misfit plus
    the squared Q-form distance to the prior column, giving
    (G + Q)^-1 (B + Q W0).
    """
    if gram.B is None:
        raise MissingOutputError("snapshot data carries no outputs to fit")
    G, B = gram.G, gram.B
    if reg.mode == "pseudoinverse":
        return truncated_pinv(G, reg.svd_rtol) @ B
    if reg.mode == "ridge":
        return _spd_solve(G + reg.beta * np.eye(G.shape[0]), B, "G + beta*I")
    Q = reg.q_matrix(G.shape[0])
    W0 = reg.W0
    if W0.shape != B.shape:
        raise ConfigurationError(
            f"prior W0 has shape {W0.shape}, expected {B.shape}"
        )
    return _spd_solve(G + Q, B + Q @ W0, "G + Q")


def blockwise_tikhonov(gram: EmpiricalGram, beta1, beta2, W0_known, split) -> np.ndarray:
    """Two-block solve: prior-anchored first columns, plain ridge for the rest.

    Outputs 1..split carry the prior W0_known with strength beta1; the
    remaining columns are ridge-solved with beta2. Setting beta1 > beta2
    pulls the known outputs toward their expected representations while
    leaving the others lightly damped.
    """
    if gram.B is None:
        raise MissingOutputError("snapshot data carries no outputs to fit")
    G, B = gram.G, gram.B
    p = B.shape[1]
    split = int(split)
    if not 1 <= split <= p:
        raise ConfigurationError(f"split must lie in 1..{p}, got {split}")
    beta1 = float(beta1)
    beta2 = float(beta2)
    if beta1 <= 0 or beta2 <= 0:
        raise ConfigurationError("beta1 and beta2 must be > 0")
    W0_known = np.atleast_2d(np.asarray(W0_known, dtype=float))
    if W0_known.shape != (G.shape[0], split):
        raise ConfigurationError(
            f"W0_known has shape {W0_known.shape}, expected ({G.shape[0]}, {split})"
        )
    eye = np.eye(G.shape[0])
    W1 = _spd_solve(G + beta1 * eye, B[:, :split] + beta1 * W0_known, "G + beta1*I")
    if split == p:
        return W1
    W2 = _spd_solve(G + beta2 * eye, B[:, split:], "G + beta2*I")
    return np.hstack([W1, W2])
