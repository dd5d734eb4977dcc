"""Fit-quality diagnostics built on the empirical measure.

Everything here quantifies the two ways a finite dictionary model can fail:
outputs that are not in the dictionary span (span defect, projection margin)
and a span that the dynamics does not keep invariant (invariance defect).
The two claim gaps separate those failure modes per output. All norms are
empirical, so the analytic inequalities they mirror hold up to sampling and
round-off only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .empirical import EmpiricalGram, SnapshotSet, build_gram, empirical_column_norms
from .errors import InputShapeError, MissingOutputError
from .solver import ILL_CONDITIONED, truncated_pinv
from .spectral import KoopmanModel


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-fit defect numbers. Array fields are per output column.

    Fields that need output data are None when the data carries none;
    claim2_gap additionally needs successor outputs. Sign conventions:
    positive means the named defect is present, and clean cases sit at zero
    up to round-off.
    """

    invariance_defect: float
    gram_condition: float
    eig_condition: float
    span_defect: np.ndarray | None = None
    lemma1_margin: np.ndarray | None = None
    claim1_gap: np.ndarray | None = None
    claim2_gap: np.ndarray | None = None

    @property
    def gram_ill_conditioned(self):
        return not np.isfinite(self.gram_condition) or self.gram_condition > ILL_CONDITIONED

    @property
    def eig_ill_conditioned(self):
        return not np.isfinite(self.eig_condition) or self.eig_condition > ILL_CONDITIONED

    def to_json_dict(self):
        def arr(a):
            return None if a is None else [float(v) for v in a]

        return {
            "span_defect": arr(self.span_defect),
            "invariance_defect": float(self.invariance_defect),
            "claim1_gap": arr(self.claim1_gap),
            "claim2_gap": arr(self.claim2_gap),
            "lemma1_margin": arr(self.lemma1_margin),
            "gram_condition": float(self.gram_condition),
            "eig_condition": float(self.eig_condition),
            "gram_ill_conditioned": self.gram_ill_conditioned,
            "eig_ill_conditioned": self.eig_ill_conditioned,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2)

    def format_table(self):
        """Aligned plain-text rendering; unavailable fields say so."""
        def fmt(val):
            if val is None:
                return "unavailable"
            if np.ndim(val) == 0:
                return format(float(val), ".6e")
            return ", ".join(format(float(v), ".6e") for v in val)

        rows = [
            ("span_defect", fmt(self.span_defect)),
            ("invariance_defect", fmt(self.invariance_defect)),
            ("claim1_gap", fmt(self.claim1_gap)),
            ("claim2_gap", fmt(self.claim2_gap)),
            ("lemma1_margin", fmt(self.lemma1_margin)),
            ("gram_condition", fmt(self.gram_condition) + (
                "  (ill-conditioned)" if self.gram_ill_conditioned else "")),
            ("eig_condition", fmt(self.eig_condition) + (
                "  (ill-conditioned)" if self.eig_ill_conditioned else "")),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name.ljust(width)}  {val}" for name, val in rows)


def _norm_floor(data, n_L):
    return 1e-15 * data.m * n_L


def projection_check(gram: EmpiricalGram, data: SnapshotSet, W) -> np.ndarray:
    """Per-output margin ||g_i|| - ||psi^T w_i|| under the empirical measure.

    For pseudoinverse projection weights the margin is non-negative up to
    round-off (projections cannot grow the norm); for regularized weights it
    is informational only.
    """
    if data.Y is None:
        raise MissingOutputError("projection margin needs output data")
    W = np.atleast_2d(np.asarray(W))
    if W.ndim == 2 and W.shape[0] == 1 and gram.G.shape[0] != 1:
        W = W.T
    if W.shape != (gram.G.shape[0], data.Y.shape[1]):
        raise InputShapeError(
            f"weights have shape {W.shape}, expected ({gram.G.shape[0]}, {data.Y.shape[1]})"
        )
    y_norms = empirical_column_norms(data.Y)
    quad = np.einsum("ij,ik,kj->j", W.conj(), gram.G, W).real
    proj_norms = np.sqrt(np.maximum(quad, 0.0))
    return y_norms - proj_norms


def invariance_defect(dictionary: Dictionary, data: SnapshotSet, K) -> float:
    """Relative misfit of representing the shifted dictionary inside the span.

    Zero (to round-off) exactly when every psi_i composed with the dynamics
    stays in the dictionary span over the sampled states.
    """
    PsiX = dictionary.evaluate_matrix(data.X)
    PsiXp = dictionary.evaluate_matrix(data.Xplus)
    K = np.asarray(K, dtype=float)
    num = np.linalg.norm(PsiXp - PsiX @ K)
    den = max(np.linalg.norm(PsiXp), _norm_floor(data, dictionary.n_functions))
    return float(num / den)


def claim_gaps(dictionary: Dictionary, data: SnapshotSet, K, W_span, W_proj):
    """Per-output gap pair separating the two model-failure directions.

    claim1_gap_i is the empirical norm the propagated output loses when
    projected back onto the span: ||g_i o S|| - ||P(g_i o S)||. It is
    positive when evolving an in-span output leaves the span, i.e. the
    dictionary is not invariant. Successor outputs come from data.Yplus when
    present, else from pushing W_span through the shifted dictionary.

    claim2_gap_i is the empirical norm of the one-step prediction residual
    psi^T(w_plus_i - K w_proj_i): the projected successor output versus the
    operator acting on the projected output. Under an (empirically) invariant
    dictionary it is positive exactly when g_i is not in the span. It needs
    measured successor outputs, so it is None when data.Yplus is absent.

    Returns (claim1_gap, claim2_gap), each a length-p array or None.
    """
    if data.Y is None:
        raise MissingOutputError("claim gaps need output data")
    PsiX = dictionary.evaluate_matrix(data.X)
    W_span = np.atleast_2d(np.asarray(W_span, dtype=float))
    W_proj = np.atleast_2d(np.asarray(W_proj, dtype=float))
    K = np.asarray(K, dtype=float)
    sqrt_m = np.sqrt(data.m)

    if data.Yplus is not None:
        Yplus = data.Yplus
    else:
        Yplus = dictionary.evaluate_matrix(data.Xplus) @ W_span
    # empirical projection of the successor outputs onto the span
    Gdag = truncated_pinv((PsiX.T @ PsiX) / data.m)
    W_plus = Gdag @ (PsiX.T @ Yplus) / data.m

    proj_norms = empirical_column_norms(PsiX @ W_plus)
    claim1 = empirical_column_norms(Yplus) - proj_norms

    claim2 = None
    if data.Yplus is not None:
        resid = PsiX @ (W_plus - K @ W_proj)
        claim2 = np.linalg.norm(resid, axis=0) / sqrt_m
    return claim1, claim2


def full_report(dictionary: Dictionary, data: SnapshotSet, model: KoopmanModel) -> DiagnosticsReport:
    """Compute every diagnostic the data supports for a fitted model."""
    if dictionary.n_functions != model.n_functions:
        raise InputShapeError("model and dictionary sizes disagree")
    gram = build_gram(dictionary, data)
    gram_condition = float(np.linalg.cond(gram.G))
    eig_condition = float(model.meta.get("eig_condition", np.linalg.cond(model.V)))
    inv_defect = invariance_defect(dictionary, data, model.K)

    span = margin = c1 = c2 = None
    if data.Y is not None:
        W_proj = truncated_pinv(gram.G) @ gram.B
        PsiX = dictionary.evaluate_matrix(data.X)
        resid = data.Y - PsiX @ W_proj
        floor = _norm_floor(data, dictionary.n_functions)
        denominators = np.maximum(empirical_column_norms(data.Y), floor)
        span = empirical_column_norms(resid) / denominators
        margin = projection_check(gram, data, W_proj)
        c1, c2 = claim_gaps(dictionary, data, model.K, model.W, W_proj)
    return DiagnosticsReport(
        invariance_defect=inv_defect,
        gram_condition=gram_condition,
        eig_condition=eig_condition,
        span_defect=span,
        lemma1_margin=margin,
        claim1_gap=c1,
        claim2_gap=c2,
    )
