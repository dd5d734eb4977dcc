"""Spectral decomposition of the estimated operator and k-step prediction.

Eigenvalues are sorted by descending modulus (ties: descending real part,
then ascending imaginary part), eigenvectors get a deterministic phase and
scale, and vector-observable modes come from a linear solve against the
eigenvector matrix. Predictions realize the spectral expansion
sum_j c_j lambda_j^k phi_j(x0) and report how much imaginary residue was
discarded when taking the real part.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary
from .errors import InputShapeError, ModelFormatError

logger = logging.getLogger("edmdkit.spectral")

NEAR_DEFECTIVE = 1e12


def _order_eigenpairs(lam, V):
    order = np.lexsort((lam.imag, -lam.real, -np.abs(lam)))
    return lam[order], V[:, order]


def _canonicalize_columns(V):
    """Unit 2-norm columns, first significant entry rotated to the positive real axis."""
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        norm = np.linalg.norm(col)
        if norm == 0.0:
            continue
        col = col / norm
        mags = np.abs(col)
        lead = np.argmax(mags > 1e-12 * mags.max())
        pivot = col[lead]
        if np.abs(pivot) > 0.0:
            col = col * (np.conj(pivot) / np.abs(pivot))
        V[:, j] = col
    return V


@dataclass(frozen=True)
class KoopmanModel:
    """A fitted finite-dimensional operator model with its spectral objects.

    K is the n_L-by-n_L operator matrix on dictionary coordinates, W the
    n_L-by-p output weights, V the eigenvector matrix (columns), and modes
    the p-by-n_L matrix whose column j is the j-th vector-valued mode. meta
    carries fit provenance (regularizer, sample count, condition numbers)
    and accumulates prediction residue notes.
    """

    dictionary: Dictionary
    K: np.ndarray
    eigenvalues: np.ndarray
    V: np.ndarray
    W: np.ndarray
    modes: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_functions(self):
        return self.K.shape[0]

    @property
    def n_outputs(self):
        return self.W.shape[1]

    def to_json_dict(self):
        return {
            "dictionary": self.dictionary.to_json_dict(),
            "K": self.K.tolist(),
            "eigenvalues": _complex_vector_out(self.eigenvalues),
            "V": _complex_matrix_out(self.V),
            "W": self.W.tolist(),
            "modes": _complex_matrix_out(self.modes),
            "meta": _plain_meta(self.meta),
        }


def decompose(dictionary: Dictionary, K, W, meta=None) -> KoopmanModel:
    """Build a model from an operator matrix and output weights.

    Runs the full eigendecomposition, orders and canonicalizes the
    eigenpairs, and computes modes as the transpose of V^-1 W via a linear
    solve. A badly conditioned eigenvector matrix (near-defective K) is
    flagged in meta and solved in the least-squares sense instead of
    erroring out.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape[0] != K.shape[1]:
        raise InputShapeError(f"K must be square, got {K.shape}")
    if K.shape[0] != dictionary.n_functions:
        raise InputShapeError(
            f"K is {K.shape[0]}x{K.shape[0]} but the dictionary has "
            f"{dictionary.n_functions} functions"
        )
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != K.shape[0]:
        raise InputShapeError(f"W has {W.shape[0]} rows, expected {K.shape[0]}")
    meta = dict(meta) if meta else {}

    lam, V = np.linalg.eig(K)
    lam = lam.astype(np.complex128, copy=False)
    V = V.astype(np.complex128, copy=False)
    lam, V = _order_eigenpairs(lam, V)
    V = _canonicalize_columns(V)

    eig_condition = float(np.linalg.cond(V))
    meta["eig_condition"] = eig_condition
    if not np.isfinite(eig_condition) or eig_condition > NEAR_DEFECTIVE:
        meta["near_defective"] = True
        logger.warning(
            "eigenvector matrix condition %.3e: operator is near-defective, "
            "modes computed in the least-squares sense", eig_condition,
        )
        coeffs = np.linalg.lstsq(V, W.astype(complex), rcond=None)[0]
    else:
        coeffs = np.linalg.solve(V, W.astype(complex))
    modes = coeffs.T
    return KoopmanModel(
        dictionary=dictionary, K=K, eigenvalues=lam, V=V, W=W, modes=modes, meta=meta,
    )


def eigenfunction_values(model: KoopmanModel, X) -> np.ndarray:
    """Evaluate every eigenfunction at row-stacked states: returns Psi(X) V."""
    return model.dictionary.evaluate_matrix(X) @ model.V


def _phi0(model, x0):
    x0 = np.asarray(x0, dtype=float)
    return model.dictionary.evaluate(x0) @ model.V


def _note_residue(model, imag_mag, real_mag):
    residue = float(imag_mag) / max(float(real_mag), 1e-300)
    prev = model.meta.get("max_imag_residue", 0.0)
    model.meta["max_imag_residue"] = max(prev, residue)


def predict(model: KoopmanModel, x0, k) -> np.ndarray:
    """k-step output prediction sum_j c_j lambda_j^k phi_j(x0), real part.

    k = 0 returns the model's reconstruction of g(x0). The largest relative
    imaginary residue discarded so far is recorded in model.meta.
    """
    k = int(k)
    if k < 0:
        raise InputShapeError("k must be >= 0")
    phi = _phi0(model, x0)
    out = model.modes @ (model.eigenvalues**k * phi)
    _note_residue(model, np.abs(out.imag).max(initial=0.0), np.abs(out.real).max(initial=0.0))
    return out.real


def predict_trajectory(model: KoopmanModel, x0, k_max) -> np.ndarray:
    """Outputs for k = 0..k_max as a (k_max+1)-by-p matrix.

    The dictionary is evaluated once at x0; each step multiplies the
    eigenfunction coordinates by the eigenvalues.
    """
    k_max = int(k_max)
    if k_max < 0:
        raise InputShapeError("k_max must be >= 0")
    phi = _phi0(model, x0)
    rows = np.empty((k_max + 1, model.n_outputs))
    worst_imag = 0.0
    worst_real = 0.0
    for k in range(k_max + 1):
        out = model.modes @ phi
        rows[k] = out.real
        worst_imag = max(worst_imag, np.abs(out.imag).max(initial=0.0))
        worst_real = max(worst_real, np.abs(out.real).max(initial=0.0))
        phi = model.eigenvalues * phi
    _note_residue(model, worst_imag, worst_real)
    return rows


# --- JSON model files -----------------------------------------------------
#
# Complex numbers are stored as {"re": ..., "im": ...} objects, matrices as
# row-major nested lists. Python's repr-based float formatting makes the
# round trip bit-exact, so reloaded models predict identically.


def _complex_vector_out(v):
    return [{"re": float(z.real), "im": float(z.imag)} for z in v]


def _complex_matrix_out(M):
    return [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in M]


def _complex_in(obj, path):
    try:
        return complex(float(obj["re"]), float(obj["im"]))
    except (TypeError, KeyError, ValueError) as exc:
        raise ModelFormatError(f"bad complex entry: {exc}", json_path=path) from exc


def _complex_vector_in(obj, path):
    if not isinstance(obj, list):
        raise ModelFormatError("expected a list", json_path=path)
    return np.array([_complex_in(z, f"{path}[{i}]") for i, z in enumerate(obj)])


def _complex_matrix_in(obj, path):
    if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
        raise ModelFormatError("expected a nested list", json_path=path)
    return np.array(
        [[_complex_in(z, f"{path}[{i}][{j}]") for j, z in enumerate(row)]
         for i, row in enumerate(obj)]
    )


def _real_matrix_in(obj, path):
    try:
        M = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad real matrix: {exc}", json_path=path) from exc
    if M.ndim != 2:
        raise ModelFormatError("expected a 2-d array", json_path=path)
    return M


def _plain_meta(meta):
    out = {}
    for key, val in meta.items():
        if isinstance(val, (np.floating, np.integer)):
            val = val.item()
        out[key] = val
    return out


def model_from_json_dict(d) -> KoopmanModel:
    if not isinstance(d, dict):
        raise ModelFormatError("model file must hold a JSON object", json_path="$")
    for key in ("dictionary", "K", "eigenvalues", "V", "W", "modes"):
        if key not in d:
            raise ModelFormatError("missing required key", json_path=f"$.{key}")
    try:
        dictionary = Dictionary.from_json_dict(d["dictionary"])
    except Exception as exc:
        raise ModelFormatError(str(exc), json_path="$.dictionary") from exc
    K = _real_matrix_in(d["K"], "$.K")
    W = _real_matrix_in(d["W"], "$.W")
    lam = _complex_vector_in(d["eigenvalues"], "$.eigenvalues")
    V = _complex_matrix_in(d["V"], "$.V")
    modes = _complex_matrix_in(d["modes"], "$.modes")
    n_L = dictionary.n_functions
    if K.shape != (n_L, n_L):
        raise ModelFormatError(
            f"K has shape {K.shape}, expected ({n_L}, {n_L})", json_path="$.K"
        )
    if W.shape[0] != n_L:
        raise ModelFormatError(f"W has {W.shape[0]} rows, expected {n_L}", json_path="$.W")
    if lam.shape != (n_L,):
        raise ModelFormatError("eigenvalue count mismatch", json_path="$.eigenvalues")
    if V.shape != (n_L, n_L):
        raise ModelFormatError("V shape mismatch", json_path="$.V")
    if modes.shape != (W.shape[1], n_L):
        raise ModelFormatError("modes shape mismatch", json_path="$.modes")
    meta = d.get("meta", {})
    if not isinstance(meta, dict):
        raise ModelFormatError("meta must be an object", json_path="$.meta")
    return KoopmanModel(
        dictionary=dictionary, K=K, eigenvalues=lam, V=V, W=W, modes=modes, meta=dict(meta),
    )


def save_model(model: KoopmanModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path) -> KoopmanModel:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}", json_path="$") from exc
    return model_from_json_dict(d)
