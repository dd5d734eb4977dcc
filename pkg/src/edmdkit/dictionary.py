"""Observable dictionaries: ordered sets of scalar basis functions over state vectors.

A :class:`Dictionary` evaluates its ``n_L`` basis functions at states, producing
the data matrices that the Gram-matrix and solver layers consume. All basis
functions are real-valued; complex arithmetic enters only at the spectral stage.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputShapeError

KINDS = (
    "constant",
    "coordinate",
    "monomial",
    "gaussian-rbf",
    "thin-plate-spline",
    "affine-output",
)


@dataclass(frozen=True)
class BasisFunction:
    """One scalar observable, tagged by kind.

    Use the classmethod constructors; they populate only the parameters the
    kind needs. All parameters are in state units.
    """

    kind: str
    index: int | None = None
    exponents: tuple[int, ...] | None = None
    center: tuple[float, ...] | None = None
    bandwidth: float | None = None
    row: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown basis kind {self.kind!r}")
        if self.exponents is not None:
            exps = tuple(int(e) for e in self.exponents)
            if any(e < 0 for e in exps):
                raise ConfigurationError("monomial exponents must be non-negative integers")
            object.__setattr__(self, "exponents", exps)
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.row is not None:
            object.__setattr__(self, "row", tuple(float(c) for c in self.row))
        if self.kind == "coordinate" and (self.index is None or self.index < 0):
            raise ConfigurationError("coordinate basis needs a non-negative index")
        if self.kind == "monomial" and self.exponents is None:
            raise ConfigurationError("monomial basis needs an exponent tuple")
        if self.kind == "gaussian-rbf":
            if self.center is None:
                raise ConfigurationError("gaussian-rbf basis needs a center")
            if self.bandwidth is None or not self.bandwidth > 0:
                raise ConfigurationError("gaussian-rbf bandwidth must be > 0")
        if self.kind == "thin-plate-spline" and self.center is None:
            raise ConfigurationError("thin-plate-spline basis needs a center")
        if self.kind == "affine-output" and self.row is None:
            raise ConfigurationError("affine-output basis needs a coefficient row")

    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def coordinate(cls, index):
        return cls("coordinate", index=int(index))

    @classmethod
    def monomial(cls, exponents):
        return cls("monomial", exponents=tuple(exponents))

    @classmethod
    def gaussian_rbf(cls, center, bandwidth):
        return cls("gaussian-rbf", center=tuple(center), bandwidth=float(bandwidth))

    @classmethod
    def thin_plate_spline(cls, center):
        return cls("thin-plate-spline", center=tuple(center))

    @classmethod
    def affine_output(cls, row):
        return cls("affine-output", row=tuple(row))

    def validate_for(self, state_dim):
        """Check consistency with a state dimension; raises ConfigurationError."""
        if self.kind == "coordinate" and self.index >= state_dim:
            raise ConfigurationError(
                f"coordinate index {self.index} out of range for state_dim {state_dim}"
            )
        if self.kind == "monomial" and len(self.exponents) != state_dim:
            raise ConfigurationError(
                f"monomial exponent tuple has length {len(self.exponents)}, expected {state_dim}"
            )
        if self.kind in ("gaussian-rbf", "thin-plate-spline") and len(self.center) != state_dim:
            raise ConfigurationError(
                f"{self.kind} center has length {len(self.center)}, expected {state_dim}"
            )
        if self.kind == "affine-output" and len(self.row) != state_dim:
            raise ConfigurationError(
                f"affine-output row has length {len(self.row)}, expected {state_dim}"
            )

    def to_json_dict(self):
        d = {"kind": self.kind}
        if self.kind == "coordinate":
            d["index"] = self.index
        elif self.kind == "monomial":
            d["exponents"] = list(self.exponents)
        elif self.kind == "gaussian-rbf":
            d["center"] = list(self.center)
            d["bandwidth"] = self.bandwidth
        elif self.kind == "thin-plate-spline":
            d["center"] = list(self.center)
        elif self.kind == "affine-output":
            d["row"] = list(self.row)
        return d

    @classmethod
    def from_json_dict(cls, d):
        kind = d.get("kind")
        if kind == "constant":
            return cls.constant()
        if kind == "coordinate":
            return cls.coordinate(d["index"])
        if kind == "monomial":
            return cls.monomial(d["exponents"])
        if kind == "gaussian-rbf":
            return cls.gaussian_rbf(d["center"], d["bandwidth"])
        if kind == "thin-plate-spline":
            return cls.thin_plate_spline(d["center"])
        if kind == "affine-output":
            return cls.affine_output(d["row"])
        raise ConfigurationError(f"unknown basis kind {kind!r}")


def _eval_basis(bf, X):
    """Evaluate one basis function on row-stacked states X (m, n) -> (m,)."""
    if bf.kind == "constant":
        return np.ones(X.shape[0])
    if bf.kind == "coordinate":
        return X[:, bf.index].copy()
    if bf.kind == "monomial":
        return np.prod(X ** np.asarray(bf.exponents, dtype=float), axis=1)
    if bf.kind == "gaussian-rbf":
        d = X - np.asarray(bf.center)
        r2 = np.einsum("ij,ij->i", d, d)
        return np.exp(-r2 / (2.0 * bf.bandwidth**2))
    if bf.kind == "thin-plate-spline":
        d = X - np.asarray(bf.center)
        r2 = np.einsum("ij,ij->i", d, d)
        # r^2 log r = 0.5 r^2 log r^2; exactly 0 at the center (analytic limit)
        out = np.zeros(X.shape[0])
        nz = r2 > 0.0
        out[nz] = 0.5 * r2[nz] * np.log(r2[nz])
        return out
    if bf.kind == "affine-output":
        return X @ np.asarray(bf.row)
    raise ConfigurationError(f"unknown basis kind {bf.kind!r}")


@dataclass(frozen=True)
class Dictionary:
    """Ordered dictionary of observables over an n-dimensional state.

    Evaluation order is fixed: output ``i`` of :meth:`evaluate` corresponds to
    ``basis[i]``, and JSON round-trips preserve the order exactly.
    """

    state_dim: int
    basis: tuple[BasisFunction, ...] = field(default=())

    def __post_init__(self):
        if self.state_dim < 1:
            raise ConfigurationError("state_dim must be >= 1")
        basis = tuple(self.basis)
        if len(basis) < 1:
            raise ConfigurationError("a dictionary needs at least one basis function")
        for bf in basis:
            bf.validate_for(self.state_dim)
        object.__setattr__(self, "basis", basis)

    @property
    def n_functions(self):
        return len(self.basis)

    def evaluate(self, x) -> np.ndarray:
        """Evaluate all basis functions at one state, returning a length-n_L vector."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.state_dim:
            raise InputShapeError(
                f"state has shape {x.shape}, expected ({self.state_dim},)"
            )
        return self.evaluate_matrix(x[None, :])[0]

    def evaluate_matrix(self, X) -> np.ndarray:
        """Evaluate on row-stacked states X (m, n), returning Psi(X) with shape (m, n_L)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.state_dim:
            raise InputShapeError(
                f"state matrix has shape {X.shape}, expected (m, {self.state_dim})"
            )
        return np.column_stack([_eval_basis(bf, X) for bf in self.basis])

    def to_json_dict(self):
        return {
            "state_dim": self.state_dim,
            "basis": [bf.to_json_dict() for bf in self.basis],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d):
        try:
            state_dim = int(d["state_dim"])
            basis = [BasisFunction.from_json_dict(b) for b in d["basis"]]
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed dictionary spec: {exc}") from exc
        return cls(state_dim=state_dim, basis=tuple(basis))

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


def _monomial_exponents(state_dim, degree):
    """Multi-indices with 1 <= |alpha| <= degree in graded lexicographic order."""
    for total in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(state_dim), total):
            exps = [0] * state_dim
            for i in combo:
                exps[i] += 1
            yield tuple(exps)


def make_standard_dictionary(
    state_dim,
    *,
    include_state=False,
    monomial_degree=None,
    rbf_centers=None,
    rbf_bandwidth=None,
    output_guess_rows=None,
) -> Dictionary:
    """Build a dictionary from standard families with a fixed ordering convention.

    Order: affine-output rows, then state coordinates, then the constant, then
    monomials in graded lexicographic order, then Gaussian RBFs in the given
    center order. The constant is emitted whenever ``monomial_degree`` is given
    (it is the degree-0 monomial). Degree-1 monomials are skipped when
    ``include_state`` already contributes the coordinates, so no family ever
    duplicates another.

    Parameters
    ----------
    state_dim : int
        Dimension n of the state vectors.
    include_state : bool
        Add the n coordinate functions.
    monomial_degree : int, optional
        Add all monomials of total degree up to this bound (including the
        constant).
    rbf_centers : array_like, optional
        Row-stacked centers of Gaussian RBFs; requires ``rbf_bandwidth``.
    rbf_bandwidth : float, optional
        Shared bandwidth sigma of the Gaussian RBFs exp(-|x-c|^2 / (2 sigma^2)).
    output_guess_rows : array_like, optional
        Rows c of guessed linear output forms c.x, placed first.
    """
    if state_dim < 1:
        raise ConfigurationError("state_dim must be >= 1")
    basis: list[BasisFunction] = []
    if output_guess_rows is not None:
        rows = np.atleast_2d(np.asarray(output_guess_rows, dtype=float))
        for row in rows:
            basis.append(BasisFunction.affine_output(row))
    if include_state:
        basis.extend(BasisFunction.coordinate(i) for i in range(state_dim))
    if monomial_degree is not None:
        degree = int(monomial_degree)
        if degree < 0:
            raise ConfigurationError("monomial_degree must be >= 0")
        basis.append(BasisFunction.constant())
        for exps in _monomial_exponents(state_dim, degree):
            if include_state and sum(exps) == 1:
                continue
            basis.append(BasisFunction.monomial(exps))
    if rbf_centers is not None:
        if rbf_bandwidth is None:
            raise ConfigurationError("rbf_centers given without rbf_bandwidth")
        centers = np.atleast_2d(np.asarray(rbf_centers, dtype=float))
        for center in centers:
            basis.append(BasisFunction.gaussian_rbf(center, rbf_bandwidth))
    if not basis:
        raise ConfigurationError("dictionary spec requests no basis family")
    return Dictionary(state_dim=state_dim, basis=tuple(basis))


def sample_rbf_centers(X, n_centers, seed) -> np.ndarray:
    """Draw RBF centers uniformly from the axis-aligned bounding box of X.

    Deterministic for a fixed seed.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputShapeError("X must be a 2-d state matrix")
    if n_centers < 1:
        raise ConfigurationError("n_centers must be >= 1")
    rng = np.random.default_rng(seed)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    return rng.uniform(lo, hi, size=(n_centers, X.shape[1]))
