"""Snapshot data containers and empirical inner-product matrices.

The empirical measure places weight 1/m on each sampled state, so analytic
inner products become data sums: G = (1/m) Psi(X)^T Psi(X) and friends. CSV
ingestion and emission for snapshot sets also live here.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .errors import CsvFormatError, DataValidationError, InputShapeError


def _as_matrix(name, M, dtype=float):
    M = np.asarray(M, dtype=dtype)
    if M.ndim != 2:
        raise InputShapeError(f"{name} must be a 2-d matrix, got ndim {M.ndim}")
    return M


@dataclass(frozen=True)
class SnapshotSet:
    """Paired snapshots: states X, successors Xplus, optional outputs.

    X and Xplus are m-by-n with row k holding x_k and S(x_k). Y holds output
    samples y_k = g(x_k) row per sample (m-by-p); Yplus, when available, holds
    the successor outputs g(S(x_k)), which some diagnostics need.
    """

    X: np.ndarray
    Xplus: np.ndarray
    Y: np.ndarray | None = None
    Yplus: np.ndarray | None = None

    def __post_init__(self):
        X = _as_matrix("X", self.X)
        Xplus = _as_matrix("Xplus", self.Xplus)
        if X.shape != Xplus.shape:
            raise InputShapeError(
                f"X has shape {X.shape} but Xplus has shape {Xplus.shape}"
            )
        if X.shape[0] < 1:
            raise InputShapeError("need at least one snapshot pair")
        Y = self.Y
        Yplus = self.Yplus
        if Y is not None:
            Y = _as_matrix("Y", Y)
            if Y.shape[0] != X.shape[0]:
                raise InputShapeError(
                    f"Y has {Y.shape[0]} rows, expected {X.shape[0]}"
                )
        if Yplus is not None:
            if Y is None:
                raise InputShapeError("Yplus given without Y")
            Yplus = _as_matrix("Yplus", Yplus)
            if Yplus.shape != Y.shape:
                raise InputShapeError(
                    f"Yplus has shape {Yplus.shape}, expected {Y.shape}"
                )
        for name, M in (("X", X), ("Xplus", Xplus), ("Y", Y), ("Yplus", Yplus)):
            if M is not None and not np.all(np.isfinite(M)):
                raise DataValidationError(f"{name} contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Xplus", Xplus)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Yplus", Yplus)

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def state_dim(self):
        return self.X.shape[1]

    @property
    def n_outputs(self):
        return None if self.Y is None else self.Y.shape[1]

    @classmethod
    def from_trajectory(cls, states, outputs=None):
        """Form consecutive-row snapshot pairs from one trajectory.

        ``states`` is T-by-n with T >= 2. When ``outputs`` (T-by-p) is given,
        both Y and Yplus are filled from the matching rows.
        """
        states = _as_matrix("states", states)
        if states.shape[0] < 2:
            raise InputShapeError("a trajectory needs at least two rows")
        Y = Yplus = None
        if outputs is not None:
            outputs = _as_matrix("outputs", outputs)
            if outputs.shape[0] != states.shape[0]:
                raise InputShapeError("outputs row count must match states")
            Y = outputs[:-1]
            Yplus = outputs[1:]
        return cls(X=states[:-1], Xplus=states[1:], Y=Y, Yplus=Yplus)


def concat_snapshots(parts) -> SnapshotSet:
    """Stack several snapshot sets (same n and output layout) into one."""
    parts = list(parts)
    if not parts:
        raise InputShapeError("no snapshot sets to concatenate")
    has_y = parts[0].Y is not None
    has_yp = parts[0].Yplus is not None
    for part in parts:
        if (part.Y is not None) != has_y or (part.Yplus is not None) != has_yp:
            raise InputShapeError("snapshot sets disagree on output presence")
    return SnapshotSet(
        X=np.vstack([p.X for p in parts]),
        Xplus=np.vstack([p.Xplus for p in parts]),
        Y=np.vstack([p.Y for p in parts]) if has_y else None,
        Yplus=np.vstack([p.Yplus for p in parts]) if has_yp else None,
    )


@dataclass(frozen=True)
class EmpiricalGram:
    """Empirical inner-product matrices of a dictionary over a snapshot set.

    G[i, j] = <psi_i, psi_j>, A[i, j] = <psi_i, psi_j o S>, and, when outputs
    are present, B[i, j] = <psi_i, g_j>, all under the uniform empirical
    measure (so every product carries a 1/m factor).
    """

    G: np.ndarray
    A: np.ndarray
    m: int
    B: np.ndarray | None = None

    def __post_init__(self):
        for name, M in (("G", self.G), ("A", self.A), ("B", self.B)):
            if M is not None and not np.all(np.isfinite(M)):
                raise DataValidationError(f"{name} contains non-finite entries")

    @property
    def n_functions(self):
        return self.G.shape[0]


def build_gram(dictionary: Dictionary, data: SnapshotSet) -> EmpiricalGram:
    """Assemble G, A and (when outputs exist) B for a dictionary and data set."""
    if data.state_dim != dictionary.state_dim:
        raise InputShapeError(
            f"data has {data.state_dim} state columns, dictionary expects "
            f"{dictionary.state_dim}"
        )
    PsiX = dictionary.evaluate_matrix(data.X)
    PsiXp = dictionary.evaluate_matrix(data.Xplus)
    if not (np.all(np.isfinite(PsiX)) and np.all(np.isfinite(PsiXp))):
        raise DataValidationError("dictionary evaluation produced non-finite values")
    m = data.m
    G = (PsiX.T @ PsiX) / m
    A = (PsiX.T @ PsiXp) / m
    B = None if data.Y is None else (PsiX.T @ data.Y) / m
    return EmpiricalGram(G=G, A=A, B=B, m=m)


def empirical_norm(dictionary: Dictionary, X, w) -> float:
    """Empirical L2 norm of the observable psi^T w over the samples X.

    Equals sqrt(w* G w) for G built on X alone, computed as
    ||Psi(X) w||_2 / sqrt(m) for numerical robustness. Complex weight vectors
    are allowed (eigenfunction coordinates).
    """
    X = _as_matrix("X", X)
    w = np.asarray(w)
    if w.ndim != 1 or w.shape[0] != dictionary.n_functions:
        raise InputShapeError(
            f"weight vector has shape {w.shape}, expected ({dictionary.n_functions},)"
        )
    vals = dictionary.evaluate_matrix(X) @ w
    return float(np.linalg.norm(vals)) / np.sqrt(X.shape[0])


def empirical_column_norms(values) -> np.ndarray:
    """Column-wise empirical norms ||v_i||_2 / sqrt(m) of an m-by-p matrix."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    return np.linalg.norm(values, axis=0) / np.sqrt(values.shape[0])


# --- CSV snapshot format -------------------------------------------------
#
# Header names each column: x1..xn for states, xp1..xpn for successors, then
# optional y1..yp outputs and yp1..ypp successor outputs. A file with only
# x-columns is read as a single trajectory and paired row-to-next-row.

_COL_RE = re.compile(r"^(x|xp|y|yp)([1-9][0-9]*)$")


def _parse_header(fields):
    groups = {"x": [], "xp": [], "y": [], "yp": []}
    order = []
    for col, name in enumerate(fields, start=1):
        m = _COL_RE.match(name.strip())
        if m is None:
            raise CsvFormatError(f"unrecognized column name {name!r}", line=1, column=col)
        prefix, idx = m.group(1), int(m.group(2))
        groups[prefix].append(idx)
        order.append(prefix)
    expected_order = [p for p in ("x", "xp", "y", "yp") if groups[p]]
    flat = []
    for p in expected_order:
        flat.extend([p] * len(groups[p]))
    if order != flat:
        raise CsvFormatError(
            "columns must be grouped in order x*, xp*, y*, yp*", line=1
        )
    for prefix, idxs in groups.items():
        if idxs and idxs != list(range(1, len(idxs) + 1)):
            raise CsvFormatError(
                f"{prefix}-columns must be numbered 1..{len(idxs)} in order", line=1
            )
    n, n_p = len(groups["x"]), len(groups["xp"])
    p, p_p = len(groups["y"]), len(groups["yp"])
    if n == 0:
        raise CsvFormatError("header has no x-columns", line=1)
    if n_p and n_p != n:
        raise CsvFormatError(
            f"{n_p} xp-columns do not match {n} x-columns", line=1
        )
    if p_p and p_p != p:
        raise CsvFormatError(
            f"{p_p} yp-columns do not match {p} y-columns", line=1
        )
    if n_p == 0 and p_p:
        raise CsvFormatError("yp-columns need xp-columns", line=1)
    return n, n_p, p, p_p


def read_snapshot_csv(path) -> SnapshotSet:
    """Read a snapshot CSV file.

    Two layouts are accepted. The paired layout has columns
    ``x1..xn,xp1..xpn[,y1..yp[,yp1..ypp]]`` with one snapshot pair per row.
    The trajectory layout has only ``x1..xn`` (optionally ``y1..yp``) and is
    paired from consecutive rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file", line=1) from None
        n, n_p, p, p_p = _parse_header(header)
        width = n + n_p + p + p_p
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise CsvFormatError(
                    f"expected {width} fields, got {len(row)}", line=lineno
                )
            vals = []
            for col, field in enumerate(row, start=1):
                try:
                    vals.append(float(field))
                except ValueError:
                    raise CsvFormatError(
                        f"not a number: {field!r}", line=lineno, column=col
                    ) from None
            rows.append(vals)
    if not rows:
        raise CsvFormatError("no data rows", line=2)
    M = np.asarray(rows)
    if n_p == 0:
        if len(rows) < 2:
            raise CsvFormatError("trajectory layout needs at least two rows", line=2)
        states = M[:, :n]
        outputs = M[:, n:] if p else None
        return SnapshotSet.from_trajectory(states, outputs)
    X = M[:, :n]
    Xplus = M[:, n : 2 * n]
    Y = M[:, 2 * n : 2 * n + p] if p else None
    Yplus = M[:, 2 * n + p :] if p_p else None
    return SnapshotSet(X=X, Xplus=Xplus, Y=Y, Yplus=Yplus)


def _fmt(v):
    return repr(float(v))


def write_snapshot_csv(path_or_file, data: SnapshotSet):
    """Write a snapshot set in the paired CSV layout.

    Floats use shortest round-trip decimal formatting, so a read-back
    reproduces the arrays bit for bit.
    """
    n = data.state_dim
    header = [f"x{i}" for i in range(1, n + 1)]
    header += [f"xp{i}" for i in range(1, n + 1)]
    blocks = [data.X, data.Xplus]
    if data.Y is not None:
        p = data.Y.shape[1]
        header += [f"y{i}" for i in range(1, p + 1)]
        blocks.append(data.Y)
        if data.Yplus is not None:
            header += [f"yp{i}" for i in range(1, p + 1)]
            blocks.append(data.Yplus)
    M = np.hstack(blocks)

    def emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in M:
            writer.writerow([_fmt(v) for v in row])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
