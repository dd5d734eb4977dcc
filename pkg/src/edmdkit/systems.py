"""Reference discrete-time systems and output maps for generating snapshot data.

Continuous-time models (Van der Pol, Duffing) are discretized with one
classical fixed-step RK4 step per map application, so generated data is
bit-reproducible. All systems expose the same interface: a state dimension,
a one-step map, and an output map.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .empirical import SnapshotSet, concat_snapshots
from .errors import ConfigurationError, DivergenceError, InputShapeError

logger = logging.getLogger("edmdkit.systems")


# --- output maps ----------------------------------------------------------


@dataclass(frozen=True)
class OutputMap:
    """Maps row-stacked states to row-stacked outputs y = g(x).

    Kinds: "full_state" (y = x), "linear" (y = C x), "component_powers"
    (y_j = x[i_j]**k_j for listed (index, power) pairs), "custom" (arbitrary
    callable taking an (m, n) matrix to an (m, p) matrix).
    """

    kind: str
    C: np.ndarray | None = None
    terms: tuple[tuple[int, int], ...] | None = None
    func: object = None
    n_outputs_custom: int | None = None

    @classmethod
    def full_state(cls):
        return cls("full_state")

    @classmethod
    def linear(cls, C):
        C = np.atleast_2d(np.asarray(C, dtype=float))
        return cls("linear", C=C)

    @classmethod
    def component_powers(cls, terms):
        terms = tuple((int(i), int(k)) for i, k in terms)
        for i, k in terms:
            if i < 0 or k < 0:
                raise ConfigurationError("component_powers needs index >= 0, power >= 0")
        return cls("component_powers", terms=terms)

    @classmethod
    def custom(cls, func, n_outputs):
        return cls("custom", func=func, n_outputs_custom=int(n_outputs))

    def n_outputs(self, state_dim):
        if self.kind == "full_state":
            return state_dim
        if self.kind == "linear":
            return self.C.shape[0]
        if self.kind == "component_powers":
            return len(self.terms)
        return self.n_outputs_custom

    def apply(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "full_state":
            return X.copy()
        if self.kind == "linear":
            if self.C.shape[1] != X.shape[1]:
                raise InputShapeError(
                    f"output matrix expects {self.C.shape[1]} states, data has {X.shape[1]}"
                )
            return X @ self.C.T
        if self.kind == "component_powers":
            cols = []
            for i, k in self.terms:
                if i >= X.shape[1]:
                    raise InputShapeError(f"component index {i} out of range")
                cols.append(X[:, i] ** k)
            return np.column_stack(cols)
        out = np.atleast_2d(np.asarray(self.func(X), dtype=float))
        if out.shape != (X.shape[0], self.n_outputs_custom):
            raise InputShapeError(
                f"custom output map returned shape {out.shape}, expected "
                f"({X.shape[0]}, {self.n_outputs_custom})"
            )
        return out


# --- dynamics -------------------------------------------------------------


def _rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _vdp_field(mu):
    def f(x):
        return np.array([x[1], mu * (1.0 - x[0] ** 2) * x[1] - x[0]])

    return f


def _duffing_field(alpha, beta, delta):
    def f(x):
        return np.array([x[1], -delta * x[1] - alpha * x[0] - beta * x[0] ** 3])

    return f


@dataclass(frozen=True)
class ReferenceSystem:
    """A discrete-time map S with an attached output map g.

    Use the classmethod constructors. ``params`` holds the kind-specific
    numbers; continuous-time kinds carry a positive step size ``dt`` and are
    advanced by classical RK4.
    """

    kind: str
    params: dict = field(default_factory=dict)
    output_map: OutputMap = field(default_factory=OutputMap.full_state)

    @classmethod
    def linear(cls, A, output_map=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ConfigurationError(f"linear map matrix must be square, got {A.shape}")
        return cls("linear", {"A": A}, output_map or OutputMap.full_state())

    @classmethod
    def scalar_poly(cls, coefficients, output_map=None):
        """Scalar map x+ = c0 + c1 x + c2 x^2 + ... (ascending coefficients)."""
        coeffs = tuple(float(c) for c in coefficients)
        if not coeffs:
            raise ConfigurationError("scalar_poly needs at least one coefficient")
        return cls("scalar_poly", {"coefficients": coeffs}, output_map or OutputMap.full_state())

    @classmethod
    def van_der_pol(cls, mu=1.0, dt=0.01, output_map=None):
        if not dt > 0:
            raise ConfigurationError("dt must be > 0")
        return cls(
            "van_der_pol", {"mu": float(mu), "dt": float(dt)},
            output_map or OutputMap.full_state(),
        )

    @classmethod
    def duffing(cls, alpha=1.0, beta=1.0, delta=0.2, dt=0.01, output_map=None):
        if not dt > 0:
            raise ConfigurationError("dt must be > 0")
        params = {"alpha": float(alpha), "beta": float(beta), "delta": float(delta), "dt": float(dt)}
        return cls("duffing", params, output_map or OutputMap.full_state())

    @classmethod
    def rotation(cls, rho=1.0, theta=0.1, output_map=None):
        """Planar spiral x+ = rho R(theta) x."""
        return cls(
            "rotation", {"rho": float(rho), "theta": float(theta)},
            output_map or OutputMap.full_state(),
        )

    @property
    def state_dim(self):
        if self.kind == "linear":
            return self.params["A"].shape[0]
        if self.kind == "scalar_poly":
            return 1
        return 2  # van_der_pol, duffing, rotation


def step(sys: ReferenceSystem, x) -> np.ndarray:
    """One application of the system map S."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != sys.state_dim:
        raise InputShapeError(f"state has shape {x.shape}, expected ({sys.state_dim},)")
    if not np.all(np.isfinite(x)):
        raise DivergenceError("non-finite state")
    # overflow shows up as inf/nan in the result and is reported below
    with np.errstate(over="ignore", invalid="ignore"):
        if sys.kind == "linear":
            xn = sys.params["A"] @ x
        elif sys.kind == "scalar_poly":
            acc = 0.0
            for c in reversed(sys.params["coefficients"]):
                acc = acc * x[0] + c
            xn = np.array([acc])
        elif sys.kind == "van_der_pol":
            xn = _rk4_step(_vdp_field(sys.params["mu"]), x, sys.params["dt"])
        elif sys.kind == "duffing":
            f = _duffing_field(
                sys.params["alpha"], sys.params["beta"], sys.params["delta"]
            )
            xn = _rk4_step(f, x, sys.params["dt"])
        elif sys.kind == "rotation":
            rho, th = sys.params["rho"], sys.params["theta"]
            c, s = np.cos(th), np.sin(th)
            xn = rho * np.array([c * x[0] - s * x[1], s * x[0] + c * x[1]])
        else:
            raise ConfigurationError(f"unknown system kind {sys.kind!r}")
    if not np.all(np.isfinite(xn)):
        raise DivergenceError("state diverged to non-finite values")
    return xn


def simulate_trajectory(sys: ReferenceSystem, x0, n_steps) -> np.ndarray:
    """States x0, S(x0), ..., S^n(x0) as an (n_steps+1, n) matrix.

    Stops early if the state diverges; the returned matrix then has fewer
    rows (at least one).
    """
    x = np.asarray(x0, dtype=float)
    rows = [x]
    for _ in range(int(n_steps)):
        try:
            x = step(sys, x)
        except DivergenceError:
            logger.warning(
                "trajectory from %s diverged after %d steps; truncating",
                np.array2string(rows[0], precision=4), len(rows) - 1,
            )
            break
        rows.append(x)
    return np.vstack(rows)


def random_initial_conditions(n, state_dim, bounds=(-1.0, 1.0), seed=None) -> np.ndarray:
    """n initial states drawn uniformly from an axis-aligned box."""
    rng = np.random.default_rng(seed)
    lo, hi = bounds
    return rng.uniform(lo, hi, size=(int(n), state_dim))


def generate_snapshots(sys: ReferenceSystem, x0_set, steps_per_trajectory, seed=None) -> SnapshotSet:
    """Concatenate consecutive-pair snapshots from one trajectory per x0.

    ``x0_set`` is either a sequence of initial states or an integer count, in
    which case that many initial states are drawn from the unit box with the
    given seed. Outputs Y and Yplus are evaluated through the system's output
    map. Trajectories that diverge are truncated at the last finite state
    (with a logged warning) and contribute the pairs they produced.
    """
    if int(steps_per_trajectory) < 1:
        raise ConfigurationError("steps_per_trajectory must be >= 1")
    if isinstance(x0_set, (int, np.integer)):
        x0_set = random_initial_conditions(x0_set, sys.state_dim, seed=seed)
    parts = []
    for x0 in np.atleast_2d(np.asarray(x0_set, dtype=float)):
        states = simulate_trajectory(sys, x0, steps_per_trajectory)
        if states.shape[0] < 2:
            continue
        outputs = sys.output_map.apply(states)
        parts.append(SnapshotSet.from_trajectory(states, outputs))
    if not parts:
        raise DivergenceError("every trajectory diverged before producing a pair")
    return concat_snapshots(parts)
