"""Lorenz and Roessler vector fields and forced RK4 integration.

All operations are pure functions; trajectories are uniformly sampled
(N, D) float64 arrays wrapped in :class:`Trajectory`.  The generic Python
RK4 path and the compiled kernels share one expression tree, so integrating
a built-in system gives bit-identical results on either path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backends
from .errors import ContractViolationError, IntegrationDivergedError

_PARAM_NAMES = {
    "lorenz": ("sigma", "rho", "beta"),
    "roessler": ("a", "b", "c"),
}
_SYSTEM_CODES = {"lorenz": _backends.LORENZ, "roessler": _backends.ROESSLER}

DIVERGENCE_LIMIT = _backends.DIVERGENCE_LIMIT


@dataclass(frozen=True)
class SystemParams:
    """Named parameters of one of the built-in systems."""

    system_id: str
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.system_id not in _PARAM_NAMES:
            raise ContractViolationError(f"unknown system {self.system_id!r}")
        names = _PARAM_NAMES[self.system_id]
        if set(self.values) != set(names):
            raise ContractViolationError(
                f"{self.system_id} parameters must be exactly {names}, "
                f"got {tuple(self.values)}"
            )
        clean = {k: float(self.values[k]) for k in names}
        if not all(math.isfinite(v) for v in clean.values()):
            raise ContractViolationError("system parameters must be finite")
        object.__setattr__(self, "values", clean)

    @classmethod
    def lorenz(cls, sigma=10.0, rho=28.0, beta=8.0 / 3.0) -> "SystemParams":
        return cls("lorenz", {"sigma": sigma, "rho": rho, "beta": beta})

    @classmethod
    def roessler(cls, a=0.5, b=2.0, c=4.0) -> "SystemParams":
        return cls("roessler", {"a": a, "b": b, "c": c})

    def __getattr__(self, name):
        values = object.__getattribute__(self, "values")
        if name in values:
            return values[name]
        raise AttributeError(name)

    def with_values(self, **changes) -> "SystemParams":
        """Copy with some named parameters replaced."""
        unknown = set(changes) - set(self.values)
        if unknown:
            raise ContractViolationError(f"unknown parameters {sorted(unknown)}")
        return replace(self, values={**self.values, **changes})

    def as_array(self) -> np.ndarray:
        return np.array([self.values[k] for k in _PARAM_NAMES[self.system_id]])


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled multivariate time series."""

    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise ContractViolationError("trajectory needs a (n_samples, dim) array")
        if self.dt <= 0 or not math.isfinite(self.dt):
            raise ContractViolationError("dt must be a positive finite number")
        if not np.all(np.isfinite(samples)):
            raise ContractViolationError("trajectory samples must all be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    def window(self, start: int, stop: int | None = None) -> "Trajectory":
        """Sub-trajectory [start:stop] with the time origin shifted along."""
        sl = self.samples[start:stop]
        if sl.shape[0] < 1:
            raise ContractViolationError("empty trajectory window")
        return Trajectory(self.dt, sl, self.t0 + start * self.dt)

    @property
    def final_state(self) -> np.ndarray:
        return self.samples[-1]


def as_state(x, dim: int | None = None) -> np.ndarray:
    """Validate and convert a state vector to a 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractViolationError("state must be one-dimensional")
    if dim is not None and arr.shape[0] != dim:
        raise ContractViolationError(f"state must have dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError("state components must be finite")
    return arr


def lorenz_deriv(state, params: SystemParams) -> np.ndarray:
    """Time derivative of the Lorenz system at ``state``."""
    if params.system_id != "lorenz":
        raise ContractViolationError("lorenz_deriv requires lorenz parameters")
    x = as_state(state, dim=3)
    sigma, rho, beta = params.values["sigma"], params.values["rho"], params.values["beta"]
    # expression order mirrors the compiled kernels (bit-level agreement)
    return np.array([
        sigma * (x[1] - x[0]),
        x[0] * (rho - x[2]) - x[1],
        x[0] * x[1] - beta * x[2],
    ])


def roessler_deriv(state, params: SystemParams) -> np.ndarray:
    """Time derivative of the Roessler system at ``state``."""
    if params.system_id != "roessler":
        raise ContractViolationError("roessler_deriv requires roessler parameters")
    x = as_state(state, dim=3)
    a, b, c = params.values["a"], params.values["b"], params.values["c"]
    return np.array([
        -(x[1] + x[2]),
        x[0] + a * x[1],
        b + (x[0] - c) * x[2],
    ])


_SYSTEM_FIELDS = {"lorenz": lorenz_deriv, "roessler": roessler_deriv}


def deriv_for(params: SystemParams):
    """The vector-field function matching ``params.system_id``."""
    return _SYSTEM_FIELDS[params.system_id]


def rk4_step(field, state, dt: float, params=None, force=None) -> np.ndarray:
    """One classical RK4 step of dx/dt = field(x, params) + force.

    ``force`` is held constant through all four stages (zero-order hold); None
    means unforced.  Works for any state dimension the field supports.
    """
    x = as_state(state)
    if dt <= 0:
        raise ContractViolationError("dt must be positive")
    if force is None:
        f = np.zeros_like(x)
    else:
        f = as_state(force, dim=x.shape[0])
    h = dt
    k1 = field(x, params) + f
    k2 = field(x + 0.5 * h * k1, params) + f
    k3 = field(x + 0.5 * h * k2, params) + f
    k4 = field(x + h * k3, params) + f
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > DIVERGENCE_LIMIT:
        raise IntegrationDivergedError(0)
    return out


def integrate(field, x0, n_steps: int, dt: float, params=None,
              force_provider=None, t0: float = 0.0, n_substeps: int = 1) -> Trajectory:
    """Integrate ``field`` for ``n_steps`` samples of spacing ``dt``.

    ``force_provider(step_index, state)``, when given, supplies the force for
    each sample step; it is held constant across that step's substeps.
    ``n_substeps`` splits each sample interval into finer RK4 steps (the
    built-in Roessler settings need this; Lorenz runs use 1).  Raises
    :class:`IntegrationDivergedError` on guard violation, discarding the run.
    """
    x = as_state(x0)
    if n_steps < 1:
        raise ContractViolationError("n_steps must be >= 1")
    if dt <= 0:
        raise ContractViolationError("dt must be positive")
    if n_substeps < 1:
        raise ContractViolationError("n_substeps must be >= 1")

    code = None
    if isinstance(params, SystemParams) and _SYSTEM_FIELDS.get(params.system_id) is field:
        code = _SYSTEM_CODES[params.system_id]
    if code is not None and force_provider is None:
        zeros = np.zeros((n_steps, 3))
        out, status = _backends.integrate_sys(
            code, x, n_steps, dt, params.as_array(), zeros, n_substeps)
        if status >= 0:
            raise IntegrationDivergedError(status, partial=out[:status + 1])
        return Trajectory(dt, out, t0)

    out = np.empty((n_steps + 1, x.shape[0]))
    out[0] = x
    h = dt / n_substeps
    cur = x
    for k in range(n_steps):
        f = None if force_provider is None else force_provider(k, cur)
        try:
            for _ in range(n_substeps):
                cur = rk4_step(field, cur, h, params, f)
        except IntegrationDivergedError:
            raise IntegrationDivergedError(k, partial=out[:k + 1]) from None
        out[k + 1] = cur
    return Trajectory(dt, out, t0)
