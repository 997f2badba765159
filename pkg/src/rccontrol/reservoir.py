"""Echo-state reservoir: random network, ridge-trained readout, prediction.

The reservoir is a sparse Erdos-Renyi random matrix rescaled to a target
spectral radius; the input map is dense uniform.  Only the linear readout is
trained, by ridge regression on states augmented with their squares.  All
randomness flows from numpy's PCG64 generator (``np.random.default_rng``)
seeded with a single 64-bit integer, which is recorded on the trained model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import sparse

from . import _backends
from .dynamics import Trajectory, as_state
from .errors import (
    ContractViolationError,
    DegenerateNetworkError,
    InsufficientDataError,
    PredictionDivergedError,
    RidgeSolverError,
    SpectralRadiusEstimationError,
)


@dataclass(frozen=True)
class RCHyperParams:
    """Reservoir hyperparameters.

    Defaults (reservoir size, connection probability, leak mixing, washout
    and training lengths) are the values used by the built-in scenario
    catalog; ``omega`` (input scaling), ``rho_star`` (target spectral
    radius) and ``beta_reg`` (ridge regularization) are scenario-specific.
    """

    omega: float
    rho_star: float
    beta_reg: float
    d_r: int = 300
    p: float = 0.02
    alpha: float = 0.0
    t_w: int = 5000
    t_t: int = 5000

    def __post_init__(self):
        if self.d_r < 1:
            raise ContractViolationError("d_r must be >= 1")
        if not 0.0 < self.p <= 1.0:
            raise ContractViolationError("p must be in (0, 1]")
        if self.omega <= 0:
            raise ContractViolationError("omega must be > 0")
        if self.rho_star <= 0:
            raise ContractViolationError("rho_star must be > 0")
        if self.beta_reg < 0:
            raise ContractViolationError("beta_reg must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ContractViolationError("alpha must be in [0, 1]")
        if self.t_w < 0 or self.t_t < 1:
            raise ContractViolationError("t_w must be >= 0 and t_t >= 1")


@dataclass(frozen=True)
class ReservoirNetwork:
    """Fixed random network: sparse internal weights plus dense input map."""

    adjacency: sparse.csr_matrix
    input_map: np.ndarray
    achieved_spectral_radius: float

    @property
    def d_r(self) -> int:
        return self.adjacency.shape[0]

    @property
    def dim_in(self) -> int:
        return self.input_map.shape[1]


@dataclass(frozen=True)
class TrainedReservoir:
    """Frozen network plus trained readout; immutable once constructed.

    ``dt`` is the sampling step of the training trajectory; predictions and
    controlled runs inherit it.
    """

    network: ReservoirNetwork
    readout: np.ndarray
    hyper: RCHyperParams
    seed: int
    dt: float

    def __post_init__(self):
        ro = np.ascontiguousarray(np.asarray(self.readout, dtype=np.float64))
        if ro.ndim != 2 or ro.shape[1] != 2 * self.network.d_r:
            raise ContractViolationError(
                "readout must be (dim, 2*d_r) for the augmented state")
        ro.flags.writeable = False
        object.__setattr__(self, "readout", ro)


def spectral_radius(m, tol: float = 1e-8, max_iter: int = 100_000) -> float:
    """Largest absolute eigenvalue of a square (sparse or dense) matrix.

    Power iteration with a fixed-seed random start; iteration stops early
    once the estimate is stable to ``tol`` (checked over 10 consecutive
    steps) or clearly stalled.  On non-convergence, matrices up to 500x500
    fall back to a dense eigensolver; larger ones raise
    :class:`SpectralRadiusEstimationError` with the best estimate attached.
    """
    if m.shape[0] != m.shape[1]:
        raise ContractViolationError("spectral radius needs a square matrix")
    n = m.shape[0]
    rng = np.random.default_rng(0x5EED)
    lam = 0.0
    for _ in range(2):  # one restart if the start vector sits in the null space
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        lam = 0.0
        hits = 0
        # oscillation of ||Ax|| for complex-dominant spectra never meets tol;
        # probing past ~5000 iterations is wasted work before the fallback
        stall_cap = min(max_iter, 5000)
        for _ in range(stall_cap):
            y = m @ x
            ny = float(np.linalg.norm(y))
            if ny == 0.0:
                lam = 0.0
                break
            if abs(ny - lam) <= tol * max(ny, 1e-300):
                hits += 1
                if hits >= 10:
                    return ny
            else:
                hits = 0
            lam = ny
            x = y / ny
        if lam > 0.0:
            break
    else:
        return 0.0
    if n <= 500:
        dense = m.toarray() if sparse.issparse(m) else np.asarray(m)
        return float(np.max(np.abs(np.linalg.eigvals(dense))))
    raise SpectralRadiusEstimationError(lam)


def build_network(hyper: RCHyperParams, dim_in: int, seed: int) -> ReservoirNetwork:
    """Draw the random reservoir and rescale it to the target spectral radius.

    Draw order (fixed for reproducibility): edge mask, edge weights in
    [-1, 1], then input map in [-omega, omega].  Self-loops take part in the
    edge draw.  Raises :class:`DegenerateNetworkError` when the raw matrix
    has zero spectral radius, in which case the caller should retry with the
    next seed.
    """
    if dim_in < 1:
        raise ContractViolationError("dim_in must be >= 1")
    rng = np.random.default_rng(seed)
    d_r = hyper.d_r
    mask = rng.random((d_r, d_r)) < hyper.p
    weights = rng.uniform(-1.0, 1.0, size=(d_r, d_r))
    input_map = rng.uniform(-hyper.omega, hyper.omega, size=(d_r, dim_in))
    raw = sparse.csr_matrix(np.where(mask, weights, 0.0))
    rho_raw = spectral_radius(raw)
    if rho_raw == 0.0:
        raise DegenerateNetworkError(seed)
    adjacency = raw * (hyper.rho_star / rho_raw)
    achieved = spectral_radius(adjacency)
    input_map.flags.writeable = False
    return ReservoirNetwork(adjacency, input_map, achieved)


def augment(r) -> np.ndarray:
    """Concatenate a reservoir state with its element-wise square."""
    r = as_state(r)
    return np.concatenate((r, r * r))


def update_state(net: ReservoirNetwork, r, u, alpha: float = 0.0) -> np.ndarray:
    """One reservoir update: alpha*r + (1-alpha)*tanh(A r + W_in u)."""
    r = as_state(r, dim=net.d_r)
    u = as_state(u, dim=net.dim_in)
    adj = net.adjacency
    states = _backends.drive_loop(adj.data, adj.indices, adj.indptr,
                                  net.input_map, u[None, :], r, alpha)
    return states[0]


def readout(trained: TrainedReservoir, r) -> np.ndarray:
    """Trained linear readout of the augmented reservoir state."""
    r = as_state(r, dim=trained.network.d_r)
    return trained.readout @ augment(r)


def synchronize(trained: TrainedReservoir, data: Trajectory) -> np.ndarray:
    """Drive the reservoir from the zero state through ``data``.

    Returns the state after absorbing the final sample; by the echo-state
    property this state depends only on recent inputs once ``data`` is long
    enough.
    """
    if data.dim != trained.network.dim_in:
        raise ContractViolationError("trajectory dimension does not match input map")
    net = trained.network
    adj = net.adjacency
    states = _backends.drive_loop(adj.data, adj.indices, adj.indptr, net.input_map,
                                  data.samples, np.zeros(net.d_r),
                                  trained.hyper.alpha)
    return states[-1]


def train(net: ReservoirNetwork, data: Trajectory, hyper: RCHyperParams,
          seed: int) -> TrainedReservoir:
    """Ridge-train the readout so the state that absorbed u(t) maps to u(t+dt).

    The reservoir starts at zero, runs through ``t_w`` washout samples whose
    states are discarded, then records ``t_t`` augmented states; the readout
    solves the regularized normal equations via a Cholesky factorization.
    """
    if data.dim != net.dim_in:
        raise ContractViolationError("trajectory dimension does not match input map")
    t_w, t_t = hyper.t_w, hyper.t_t
    if len(data) < t_w + t_t + 1:
        raise InsufficientDataError(
            f"training needs at least t_w + t_t + 1 = {t_w + t_t + 1} samples, "
            f"got {len(data)}")
    u = data.samples
    adj = net.adjacency
    r = np.zeros(net.d_r)
    if t_w > 0:
        washed = _backends.drive_loop(adj.data, adj.indices, adj.indptr,
                                      net.input_map, u[:t_w], r, hyper.alpha)
        r = washed[-1]
    states = _backends.drive_loop(adj.data, adj.indices, adj.indptr,
                                  net.input_map, u[t_w:t_w + t_t], r, hyper.alpha)
    x_aug = np.concatenate((states, states * states), axis=1)
    targets = u[t_w + 1:t_w + t_t + 1]
    gram = x_aug.T @ x_aug
    gram[np.diag_indices_from(gram)] += hyper.beta_reg
    rhs = x_aug.T @ targets
    try:
        p_mat = sla.cho_solve(sla.cho_factor(gram), rhs).T
    except np.linalg.LinAlgError:
        if hyper.beta_reg == 0.0:
            raise RidgeSolverError(
                "normal matrix is not positive definite with beta_reg=0; "
                "set a small positive beta_reg") from None
        try:
            p_mat = np.linalg.solve(gram, rhs).T
        except np.linalg.LinAlgError:
            raise RidgeSolverError(
                "regularized normal equations could not be solved") from None
    return TrainedReservoir(network=net, readout=p_mat, hyper=hyper,
                            seed=seed, dt=data.dt)


def predict_autonomous(trained: TrainedReservoir, r0, n_steps: int,
                       t0: float = 0.0) -> Trajectory:
    """Run the closed loop (readout fed back as input) for ``n_steps``.

    The first emitted sample is the readout of ``r0`` itself.  Raises
    :class:`PredictionDivergedError` with the failing step index if the
    readout leaves the divergence guard.
    """
    if n_steps < 1:
        raise ContractViolationError("n_steps must be >= 1")
    r0 = as_state(r0, dim=trained.network.d_r)
    net = trained.network
    adj = net.adjacency
    v_seq, _, status = _backends.predict_loop(
        adj.data, adj.indices, adj.indptr, net.input_map, trained.readout,
        r0, n_steps, trained.hyper.alpha)
    if status >= 0:
        raise PredictionDivergedError(status, partial=v_seq[:status])
    return Trajectory(trained.dt, v_seq, t0)


_MODEL_FORMAT = "rccontrol-reservoir"


def save_model(trained: TrainedReservoir, path) -> None:
    """Persist a trained model as a self-describing JSON document.

    Floats are serialized with full round-trip precision, so
    ``load_model(save_model(x))`` reproduces the model bit-exactly.
    """
    adj = trained.network.adjacency.tocoo()
    doc = {
        "format": _MODEL_FORMAT,
        "version": 1,
        "seed": int(trained.seed),
        "dt": float(trained.dt),
        "hyper": {
            "omega": trained.hyper.omega,
            "rho_star": trained.hyper.rho_star,
            "beta_reg": trained.hyper.beta_reg,
            "d_r": trained.hyper.d_r,
            "p": trained.hyper.p,
            "alpha": trained.hyper.alpha,
            "t_w": trained.hyper.t_w,
            "t_t": trained.hyper.t_t,
        },
        "achieved_spectral_radius": float(trained.network.achieved_spectral_radius),
        "adjacency": {
            "shape": list(adj.shape),
            "row": adj.row.tolist(),
            "col": adj.col.tolist(),
            "value": adj.data.tolist(),
        },
        "input_map": trained.network.input_map.tolist(),
        "readout": trained.readout.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path) -> TrainedReservoir:
    """Load a model saved by :func:`save_model`."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _MODEL_FORMAT:
        raise ContractViolationError(f"{path} is not a reservoir model file")
    hyper = RCHyperParams(**doc["hyper"])
    adj_doc = doc["adjacency"]
    adjacency = sparse.csr_matrix(
        (adj_doc["value"], (adj_doc["row"], adj_doc["col"])),
        shape=tuple(adj_doc["shape"]))
    input_map = np.array(doc["input_map"], dtype=np.float64)
    input_map.flags.writeable = False
    net = ReservoirNetwork(adjacency, input_map,
                           float(doc["achieved_spectral_radius"]))
    return TrainedReservoir(network=net, readout=np.array(doc["readout"]),
                            hyper=hyper, seed=int(doc["seed"]),
                            dt=float(doc["dt"]))
