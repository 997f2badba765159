"""Proportional control pinning a parameter-shifted plant to a predicted target.

The force is ``F = K * (target - plant)``: the sign that makes the feedback
stabilizing.  (Written with the plant and target swapped, the same expression
pushes the plant away from the target and the mechanism cannot work; K >= 0
with this convention always drives the plant toward the target.)

During control the reservoir runs fully autonomously: the plant is never fed
back into it unless ``resync_period`` is set.  Within one sampling interval
the target is held fixed; the force is refreshed from the current plant state
at each integrator substep, which keeps the loop stable when K*dt exceeds the
single-step stability bound (the built-in Roessler settings, K*dt = 10, need
this).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backends
from .dynamics import (
    SystemParams,
    Trajectory,
    as_state,
    deriv_for,
    integrate,
    rk4_step,
)
from .errors import (
    ContractViolationError,
    IntegrationDivergedError,
    PredictionDivergedError,
    RCControlError,
)
from .reservoir import TrainedReservoir, build_network, synchronize, train

#: base initial condition; each realization adds uniform noise in [-0.5, 0.5]
DEFAULT_INITIAL_STATE = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ControlConfig:
    """Settings for one controlled run."""

    k_gain: float
    params_star: SystemParams
    n_steps: int
    dt: float
    n_substeps: int = 1
    resync_period: int = 0

    def __post_init__(self):
        if self.k_gain < 0:
            raise ContractViolationError("k_gain must be >= 0")
        if self.n_steps < 1:
            raise ContractViolationError("n_steps must be >= 1")
        if self.dt <= 0:
            raise ContractViolationError("dt must be positive")
        if self.n_substeps < 1:
            raise ContractViolationError("n_substeps must be >= 1")
        if self.resync_period < 0:
            raise ContractViolationError("resync_period must be >= 0")


@dataclass(frozen=True)
class ControlledRun:
    """Paired plant / predicted-target / applied-force series of equal length."""

    plant: Trajectory
    target: Trajectory
    force: Trajectory
    config: ControlConfig

    def __post_init__(self):
        if not (len(self.plant) == len(self.target) == len(self.force)):
            raise ContractViolationError("plant, target and force must align")


def control_force(u, v, k_gain: float) -> np.ndarray:
    """Proportional force driving plant state ``u`` toward target ``v``."""
    u = as_state(u)
    v = as_state(v, dim=u.shape[0])
    return k_gain * (v - u)


def run_controlled(trained: TrainedReservoir, r0, u0,
                   cfg: ControlConfig) -> ControlledRun:
    """Integrate the plant under ``params_star`` plus the control force.

    Per sample step: the autonomous prediction advances one step to give the
    target, the force is computed against the current plant state, and the
    plant is RK4-advanced with the force held over each substep.  ``r0`` must
    be synchronized to the dynamics the model was trained on; ``u0`` is the
    plant state at control onset.
    """
    if cfg.dt != trained.dt:
        raise ContractViolationError(
            f"config dt {cfg.dt} does not match the model's training step {trained.dt}")
    if cfg.params_star.system_id not in ("lorenz", "roessler"):
        raise ContractViolationError("controlled plant must be a built-in system")
    u0 = as_state(u0, dim=3)
    r0 = as_state(r0, dim=trained.network.d_r)
    net = trained.network
    adj = net.adjacency
    code = _backends.LORENZ if cfg.params_star.system_id == "lorenz" else _backends.ROESSLER
    u_seq, v_seq, f_seq, status, kind, _ = _backends.controlled_loop(
        code, adj.data, adj.indices, adj.indptr, net.input_map, trained.readout,
        r0, u0, cfg.n_steps, cfg.dt, cfg.params_star.as_array(), cfg.k_gain,
        trained.hyper.alpha, cfg.n_substeps, cfg.resync_period)
    if status >= 0:
        partial = (u_seq[:status], v_seq[:status], f_seq[:status])
        if kind == 1:
            raise PredictionDivergedError(status, partial=partial)
        raise IntegrationDivergedError(status, partial=partial, phase="controlled run")
    return ControlledRun(
        plant=Trajectory(cfg.dt, u_seq),
        target=Trajectory(cfg.dt, v_seq),
        force=Trajectory(cfg.dt, f_seq),
        config=cfg,
    )


def run_tracking(target: Trajectory, u0, cfg: ControlConfig) -> ControlledRun:
    """Control the plant against an explicitly given target trajectory.

    Same stepping rules as :func:`run_controlled` with the reservoir replaced
    by ``target``; useful for checking the force law against a known
    reference (a plant started on the target with identical parameters feels
    only numerical-noise forces).
    """
    if cfg.n_steps > len(target):
        raise ContractViolationError("target trajectory shorter than n_steps")
    if target.dt != cfg.dt:
        raise ContractViolationError("target dt does not match config dt")
    u = as_state(u0, dim=3)
    field = deriv_for(cfg.params_star)
    h = cfg.dt / cfg.n_substeps
    u_seq = np.empty((cfg.n_steps, 3))
    v_seq = np.empty((cfg.n_steps, 3))
    f_seq = np.empty((cfg.n_steps, 3))
    for k in range(cfg.n_steps):
        v = target.samples[k]
        u_seq[k] = u
        v_seq[k] = v
        f_seq[k] = cfg.k_gain * (v - u)
        try:
            for _ in range(cfg.n_substeps):
                f = cfg.k_gain * (v - u)
                u = rk4_step(field, u, h, cfg.params_star, f)
        except IntegrationDivergedError:
            raise IntegrationDivergedError(
                k, partial=(u_seq[:k], v_seq[:k], f_seq[:k]),
                phase="tracking run") from None
    return ControlledRun(
        plant=Trajectory(cfg.dt, u_seq),
        target=Trajectory(cfg.dt, v_seq[:cfg.n_steps]),
        force=Trajectory(cfg.dt, f_seq),
        config=cfg,
    )


def _phase(label, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except RCControlError as err:
        err.phase = label
        err.args = (f"[{label}] {err.args[0] if err.args else ''}",) + err.args[1:]
        raise


def scenario_pipeline(spec, seed: int):
    """Full experiment for one scenario and one realization seed.

    Phases: (1) integrate the system under the original parameters and
    discard the start-up transient; (2) train a reservoir on the leading
    washout+training window; (3) integrate unforced under the shifted
    parameters from the end of the original run ("changed" phase); (4)
    synchronize the reservoir on the tail of the training window and run the
    controlled phase from the final changed state.  Returns
    (original, changed, controlled_run).

    The realization seed drives both the network draw and the initial-state
    noise (independent PCG64 streams).
    """
    lengths = spec.lengths
    params = spec.params
    params_star = spec.params_star
    field = deriv_for(params)

    ic_rng = np.random.default_rng([seed, 1])
    x0 = np.asarray(DEFAULT_INITIAL_STATE) + ic_rng.uniform(-0.5, 0.5, size=3)

    full = _phase("original run", integrate, field, x0,
                  lengths.transient + lengths.changed_run, spec.dt, params,
                  n_substeps=spec.n_substeps)
    orig = full.window(lengths.transient)

    train_data = orig.window(0, lengths.train_total)
    net = _phase("network build", build_network, spec.hyper, 3, seed)
    trained = _phase("training", train, net, train_data, spec.hyper, seed)

    changed = _phase("changed run", integrate, deriv_for(params_star),
                     orig.final_state, lengths.changed_run, spec.dt,
                     params_star, n_substeps=spec.n_substeps)

    sync_tail = train_data.window(lengths.train_total - spec.hyper.t_w)
    r0 = _phase("synchronization", synchronize, trained, sync_tail)

    cfg = ControlConfig(k_gain=spec.k_gain, params_star=params_star,
                        n_steps=lengths.controlled_run, dt=spec.dt,
                        n_substeps=spec.n_substeps)
    run = _phase("controlled run", run_controlled, trained, r0,
                 changed.final_state, cfg)
    return orig, changed, run
