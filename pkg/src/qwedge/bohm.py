"""Single-particle pilot-wave dynamics.

The particle velocity is the standard guidance field v = Im(grad psi / psi)
(hbar = m = 1).  Initial positions are drawn from |psi|^2 (quantum
equilibrium), trajectories are integrated with the adaptive RK45 bundle
integrator, and exits are classified against the outgoing packet geometry.
Everything is deterministic for a fixed (scenario, n, seed): sampling uses
counter-based Philox streams keyed by (seed, round) with one slot per
trajectory index, so a trajectory's draws do not depend on any other
trajectory's rejection history.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _ode
from .config import ScenarioConfig
from .errors import NodeProximity, StepUnderflow
from .packets import Superposition, evaluate, evaluate_with_gradient, evolve_packet

DEFAULT_NODE_FLOOR = 1e-30
EXIT_RADIUS_SIGMAS = 4.0


class Channel(enum.Enum):
    E = "E"
    F = "F"
    UNRESOLVED = "UNRESOLVED"


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    exit_channel: Channel = Channel.UNRESOLVED
    crossed_symmetry_plane: bool = False

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.points, dtype=float)
        if len(t) != len(p):
            raise ValueError("times and points must have equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)


@dataclass(frozen=True)
class EnsembleResult:
    trajectories: list
    seed: int
    counts: dict
    paths: dict = None  # row -> (times, points) for the densely recorded subset


def velocity(psi: Superposition, x, t, node_floor: float = DEFAULT_NODE_FLOOR):
    """Guidance velocity Im(grad psi / psi) at x; raises NodeProximity when
    the density is below `node_floor` anywhere in the batch."""
    val, grad = evaluate_with_gradient(psi, x, t)
    dens = np.abs(val) ** 2
    if np.any(dens < node_floor):
        raise NodeProximity(f"|psi|^2 < {node_floor} at queried point(s)")
    return (grad / val[..., None]).imag


def _field(psi: Superposition, node_floor: float):
    def f(t, y):
        val, grad = evaluate_with_gradient(psi, y, t)
        dens = np.abs(val) ** 2
        ok = dens >= node_floor
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            v = (grad / val[..., None]).imag
        return np.where(ok[:, None], v, 0.0), ok

    return f


def integrate_trajectory(
    psi: Superposition,
    x0,
    t_start: float,
    t_end: float,
    tol: float = 1e-8,
    max_step: float = 0.1,
    node_floor: float = DEFAULT_NODE_FLOOR,
    raise_on_underflow: bool = False,
) -> Trajectory:
    """Integrate one guidance trajectory, recording every accepted step.

    On node trapping (step underflow) the trajectory is returned truncated
    and left UNRESOLVED unless `raise_on_underflow` is set.
    """
    if not t_start < t_end:
        raise ValueError("need t_start < t_end")
    y0 = np.asarray(x0, dtype=float).reshape(1, -1)
    res = _ode.integrate_bundle(
        _field(psi, node_floor),
        t_start,
        y0,
        checkpoints=[t_end],
        tol=tol,
        max_step=max_step,
        cross_coord=1,
        record_rows=[0],
    )
    if res.status[0] == _ode.STATUS_UNDERFLOW and raise_on_underflow:
        raise StepUnderflow("step size underflow (node trapping)")
    times, points = res.paths[0]
    return Trajectory(
        times=times,
        points=points,
        exit_channel=Channel.UNRESOLVED,
        crossed_symmetry_plane=bool(res.crossed[0]),
    )


# -- quantum-equilibrium sampling ------------------------------------------


def _philox(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_initial(psi: Superposition, t: float, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws from |psi(. , t)|^2.

    Proposal: Gaussian mixture of the evolved packets weighted by |a_i|^2;
    cross terms are corrected by rejection against the exact density, with
    the dominating bound k * sum_i |a_i|^2 * q_i >= |psi|^2 (Cauchy-Schwarz,
    k = number of branches).  Each trajectory index consumes its own slot of
    a per-round counter-based stream, so draws are reproducible per index.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    evolved = [evolve_packet(p, t) for _, p in psi.terms]
    amps2 = np.abs(psi.amplitudes) ** 2
    total = float(amps2.sum())
    probs = amps2 / total
    cum = np.cumsum(probs)
    k = len(evolved)
    bound = k * total
    centers = np.array([e.center for e in evolved])
    sigmas = np.array([e.sigma_t for e in evolved])
    dim = centers.shape[1]

    out = np.empty((n, dim))
    pending = np.arange(n)
    rnd = 0
    while pending.size:
        g = _philox(seed, rnd)
        u_branch = g.random(n)[pending]
        z = g.standard_normal((n, dim))[pending]
        u_accept = g.random(n)[pending]

        b = np.minimum(np.searchsorted(cum, u_branch, side="right"), k - 1)
        x = centers[b] + sigmas[b, None] * z
        dens = np.abs(evaluate(psi, x, t)) ** 2
        r2 = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        q = np.sum(
            probs
            * np.exp(-r2 / (2.0 * sigmas**2))
            / (2.0 * math.pi * sigmas**2) ** (dim / 2.0),
            axis=1,
        )
        accept = u_accept * bound * q < dens
        out[pending[accept]] = x[accept]
        pending = pending[~accept]
        rnd += 1
        if rnd > 10_000:
            raise RuntimeError("rejection sampling failed to converge")
    return out


# -- exit classification -----------------------------------------------------


def exit_geometry(scenario: ScenarioConfig):
    """(upper exit center, lower exit center, spread std-dev) at t4.  The E
    channel is whichever evolved packet sits above the plane at t4."""
    t4 = scenario.t4
    ec = evolve_packet(scenario.packet_c(), t4)
    ed = evolve_packet(scenario.packet_d(), t4)
    upper, lower = (ec, ed) if ec.center[1] >= ed.center[1] else (ed, ec)
    return upper.center, lower.center, upper.sigma_t


def classify_points(
    points: np.ndarray,
    velocities: np.ndarray,
    scenario: ScenarioConfig,
) -> np.ndarray:
    """Vectorized exit classification at t4: E when within 4 sigma(t4) of the
    upper exit center and moving away from the plane upward; F mirrored;
    otherwise UNRESOLVED.  Returns an object array of Channel."""
    e_center, f_center, sig = exit_geometry(scenario)
    r = EXIT_RADIUS_SIGMAS * sig
    d_e = np.linalg.norm(points - e_center, axis=-1)
    d_f = np.linalg.norm(points - f_center, axis=-1)
    vy = velocities[..., 1]
    out = np.full(points.shape[0], Channel.UNRESOLVED, dtype=object)
    out[(d_e <= r) & (vy > 0)] = Channel.E
    out[(d_f <= r) & (vy < 0)] = Channel.F
    return out


def classify_exit(traj: Trajectory, scenario: ScenarioConfig) -> Channel:
    """Exit channel of a trajectory integrated to t4 (UNRESOLVED if it never
    reached t4, e.g. after node trapping)."""
    if traj.times[-1] < scenario.t4 - 1e-9:
        return Channel.UNRESOLVED
    psi = scenario.initial_superposition()
    x = traj.points[-1].reshape(1, 2)
    try:
        v = velocity(psi, x, scenario.t4, node_floor=scenario.ensemble.node_floor)
    except NodeProximity:
        return Channel.UNRESOLVED
    return classify_points(x, v, scenario)[0]


# -- ensembles ---------------------------------------------------------------


def integrate_ensemble(
    psi: Superposition,
    x0: np.ndarray,
    t_start: float,
    checkpoints,
    tol: float,
    max_step: float,
    node_floor: float,
    record_rows=(),
) -> _ode.EnsembleIntegration:
    """Bundle integration of many guidance trajectories; chunked across the
    PH_THREADS worker cap with an index-order reduction."""
    return _ode.integrate_chunked(
        _field(psi, node_floor),
        t_start,
        x0,
        checkpoints=checkpoints,
        tol=tol,
        max_step=max_step,
        cross_coord=1,
        record_rows=record_rows,
    )


def run_ensemble(scenario: ScenarioConfig, n: int, seed: int) -> EnsembleResult:
    """Sample, integrate to t4, classify, and aggregate channel counts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    psi = scenario.initial_superposition()
    ens = scenario.ensemble
    x0 = sample_initial(psi, scenario.t1, n, seed)
    checkpoints = [scenario.t2, scenario.t3, scenario.t4]
    res = integrate_ensemble(
        psi,
        x0,
        scenario.t1,
        checkpoints,
        tol=ens.tol,
        max_step=ens.max_step,
        node_floor=ens.node_floor,
        record_rows=range(min(ens.path_sample, n)),
    )
    final = res.snapshots[:, -1, :]
    resolved = res.status == _ode.STATUS_OK
    vel = np.zeros_like(final)
    if resolved.any():
        val, grad = evaluate_with_gradient(psi, final[resolved], scenario.t4)
        with np.errstate(invalid="ignore", divide="ignore"):
            vel[resolved] = (grad / val[..., None]).imag
    channels = np.full(n, Channel.UNRESOLVED, dtype=object)
    channels[resolved] = classify_points(
        final[resolved], vel[resolved], scenario
    )

    grid = np.concatenate([[scenario.t1], res.checkpoints])
    trajectories = []
    for i in range(n):
        pts = np.concatenate([x0[i : i + 1], res.snapshots[i]], axis=0)
        good = ~np.isnan(pts[:, 0])
        trajectories.append(
            Trajectory(
                times=grid[good],
                points=pts[good],
                exit_channel=channels[i],
                crossed_symmetry_plane=bool(res.crossed[i]),
            )
        )
    counts = {ch.value: 0 for ch in Channel}
    for ch in channels:
        counts[ch.value] += 1
    return EnsembleResult(
        trajectories=trajectories, seed=seed, counts=counts, paths=res.paths
    )
