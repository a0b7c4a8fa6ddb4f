"""Electron + pointer two-body pilot-wave dynamics.

The detector is a single 1-D pointer degree of freedom q coupled impulsively
(von Neumann) to the electron at t_int: branches whose electron packet sits
below the symmetry plane get the pointer momentum boosted by `kick`, i.e.
chi(q) -> exp(i kick q) chi(q).  The boost of a spread Gaussian is again an
exactly representable free packet: same width and birth time, momentum
p + kick, virtual birth center shifted by -kick (t_int - t_birth), times a
constant phase that is folded into the branch amplitude.  After the kick the
configuration-space state

    Psi(x, y, q, t) = sum_b A_b g_b(x, y, t) chi_b(q, t)

guides the pair (electron, pointer) through v = Im(grad Psi / Psi), one
coupled 3-D trajectory per run.  Whether the two pointer branches still
overlap at the pointer's actual position while the electron packets cross at
J is what decides between straight-through transit and a bounce, and it is
controlled jointly by `kick` and `t_int`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _ode, bohm
from . import packets as pk
from .bohm import Channel
from .config import ScenarioConfig
from .errors import BranchesNotSeparated, NodeProximity

POINTER_STREAM = 1 << 40  # Philox key namespace for pointer draws
SEPARATION_TOL = 1e-8


class PathLabel(enum.Enum):
    C_PATH = "C"
    D_PATH = "D"


@dataclass(frozen=True)
class PointerPacket:
    """1-D Gaussian pointer wavefunction parameters at birth_time."""

    center: float
    momentum: float
    width: float
    birth_time: float = 0.0
    global_phase: float = 0.0

    def __post_init__(self):
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ValueError(f"pointer width must be positive, got {self.width}")

    def _g1(self) -> "_Gauss1":
        return _Gauss1(
            center=np.array([self.center]),
            momentum=np.array([self.momentum]),
            width=self.width,
            global_phase=self.global_phase,
            birth_time=self.birth_time,
        )


@dataclass(frozen=True)
class _Gauss1:
    """Adapter giving a pointer the vector-field interface of the shared
    Gaussian machinery (packets.* functions are dimension-generic)."""

    center: np.ndarray
    momentum: np.ndarray
    width: float
    global_phase: float
    birth_time: float

    @property
    def dim(self) -> int:
        return 1


def pointer_value_and_gradient(pp: PointerPacket, q, t):
    """(chi, d chi / dq) at pointer coordinate(s) q."""
    q = np.asarray(q, dtype=float)
    v, g = pk.packet_value_and_gradient(pp._g1(), q[..., None], t)
    return v, g[..., 0]


def pointer_overlap(a: PointerPacket, b: PointerPacket, t: float) -> complex:
    """Closed-form 1-D <a(t)|b(t)>."""
    return pk._overlap_evolved(
        pk.evolve_packet(a._g1(), t), pk.evolve_packet(b._g1(), t)
    )


@dataclass(frozen=True)
class BranchState:
    """Entangled electron (x) pointer state: sum_b A_b g_b(x) chi_b(q)."""

    branches: tuple  # of (amplitude complex, GaussianPacket, PointerPacket)

    def __post_init__(self):
        object.__setattr__(
            self,
            "branches",
            tuple((complex(a), g, chi) for a, g, chi in self.branches),
        )
        if not self.branches:
            raise ValueError("branch state needs at least one branch")

    def norm(self, t: float) -> float:
        """sqrt <Psi|Psi> including electron and pointer cross terms."""
        ee = [pk.evolve_packet(g, t) for _, g, _ in self.branches]
        pe = [pk.evolve_packet(chi._g1(), t) for _, _, chi in self.branches]
        amps = [a for a, _, _ in self.branches]
        total = 0.0j
        for i in range(len(amps)):
            for j in range(len(amps)):
                total += (
                    np.conj(amps[i])
                    * amps[j]
                    * pk._overlap_evolved(ee[i], ee[j])
                    * pk._overlap_evolved(pe[i], pe[j])
                )
        return float(np.sqrt(total.real))

    def value(self, x, q, t):
        """Psi(x, q, t); x shape (..., 2), q shape (...)."""
        out = None
        for a, g, chi in self.branches:
            v = a * pk.packet_value(g, x, t) * pk.packet_value(chi._g1(), np.asarray(q, dtype=float)[..., None], t)
            out = v if out is None else out + v
        return out


def _value_and_gradients(state: BranchState, x, q, t):
    """(Psi, grad_x Psi (...,2), dPsi/dq (...,)) at configuration points."""
    q = np.asarray(q, dtype=float)
    val = None
    gx = None
    gq = None
    for a, g, chi in state.branches:
        ve, ge = pk.packet_value_and_gradient(g, x, t)
        vp, gp = pointer_value_and_gradient(chi, q, t)
        term = a * ve * vp
        term_gx = (a * vp)[..., None] * ge
        term_gq = a * ve * gp
        val = term if val is None else val + term
        gx = term_gx if gx is None else gx + term_gx
        gq = term_gq if gq is None else gq + term_gq
    return val, gx, gq


def velocity_config(state: BranchState, x, y, t, node_floor: float = bohm.DEFAULT_NODE_FLOOR):
    """Configuration-space guidance: (Im grad_x Psi / Psi, Im dq Psi / Psi).
    Raises NodeProximity when |Psi|^2 is below `node_floor` anywhere."""
    val, gx, gq = _value_and_gradients(state, x, y, t)
    if np.any(np.abs(val) ** 2 < node_floor):
        raise NodeProximity(f"|Psi|^2 < {node_floor} at queried configuration(s)")
    return (gx / val[..., None]).imag, (gq / val).imag


def _config_field(state: BranchState, node_floor: float):
    def f(t, y):
        val, gx, gq = _value_and_gradients(state, y[:, :2], y[:, 2], t)
        dens = np.abs(val) ** 2
        ok = dens >= node_floor
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            v = np.concatenate(
                [(gx / val[..., None]).imag, (gq / val).imag[:, None]], axis=1
            )
        return np.where(ok[:, None], v, 0.0), ok

    return f


def kicked_pointer(chi: PointerPacket, kick: float, t_int: float) -> tuple:
    """Exact representation of exp(i kick q) chi(q, t_int) as a free packet:
    same width/birth, momentum + kick, virtual birth center shifted so the
    centers coincide at t_int, times a constant unit-modulus phase.
    Returns (packet, phase)."""
    dt = t_int - chi.birth_time
    kicked = PointerPacket(
        center=chi.center - kick * dt,
        momentum=chi.momentum + kick,
        width=chi.width,
        birth_time=chi.birth_time,
        global_phase=chi.global_phase,
    )
    # Constant phase of the boost, evaluated where both packets peak.
    qstar = np.array([chi.center + chi.momentum * dt])
    old = pointer_value_and_gradient(chi, qstar, t_int)[0][0]
    new = pointer_value_and_gradient(kicked, qstar, t_int)[0][0]
    ratio = np.exp(1j * kick * qstar[0]) * old / new
    ratio /= abs(ratio)
    return kicked, complex(ratio)


def apply_coupling(state: BranchState, kick: float, t_int: float) -> BranchState:
    """Impulsive pointer-momentum boost on every branch whose electron packet
    lies below the plane at t_int.  Amplitude moduli and the state norm are
    unchanged; the boost phase is absorbed into the branch amplitude."""
    if kick == 0.0:
        return state
    evolved = [pk.evolve_packet(g, t_int) for _, g, _ in state.branches]
    below = [e.center[1] < 0 for e in evolved]
    for i in range(len(evolved)):
        for j in range(i + 1, len(evolved)):
            if below[i] != below[j]:
                ov = abs(pk._overlap_evolved(evolved[i], evolved[j]))
                if ov >= SEPARATION_TOL:
                    raise BranchesNotSeparated(
                        f"electron branches overlap {ov:.3e} >= {SEPARATION_TOL} at t_int={t_int}"
                    )
    out = []
    for (a, g, chi), hit in zip(state.branches, below):
        if not hit:
            out.append((a, g, chi))
            continue
        kicked, ratio = kicked_pointer(chi, kick, t_int)
        out.append((a * ratio, g, kicked))
    return BranchState(tuple(out))


# -- scenario runs ------------------------------------------------------------


@dataclass(frozen=True)
class DetectorRunRecord:
    electron_start: np.ndarray
    pointer_start: float
    exit_channel: Channel
    triggered: bool
    electron_path_label: PathLabel | None
    crossed_plane: bool


@dataclass(frozen=True)
class DetectorEnsembleResult:
    records: list
    seed: int
    state_before: BranchState
    state_after: BranchState
    snapshots: np.ndarray      # (n, 4, 3) at [t_int, t2, t3, t4]
    snapshot_times: np.ndarray
    paths: dict                # row -> (times, points (k, 3))
    counts: dict


def initial_state(scenario: ScenarioConfig) -> BranchState:
    det = scenario.detector
    pointer = PointerPacket(
        center=det.pointer_center,
        momentum=0.0,
        width=det.pointer_width,
        birth_time=scenario.t1,
    )
    a = 1.0 / math.sqrt(2.0)
    return BranchState(
        ((a, scenario.packet_c(), pointer), (a, scenario.packet_d(), pointer))
    )


def sample_pointer(scenario: ScenarioConfig, n: int, seed: int) -> np.ndarray:
    """Pointer ground-packet positions, drawn from a dedicated stream so the
    electron draws stay pairable across detector variations."""
    det = scenario.detector
    g = np.random.Generator(
        np.random.Philox(key=np.array([seed, POINTER_STREAM], dtype=np.uint64))
    )
    return det.pointer_center + det.pointer_width * g.standard_normal(n)


def run_detector_ensemble(scenario: ScenarioConfig, n: int, seed: int) -> DetectorEnsembleResult:
    """Sample (x0, q0) from |Psi(t1)|^2, integrate the coupled trajectories
    through the kick to t4, and classify each run."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ens = scenario.ensemble
    det = scenario.detector
    psi = scenario.initial_superposition()
    state0 = initial_state(scenario)

    x0 = bohm.sample_initial(psi, scenario.t1, n, seed)
    q0 = sample_pointer(scenario, n, seed)
    y0 = np.concatenate([x0, q0[:, None]], axis=1)
    record_rows = list(range(min(ens.path_sample, n)))

    res_a = _ode.integrate_chunked(
        _config_field(state0, ens.node_floor),
        scenario.t1,
        y0,
        checkpoints=[det.t_int],
        tol=ens.tol,
        max_step=ens.max_step,
        cross_coord=1,
        record_rows=record_rows,
    )
    state1 = apply_coupling(state0, det.kick, det.t_int)

    ok_a = res_a.status == _ode.STATUS_OK
    y_mid = res_a.snapshots[:, -1, :]
    ck_b = [scenario.t2, scenario.t3, scenario.t4]
    n_ok = int(ok_a.sum())
    status = res_a.status.copy()
    crossed = res_a.crossed.copy()
    snapshots = np.full((n, 1 + len(ck_b), 3), np.nan)
    snapshots[:, 0, :] = y_mid
    paths = {r: res_a.paths[r] for r in record_rows}

    if n_ok:
        rows_ok = np.flatnonzero(ok_a)
        pos = {int(r): i for i, r in enumerate(rows_ok)}
        res_b = _ode.integrate_chunked(
            _config_field(state1, ens.node_floor),
            det.t_int,
            y_mid[rows_ok],
            checkpoints=ck_b,
            tol=ens.tol,
            max_step=ens.max_step,
            cross_coord=1,
            record_rows=[pos[r] for r in record_rows if r in pos],
        )
        status[rows_ok] = res_b.status
        crossed[rows_ok] |= res_b.crossed
        snapshots[rows_ok, 1:, :] = res_b.snapshots
        for r in record_rows:
            if r in pos and pos[r] in res_b.paths:
                ta, pa = paths[r]
                tb, pb = res_b.paths[pos[r]]
                paths[r] = (np.concatenate([ta, tb[1:]]), np.concatenate([pa, pb[1:]]))

    resolved = status == _ode.STATUS_OK
    final = snapshots[:, -1, :]
    vel_e = np.zeros((n, 2))
    if resolved.any():
        val, gx, _ = _value_and_gradients(
            state1, final[resolved, :2], final[resolved, 2], scenario.t4
        )
        with np.errstate(invalid="ignore", divide="ignore"):
            vel_e[resolved] = (gx / val[..., None]).imag
    channels = np.full(n, Channel.UNRESOLVED, dtype=object)
    channels[resolved] = bohm.classify_points(
        final[resolved, :2], vel_e[resolved], scenario
    )

    threshold = scenario.trigger_threshold()
    records = []
    for i in range(n):
        at_t2_ok = not np.isnan(snapshots[i, 1, 1])
        label = None
        if at_t2_ok:
            label = PathLabel.C_PATH if snapshots[i, 1, 1] > 0 else PathLabel.D_PATH
        records.append(
            DetectorRunRecord(
                electron_start=x0[i],
                pointer_start=float(q0[i]),
                exit_channel=channels[i],
                triggered=bool(resolved[i] and final[i, 2] > threshold),
                electron_path_label=label,
                crossed_plane=bool(crossed[i]),
            )
        )
    counts = {ch.value: 0 for ch in Channel}
    for ch in channels:
        counts[ch.value] += 1
    return DetectorEnsembleResult(
        records=records,
        seed=seed,
        state_before=state0,
        state_after=state1,
        snapshots=snapshots,
        snapshot_times=np.array([det.t_int, *ck_b]),
        paths=paths,
        counts=counts,
    )


def run_detector_scenario(scenario: ScenarioConfig, n: int, seed: int) -> list:
    """DetectorRunRecord list for a full two-body run."""
    return run_detector_ensemble(scenario, n, seed).records


# -- nonlocal influence comparison --------------------------------------------


@dataclass(frozen=True)
class PairedOutcome:
    index: int
    electron_start: np.ndarray
    pointer_start: float
    exit_without: Channel
    exit_with: Channel
    path_label: PathLabel | None
    triggered_with: bool
    flipped: bool


@dataclass(frozen=True)
class NonlocalReport:
    rows: list
    counts: dict


def _same_except_detector(a: ScenarioConfig, b: ScenarioConfig) -> bool:
    import dataclasses

    da = dataclasses.replace(a, detector=b.detector, out_dir=b.out_dir)
    return da == b


def nonlocal_influence_report(
    scenario_with: ScenarioConfig,
    scenario_without: ScenarioConfig,
    n: int,
    seed: int,
) -> NonlocalReport:
    """Pair detector-present runs with detector-free runs started from the
    identical electron initial conditions (same sampling streams) and count
    exit-channel flips per initial condition."""
    if not _same_except_detector(scenario_with, scenario_without):
        raise ValueError("scenarios must be identical except for the detector block")
    base = bohm.run_ensemble(scenario_without, n, seed)
    with_det = run_detector_ensemble(scenario_with, n, seed)

    rows = []
    flips = 0
    per_path = {PathLabel.C_PATH: [0, 0], PathLabel.D_PATH: [0, 0]}  # [total, flips]
    for i, (tr, rec) in enumerate(zip(base.trajectories, with_det.records)):
        if not np.array_equal(tr.points[0], rec.electron_start):
            raise AssertionError("pairing broken: electron initial conditions differ")
        resolved = (
            tr.exit_channel != Channel.UNRESOLVED
            and rec.exit_channel != Channel.UNRESOLVED
        )
        flipped = bool(resolved and tr.exit_channel != rec.exit_channel)
        flips += flipped
        if rec.electron_path_label is not None and resolved:
            per_path[rec.electron_path_label][0] += 1
            per_path[rec.electron_path_label][1] += flipped
        rows.append(
            PairedOutcome(
                index=i,
                electron_start=rec.electron_start,
                pointer_start=rec.pointer_start,
                exit_without=tr.exit_channel,
                exit_with=rec.exit_channel,
                path_label=rec.electron_path_label,
                triggered_with=rec.triggered,
                flipped=flipped,
            )
        )
    counts = {
        "pairs": n,
        "flips": flips,
        "c_path_total": per_path[PathLabel.C_PATH][0],
        "c_path_flips": per_path[PathLabel.C_PATH][1],
        "d_path_total": per_path[PathLabel.D_PATH][0],
        "d_path_flips": per_path[PathLabel.D_PATH][1],
    }
    return NonlocalReport(rows=rows, counts=counts)
