"""Finite-dimensional consistent-histories engine.

A history family is a time grid with unitary propagators between adjacent
times, an initial state, and one projective decomposition of the identity
per time.  A history picks one projector per time; its chain vector is

    |C_h> = P_{t_n} U_{n,n-1} ... P_{t_1} U_{1,0} P_{t_0} |psi_0>

the weight is ||C_h||^2, and the decoherence functional D(h1, h2) is the
Gram matrix of chain vectors.  Probabilities are only released for families
whose off-diagonal D entries vanish within tolerance (medium decoherence:
the full complex off-diagonals, the stricter standard condition).

The wedge apparatus has a canonical 2-dim path realization (basis a0/a0_perp
at t0, c/d in flight, e/f after the crossing; splitter then relabeling swap)
and a 4-dim extension tensored with the {D, D*} pointer space where the
crossing leg couples the d path to the pointer flip.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InconsistentFamily, ZeroConditioningEvent

MATRIX_TOL = 1e-12
CONSISTENCY_TOL = 1e-10
MAX_HISTORIES = 1_000_000


@dataclass(frozen=True)
class LabeledBasis:
    labels: tuple

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate basis labels: {labels}")
        object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    return a


def unitarity_defect(u: np.ndarray) -> float:
    u = _as_matrix(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True)
class TimeGrid:
    times: tuple
    unitaries: tuple  # one (d, d) matrix per adjacent pair of times

    def __init__(self, times, unitaries, tol: float = MATRIX_TOL):
        times = tuple(float(t) for t in times)
        unitaries = tuple(_as_matrix(u) for u in unitaries)
        if len(times) < 1:
            raise ValueError("need at least one time")
        if any(b - a <= 0 for a, b in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        if len(unitaries) != len(times) - 1:
            raise ValueError("need exactly one unitary per adjacent time pair")
        dims = {u.shape[0] for u in unitaries}
        if len(dims) > 1:
            raise ValueError("all unitaries must share one dimension")
        for k, u in enumerate(unitaries):
            defect = unitarity_defect(u)
            if defect > tol:
                raise ValueError(f"matrix {k} is not unitary: defect {defect:.3e} > {tol}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "unitaries", unitaries)

    @property
    def dimension(self) -> int:
        if self.unitaries:
            return self.unitaries[0].shape[0]
        raise ValueError("dimension undefined for a single-time grid without unitaries")


@dataclass(frozen=True)
class Projector:
    label: str
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))


def projector_from_indices(dim: int, indices: Iterable[int], label: str) -> Projector:
    m = np.zeros((dim, dim), dtype=complex)
    for i in indices:
        m[i, i] = 1.0
    return Projector(label=label, matrix=m)


def projector_from_vector(vec, label: str) -> Projector:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return Projector(label=label, matrix=np.outer(v, v.conj()))


def basis_decomposition(labels: Sequence[str]) -> tuple:
    """Full fine-grained decomposition: one rank-1 projector per basis label."""
    d = len(labels)
    return tuple(projector_from_indices(d, [i], lab) for i, lab in enumerate(labels))


@dataclass(frozen=True)
class History:
    projector_choice: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "projector_choice", tuple(int(i) for i in self.projector_choice)
        )


@dataclass(frozen=True)
class HistoryFamily:
    grid: TimeGrid
    decompositions: tuple  # per time: tuple of Projector
    initial_state: np.ndarray

    def __init__(self, grid, decompositions, initial_state, tol: float = MATRIX_TOL):
        decompositions = tuple(tuple(dec) for dec in decompositions)
        if len(decompositions) != len(grid.times):
            raise ValueError("need one decomposition per time")
        psi = np.asarray(initial_state, dtype=complex).reshape(-1)
        dim = len(psi)
        if abs(np.linalg.norm(psi) - 1.0) > tol:
            raise ValueError("initial state must be normalized")
        for k, dec in enumerate(decompositions):
            if not dec:
                raise ValueError(f"empty decomposition at time index {k}")
            total = np.zeros((dim, dim), dtype=complex)
            for p in dec:
                m = p.matrix
                if m.shape != (dim, dim):
                    raise ValueError("projector dimension mismatch")
                if np.max(np.abs(m @ m - m)) > tol:
                    raise ValueError(f"projector {p.label!r} at time {k} is not idempotent")
                if np.max(np.abs(m - m.conj().T)) > tol:
                    raise ValueError(f"projector {p.label!r} at time {k} is not Hermitian")
                total += m
            for a, b in itertools.combinations(dec, 2):
                if np.max(np.abs(a.matrix @ b.matrix)) > tol:
                    raise ValueError(
                        f"projectors {a.label!r}/{b.label!r} at time {k} not orthogonal"
                    )
            if np.max(np.abs(total - np.eye(dim))) > tol:
                raise ValueError(f"decomposition at time {k} does not sum to identity")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "decompositions", decompositions)
        object.__setattr__(self, "initial_state", psi)

    @property
    def dimension(self) -> int:
        return len(self.initial_state)

    @property
    def shape(self) -> tuple:
        return tuple(len(dec) for dec in self.decompositions)

    def history(self, *choice) -> History:
        h = History(tuple(choice))
        self._check(h)
        return h

    def _check(self, h: History) -> None:
        if len(h.projector_choice) != len(self.decompositions):
            raise ValueError("history length does not match family times")
        for k, i in enumerate(h.projector_choice):
            if not 0 <= i < len(self.decompositions[k]):
                raise ValueError(f"invalid projector index {i} at time {k}")

    def label(self, h: History) -> str:
        return " > ".join(
            self.decompositions[k][i].label for k, i in enumerate(h.projector_choice)
        )


def all_histories(fam: HistoryFamily) -> list:
    count = math.prod(fam.shape)
    if count > MAX_HISTORIES:
        raise ValueError(f"family enumerates {count} histories (> {MAX_HISTORIES})")
    return [History(c) for c in itertools.product(*(range(s) for s in fam.shape))]


def chain_vector(fam: HistoryFamily, h: History) -> np.ndarray:
    """P_{t_n} U_{n,n-1} ... P_{t_1} U_{1,0} P_{t_0} |psi_0>."""
    fam._check(h)
    v = fam.decompositions[0][h.projector_choice[0]].matrix @ fam.initial_state
    for k, u in enumerate(fam.grid.unitaries):
        v = fam.decompositions[k + 1][h.projector_choice[k + 1]].matrix @ (u @ v)
    return v


def weight(fam: HistoryFamily, h: History) -> float:
    v = chain_vector(fam, h)
    return float(np.vdot(v, v).real)


def decoherence_functional(fam: HistoryFamily, h1: History, h2: History) -> complex:
    """<C_{h2}, C_{h1}>; Hermitian in (h1, h2), diagonal equals the weight."""
    return complex(np.vdot(chain_vector(fam, h2), chain_vector(fam, h1)))


def _chain_matrix(fam: HistoryFamily):
    hs = all_histories(fam)
    return hs, np.array([chain_vector(fam, h) for h in hs])


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    max_offdiag: float
    tol: float


def check_consistency(fam: HistoryFamily, tol: float = CONSISTENCY_TOL) -> ConsistencyReport:
    """Medium decoherence: max |D(h1, h2)| over h1 != h2 must be <= tol."""
    _, C = _chain_matrix(fam)
    D = C @ C.conj().T
    np.fill_diagonal(D, 0.0)
    m = float(np.max(np.abs(D))) if D.size else 0.0
    return ConsistencyReport(consistent=m <= tol, max_offdiag=m, tol=tol)


@dataclass(frozen=True)
class WeightTable:
    entries: tuple  # of (History, float)
    report: ConsistencyReport

    def as_dict(self, fam: HistoryFamily) -> dict:
        return {fam.label(h): w for h, w in self.entries}

    def nonzero(self, eps: float = 1e-12) -> tuple:
        return tuple((h, w) for h, w in self.entries if w > eps)

    def total(self) -> float:
        return float(sum(w for _, w in self.entries))


def enumerate_and_assign(fam: HistoryFamily, tol: float = CONSISTENCY_TOL) -> WeightTable:
    """All histories with their weights; refuses inconsistent families."""
    hs, C = _chain_matrix(fam)
    D = C @ C.conj().T
    w = np.abs(np.diag(D).real)
    off = D.copy()
    np.fill_diagonal(off, 0.0)
    m = float(np.max(np.abs(off))) if off.size else 0.0
    report = ConsistencyReport(consistent=m <= tol, max_offdiag=m, tol=tol)
    if not report.consistent:
        raise InconsistentFamily(
            f"family fails consistency: max off-diagonal {m:.3e} > {tol}"
        )
    return WeightTable(entries=tuple(zip(hs, w.tolist())), report=report)


def conditional(
    fam: HistoryFamily,
    condition_time: int,
    condition_index: int,
    query_time: int,
    query_index: int,
    tol: float = CONSISTENCY_TOL,
) -> float:
    """P(query at query_time | condition at condition_time) from the family's
    weight table."""
    table = enumerate_and_assign(fam, tol=tol)
    num = 0.0
    den = 0.0
    for h, w in table.entries:
        if h.projector_choice[condition_time] == condition_index:
            den += w
            if h.projector_choice[query_time] == query_index:
                num += w
    if den <= 1e-12:
        raise ZeroConditioningEvent(
            f"conditioning event (t-index {condition_time}, projector {condition_index}) has zero weight"
        )
    return num / den


# -- canonical wedge families --------------------------------------------------

INV_SQRT2 = 1.0 / math.sqrt(2.0)


def splitter_matrix(theta: float | None = None) -> np.ndarray:
    """Maps a0 -> cos(theta) c + sin(theta) d (columns are images of the t0
    basis); the default theta = pi/4 is the symmetric wedge."""
    th = math.pi / 4 if theta is None else theta
    return np.array(
        [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]], dtype=complex
    )


def crossing_matrix() -> np.ndarray:
    """Relabeling across the crossing region: c -> f, d -> e with t4 basis
    ordered (e, f)."""
    return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


PATH_TIME_LABELS = (
    ("a0", "a0_perp"),
    ("c", "d"),
    ("c", "d"),
    ("c", "d"),
    ("e", "f"),
)


def path_family(
    unitaries=None,
    times=(0.0, 1.0, 2.0, 3.0, 4.0),
    theta: float | None = None,
    final_decomposition=None,
    grid_tol: float = MATRIX_TOL,
) -> HistoryFamily:
    """2-dim path family: splitter, two free legs, crossing relabel; rank-1
    path projectors at every time, [a0] plus complement at t0."""
    if unitaries is None:
        eye = np.eye(2, dtype=complex)
        unitaries = (splitter_matrix(theta), eye, eye, crossing_matrix())
    grid = TimeGrid(times, unitaries, tol=grid_tol)
    decs = [basis_decomposition(labels) for labels in PATH_TIME_LABELS]
    if final_decomposition is not None:
        decs[-1] = tuple(final_decomposition)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    return HistoryFamily(grid, decs, psi0)


def superposition_final_family(times=(0.0, 1.0, 2.0, 3.0, 4.0)) -> HistoryFamily:
    """Negative control: keep path projectors through t3 but read the final
    time in the superposition basis {(e+f)/sqrt2, (e-f)/sqrt2}; with the
    non-trivial crossing leg this family is grossly inconsistent."""
    final = (
        projector_from_vector([INV_SQRT2, INV_SQRT2], "e+f"),
        projector_from_vector([INV_SQRT2, -INV_SQRT2], "e-f"),
    )
    return path_family(times=times, final_decomposition=final)


DETECTOR_TIME_LABELS = (
    ("a0 D", "a0 D*", "a0_perp D", "a0_perp D*"),
    ("c D", "c D*", "d D", "d D*"),
    ("c D", "c D*", "d D", "d D*"),
    ("c D", "c D*", "d D", "d D*"),
    ("e D", "e D*", "f D", "f D*"),
)


def detector_family(times=(0.0, 1.0, 2.0, 3.0, 4.0)) -> HistoryFamily:
    """4-dim family on path (x) pointer: the t1 -> t2 leg flips the pointer
    on the d branch (D <-> D*), all other legs leave it alone."""
    eye2 = np.eye(2, dtype=complex)
    flip = crossing_matrix()  # also the X on the pointer
    pc = np.diag([1.0, 0.0]).astype(complex)
    pd = np.diag([0.0, 1.0]).astype(complex)
    u01 = np.kron(splitter_matrix(), eye2)
    u12 = np.kron(pc, eye2) + np.kron(pd, flip)
    u23 = np.eye(4, dtype=complex)
    u34 = np.kron(crossing_matrix(), eye2)
    grid = TimeGrid(times, (u01, u12, u23, u34))
    decs = [basis_decomposition(labels) for labels in DETECTOR_TIME_LABELS]
    psi0 = np.zeros(4, dtype=complex)
    psi0[0] = 1.0  # a0 (x) D
    return HistoryFamily(grid, decs, psi0)


def named_path_histories(fam: HistoryFamily) -> dict:
    """The four named path histories Y_xy (x = path at t1..t3, y = exit)."""
    out = {}
    for path_label, path_idx in (("c", 0), ("d", 1)):
        for exit_label, exit_idx in (("e", 0), ("f", 1)):
            out[f"Y_{path_label}{exit_label}"] = History(
                (0, path_idx, path_idx, path_idx, exit_idx)
            )
    return out


def named_weights(fam: HistoryFamily) -> dict:
    return {name: weight(fam, h) for name, h in named_path_histories(fam).items()}


# -- config-file loading -------------------------------------------------------


def family_from_config(obj) -> HistoryFamily:
    """Inline family schema: times, unitaries (row-major [re, im] pairs),
    initial_state ([re, im] pairs), and per-time decompositions given as
    labeled canonical-basis index sets."""
    if not isinstance(obj, dict):
        raise ConfigError("family spec must be an object")
    unknown = set(obj) - {"times", "unitaries", "initial_state", "decompositions"}
    if unknown:
        raise ConfigError(f"unknown key(s) in family spec: {sorted(unknown)}")
    try:
        times = [float(t) for t in obj["times"]]
        unitaries = [
            np.array([[complex(re, im) for re, im in row] for row in u])
            for u in obj["unitaries"]
        ]
        psi0 = np.array([complex(re, im) for re, im in obj["initial_state"]])
        dim = len(psi0)
        decs = []
        for block in obj["decompositions"]:
            dec = []
            for proj in block:
                dec.append(
                    projector_from_indices(
                        dim, [int(i) for i in proj["basis"]], str(proj["label"])
                    )
                )
            decs.append(tuple(dec))
        grid = TimeGrid(times, unitaries)
        return HistoryFamily(grid, decs, psi0)
    except InconsistentFamily:
        raise
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad family spec: {exc}") from exc
