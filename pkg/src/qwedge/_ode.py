"""Vectorized embedded Runge-Kutta 4(5) (Dormand-Prince) for trajectory bundles.

Integrates dy/dt = f(t, y) for a whole ensemble at once: state is an (n, d)
array with per-trajectory time and step size, so each trajectory satisfies
the local error bound independently while all arithmetic stays in numpy.  The
right-hand side reports a per-row validity mask (used for wavefunction-node
proximity); invalid stages reject the step and shrink it, and a step that
underflows 1e-12 freezes that trajectory as unresolved.

Checkpoints are landed on exactly (steps are clipped, times snapped), which
is how callers obtain snapshots without dense output.  Sign changes of a
designated coordinate between accepted steps are latched and the first
crossing time is refined by bisection on the cubic Hermite interpolant.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

# Dormand-Prince 5(4) tableau; stage 7 is f(t+h, y5) (FSAL) and feeds the
# embedded error estimate E = b5 - b4.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

H_MIN = 1e-12

STATUS_OK = 0
STATUS_UNDERFLOW = 1


@dataclass
class EnsembleIntegration:
    """Result bundle of `integrate_bundle`."""

    checkpoints: np.ndarray          # (m,) the times that were landed on
    snapshots: np.ndarray            # (n, m, d) state at each checkpoint
    status: np.ndarray               # (n,) STATUS_* codes
    crossed: np.ndarray              # (n,) bool, latched sign change of cross_coord
    cross_times: np.ndarray          # (n,) first crossing time (nan if none)
    paths: dict = field(default_factory=dict)  # row -> (times (k,), points (k, d))


def _hermite_eval(theta, y0, v0, y1, v1, h):
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2 * t3 - 3 * t2 + 1) * y0
        + (t3 - 2 * t2 + theta) * h * v0
        + (-2 * t3 + 3 * t2) * y1
        + (t3 - t2) * h * v1
    )


def _refine_crossings(t0, h, y0, v0, y1, v1):
    """First root of the Hermite cubic of one coordinate on [t0, t0+h],
    bisected to ~1e-10 absolute in time.  All arguments are per-row arrays."""
    lo = np.zeros_like(t0)
    hi = np.ones_like(t0)
    f_lo = y0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        f_mid = _hermite_eval(mid, y0, v0, y1, v1, h)
        take_left = f_lo * f_mid <= 0.0
        hi = np.where(take_left, mid, hi)
        lo = np.where(take_left, lo, mid)
        f_lo = np.where(take_left, f_lo, f_mid)
    return t0 + 0.5 * (lo + hi) * h


def integrate_bundle(
    f,
    t0: float,
    y0: np.ndarray,
    checkpoints,
    tol: float = 1e-8,
    max_step: float = 0.1,
    first_step: float = 1e-2,
    cross_coord: int | None = None,
    record_rows=(),
    max_iters: int = 500_000,
) -> EnsembleIntegration:
    """Advance every row of y0 from t0 through all `checkpoints` (sorted,
    strictly increasing, last one is the end time).

    f(t, y) -> (dydt, ok): t (m,), y (m, d); rows with ok == False make the
    step invalid for that trajectory.
    """
    y = np.array(y0, dtype=float)
    if y.ndim != 2:
        raise ValueError("y0 must be (n, d)")
    n, d = y.shape
    ck = np.asarray(checkpoints, dtype=float)
    if ck.ndim != 1 or len(ck) == 0 or np.any(np.diff(ck) <= 0) or ck[0] <= t0:
        raise ValueError("checkpoints must be strictly increasing and after t0")
    m = len(ck)

    t = np.full(n, float(t0))
    h = np.full(n, min(first_step, max_step, ck[0] - t0))
    ck_idx = np.zeros(n, dtype=np.int64)
    status = np.full(n, STATUS_OK, dtype=np.int8)
    finished = np.zeros(n, dtype=bool)
    crossed = np.zeros(n, dtype=bool)
    cross_times = np.full(n, np.nan)
    snapshots = np.full((n, m, d), np.nan)

    record_rows = sorted(int(r) for r in record_rows)
    is_recorded = np.zeros(n, dtype=bool)
    if record_rows:
        is_recorded[record_rows] = True
    paths = {r: ([float(t0)], [y[r].copy()]) for r in record_rows}

    iters = 0
    while True:
        active = ~finished & (status == STATUS_OK)
        if not active.any():
            break
        iters += 1
        if iters > max_iters:
            raise RuntimeError("integrator exceeded iteration budget")

        idx = np.flatnonzero(active)
        tt = t[idx]
        yy = y[idx]
        next_ck = ck[ck_idx[idx]]
        room = next_ck - tt
        hh = np.minimum(h[idx], room)
        hits_ck = hh >= room  # landing exactly on the checkpoint

        # Stage combinations accumulate left-to-right with elementwise ufuncs
        # only: BLAS reductions would make results depend on the batch size,
        # breaking bitwise reproducibility across PH_THREADS chunkings.
        K = np.empty((7, len(idx), d))
        ok = np.ones(len(idx), dtype=bool)
        v, ok_s = f(tt, yy)
        K[0] = v
        ok &= ok_s
        for s in range(1, 6):
            acc = _A[s][0] * K[0]
            for j in range(1, s):
                acc += _A[s][j] * K[j]
            v, ok_s = f(tt + _C[s] * hh, yy + hh[:, None] * acc)
            K[s] = v
            ok &= ok_s
        acc = _B5[0] * K[0]
        for j in range(1, 6):
            if _B5[j] != 0.0:
                acc += _B5[j] * K[j]
        y5 = yy + hh[:, None] * acc
        v, ok_s = f(tt + hh, y5)
        K[6] = v
        ok &= ok_s

        acc = _ERR[0] * K[0]
        for j in range(1, 7):
            if _ERR[j] != 0.0:
                acc += _ERR[j] * K[j]
        err = hh * np.max(np.abs(acc), axis=1)
        accept = ok & (err <= tol)

        # PI-free step controller, clipped growth/shrink.
        with np.errstate(divide="ignore", over="ignore"):
            factor = 0.9 * (tol / np.where(err > 0, err, 1e-300)) ** 0.2
        factor = np.clip(factor, 0.2, 5.0)
        factor = np.where(ok, factor, 0.25)

        new_h = hh * factor
        # A checkpoint-clipped accepted step must not throttle the controller.
        grown = np.where(hits_ck & accept, np.maximum(h[idx], new_h), new_h)
        h[idx] = np.minimum(np.where(accept, grown, new_h), max_step)

        dead = ~accept & (h[idx] < H_MIN)
        if dead.any():
            status[idx[dead]] = STATUS_UNDERFLOW

        acc = np.flatnonzero(accept)
        if len(acc) == 0:
            continue
        rows = idx[acc]

        if cross_coord is not None:
            s0 = yy[acc, cross_coord]
            s1 = y5[acc, cross_coord]
            now = (s0 * s1 < 0.0) & ~crossed[rows]
            if now.any():
                which = np.flatnonzero(now)
                tc = _refine_crossings(
                    tt[acc][which],
                    hh[acc][which],
                    s0[which],
                    K[0][acc, cross_coord][which],
                    s1[which],
                    K[6][acc, cross_coord][which],
                )
                cross_times[rows[which]] = tc
            crossed[rows] |= s0 * s1 < 0.0

        t_new = np.where(hits_ck[acc], ck[ck_idx[rows]], tt[acc] + hh[acc])
        t[rows] = t_new
        y[rows] = y5[acc]

        if record_rows:
            for j in np.flatnonzero(is_recorded[rows]):
                ts, ps = paths[int(rows[j])]
                ts.append(float(t_new[j]))
                ps.append(y5[acc[j]].copy())

        landed = np.flatnonzero(hits_ck[acc])
        if len(landed):
            lr = rows[landed]
            snapshots[lr, ck_idx[lr]] = y5[acc[landed]]
            ck_idx[lr] += 1
            finished[lr] = ck_idx[lr] >= m

    paths_out = {
        r: (np.array(ts), np.array(ps)) for r, (ts, ps) in paths.items()
    }
    return EnsembleIntegration(
        checkpoints=ck,
        snapshots=snapshots,
        status=status,
        crossed=crossed,
        cross_times=cross_times,
        paths=paths_out,
    )


def worker_count() -> int:
    """Worker cap from the PH_THREADS environment variable (default 1)."""
    try:
        k = int(os.environ.get("PH_THREADS", ""))
    except ValueError:
        k = 0
    return max(1, k)


def integrate_chunked(
    f,
    t0: float,
    y0: np.ndarray,
    checkpoints,
    tol: float,
    max_step: float,
    cross_coord: int | None = None,
    record_rows=(),
) -> EnsembleIntegration:
    """integrate_bundle over index chunks, optionally mapped across a thread
    pool capped by PH_THREADS.  Each trajectory's arithmetic is independent
    (per-row adaptive steps), so the chunked result is bitwise identical to
    the single-chunk one and is reduced in index order."""
    n = len(y0)
    workers = worker_count()
    record_rows = sorted(int(r) for r in record_rows)
    size = max(256, -(-n // workers))
    spans = [(lo, min(lo + size, n)) for lo in range(0, n, size)]

    def run(span):
        lo, hi = span
        rows = [r - lo for r in record_rows if lo <= r < hi]
        return integrate_bundle(
            f,
            t0,
            y0[lo:hi],
            checkpoints=checkpoints,
            tol=tol,
            max_step=max_step,
            cross_coord=cross_coord,
            record_rows=rows,
        )

    if workers == 1 or len(spans) == 1:
        parts = [run(s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, spans))

    paths = {}
    for (lo, _), part in zip(spans, parts):
        for r, tp in part.paths.items():
            paths[r + lo] = tp
    return EnsembleIntegration(
        checkpoints=parts[0].checkpoints,
        snapshots=np.concatenate([p.snapshots for p in parts], axis=0),
        status=np.concatenate([p.status for p in parts]),
        crossed=np.concatenate([p.crossed for p in parts]),
        cross_times=np.concatenate([p.cross_times for p in parts]),
        paths=paths,
    )
