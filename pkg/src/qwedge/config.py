"""Scenario configuration: one dataclass tree holding every physical and
numerical parameter of a run, JSON-loadable with all defaults embedded.

Default geometry (natural units): two width-1 packets start at t1 a distance
8 from the origin along the +/-45 degree arms, symmetric about the y = 0
plane, speed 5 aimed at the crossing region J at the origin.  Packet centers
meet J at t = 1.6, inside the (t3, t4) leg of the default time grid, and the
arrangement keeps |<c1|d1>| ~ 1e-18 while letting both packets fully cross
by t4.  The labeling time t2 sits early (packet centers still ~5 sigma off
the plane there) so that "which side at t2" identifies the branch even for
ensemble members a few sigma into a packet tail.  Times, widths and speeds
are conventions of this artifact, not measured quantities; everything is
overridable from the config file.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError
from .packets import GaussianPacket, Superposition

INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class DetectorSettings:
    enabled: bool = True
    kick: float = 10.0
    t_int: float = 0.1
    pointer_width: float = 1.0
    pointer_center: float = 0.0
    trigger_threshold: float | None = None  # None -> kick * (t4 - t_int) / 2


@dataclass(frozen=True)
class EnsembleSettings:
    n: int = 10_000
    seed: int = 7
    tol: float = 1e-8
    node_floor: float = 1e-30
    max_step: float = 0.1
    path_sample: int = 50  # trajectories with densely recorded paths


@dataclass(frozen=True)
class HistoriesSettings:
    family: Any = "default-paper-family"  # literal name or inline family dict
    tol: float = 1e-10


@dataclass(frozen=True)
class ScenarioConfig:
    sigma: float = 1.0
    c_center: tuple = (-8.0 * INV_SQRT2, 8.0 * INV_SQRT2)
    c_momentum: tuple = (5.0 * INV_SQRT2, -5.0 * INV_SQRT2)
    times: tuple = (-0.8, 0.0, 0.2, 1.2, 3.2)  # t0 .. t4
    detector: DetectorSettings = field(default_factory=DetectorSettings)
    ensemble: EnsembleSettings = field(default_factory=EnsembleSettings)
    histories: HistoriesSettings = field(default_factory=HistoriesSettings)
    out_dir: str = "out"

    # -- derived geometry -------------------------------------------------

    @property
    def t0(self) -> float:
        return self.times[0]

    @property
    def t1(self) -> float:
        return self.times[1]

    @property
    def t2(self) -> float:
        return self.times[2]

    @property
    def t3(self) -> float:
        return self.times[3]

    @property
    def t4(self) -> float:
        return self.times[4]

    def packet_c(self) -> GaussianPacket:
        """Upper-arm packet at t1 (the c path)."""
        return GaussianPacket(
            center=np.array(self.c_center),
            momentum=np.array(self.c_momentum),
            width=self.sigma,
            birth_time=self.t1,
        )

    def packet_d(self) -> GaussianPacket:
        """Lower-arm packet, exact mirror image of packet_c."""
        return self.packet_c().mirrored()

    def initial_superposition(self) -> Superposition:
        """(|c1> + |d1>)/sqrt(2) at t1."""
        a = INV_SQRT2
        return Superposition(terms=((a, self.packet_c()), (a, self.packet_d())))

    @property
    def crossing_time(self) -> float | None:
        """Time at which the packet centers reach the symmetry plane."""
        py = self.c_momentum[1]
        if py == 0:
            return None
        tc = self.t1 - self.c_center[1] / py
        return tc if tc > self.t1 else None

    def trigger_threshold(self) -> float:
        """Half the asymptotic pointer-branch separation; an uncoupled
        detector (kick = 0) can never register."""
        det = self.detector
        if det.trigger_threshold is not None:
            return det.trigger_threshold
        if det.kick == 0:
            return math.inf
        return 0.5 * det.kick * (self.t4 - det.t_int)

    # -- validation / (de)serialization -----------------------------------

    def validate(self) -> "ScenarioConfig":
        if not all(math.isfinite(v) for v in self.times) or len(self.times) != 5:
            raise ConfigError("times must be five finite values t0..t4")
        if any(b - a <= 0 for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("times must be strictly increasing")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigError("sigma must be a positive finite number")
        cc, cm = self.c_center, self.c_momentum
        if len(cc) != 2 or len(cm) != 2 or not all(
            math.isfinite(v) for v in (*cc, *cm)
        ):
            raise ConfigError("c_center and c_momentum must be finite 2-vectors")
        if cc[1] <= 0:
            raise ConfigError("c packet must start above the symmetry plane")
        det = self.detector
        if not (det.pointer_width > 0 and math.isfinite(det.pointer_width)):
            raise ConfigError("pointer_width must be positive")
        if not (self.t1 < det.t_int < self.t2):
            raise ConfigError("t_int must lie strictly inside (t1, t2)")
        if not math.isfinite(det.kick):
            raise ConfigError("kick must be finite")
        ens = self.ensemble
        if ens.n < 1:
            raise ConfigError("ensemble n must be >= 1")
        if ens.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not (0 < ens.tol < 1):
            raise ConfigError("tol must be in (0, 1)")
        if not (ens.max_step > 0):
            raise ConfigError("max_step must be positive")
        if ens.path_sample < 0:
            raise ConfigError("path_sample must be >= 0")
        if not (self.histories.tol > 0):
            raise ConfigError("histories tol must be positive")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["times"] = {f"t{i}": t for i, t in enumerate(self.times)}
        d["packets"] = {
            "sigma": d.pop("sigma"),
            "c_center": list(d.pop("c_center")),
            "c_momentum": list(d.pop("c_momentum")),
        }
        d["output"] = {"dir": d.pop("out_dir")}
        return d


def _take(block: Mapping, allowed: set, where: str) -> dict:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    return dict(block)


def from_dict(raw: Mapping) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a (possibly empty) mapping.
    Every field has a default, so {} runs the standard symmetric scenario."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config root must be a JSON object")
    top = _take(
        raw, {"packets", "times", "detector", "ensemble", "histories", "output"}, "config"
    )
    cfg = ScenarioConfig()

    pk = _take(top.get("packets", {}), {"sigma", "speed", "arm_length", "c_center", "c_momentum"}, "packets")
    sigma = float(pk.get("sigma", cfg.sigma))
    if "c_center" in pk or "c_momentum" in pk:
        c_center = tuple(float(v) for v in pk.get("c_center", cfg.c_center))
        c_momentum = tuple(float(v) for v in pk.get("c_momentum", cfg.c_momentum))
    else:
        arm = float(pk.get("arm_length", 8.0))
        speed = float(pk.get("speed", 5.0))
        c_center = (-arm * INV_SQRT2, arm * INV_SQRT2)
        c_momentum = (speed * INV_SQRT2, -speed * INV_SQRT2)

    tm = top.get("times", {})
    if isinstance(tm, Mapping):
        tm = _take(tm, {"t0", "t1", "t2", "t3", "t4"}, "times")
        times = tuple(float(tm.get(f"t{i}", cfg.times[i])) for i in range(5))
    else:
        times = tuple(float(v) for v in tm)
        if len(times) != 5:
            raise ConfigError("times list must have five entries t0..t4")

    det_raw = _take(
        top.get("detector", {}),
        {"enabled", "kick", "t_int", "pointer_width", "pointer_center", "trigger_threshold"},
        "detector",
    )
    det_def = DetectorSettings()
    detector = DetectorSettings(
        enabled=bool(det_raw.get("enabled", det_def.enabled)),
        kick=float(det_raw.get("kick", det_def.kick)),
        t_int=float(det_raw.get("t_int", det_def.t_int)),
        pointer_width=float(det_raw.get("pointer_width", det_def.pointer_width)),
        pointer_center=float(det_raw.get("pointer_center", det_def.pointer_center)),
        trigger_threshold=(
            None
            if det_raw.get("trigger_threshold") is None
            else float(det_raw["trigger_threshold"])
        ),
    )

    ens_raw = _take(
        top.get("ensemble", {}),
        {"n", "seed", "tol", "node_floor", "max_step", "path_sample"},
        "ensemble",
    )
    ens_def = EnsembleSettings()
    try:
        ensemble = EnsembleSettings(
            n=int(ens_raw.get("n", ens_def.n)),
            seed=int(ens_raw.get("seed", ens_def.seed)),
            tol=float(ens_raw.get("tol", ens_def.tol)),
            node_floor=float(ens_raw.get("node_floor", ens_def.node_floor)),
            max_step=float(ens_raw.get("max_step", ens_def.max_step)),
            path_sample=int(ens_raw.get("path_sample", ens_def.path_sample)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad ensemble block: {exc}") from exc

    hist_raw = _take(top.get("histories", {}), {"family", "tol"}, "histories")
    hist = HistoriesSettings(
        family=hist_raw.get("family", HistoriesSettings().family),
        tol=float(hist_raw.get("tol", HistoriesSettings().tol)),
    )

    out_raw = _take(top.get("output", {}), {"dir"}, "output")
    out_dir = str(out_raw.get("dir", cfg.out_dir))

    return ScenarioConfig(
        sigma=sigma,
        c_center=c_center,
        c_momentum=c_momentum,
        times=times,
        detector=detector,
        ensemble=ensemble,
        histories=hist,
        out_dir=out_dir,
    ).validate()


def load(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return from_dict(raw)


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    """Apply CLI-style overrides (n, seed, tol, out_dir); None means 'keep'."""
    ens = cfg.ensemble
    if kw.get("n") is not None:
        ens = replace(ens, n=int(kw["n"]))
    if kw.get("seed") is not None:
        ens = replace(ens, seed=int(kw["seed"]))
    if kw.get("tol") is not None:
        ens = replace(ens, tol=float(kw["tol"]))
    out_dir = kw.get("out_dir") or cfg.out_dir
    return replace(cfg, ensemble=ens, out_dir=out_dir).validate()
