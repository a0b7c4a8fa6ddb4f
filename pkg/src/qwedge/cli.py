"""Scenario runner: loads a JSON config, dispatches one of the four
experiment types, and writes machine-readable JSON/CSV results.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure (e.g. an
inconsistent family refusing probabilities).  All outputs are deterministic
for a fixed (config, n, seed): no timestamps, shortest-roundtrip float
formatting, index-ordered rows.  PH_THREADS caps worker parallelism of the
trajectory integrators without changing any numbers.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bohm, bridge, config, detector
from . import histories as hi
from . import packets as pk
from .bohm import Channel
from .errors import (
    BasisNotOrthogonal,
    BranchesNotSeparated,
    ConfigError,
    InconsistentFamily,
    QwedgeError,
)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _matrix_pairs(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _check(name: str, passed: bool, value, threshold=None) -> dict:
    entry = {"name": name, "passed": bool(passed), "value": value}
    if threshold is not None:
        entry["threshold"] = threshold
    return entry


def _config_echo(scenario: config.ScenarioConfig) -> dict:
    d = scenario.to_dict()
    d.pop("output", None)  # keeps summaries byte-identical across out dirs
    return d


def _packet_snapshots(scenario: config.ScenarioConfig) -> dict:
    out = {}
    for basis in bridge.scenario_bases(scenario):
        snap = {}
        for label, packet in basis.entries:
            ev = pk.evolve_packet(packet, basis.t)
            snap[label] = {
                "center": [float(ev.center[0]), float(ev.center[1])],
                "sigma": float(ev.sigma_t),
            }
        out[repr(float(basis.t))] = snap
    return out


# -- subcommands ---------------------------------------------------------------


def _run_bohm(scenario: config.ScenarioConfig, out: Path) -> int:
    ens = scenario.ensemble
    res = bohm.run_ensemble(scenario, ens.n, ens.seed)
    n = ens.n
    trajs = res.trajectories

    resolved = [t for t in trajs if t.exit_channel != Channel.UNRESOLVED]
    crossed_resolved = sum(t.crossed_symmetry_plane for t in resolved)
    e_above = all(t.points[0][1] > 0 for t in trajs if t.exit_channel == Channel.E)
    f_below = all(t.points[0][1] < 0 for t in trajs if t.exit_channel == Channel.F)
    p_e = res.counts["E"] / n
    unresolved_frac = res.counts["UNRESOLVED"] / n

    rows = []
    for i, t in enumerate(trajs):
        label = ""
        if len(t.times) >= 2 and t.times[1] == scenario.t2:
            label = "C" if t.points[1][1] > 0 else "D"
        rows.append(
            (
                i,
                t.points[0][0],
                t.points[0][1],
                t.exit_channel.value,
                None,
                label,
                t.crossed_symmetry_plane,
            )
        )
    _write_csv(
        out / "bohm_records.csv",
        ["traj_id", "x0", "y0", "exit", "triggered", "path_label", "crossed_plane"],
        rows,
    )

    # densely recorded paths for the plotting component
    path_rows = []
    for r in sorted(res.paths or {}):
        ts, ps = res.paths[r]
        for k in range(len(ts)):
            path_rows.append((r, ts[k], ps[k][0], ps[k][1]))
    _write_csv(out / "bohm_trajectories.csv", ["traj_id", "t", "x", "y"], path_rows)

    # 4-sigma binomial band around 1/2; equals the 0.02 acceptance band at n = 1e4
    split_band = 2.0 / np.sqrt(n)
    checks = [
        _check("no_resolved_trajectory_crosses_plane", crossed_resolved == 0, crossed_resolved, 0),
        _check("channel_split_near_half", abs(p_e - 0.5) <= split_band, p_e, f"0.5 +/- {split_band:.4g}"),
        _check("e_exits_started_above_plane", e_above, e_above),
        _check("f_exits_started_below_plane", f_below, f_below),
        _check("unresolved_fraction_below_0.1_percent", unresolved_frac < 1e-3, unresolved_frac, 1e-3),
    ]
    summary = {
        "subcommand": "bohm",
        "n": n,
        "seed": ens.seed,
        "counts": res.counts,
        "p_e": p_e,
        "crossed_resolved": int(crossed_resolved),
        "unresolved_fraction": unresolved_frac,
        "crossing_time_nominal": scenario.crossing_time,
        "packet_snapshots": _packet_snapshots(scenario),
        "config": _config_echo(scenario),
        "paper_checks": checks,
    }
    _write_json(out / "bohm_summary.json", summary)
    return 0


def _run_detector(scenario: config.ScenarioConfig, out: Path) -> int:
    if not scenario.detector.enabled:
        raise ConfigError("detector subcommand requires detector.enabled = true")
    ens = scenario.ensemble
    det = scenario.detector
    res = detector.run_detector_ensemble(scenario, ens.n, ens.seed)
    report = detector.nonlocal_influence_report(scenario, scenario, ens.n, ens.seed)

    rows = []
    for i, r in enumerate(res.records):
        rows.append(
            (
                i,
                r.electron_start[0],
                r.electron_start[1],
                r.pointer_start,
                r.exit_channel.value,
                r.triggered,
                r.electron_path_label.value if r.electron_path_label else "",
                r.crossed_plane,
            )
        )
    _write_csv(
        out / "detector_records.csv",
        ["traj_id", "x0", "y0", "pointer0", "exit", "triggered", "path_label", "crossed_plane"],
        rows,
    )

    path_rows = []
    for r in sorted(res.paths):
        ts, ps = res.paths[r]
        for k in range(len(ts)):
            path_rows.append((r, ts[k], ps[k][0], ps[k][1], ps[k][2]))
    _write_csv(
        out / "detector_trajectories.csv",
        ["traj_id", "t", "x", "y", "pointer_y"],
        path_rows,
    )

    pair_rows = []
    for p in report.rows:
        pair_rows.append(
            (
                p.index,
                p.electron_start[0],
                p.electron_start[1],
                p.pointer_start,
                p.exit_without.value,
                p.exit_with.value,
                p.path_label.value if p.path_label else "",
                p.triggered_with,
                p.flipped,
            )
        )
    _write_csv(
        out / "nonlocal_pairs.csv",
        ["traj_id", "x0", "y0", "pointer0", "exit_without", "exit_with", "path_label", "triggered_with", "flipped"],
        pair_rows,
    )

    recs = res.records
    resolved_recs = [r for r in recs if r.exit_channel != Channel.UNRESOLVED]
    unresolved_frac = 1.0 - len(resolved_recs) / len(recs)
    c_recs = [
        r for r in resolved_recs if r.electron_path_label == detector.PathLabel.C_PATH
    ]
    d_recs = [
        r for r in resolved_recs if r.electron_path_label == detector.PathLabel.D_PATH
    ]
    c_straight = sum(
        r.exit_channel == Channel.F and not r.triggered for r in c_recs
    )
    d_straight = sum(r.exit_channel == Channel.E and r.triggered for r in d_recs)
    remote = sum(
        r.electron_path_label == detector.PathLabel.C_PATH
        and r.triggered
        and r.exit_channel == Channel.E
        for r in resolved_recs
    )
    ov = abs(
        detector.pointer_overlap(
            res.state_after.branches[0][2], res.state_after.branches[1][2], scenario.t4
        )
    )
    strong = ov < 1e-10
    norm_t4 = res.state_after.norm(scenario.t4)

    checks = [
        _check("branch_state_norm_conserved", abs(norm_t4 - 1.0) < 1e-8, norm_t4, "1 +/- 1e-8"),
        _check("unresolved_fraction_below_0.1_percent", unresolved_frac < 1e-3, unresolved_frac, 1e-3),
    ]
    if det.kick == 0:
        checks.append(_check("kick_zero_no_flips", report.counts["flips"] == 0, report.counts["flips"], 0))
    elif strong:
        checks.append(
            _check(
                "strong_kick_c_path_all_f_untriggered",
                c_straight == len(c_recs),
                f"{c_straight}/{len(c_recs)}",
            )
        )
        checks.append(
            _check(
                "strong_kick_d_path_all_e_triggered",
                d_straight == len(d_recs),
                f"{d_straight}/{len(d_recs)}",
            )
        )
        checks.append(
            _check(
                "strong_kick_all_c_path_flip",
                report.counts["c_path_flips"] == report.counts["c_path_total"],
                f"{report.counts['c_path_flips']}/{report.counts['c_path_total']}",
            )
        )
    else:
        checks.append(_check("remote_trigger_records_exist", remote > 0, remote, ">= 1"))

    threshold = scenario.trigger_threshold()
    summary = {
        "subcommand": "detector",
        "n": ens.n,
        "seed": ens.seed,
        "kick": det.kick,
        "t_int": det.t_int,
        "trigger_threshold": threshold if np.isfinite(threshold) else None,
        "pointer_overlap_mod": ov,
        "strong_decoherence_regime": strong,
        "counts": res.counts,
        "pattern": {
            "c_path_total": len(c_recs),
            "c_path_to_f_untriggered": int(c_straight),
            "d_path_total": len(d_recs),
            "d_path_to_e_triggered": int(d_straight),
            "remote_triggers": int(remote),
            "unresolved": len(recs) - len(resolved_recs),
        },
        "nonlocal": report.counts,
        "norm_final": norm_t4,
        "packet_snapshots": _packet_snapshots(scenario),
        "config": _config_echo(scenario),
        "paper_checks": checks,
    }
    _write_json(out / "detector_summary.json", summary)
    return 0


def _family_block(fam: hi.HistoryFamily, tol: float, conditionals: bool) -> dict:
    rep = hi.check_consistency(fam, tol=tol)
    block = {
        "consistent": rep.consistent,
        "max_offdiag": rep.max_offdiag,
        "tol": tol,
    }
    if rep.consistent:
        table = hi.enumerate_and_assign(fam, tol=tol)
        block["total_weight"] = table.total()
        block["nonzero"] = [
            {"history": fam.label(h), "weight": w} for h, w in table.nonzero()
        ]
        if conditionals:
            block["conditionals"] = {
                "P(d@t2|e@t4)": hi.conditional(fam, 2, 1, 4, 0, tol=tol),
                "P(c@t2|f@t4)": hi.conditional(fam, 2, 0, 4, 1, tol=tol),
                "P(c@t2|e@t4)": hi.conditional(fam, 2, 0, 4, 0, tol=tol),
            }
    return block


def _weights_csv(out: Path, families: list) -> None:
    rows = []
    for fam_name, fam in families:
        table = hi.enumerate_and_assign(fam, tol=hi.CONSISTENCY_TOL)
        for h, w in table.entries:
            rows.append((fam_name, fam.label(h), w))
    _write_csv(out / "histories_weights.csv", ["family", "history", "weight"], rows)


def _run_histories(scenario: config.ScenarioConfig, out: Path) -> int:
    tol = scenario.histories.tol
    spec = scenario.histories.family
    summary = {"subcommand": "histories", "config": _config_echo(scenario)}
    if spec == "default-paper-family":
        fam = hi.path_family(times=scenario.times)
        det_fam = hi.detector_family(times=scenario.times)
        control = hi.superposition_final_family(times=scenario.times)
        weights = hi.named_weights(fam)
        path_block = _family_block(fam, tol, conditionals=True)
        det_block = _family_block(det_fam, tol, conditionals=False)
        control_rep = hi.check_consistency(control, tol=tol)
        cond = path_block["conditionals"]
        det_nonzero = det_block.get("nonzero", [])
        det_labels = sorted(e["history"] for e in det_nonzero)
        expected_det = sorted(
            [
                "a0 D > c D > c D > c D > f D",
                "a0 D > d D > d D* > d D* > e D*",
            ]
        )
        checks = [
            _check("weight_cf_is_half", abs(weights["Y_cf"] - 0.5) < 1e-12, weights["Y_cf"], 0.5),
            _check("weight_de_is_half", abs(weights["Y_de"] - 0.5) < 1e-12, weights["Y_de"], 0.5),
            _check("weight_ce_is_zero", abs(weights["Y_ce"]) < 1e-12, weights["Y_ce"], 0.0),
            _check("weight_df_is_zero", abs(weights["Y_df"]) < 1e-12, weights["Y_df"], 0.0),
            _check("family_consistent", path_block["consistent"], path_block["max_offdiag"], 1e-12),
            _check(
                "superposition_control_inconsistent",
                control_rep.max_offdiag > 0.1,
                control_rep.max_offdiag,
                "> 0.1",
            ),
            _check("conditional_d_given_e_is_one", abs(cond["P(d@t2|e@t4)"] - 1.0) < 1e-12, cond["P(d@t2|e@t4)"], 1.0),
            _check("conditional_c_given_f_is_one", abs(cond["P(c@t2|f@t4)"] - 1.0) < 1e-12, cond["P(c@t2|f@t4)"], 1.0),
            _check("conditional_c_given_e_is_zero", abs(cond["P(c@t2|e@t4)"]) < 1e-12, cond["P(c@t2|e@t4)"], 0.0),
            _check(
                "detector_family_two_nonzero_pattern",
                det_labels == expected_det
                and all(abs(e["weight"] - 0.5) < 1e-12 for e in det_nonzero),
                det_labels,
            ),
        ]
        summary.update(
            {
                "weights": weights,
                "families": {
                    "path": path_block,
                    "detector": det_block,
                    "superposition_control": {
                        "consistent": control_rep.consistent,
                        "max_offdiag": control_rep.max_offdiag,
                        "tol": tol,
                    },
                },
                "paper_checks": checks,
            }
        )
        _weights_csv(out, [("path", fam), ("detector", det_fam)])
    else:
        fam = hi.family_from_config(spec)
        block = _family_block(fam, tol, conditionals=False)
        summary.update({"family": block, "paper_checks": []})
        if not block["consistent"]:
            _write_json(out / "histories_summary.json", summary)
            raise InconsistentFamily(
                f"configured family fails consistency: max off-diagonal {block['max_offdiag']:.3e}"
            )
        _weights_csv(out, [("custom", fam)])
    _write_json(out / "histories_summary.json", summary)
    return 0


def _interval_blocks(intervals) -> list:
    return [
        {
            "name": iv.name,
            "interval": [iv.interval[0], iv.interval[1]],
            "defect": iv.defect,
            "deviation": iv.deviation,
            "passed": iv.passed,
            "effective": None if iv.effective is None else _matrix_pairs(iv.effective),
            "ideal": _matrix_pairs(iv.ideal),
        }
        for iv in intervals
    ]


def _run_bridge(scenario: config.ScenarioConfig, out: Path) -> int:
    rep = bridge.run_bridge(scenario)
    checks = [
        _check(
            f"interval_{iv.name}_matches_ideal",
            iv.passed,
            iv.deviation,
            rep.tol,
        )
        for iv in rep.intervals
    ]
    checks.extend(
        _check(
            f"detector_interval_{iv.name}_matches_ideal",
            iv.passed,
            iv.deviation,
            rep.tol,
        )
        for iv in rep.detector_intervals
    )
    checks.append(
        _check(
            "effective_weights_match_ideal",
            rep.weights_deviation <= rep.weights_tol,
            rep.weights_deviation,
            rep.weights_tol,
        )
    )
    checks.append(
        _check(
            "detector_effective_weights_match_ideal",
            rep.detector_weights_deviation <= rep.weights_tol,
            rep.detector_weights_deviation,
            rep.weights_tol,
        )
    )
    rows = [
        (section, iv.name, iv.interval[0], iv.interval[1], iv.defect, iv.deviation, iv.passed)
        for section, ivs in (("path", rep.intervals), ("detector", rep.detector_intervals))
        for iv in ivs
    ]
    _write_csv(
        out / "bridge_intervals.csv",
        ["section", "name", "t_a", "t_b", "defect", "deviation", "passed"],
        rows,
    )
    summary = {
        "subcommand": "bridge",
        "passed": rep.passed,
        "intervals": _interval_blocks(rep.intervals),
        "detector_intervals": _interval_blocks(rep.detector_intervals),
        "weights_ideal": rep.weights_ideal,
        "weights_effective": rep.weights_effective,
        "weights_deviation": rep.weights_deviation,
        "detector_weights_effective": rep.detector_weights_effective,
        "detector_weights_deviation": rep.detector_weights_deviation,
        "config": _config_echo(scenario),
        "paper_checks": checks,
    }
    _write_json(out / "bridge_summary.json", summary)
    if not rep.passed:
        raise QwedgeError(
            f"bridge validation failed (max weight deviation {rep.weights_deviation:.3e})"
        )
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qwedge",
        description="Wedge-and-mirrors interferometer runs: pilot-wave ensembles, "
        "detector coupling, history weights, and continuum/ideal bridging.",
    )
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, help_ in (
        ("bohm", "detector-free guidance-trajectory ensemble"),
        ("detector", "electron+pointer ensemble and nonlocal-influence report"),
        ("histories", "family weights, consistency check, conditionals"),
        ("bridge", "effective unitaries vs ideal matrices"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="JSON config path (defaults embedded)")
        p.add_argument("--n", type=int, default=None, help="ensemble size override")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--tol", type=float, default=None, help="integrator tolerance override")
    return ap


_DISPATCH = {
    "bohm": _run_bohm,
    "detector": _run_detector,
    "histories": _run_histories,
    "bridge": _run_bridge,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = config.load(args.config) if args.config else config.ScenarioConfig().validate()
        scenario = config.with_overrides(
            scenario, n=args.n, seed=args.seed, tol=args.tol, out_dir=args.out
        )
        out = Path(scenario.out_dir)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot prepare output directory: {exc}", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[args.subcommand](scenario, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InconsistentFamily, BasisNotOrthogonal, BranchesNotSeparated, QwedgeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
