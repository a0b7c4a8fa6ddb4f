/** Typed loaders for the simulator's CSV/JSON interface files. */

import { readFileSync, existsSync } from "fs";
import path from "path";

import { SchemaError, num, parseCsv, requireColumns } from "./csv.js";

export interface TrajectoryPath {
  id: number;
  startSide: 1 | -1 | 0; // sign of y at the first sample
  points: Array<[number, number]>; // (x, y), time-ordered
  pointer?: number[]; // pointer coordinate when present
}

export interface PacketCircle {
  t: number;
  label: string;
  center: [number, number];
  sigma: number;
}

export interface PairRow {
  id: number;
  x0: number;
  y0: number;
  exitWithout: string;
  exitWith: string;
  pathLabel: string;
  flipped: boolean;
}

export function loadTrajectories(file: string): TrajectoryPath[] {
  const table = parseCsv(readFileSync(file, "utf8"));
  const ix = requireColumns(table, ["traj_id", "t", "x", "y"], path.basename(file));
  const hasPointer = table.header.includes("pointer_y");
  const ip = table.header.indexOf("pointer_y");
  const byId = new Map<number, TrajectoryPath>();
  for (const row of table.rows) {
    const id = num(row[ix.get("traj_id")!], "traj_id");
    let tp = byId.get(id);
    if (!tp) {
      tp = { id, startSide: 0, points: [], pointer: hasPointer ? [] : undefined };
      byId.set(id, tp);
    }
    tp.points.push([num(row[ix.get("x")!], "x"), num(row[ix.get("y")!], "y")]);
    if (hasPointer) tp.pointer!.push(num(row[ip], "pointer_y"));
  }
  const out = [...byId.values()];
  out.sort((a, b) => a.id - b.id);
  for (const tp of out) {
    const y0 = tp.points[0][1];
    tp.startSide = y0 > 0 ? 1 : y0 < 0 ? -1 : 0;
  }
  return out;
}

export function loadPairs(file: string): PairRow[] {
  const table = parseCsv(readFileSync(file, "utf8"));
  const ix = requireColumns(
    table,
    ["traj_id", "x0", "y0", "exit_without", "exit_with", "path_label", "flipped"],
    path.basename(file),
  );
  return table.rows.map((row) => ({
    id: num(row[ix.get("traj_id")!], "traj_id"),
    x0: num(row[ix.get("x0")!], "x0"),
    y0: num(row[ix.get("y0")!], "y0"),
    exitWithout: row[ix.get("exit_without")!],
    exitWith: row[ix.get("exit_with")!],
    pathLabel: row[ix.get("path_label")!],
    flipped: row[ix.get("flipped")!] === "true",
  }));
}

export interface HistoriesSummary {
  weights: Record<string, number>;
  families: {
    path: { consistent: boolean; max_offdiag: number; conditionals?: Record<string, number> };
    detector: { nonzero?: Array<{ history: string; weight: number }> };
    superposition_control: { consistent: boolean; max_offdiag: number };
  };
}

export function loadHistoriesSummary(file: string): HistoriesSummary {
  const obj = JSON.parse(readFileSync(file, "utf8"));
  if (!obj.weights || !obj.families) {
    throw new SchemaError(`${path.basename(file)}: not a histories summary`);
  }
  return obj as HistoriesSummary;
}

export function loadPacketCircles(summaryFile: string): PacketCircle[] {
  if (!existsSync(summaryFile)) return [];
  const obj = JSON.parse(readFileSync(summaryFile, "utf8"));
  const snaps = obj.packet_snapshots;
  if (!snaps) return [];
  const out: PacketCircle[] = [];
  for (const t of Object.keys(snaps).sort((a, b) => Number(a) - Number(b))) {
    for (const label of Object.keys(snaps[t]).sort()) {
      const entry = snaps[t][label];
      out.push({
        t: Number(t),
        label,
        center: [entry.center[0], entry.center[1]],
        sigma: entry.sigma,
      });
    }
  }
  return out;
}
