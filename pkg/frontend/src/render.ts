#!/usr/bin/env node
/**
 * render --kind trajectories|weights|nonlocal-flips --in DIR --out FILE
 *
 * Turns the simulator's CSV/JSON output directory into an SVG figure.
 * Figures are pure functions of the input files; a schema mismatch aborts
 * with a nonzero exit.
 */

import { existsSync, mkdirSync, readdirSync, writeFileSync } from "fs";
import path from "path";

import { SchemaError } from "./csv.js";
import {
  loadHistoriesSummary,
  loadPacketCircles,
  loadPairs,
  loadTrajectories,
} from "./data.js";
import {
  buildFlipsFigure,
  buildTrajectoriesFigure,
  buildWeightsFigure,
} from "./figures.js";

const KINDS = ["trajectories", "weights", "nonlocal-flips"] as const;
type Kind = (typeof KINDS)[number];

interface Args {
  kind: Kind;
  inDir: string;
  outFile: string;
}

export function parseArgs(argv: string[]): Args {
  let kind: string | undefined;
  let inDir: string | undefined;
  let outFile: string | undefined;
  const rest = argv[0] === "render" ? argv.slice(1) : argv;
  for (let i = 0; i < rest.length; i++) {
    const a = rest[i];
    if (a === "--kind") kind = rest[++i];
    else if (a === "--in") inDir = rest[++i];
    else if (a === "--out") outFile = rest[++i];
    else throw new Error(`unknown argument: ${a}`);
  }
  if (!kind || !inDir || !outFile) {
    throw new Error("usage: render --kind KIND --in DIR --out FILE");
  }
  if (!(KINDS as readonly string[]).includes(kind)) {
    throw new Error(`unknown kind "${kind}" (expected ${KINDS.join("|")})`);
  }
  return { kind: kind as Kind, inDir, outFile };
}

function pickTrajectoryFile(dir: string): string {
  for (const name of ["bohm_trajectories.csv", "detector_trajectories.csv"]) {
    if (existsSync(path.join(dir, name))) return path.join(dir, name);
  }
  throw new SchemaError(
    `no trajectory CSV in ${dir} (have: ${readdirSync(dir).join(", ")})`,
  );
}

function summaryFor(trajFile: string): string {
  return trajFile.endsWith("detector_trajectories.csv")
    ? trajFile.replace("detector_trajectories.csv", "detector_summary.json")
    : trajFile.replace("bohm_trajectories.csv", "bohm_summary.json");
}

export function render(args: Args): void {
  let svg: string;
  if (args.kind === "trajectories") {
    const trajFile = pickTrajectoryFile(args.inDir);
    const paths = loadTrajectories(trajFile);
    const circles = loadPacketCircles(summaryFor(trajFile));
    svg = buildTrajectoriesFigure(paths, circles).svg;
  } else if (args.kind === "weights") {
    const summary = loadHistoriesSummary(path.join(args.inDir, "histories_summary.json"));
    svg = buildWeightsFigure(summary).svg;
  } else {
    const pairs = loadPairs(path.join(args.inDir, "nonlocal_pairs.csv"));
    svg = buildFlipsFigure(pairs).svg;
  }
  mkdirSync(path.dirname(path.resolve(args.outFile)), { recursive: true });
  writeFileSync(args.outFile, svg);
}

export function main(argv: string[]): number {
  try {
    render(parseArgs(argv));
    return 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
