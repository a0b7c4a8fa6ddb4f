/**
 * Figure builders. Pure functions of the loaded interface data: no physics
 * is recomputed here, and the trajectory builder also returns its polyline
 * data so tests (and downstream checks) can count plane crossings directly
 * on what was drawn.
 */

import {
  PacketCircle,
  PairRow,
  HistoriesSummary,
  TrajectoryPath,
} from "./data.js";
import { Box, Scale, SvgDoc, axes, fmt } from "./svg.js";

const UPPER_COLOR = "#c0392b"; // started above the plane
const LOWER_COLOR = "#2471a3"; // started below
const PLANE_COLOR = "#555555";

export interface FigureResult {
  svg: string;
  meta: Record<string, unknown>;
}

export interface TrajectoriesResult extends FigureResult {
  polylines: TrajectoryPath[];
  crossingCount: number;
}

function dataBox(paths: TrajectoryPath[], circles: PacketCircle[]): Box {
  let x0 = -1, x1 = 1, y0 = -1, y1 = 1;
  const take = (x: number, y: number, pad = 0) => {
    x0 = Math.min(x0, x - pad);
    x1 = Math.max(x1, x + pad);
    y0 = Math.min(y0, y - pad);
    y1 = Math.max(y1, y + pad);
  };
  for (const p of paths) for (const [x, y] of p.points) take(x, y);
  for (const c of circles) take(c.center[0], c.center[1], 2 * c.sigma);
  const padX = 0.05 * (x1 - x0);
  const padY = 0.05 * (y1 - y0);
  return { x0: x0 - padX, x1: x1 + padX, y0: y0 - padY, y1: y1 + padY };
}

export function countPlaneCrossings(points: Array<[number, number]>): number {
  let n = 0;
  for (let i = 1; i < points.length; i++) {
    if (points[i - 1][1] * points[i][1] < 0) n += 1;
  }
  return n;
}

export function buildTrajectoriesFigure(
  paths: TrajectoryPath[],
  circles: PacketCircle[],
): TrajectoriesResult {
  const width = 720;
  const height = 640;
  const doc = new SvgDoc(width, height);
  const scale = new Scale(dataBox(paths, circles), width, height, 48);

  axes(doc, scale, "x", "y");
  // symmetry plane and the crossing region J at the origin
  doc.line(scale.sx(scale.box.x0), scale.sy(0), scale.sx(scale.box.x1), scale.sy(0), PLANE_COLOR, 1, "6,4");
  doc.circle(scale.sx(0), scale.sy(0), 10, "#8e44ad", "none", 1.5);
  doc.text(scale.sx(0) + 12, scale.sy(0) - 8, "J", 13, "#8e44ad");

  for (const c of circles) {
    const r = Math.abs(scale.sx(c.center[0] + c.sigma) - scale.sx(c.center[0]));
    doc.circle(scale.sx(c.center[0]), scale.sy(c.center[1]), r, "#999999", "none", 1, 0.7);
    doc.text(scale.sx(c.center[0]) + r + 2, scale.sy(c.center[1]), `${c.label}@${trimNum(c.t)}`, 9, "#777777");
  }

  let crossings = 0;
  for (const p of paths) {
    crossings += countPlaneCrossings(p.points);
    const color = p.startSide >= 0 ? UPPER_COLOR : LOWER_COLOR;
    doc.polyline(p.points.map(([x, y]) => [scale.sx(x), scale.sy(y)]), color, 1, 0.55);
  }

  doc.text(48, 20, `trajectories: ${paths.length}`, 12);
  doc.text(48, 36, `plane crossings along drawn paths: ${crossings}`, 12);
  return {
    svg: doc.finish(),
    polylines: paths,
    crossingCount: crossings,
    meta: { trajectories: paths.length, crossings },
  };
}

function trimNum(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2).replace(/\.?0+$/, "");
}

export function buildWeightsFigure(summary: HistoriesSummary): FigureResult {
  const width = 640;
  const height = 420;
  const doc = new SvgDoc(width, height);
  const names = Object.keys(summary.weights).sort();
  const barW = 80;
  const gap = 40;
  const baseY = 300;
  const scaleH = 220;

  doc.text(40, 30, "history weights", 14);
  names.forEach((name, i) => {
    const w = summary.weights[name];
    const x = 60 + i * (barW + gap);
    const h = Math.max(0, w) * scaleH;
    doc.rect(x, baseY - h, barW, h, w > 1e-9 ? "#2e86c1" : "#d5d8dc", "#333333");
    doc.text(x + barW / 2, baseY + 18, name, 12, "#222222", "middle");
    doc.text(x + barW / 2, baseY - h - 6, w.toFixed(3), 11, "#222222", "middle");
  });

  const pathFam = summary.families.path;
  const control = summary.families.superposition_control;
  doc.text(40, 340, `family consistent: ${pathFam.consistent} (max off-diagonal ${exp(pathFam.max_offdiag)})`, 12);
  doc.text(40, 358, `superposition-basis control: consistent=${control.consistent} (max off-diagonal ${exp(control.max_offdiag)})`, 12);
  let y = 376;
  for (const [k, v] of Object.entries(pathFam.conditionals ?? {})) {
    doc.text(40, y, `${k} = ${v.toFixed(6)}`, 12);
    y += 16;
  }
  return { svg: doc.finish(), meta: { weights: summary.weights } };
}

function exp(v: number): string {
  return v === 0 ? "0" : v.toExponential(2);
}

export function buildFlipsFigure(pairs: PairRow[]): FigureResult {
  const width = 720;
  const height = 640;
  const doc = new SvgDoc(width, height);
  let box: Box = { x0: -1, x1: 1, y0: -1, y1: 1 };
  for (const p of pairs) {
    box = {
      x0: Math.min(box.x0, p.x0 - 0.5),
      x1: Math.max(box.x1, p.x0 + 0.5),
      y0: Math.min(box.y0, p.y0 - 0.5),
      y1: Math.max(box.y1, p.y0 + 0.5),
    };
  }
  const scale = new Scale(box, width, height, 48);
  axes(doc, scale, "x0", "y0");
  doc.line(scale.sx(box.x0), scale.sy(0), scale.sx(box.x1), scale.sy(0), PLANE_COLOR, 1, "6,4");

  let flips = 0;
  for (const p of pairs) {
    if (p.flipped) flips += 1;
    doc.circle(
      scale.sx(p.x0),
      scale.sy(p.y0),
      2.4,
      "none",
      p.flipped ? "#c0392b" : "#b3b6b7",
      1,
      0.85,
    );
  }
  doc.text(48, 20, `paired initial conditions: ${pairs.length}`, 12);
  doc.text(48, 36, `exit flips with detector present: ${flips}`, 12);
  doc.circle(60, 52, 4, "none", "#c0392b");
  doc.text(70, 56, "flipped", 11);
  doc.circle(140, 52, 4, "none", "#b3b6b7");
  doc.text(150, 56, "unchanged", 11);
  return { svg: doc.finish(), meta: { pairs: pairs.length, flips } };
}
