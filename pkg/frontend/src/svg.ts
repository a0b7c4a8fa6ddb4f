/**
 * Deterministic hand-rolled SVG: fixed-precision coordinates, no wall-clock
 * metadata, attribute order fixed by construction, so identical inputs give
 * byte-identical files.
 */

export interface Box {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export class Scale {
  constructor(
    readonly box: Box,
    readonly width: number,
    readonly height: number,
    readonly margin: number,
  ) {}

  sx(x: number): number {
    const { x0, x1 } = this.box;
    return this.margin + ((x - x0) / (x1 - x0)) * (this.width - 2 * this.margin);
  }

  sy(y: number): number {
    const { y0, y1 } = this.box;
    // SVG y grows downward
    return this.height - this.margin - ((y - y0) / (y1 - y0)) * (this.height - 2 * this.margin);
  }
}

export function fmt(v: number): string {
  return v.toFixed(2);
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
      `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, stroke: string, fill = "none", width = 1, opacity = 1): void {
    const op = opacity < 1 ? ` opacity="${opacity}"` : "";
    this.parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" stroke="${stroke}" fill="${fill}" stroke-width="${width}"${op}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1, opacity = 1): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const op = opacity < 1 ? ` opacity="${opacity}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${op}/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string, stroke = "none"): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  text(x: number, y: number, s: string, size = 12, fill = "#222222", anchor = "start"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-family="Helvetica, Arial, sans-serif" font-size="${size}" fill="${fill}" text-anchor="${anchor}">${escapeXml(s)}</text>`,
    );
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function axes(doc: SvgDoc, scale: Scale, xLabel: string, yLabel: string): void {
  const { width, height, margin } = scale;
  doc.line(margin, height - margin, width - margin, height - margin, "#444444");
  doc.line(margin, margin, margin, height - margin, "#444444");
  doc.text(width - margin, height - margin + 16, xLabel, 11, "#444444", "end");
  doc.text(margin - 4, margin - 6, yLabel, 11, "#444444");
}
