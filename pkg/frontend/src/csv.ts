/**
 * Minimal CSV reader for the simulator's output files.
 *
 * The producer writes plain comma-separated numeric/label columns with a
 * single header row and no quoting, so parsing stays trivial — but headers
 * are validated strictly so a schema drift aborts instead of rendering
 * garbage.
 */

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  for (const r of rows) {
    if (r.length !== header.length) {
      throw new SchemaError(
        `ragged CSV row: expected ${header.length} fields, got ${r.length}`,
      );
    }
  }
  return { header, rows };
}

export function requireColumns(table: Table, expected: string[], what: string): Map<string, number> {
  const index = new Map<string, number>();
  table.header.forEach((name, i) => index.set(name, i));
  for (const name of expected) {
    if (!index.has(name)) {
      throw new SchemaError(
        `${what}: missing column "${name}" (header: ${table.header.join(",")})`,
      );
    }
  }
  return index;
}

export function num(value: string, what: string): number {
  const v = Number(value);
  if (!Number.isFinite(v)) {
    throw new SchemaError(`${what}: not a finite number: "${value}"`);
  }
  return v;
}
