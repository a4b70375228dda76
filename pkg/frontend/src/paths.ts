/** Build drawable line series from the path document. */
import type { CoefficientScale, PathDoc } from "./types.js";

export interface LineSeries {
  classId: string;
  n: number;
  color: string;
  values: number[]; // one per grid lambda
}

export interface PredictorPanel {
  predictor: string;
  lines: LineSeries[];
  yMin: number;
  yMax: number;
}

/**
 * Classes arrive ordered largest to smallest; rank 0 renders dark purple and
 * the smallest class light yellow.
 */
export function classColor(rank: number, total: number): string {
  const t = total > 1 ? rank / (total - 1) : 0;
  const hue = 270 - 215 * t;
  const light = 32 + 28 * t;
  return `hsl(${Math.round(hue)}, 72%, ${Math.round(light)}%)`;
}

/**
 * One panel per predictor; a class contributes a line only when the API
 * exported a series for it (masked availability draws nothing).
 */
export function buildPanels(doc: PathDoc, scale: CoefficientScale): PredictorPanel[] {
  const source = scale === "raw" ? doc.coefficients_raw : doc.coefficients;
  const total = doc.classes.length;
  return doc.predictors.map((predictor) => {
    const lines: LineSeries[] = [];
    doc.classes.forEach((cls, rank) => {
      const series = source[cls.id]?.[predictor];
      if (!series) return;
      lines.push({
        classId: cls.id,
        n: cls.n,
        color: classColor(rank, total),
        values: series,
      });
    });
    const everything = lines.flatMap((l) => l.values);
    const yMin = everything.length ? Math.min(...everything) : 0;
    const yMax = everything.length ? Math.max(...everything) : 1;
    return { predictor, lines, yMin, yMax };
  });
}
