/** Markup builders. Pure string functions so tests run without a DOM; every
 * number placed into markup goes through exact() and therefore matches the
 * API's own serialization byte for byte. */
import { exact, formatGroups } from "./format.js";
import type { PredictorPanel } from "./paths.js";
import { lambdaPositions, linearScale } from "./scales.js";
import type { SelectionState } from "./state.js";
import type { CvDoc, Markers, ModelDoc, Partition } from "./types.js";

export const PANEL_WIDTH = 320;
export const PANEL_HEIGHT = 180;

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function markerLines(
  markers: Markers,
  xs: number[],
  height: number,
): string {
  const parts: string[] = [];
  for (const [name, point] of Object.entries(markers)) {
    if (!point) continue;
    const x = xs[point.index];
    parts.push(
      `<line class="marker marker-${esc(name)}" x1="${x}" x2="${x}" y1="0" y2="${height}" ` +
        `stroke-dasharray="5,4" data-lambda="${exact(point.lambda)}"><title>${esc(name)} selected lambda = ${exact(point.lambda)}</title></line>`,
    );
  }
  return parts.join("");
}

function cursorLine(xs: number[], index: number, height: number): string {
  const x = xs[index];
  return `<line class="cursor" x1="${x}" x2="${x}" y1="0" y2="${height}"></line>`;
}

/** One SVG panel of coefficient paths for a single predictor. */
export function panelMarkup(
  panel: PredictorPanel,
  lambdas: number[],
  markers: Markers,
  cursorIndex: number,
  width = PANEL_WIDTH,
  height = PANEL_HEIGHT,
): string {
  const xs = lambdaPositions(lambdas, width);
  const toY = linearScale(panel.yMin, panel.yMax, height);
  const lines = panel.lines
    .map((line) => {
      const points = line.values
        .map((v, i) => `${xs[i]},${height - toY(v)}`)
        .join(" ");
      const label = `${line.classId} (n=${line.n})`;
      return (
        `<polyline class="path-line" data-class="${esc(line.classId)}" data-predictor="${esc(panel.predictor)}" ` +
        `fill="none" stroke="${line.color}" points="${points}">` +
        `<title>${esc(label)}</title></polyline>`
      );
    })
    .join("");
  const zeroTick = `<line class="zero-tick" x1="0" x2="0" y1="${height - 6}" y2="${height}"></line>`;
  return (
    `<figure class="panel" data-predictor="${esc(panel.predictor)}">` +
    `<figcaption>${esc(panel.predictor)}</figcaption>` +
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">` +
    zeroTick +
    lines +
    markerLines(markers, xs, height) +
    cursorLine(xs, cursorIndex, height) +
    `</svg></figure>`
  );
}

/** MAE-vs-lambda chart with the classic-pooled horizontal reference line. */
export function maeChartMarkup(
  cv: CvDoc,
  cursorIndex: number,
  width = 2 * PANEL_WIDTH,
  height = PANEL_HEIGHT,
): string {
  const xs = lambdaPositions(cv.lambdas, width);
  const values = cv.macro_mae.concat([cv.classic_pooled_macro_mae]);
  const toY = linearScale(Math.min(...values), Math.max(...values), height);
  const points = cv.macro_mae.map((v, i) => `${xs[i]},${height - toY(v)}`).join(" ");
  const refY = height - toY(cv.classic_pooled_macro_mae);
  const selX = xs[cv.selected.index];
  return (
    `<svg class="mae-chart" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">` +
    `<polyline class="mae-curve" fill="none" points="${points}"><title>CV macro MAE</title></polyline>` +
    `<line class="classic-ref" x1="0" x2="${width}" y1="${refY}" y2="${refY}" ` +
    `data-mae="${exact(cv.classic_pooled_macro_mae)}"><title>classic pooled MAE = ${exact(cv.classic_pooled_macro_mae)}</title></line>` +
    `<line class="marker marker-cv" x1="${selX}" x2="${selX}" y1="0" y2="${height}" stroke-dasharray="5,4"></line>` +
    cursorLine(xs, cursorIndex, height) +
    `</svg>`
  );
}

/** Which classes share each coefficient at the current lambda. */
export function partitionMarkup(partition: Partition): string {
  const rows = Object.entries(partition)
    .map(
      ([pred, groups]) =>
        `<tr><th>${esc(pred)}</th><td data-groups="${groups.length}">${esc(formatGroups(groups))}</td></tr>`,
    )
    .join("");
  return `<table class="partition"><tbody>${rows}</tbody></table>`;
}

/** Numeric readout at the slider position; every value is API-exact. */
export function readoutMarkup(state: SelectionState): string {
  const perClass = Object.entries(state.perClassMae)
    .map(
      ([cls, mae]) =>
        `<tr><th>${esc(cls)}</th><td class="num" data-field="cv-mae-${esc(cls)}">${exact(mae)}</td></tr>`,
    )
    .join("");
  return (
    `<dl class="readout">` +
    `<dt>lambda</dt><dd class="num" data-field="lambda">${exact(state.lambda)}</dd>` +
    `<dt>grid index</dt><dd class="num" data-field="index">${String(state.index)}</dd>` +
    `<dt>CV macro MAE</dt><dd class="num" data-field="macro-mae">${exact(state.macroMae)}</dd>` +
    `</dl>` +
    `<table class="per-class-mae"><tbody>${perClass}</tbody></table>`
  );
}

/** Coefficient table for the committed/selected model document. */
export function modelTableMarkup(model: ModelDoc, scale: "standardized" | "raw"): string {
  const rows = model.classes
    .map((cls) => {
      const coefs = scale === "raw" ? cls.coefficients_raw : cls.coefficients;
      const intercept = scale === "raw" ? cls.intercept_raw : cls.intercept;
      const cells = Object.entries(coefs)
        .map(
          ([pred, value]) =>
            `<td class="num" data-field="coef-${esc(cls.id)}-${esc(pred)}">${exact(value)}</td>`,
        )
        .join("");
      return (
        `<tr><th>${esc(cls.id)}</th>` +
        `<td class="num" data-field="intercept-${esc(cls.id)}">${exact(intercept)}</td>` +
        cells +
        `</tr>`
      );
    })
    .join("");
  return `<table class="model"><tbody>${rows}</tbody></table>`;
}

export function statusMarkup(state: SelectionState): string {
  if (state.error) {
    return `<div class="status error">commit failed: ${esc(state.error)}</div>`;
  }
  if (state.committed && state.writtenPath) {
    return `<div class="status ok">model exported to ${esc(state.writtenPath)}</div>`;
  }
  return `<div class="status idle">no selection committed</div>`;
}
