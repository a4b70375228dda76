/** Axis and slider mappings for the lambda grid. */

/**
 * Horizontal pixel position of every grid lambda.
 *
 * The grid contains an exact zero that a log axis cannot place, so index 0
 * gets a detached tick at x = 0 and the positive lambdas map log-linearly
 * onto [zeroGap, width].
 */
export function lambdaPositions(
  lambdas: number[],
  width: number,
  zeroGap = 30,
): number[] {
  const firstPositive = lambdas.findIndex((l) => l > 0);
  if (firstPositive < 0) {
    return lambdas.map(() => 0);
  }
  const lo = Math.log(lambdas[firstPositive]);
  const hi = Math.log(lambdas[lambdas.length - 1]);
  const span = hi - lo;
  return lambdas.map((l) => {
    if (l <= 0) return 0;
    if (span <= 0) return width;
    return zeroGap + ((width - zeroGap) * (Math.log(l) - lo)) / span;
  });
}

/** Linear value -> pixel scale with a small padding band. */
export function linearScale(
  min: number,
  max: number,
  size: number,
  pad = 0.06,
): (v: number) => number {
  const spread = max - min || 1;
  const lo = min - pad * spread;
  const hi = max + pad * spread;
  return (v: number) => ((v - lo) / (hi - lo)) * size;
}

/**
 * Slider positions map bijectively onto grid indices: the slider is integer
 * valued over [0, count-1]; parsing clamps and rounds defensively.
 */
export function sliderToIndex(value: string | number, count: number): number {
  const n = Math.round(Number(value));
  if (!Number.isFinite(n)) return 0;
  return Math.min(Math.max(n, 0), count - 1);
}

export function indexToSlider(index: number): number {
  return index;
}
