/** Selection state derived from the API documents at one grid index. */
import type { CvDoc, Partition, PathDoc, SelectResponse } from "./types.js";

export interface SelectionState {
  index: number;
  lambda: number; // always a grid member
  partition: Partition;
  perClassMae: Record<string, number | null>;
  macroMae: number;
  committed: boolean;
  writtenPath: string | null;
  error: string | null;
}

export function stateAt(path: PathDoc, cv: CvDoc, index: number): SelectionState {
  const perClassMae: Record<string, number | null> = {};
  for (const cls of path.classes) {
    const curve = cv.per_class_mae[cls.id];
    perClassMae[cls.id] = curve ? curve[index] : null;
  }
  return {
    index,
    lambda: path.lambdas[index],
    partition: path.fusion[index],
    perClassMae,
    macroMae: cv.macro_mae[index],
    committed: false,
    writtenPath: null,
    error: null,
  };
}

/** Nearest grid index to a requested lambda; equidistant snaps upward. */
export function snapIndex(lambdas: number[], lambda: number): number {
  let best = 0;
  let bestDiff = Infinity;
  lambdas.forEach((l, i) => {
    const diff = Math.abs(l - lambda);
    if (diff < bestDiff || (diff === bestDiff && i > best)) {
      best = i;
      bestDiff = diff;
    }
  });
  return best;
}

export function applyCommitResult(
  state: SelectionState,
  result: SelectResponse,
): SelectionState {
  return { ...state, committed: true, writtenPath: result.written, error: null };
}

export function applyCommitError(state: SelectionState, err: unknown): SelectionState {
  const message = err instanceof Error ? err.message : String(err);
  return { ...state, committed: false, writtenPath: null, error: message };
}
