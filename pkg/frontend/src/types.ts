/** Shapes of the JSON documents served by the fusedpool API. */

export interface ClassInfo {
  id: string;
  n: number;
}

export interface MarkerPoint {
  lambda: number;
  index: number;
}

export interface Markers {
  aic?: MarkerPoint;
  cv?: MarkerPoint;
}

/** Per predictor: groups of class ids whose coefficients coincide. */
export type Partition = Record<string, string[][]>;

export interface MetaDoc {
  schema: string;
  kind: string;
  classes: ClassInfo[];
  predictors: string[];
  availability: Record<string, string[]>;
  lambda_max: number;
  n: number;
  thresholds: number[] | null;
}

export interface PathDoc {
  schema: string;
  kind: string;
  lambda_max: number;
  lambdas: number[];
  classes: ClassInfo[];
  predictors: string[];
  coefficients: Record<string, Record<string, number[]>>;
  coefficients_raw: Record<string, Record<string, number[]>>;
  intercepts: Record<string, number[]>;
  df: number[];
  rss: number[];
  penalty: number[];
  fusion: Partition[];
  markers: Markers;
}

export interface CvDoc {
  schema: string;
  kind: string;
  k: number;
  seed: number;
  lambdas: number[];
  macro_mae: number[];
  micro_mae: number[];
  macro_mse: number[];
  micro_mse: number[];
  fold_macro_mae: number[][];
  per_class_mae: Record<string, Array<number | null>>;
  per_class_mae_at_selected: Record<string, number>;
  selected: MarkerPoint;
  classic_pooled_macro_mae: number;
  aic: {
    aic: number[];
    df: number[];
    sigma2: number[];
    selected: MarkerPoint;
  };
  flags: string[];
}

export interface ModelClass {
  id: string;
  n: number;
  intercept: number;
  intercept_raw: number;
  coefficients: Record<string, number>;
  coefficients_raw: Record<string, number>;
}

export interface ModelDoc {
  schema: string;
  kind: string;
  lambda: number;
  grid_index: number;
  lambda_max: number;
  df: number;
  rss: number;
  penalty: number;
  n: number;
  standardization: Record<string, { mean: number; scale: number }>;
  classes: ModelClass[];
  fusion: Partition;
}

export interface SelectResponse {
  schema: string;
  kind: string;
  written: string;
  lambda: number;
  index: number;
}

export type CoefficientScale = "standardized" | "raw";
