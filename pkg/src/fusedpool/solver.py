"""Grid solver for the fused multi-class least-squares problem.

The objective is  0.5 * sum_m ||y_m - X_m b_m||^2 + lam * ||D b||_1  with D
the pairwise coupling matrix.  We solve it by ADMM on the split z = D b with
a fixed penalty parameter, warm-starting down a log-linear lambda grid, and
recover the two spectrum endpoints (separate and new-pooled least squares)
exactly via normal equations.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .data import INTERCEPT, Dataset, StandardizationStats
from .fusion import CoefficientLayout, CouplingMatrix

logger = logging.getLogger(__name__)

Partition = Mapping[str, tuple[tuple[str, ...], ...]]


class ConvergenceError(RuntimeError):
    """ADMM failed to reach tolerance; carries the last iterate."""

    def __init__(
        self,
        message: str,
        *,
        lam: float,
        beta: np.ndarray | None = None,
        iterations: int = 0,
        primal_residual: float = math.nan,
        dual_residual: float = math.nan,
    ) -> None:
        super().__init__(message)
        self.lam = lam
        self.beta = beta
        self.iterations = iterations
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual


@dataclass(frozen=True)
class FitConfig:
    """Solver and grid settings."""

    grid_size: int = 100
    lambda_min_ratio: float = 1e-4
    admm_rho: float = 1.0
    tol_abs: float = 1e-8
    tol_rel: float = 1e-6
    max_iter: int = 50_000
    fuse_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.grid_size < 1:
            raise ValueError("grid_size must be positive")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")
        for name in ("admm_rho", "tol_abs", "tol_rel", "fuse_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass(frozen=True)
class FittedModel:
    """Joint coefficient vector with its layout (standardized scale)."""

    beta: np.ndarray
    layout: CoefficientLayout

    def slope(self, class_id: str, predictor: str) -> float:
        return float(self.beta[self.layout.index(class_id, predictor)])

    def intercept(self, class_id: str) -> float:
        return float(self.beta[self.layout.intercept_index(class_id)])

    def class_vector(self, class_id: str) -> np.ndarray:
        return self.beta[self.layout.class_slices[class_id]]

    def to_mapping(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for (c, name), value in zip(self.layout.entries, self.beta):
            out.setdefault(c, {})[name] = float(value)
        return out


@dataclass
class SolveResult:
    """One penalized solve: coefficients plus ADMM state for warm starts."""

    beta: np.ndarray
    z: np.ndarray
    u: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    lam: float


class _Workspace:
    """Factorizations shared across lambda values for one (data, D, rho)."""

    def __init__(self, dataset: Dataset, coupling: CouplingMatrix, rho: float) -> None:
        layout = coupling.layout
        d = layout.dim
        G = np.zeros((d, d))
        c = np.zeros(d)
        for class_id in dataset.class_ids:
            des = dataset.design(class_id)
            sl = layout.class_slices[class_id]
            G[sl, sl] += des.design.T @ des.design
            c[sl] += des.design.T @ des.response
        self.dataset = dataset
        self.coupling = coupling
        self.layout = layout
        self.rho = rho
        self.G = G
        self.c = c
        self.D = coupling.matrix
        if coupling.n_rows:
            M = G + rho * (self.D.T @ self.D).toarray()
        else:
            M = G.copy()
        self._pinv: np.ndarray | None = None
        try:
            self._chol = scipy.linalg.cho_factor(M)
        except scipy.linalg.LinAlgError:
            logger.warning("normal-equation system is singular; using pseudo-inverse solves")
            self._chol = None
            self._pinv = np.linalg.pinv(M)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._chol is not None:
            return scipy.linalg.cho_solve(self._chol, rhs)
        assert self._pinv is not None
        return self._pinv @ rhs

    def rss(self, beta: np.ndarray) -> float:
        total = 0.0
        for class_id in self.dataset.class_ids:
            des = self.dataset.design(class_id)
            r = des.response - des.design @ beta[self.layout.class_slices[class_id]]
            total += float(r @ r)
        return total


def _soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _separate_vector(dataset: Dataset, layout: CoefficientLayout) -> np.ndarray:
    beta = np.zeros(layout.dim)
    for class_id in dataset.class_ids:
        des = dataset.design(class_id)
        coef, _res, rank, _sv = np.linalg.lstsq(des.design, des.response, rcond=None)
        if rank < des.design.shape[1]:
            logger.warning(
                "class %s: rank-deficient design (rank %d of %d); minimum-norm solution used",
                class_id,
                rank,
                des.design.shape[1],
            )
        beta[layout.class_slices[class_id]] = coef
    return beta


def _admm(
    workspace: _Workspace, lam: float, config: FitConfig, warm: SolveResult | None
) -> SolveResult:
    D = workspace.D
    rows = D.shape[0]
    d = workspace.layout.dim
    if rows == 0 or lam == 0.0:
        beta = _separate_vector(workspace.dataset, workspace.layout)
        z = D @ beta if rows else np.zeros(0)
        return SolveResult(beta, z, np.zeros(rows), 0, 0.0, 0.0, lam)

    rho = workspace.rho
    if warm is not None:
        beta = warm.beta.copy()
        z = warm.z.copy()
        u = warm.u.copy()
    else:
        beta = workspace.solve(workspace.c)
        z = D @ beta
        u = np.zeros(rows)

    sqrt_rows = math.sqrt(rows)
    sqrt_d = math.sqrt(d)
    r_norm = s_norm = math.inf
    for k in range(1, config.max_iter + 1):
        rhs = workspace.c + rho * (D.T @ (z - u))
        beta = workspace.solve(rhs)
        Dbeta = D @ beta
        z_old = z
        z = _soft_threshold(Dbeta + u, lam / rho)
        u = u + Dbeta - z

        r_norm = float(np.linalg.norm(Dbeta - z))
        s_norm = rho * float(np.linalg.norm(D.T @ (z - z_old)))
        eps_pri = sqrt_rows * config.tol_abs + config.tol_rel * max(
            float(np.linalg.norm(Dbeta)), float(np.linalg.norm(z))
        )
        eps_dual = sqrt_d * config.tol_abs + config.tol_rel * rho * float(
            np.linalg.norm(D.T @ u)
        )
        if r_norm <= eps_pri and s_norm <= eps_dual:
            return SolveResult(beta, z, u, k, r_norm, s_norm, lam)
        # rho is fixed by design; imbalance is only logged, never acted on.
        if k % 5000 == 0 and (r_norm > 10 * s_norm or s_norm > 10 * r_norm):
            logger.debug(
                "lambda=%g iter=%d residual imbalance: primal=%g dual=%g", lam, k, r_norm, s_norm
            )

    raise ConvergenceError(
        f"ADMM did not converge at lambda={lam:g} within {config.max_iter} iterations "
        f"(primal {r_norm:g}, dual {s_norm:g})",
        lam=lam,
        beta=beta,
        iterations=config.max_iter,
        primal_residual=r_norm,
        dual_residual=s_norm,
    )


def solve_at(
    dataset: Dataset,
    coupling: CouplingMatrix,
    lam: float,
    config: FitConfig | None = None,
    warm: SolveResult | None = None,
) -> SolveResult:
    """Solve the penalized problem at one lambda.

    lambda 0 (or an empty coupling) reduces to per-class least squares and is
    solved exactly; otherwise ADMM runs to the configured tolerances.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    config = config or FitConfig()
    workspace = _Workspace(dataset, coupling, config.admm_rho)
    return _admm(workspace, lam, config, warm)


def fit_separate(dataset: Dataset) -> FittedModel:
    """Independent per-class least squares (the lambda = 0 endpoint)."""
    layout = CoefficientLayout.from_dataset(dataset)
    return FittedModel(_separate_vector(dataset, layout), layout)


def fit_new_pooled(dataset: Dataset) -> FittedModel:
    """One shared slope per predictor over the classes carrying it, plus
    per-class intercepts (the lambda -> infinity endpoint)."""
    layout = CoefficientLayout.from_dataset(dataset)
    preds = list(dataset.predictors)
    ids = list(dataset.class_ids)
    n_total = dataset.n_total
    cols = len(preds) + len(ids)
    X = np.zeros((n_total, cols))
    y = np.zeros(n_total)
    row = 0
    for ci, class_id in enumerate(ids):
        des = dataset.design(class_id)
        block = slice(row, row + des.n)
        for j, pred in enumerate(preds):
            if pred in des.available:
                X[block, j] = des.design[:, des.available.index(pred)]
        X[block, len(preds) + ci] = 1.0
        y[block] = des.response
        row += des.n
    coef, _res, rank, _sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < cols:
        logger.warning(
            "pooled design is rank-deficient (rank %d of %d); minimum-norm solution used",
            rank,
            cols,
        )
    beta = np.zeros(layout.dim)
    for i, (class_id, name) in enumerate(layout.entries):
        if name == INTERCEPT:
            beta[i] = coef[len(preds) + ids.index(class_id)]
        else:
            beta[i] = coef[preds.index(name)]
    return FittedModel(beta, layout)


def fit_classic_pooled(dataset: Dataset) -> FittedModel:
    """Single least squares on the stacked data restricted to predictors
    available in every class, with one common intercept."""
    layout = CoefficientLayout.from_dataset(dataset)
    common = [
        p
        for p in dataset.predictors
        if all(p in dataset.available(c) for c in dataset.class_ids)
    ]
    if not common:
        logger.warning("no predictor is available in every class; intercept-only pooled fit")
    n_total = dataset.n_total
    X = np.ones((n_total, len(common) + 1))
    y = np.zeros(n_total)
    row = 0
    for class_id in dataset.class_ids:
        des = dataset.design(class_id)
        block = slice(row, row + des.n)
        for j, pred in enumerate(common):
            X[block, j] = des.design[:, des.available.index(pred)]
        y[block] = des.response
        row += des.n
    coef, _res, rank, _sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        logger.warning("classic pooled design is rank-deficient; minimum-norm solution used")
    beta = np.zeros(layout.dim)
    for i, (class_id, name) in enumerate(layout.entries):
        if name == INTERCEPT:
            beta[i] = coef[-1]
        elif name in common:
            beta[i] = coef[common.index(name)]
    return FittedModel(beta, layout)


def fusion_partition(
    beta: np.ndarray, dataset: Dataset, layout: CoefficientLayout, fuse_tol: float
) -> dict[str, tuple[tuple[str, ...], ...]]:
    """Per predictor, the grouping of carrier classes whose coefficients agree
    within fuse_tol (transitively, i.e. chained along the sorted values)."""
    rank = {c: i for i, c in enumerate(dataset.class_ids)}
    out: dict[str, tuple[tuple[str, ...], ...]] = {}
    for pred in dataset.predictors:
        carriers = dataset.classes_with(pred)
        if not carriers:
            continue
        values = sorted((float(beta[layout.index(c, pred)]), rank[c], c) for c in carriers)
        groups: list[list[str]] = [[values[0][2]]]
        for (prev, _, _), (val, _, cid) in zip(values, values[1:]):
            if val - prev <= fuse_tol:
                groups[-1].append(cid)
            else:
                groups.append([cid])
        canonical = sorted(
            (tuple(sorted(g, key=rank.__getitem__)) for g in groups),
            key=lambda g: rank[g[0]],
        )
        out[pred] = tuple(canonical)
    return out


def degrees_of_freedom(partition: Partition, n_classes: int) -> int:
    """Distinct coefficient count: one per fusion group plus one intercept per
    class (intercepts are never fused)."""
    return sum(len(groups) for groups in partition.values()) + n_classes


def is_fully_pooled(partition: Partition) -> bool:
    return all(len(groups) == 1 for groups in partition.values())


def objective(
    dataset: Dataset, coupling: CouplingMatrix, beta: np.ndarray, lam: float
) -> float:
    total = 0.0
    for class_id in dataset.class_ids:
        des = dataset.design(class_id)
        r = des.response - des.design @ beta[coupling.layout.class_slices[class_id]]
        total += float(r @ r)
    return 0.5 * total + lam * coupling.penalty(beta)


def lambda_max(
    dataset: Dataset, coupling: CouplingMatrix, config: FitConfig | None = None
) -> float:
    """Smallest grid-usable lambda whose solution is fully pooled.

    Brackets the pooling threshold by geometric doubling/halving around a
    dual-based initial guess, then narrows geometrically to 1% relative
    precision and returns the pooled end of the bracket.
    """
    if coupling.n_rows == 0:
        raise ValueError("nothing to fuse: no predictor is shared by two classes")
    config = config or FitConfig()
    workspace = _Workspace(dataset, coupling, config.admm_rho)
    pooled = fit_new_pooled(dataset)
    gradient = workspace.G @ pooled.beta - workspace.c
    Dt = coupling.matrix.T.toarray()
    t, *_ = np.linalg.lstsq(Dt, -gradient, rcond=None)
    floor = 1e-12 * max(1.0, float(np.abs(workspace.c).max()))
    lam0 = max(float(np.max(np.abs(t))), floor)

    warm_seed = SolveResult(
        pooled.beta.copy(),
        coupling.matrix @ pooled.beta,
        np.zeros(coupling.n_rows),
        0,
        0.0,
        0.0,
        0.0,
    )

    def pooled_at(lam: float) -> bool:
        res = _admm(workspace, lam, config, warm_seed)
        part = fusion_partition(res.beta, dataset, coupling.layout, config.fuse_tol)
        return is_fully_pooled(part)

    lo: float | None = None
    hi: float | None = None
    lam = lam0
    if pooled_at(lam):
        hi = lam
        for _ in range(60):
            lam /= 2.0
            if lam < floor:
                break
            if pooled_at(lam):
                hi = lam
            else:
                lo = lam
                break
        if lo is None:
            # Pooled all the way down: the unpenalized optimum is already pooled.
            return hi
    else:
        lo = lam
        for _ in range(60):
            lam *= 2.0
            if pooled_at(lam):
                hi = lam
                break
            lo = lam
        if hi is None:
            raise ConvergenceError(
                f"no pooling detected up to lambda={lam:g}", lam=lam
            )

    assert lo is not None and hi is not None
    while hi > lo * 1.01:
        mid = math.sqrt(lo * hi)
        if pooled_at(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


@dataclass(frozen=True)
class PathResult:
    """Spectrum of solutions over the ascending lambda grid (0 included)."""

    lambdas: np.ndarray
    betas: np.ndarray
    rss: np.ndarray
    penalty: np.ndarray
    df: np.ndarray
    partitions: tuple[Partition, ...]
    iterations: np.ndarray
    primal_residuals: np.ndarray
    dual_residuals: np.ndarray
    layout: CoefficientLayout
    lambda_max: float

    @property
    def n_points(self) -> int:
        return int(self.lambdas.size)

    def model(self, index: int) -> FittedModel:
        return FittedModel(self.betas[index], self.layout)

    def index_of(self, lam: float) -> int:
        """Nearest grid index; equidistant requests snap to the larger lambda."""
        diffs = np.abs(self.lambdas - lam)
        return int(np.flatnonzero(diffs == diffs.min()).max())


def solve_path(
    dataset: Dataset,
    coupling: CouplingMatrix,
    config: FitConfig | None = None,
    grid: Sequence[float] | None = None,
) -> PathResult:
    """Solve over {0} plus a log-linear grid up to the pooling threshold.

    Solves in descending lambda order with warm starts; an explicit ascending
    grid (for cross-validation folds) bypasses the threshold search.  With no
    fusion pairs the grid degenerates to {0}.
    """
    config = config or FitConfig()
    expected = CoefficientLayout.from_dataset(dataset)
    if coupling.layout.entries != expected.entries:
        raise ValueError("coupling layout does not match the dataset")

    if grid is None:
        if coupling.n_rows == 0:
            logger.warning("no fusion pairs; path degenerates to the separate fit")
            grid_arr = np.array([0.0])
            lam_max = 0.0
        else:
            lam_max = lambda_max(dataset, coupling, config)
            points = np.geomspace(
                lam_max * config.lambda_min_ratio, lam_max, config.grid_size
            )
            grid_arr = np.concatenate([[0.0], points])
    else:
        grid_arr = np.asarray(grid, dtype=float)
        if grid_arr.ndim != 1 or grid_arr.size == 0:
            raise ValueError("grid must be a nonempty 1-d sequence")
        if np.any(np.diff(grid_arr) <= 0):
            raise ValueError("grid must be strictly ascending")
        if grid_arr[0] < 0:
            raise ValueError("grid lambdas must be nonnegative")
        lam_max = float(grid_arr[-1])

    workspace = _Workspace(dataset, coupling, config.admm_rho)
    L = grid_arr.size
    results: list[SolveResult] = [None] * L  # type: ignore[list-item]
    warm: SolveResult | None = None
    for i in range(L - 1, -1, -1):
        lam = float(grid_arr[i])
        if lam == 0.0:
            results[i] = _admm(workspace, 0.0, config, None)
        else:
            res = _admm(workspace, lam, config, warm)
            results[i] = res
            warm = res

    d = coupling.layout.dim
    betas = np.zeros((L, d))
    rss = np.zeros(L)
    pen = np.zeros(L)
    df = np.zeros(L, dtype=int)
    its = np.zeros(L, dtype=int)
    prim = np.zeros(L)
    dual = np.zeros(L)
    partitions: list[Partition] = []
    for i, res in enumerate(results):
        betas[i] = res.beta
        rss[i] = workspace.rss(res.beta)
        pen[i] = coupling.penalty(res.beta)
        part = fusion_partition(res.beta, dataset, coupling.layout, config.fuse_tol)
        partitions.append(part)
        df[i] = degrees_of_freedom(part, dataset.n_classes)
        its[i] = res.iterations
        prim[i] = res.primal_residual
        dual[i] = res.dual_residual

    return PathResult(
        lambdas=grid_arr,
        betas=betas,
        rss=rss,
        penalty=pen,
        df=df,
        partitions=tuple(partitions),
        iterations=its,
        primal_residuals=prim,
        dual_residuals=dual,
        layout=coupling.layout,
        lambda_max=lam_max,
    )


def predict(
    model: FittedModel,
    stats: StandardizationStats,
    class_id: str,
    columns: Mapping[str, Sequence[float]],
) -> np.ndarray:
    """Predict responses for new observations of one class from raw-scale
    predictor columns; standardization happens internally."""
    names = [
        name
        for (c, name) in model.layout.entries
        if c == class_id and name != INTERCEPT
    ]
    missing = [name for name in names if name not in columns]
    if missing:
        raise ValueError(f"missing predictor columns for class {class_id!r}: {missing}")
    if names:
        n = len(np.asarray(columns[names[0]], dtype=float))
    else:
        first = next(iter(columns.values()), [])
        n = len(np.asarray(first, dtype=float))
    yhat = np.full(n, model.intercept(class_id))
    for name in names:
        z = stats.transform(name, np.asarray(columns[name], dtype=float))
        if z.size != n:
            raise ValueError(f"column {name!r} length mismatch")
        yhat = yhat + model.slope(class_id, name) * z
    return yhat
