"""Desk-scale reference solver, independent of the ADMM code path.

Solves the same penalized objective through its dual: with K = A'A and
c = A'y, the optimal coefficients are b(u) = K^{-1}(c - D'u) where u solves
the box-constrained quadratic program

    min_u  0.5 * (c - D'u)' K^{-1} (c - D'u)   s.t.  |u_r| <= lam.

Accelerated projected gradient (a proximal-gradient method whose prox is the
box projection) drives the duality gap below the stall tolerance, which
certifies near-optimality; a subgradient check on the active rows verifies
the KKT conditions before the solution is returned.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from .data import Dataset
from .fusion import CouplingMatrix

logger = logging.getLogger(__name__)

MAX_DIMENSION = 30


class OracleError(RuntimeError):
    """The reference solver could not certify an optimal solution."""


def _normal_equations(dataset: Dataset, coupling: CouplingMatrix):
    layout = coupling.layout
    d = layout.dim
    K = np.zeros((d, d))
    c = np.zeros(d)
    bb = 0.0
    for class_id in dataset.class_ids:
        des = dataset.design(class_id)
        sl = layout.class_slices[class_id]
        K[sl, sl] += des.design.T @ des.design
        c[sl] += des.design.T @ des.response
        bb += float(des.response @ des.response)
    return K, c, bb


def _primal_objective(K: np.ndarray, c: np.ndarray, bb: float, beta: np.ndarray,
                      D: np.ndarray, lam: float) -> float:
    quad = 0.5 * float(beta @ (K @ beta)) - float(c @ beta) + 0.5 * bb
    return quad + lam * float(np.abs(D @ beta).sum())


def qp_oracle(
    dataset: Dataset,
    coupling: CouplingMatrix,
    lam: float,
    stall_tol: float = 1e-10,
    max_iter: int = 200_000,
) -> np.ndarray:
    """Reference coefficients for the penalized problem (dimension <= 30).

    Stops once the duality gap stalls below ``stall_tol`` relative to the
    objective, so the result is certified rather than merely stationary.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if coupling.layout.dim > MAX_DIMENSION:
        raise ValueError(
            f"oracle accepts at most {MAX_DIMENSION} coefficients, got {coupling.layout.dim}"
        )
    K, c, bb = _normal_equations(dataset, coupling)
    try:
        chol = scipy.linalg.cho_factor(K)
    except scipy.linalg.LinAlgError:
        raise OracleError("per-class designs must have full column rank") from None

    def k_solve(v: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(chol, v)

    if coupling.n_rows == 0 or lam == 0.0:
        return k_solve(c)

    D = coupling.dense()
    rows = D.shape[0]

    # Lipschitz constant of the dual gradient: largest eigenvalue of D K^-1 D'.
    DKD = D @ k_solve(D.T)
    lips = float(np.linalg.eigvalsh(DKD).max())
    if lips <= 0:
        return k_solve(c)
    step = 1.0 / lips

    def beta_of(u: np.ndarray) -> np.ndarray:
        return k_solve(c - D.T @ u)

    def dual_value(u: np.ndarray, beta: np.ndarray) -> float:
        return 0.5 * bb - 0.5 * float((c - D.T @ u) @ beta)

    u = np.clip(np.zeros(rows), -lam, lam)
    v = u.copy()
    t_acc = 1.0
    best_gap = np.inf
    beta = beta_of(u)
    for _ in range(max_iter):
        grad = -(D @ beta_of(v))
        u_new = np.clip(v - step * grad, -lam, lam)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        v = u_new + ((t_acc - 1.0) / t_new) * (u_new - u)
        # Restart the momentum when it points uphill.
        if float((u_new - u) @ (v - u_new)) < 0:
            v = u_new.copy()
            t_new = 1.0
        u = u_new
        t_acc = t_new

        beta = beta_of(u)
        primal = _primal_objective(K, c, bb, beta, D, lam)
        gap = primal - dual_value(u, beta)
        best_gap = min(best_gap, gap)
        if gap <= stall_tol * max(1.0, abs(primal)):
            break
    else:
        raise OracleError(
            f"duality gap stalled at {best_gap:g} after {max_iter} iterations"
        )

    _verify_subgradient(K, c, D, beta, u, lam, stall_tol * max(1.0, abs(primal)))
    return beta


def _verify_subgradient(
    K: np.ndarray,
    c: np.ndarray,
    D: np.ndarray,
    beta: np.ndarray,
    u: np.ndarray,
    lam: float,
    slack_tol: float,
) -> None:
    """KKT check that u/lam is a valid subgradient of the penalty at D beta:
    stationarity, box feasibility, and per-row complementary slackness (each
    row's duality-gap contribution must sit under the certified stall bound).
    """
    scale = max(1.0, float(np.abs(c).max()))
    stationarity = float(np.abs(K @ beta - c + D.T @ u).max())
    if stationarity > 1e-8 * scale:
        raise OracleError(f"stationarity residual {stationarity:g} too large")
    if float(np.abs(u).max()) > lam * (1.0 + 1e-12):
        raise OracleError("dual variable escapes the box constraint")
    Dbeta = D @ beta
    slack = lam * np.abs(Dbeta) - u * Dbeta
    worst = float(slack.max())
    if worst > slack_tol + 1e-12:
        raise OracleError(f"complementary slackness violated ({worst:g})")
