"""Coefficient designs: ridge (closed form), l1-l2 via FISTA, and truncation.

Cost functionals, for complex coefficient vectors theta:

    J2(theta) = ||G theta - beta||^2 + mu2 ||theta||_2^2
    J1(theta) = ||Phi theta - alpha||^2 + mu1 ||theta||_1
    J0(theta) = ||Phi theta - alpha||^2 + mu  ||theta||_0
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, DomainError
from .signals import cardinality


@dataclass(frozen=True)
class SolverConfig:
    mu1: float = 1e-4
    mu2: float = 1e-4
    max_iters: int = 20000
    rel_tol: float = 1e-10
    lipschitz_margin: float = 1.01
    power_iters: int = 10000

    def __post_init__(self):
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise DomainError("regularization weights mu1, mu2 must be positive")
        if not self.lipschitz_margin > 1:
            raise DomainError("lipschitz_margin must exceed 1")
        if self.max_iters < 1 or self.power_iters < 1:
            raise DomainError("iteration limits must be positive")
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")


@dataclass
class SolveResult:
    theta: np.ndarray
    iterations: int
    objective_trace: np.ndarray
    converged: bool
    residual: float            # ||Phi theta - alpha||_2
    lipschitz: float = field(default=np.nan)


def _as_2d(x):
    x = np.asarray(x)
    return (x[:, None], True) if x.ndim == 1 else (x, False)


def solve_l2(G, beta, mu2: float) -> np.ndarray:
    """Minimizer (mu2 I + G^* G)^{-1} G^* beta of J2.

    ``beta`` may hold several right-hand sides as columns.
    """
    if not mu2 > 0:
        raise DomainError(f"mu2 must be positive, got {mu2}")
    G = np.asarray(G)
    beta = np.asarray(beta)
    if beta.shape[0] != G.shape[0]:
        raise DimensionError(f"G has {G.shape[0]} rows, beta has {beta.shape[0]}")
    GH = G.conj().T
    A = GH @ G + mu2 * np.eye(G.shape[1])
    factor = scipy.linalg.cho_factor(A, lower=True)
    return scipy.linalg.cho_solve(factor, GH @ beta)


def solve_ideal(G, beta) -> np.ndarray:
    """Minimum-norm least-squares coefficients (no regularization)."""
    theta, *_ = np.linalg.lstsq(np.asarray(G), np.asarray(beta), rcond=None)
    return theta


def soft_threshold(theta, lam: float) -> np.ndarray:
    """Entrywise sgn(theta)(|theta| - lam)_+ with sgn(z) = z/|z| and sgn(0) = 0."""
    if lam < 0:
        raise DomainError("threshold must be non-negative")
    theta = np.asarray(theta)
    mag = np.abs(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > lam, 1.0 - lam / mag, 0.0)
    return theta * scale


def estimate_operator_norm_sq(Phi, tol: float = 1e-10, max_iters: int = 10000) -> float:
    """Largest eigenvalue of Phi^* Phi by power iteration.

    A zero matrix returns 0.0, which callers treat as "no usable step size".
    """
    Phi = np.asarray(Phi)
    n = Phi.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = Phi.conj().T @ (Phi @ v)
        lam_new = float(np.real(np.vdot(v, w)))
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def _fista_core(op, alpha, lipschitz, mu1, max_iters, rel_tol, mask=None):
    """FISTA on the columns of ``alpha`` with a shared operator.

    With ``mask`` given, ``op`` is the full N x N matrix G and column b of
    ``mask`` (0/1, shape like ``alpha``) selects the sampled rows of trial b;
    ``alpha`` must already be zero outside the mask.  Columns that meet the
    stopping rule are frozen and dropped from further work.
    """
    n_rows, B = alpha.shape
    n = op.shape[1]
    op_h = op.conj().T
    step = 1.0 / lipschitz                     # (B,)
    thresh = mu1 / (2.0 * lipschitz)           # (B,)

    theta_out = np.zeros((n, B), dtype=complex)
    iters = np.zeros(B, dtype=int)
    converged = np.zeros(B, dtype=bool)
    trace = np.full((max_iters, B), np.nan)

    active = np.arange(B)
    theta_prev = np.zeros((n, B), dtype=complex)
    y = theta_prev.copy()
    fwd_prev = np.zeros((n_rows, B), dtype=complex)   # Phi theta_prev
    fwd_y = fwd_prev.copy()                             # Phi y
    a = np.asarray(alpha, dtype=complex)
    m = None if mask is None else mask
    t = 1.0
    for j in range(1, max_iters + 1):
        z = y + (op_h @ (a - fwd_y)) * step
        mag = np.abs(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            theta = z * np.where(mag > thresh, 1.0 - thresh / mag, 0.0)
        fwd = op @ theta
        if m is not None:
            fwd *= m
        res = fwd - a
        obj = np.einsum("ij,ij->j", res.real, res.real) + np.einsum("ij,ij->j", res.imag, res.imag)
        obj += mu1 * np.abs(theta).sum(axis=0)
        trace[j - 1, active] = obj

        change = np.linalg.norm(theta - theta_prev, axis=0)
        done = change <= rel_tol * np.maximum(1.0, np.linalg.norm(theta, axis=0))
        if j == max_iters:
            finish = np.ones_like(done)
        else:
            finish = done
        if finish.any():
            cols = active[finish]
            theta_out[:, cols] = theta[:, finish]
            iters[cols] = j
            converged[cols] = done[finish]
            keep = ~finish
            if not keep.any():
                break
            active = active[keep]
            theta, theta_prev = theta[:, keep], theta_prev[:, keep]
            fwd, fwd_prev = fwd[:, keep], fwd_prev[:, keep]
            a = a[:, keep]
            step, thresh = step[keep], thresh[keep]
            if m is not None:
                m = m[:, keep]

        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        gamma = (t - 1.0) / t_next
        y = theta + gamma * (theta - theta_prev)
        fwd_y = (1.0 + gamma) * fwd - gamma * fwd_prev
        theta_prev, fwd_prev, t = theta, fwd, t_next
    return theta_out, iters, converged, [trace[:iters[b], b].copy() for b in range(B)]


def solve_l1l2_fista(Phi, alpha, config: SolverConfig) -> SolveResult:
    """Minimize J1(theta) = ||Phi theta - alpha||^2 + mu1 ||theta||_1 with FISTA.

    Starts from theta = 0 with step 1/c, c = lipschitz_margin * ||Phi||^2.
    The iteration stops when ||theta[j] - theta[j-1]|| <= rel_tol * max(1, ||theta[j]||)
    or after ``max_iters`` iterations (then ``converged`` is False).
    """
    Phi = np.asarray(Phi)
    alpha = np.asarray(alpha)
    if Phi.ndim != 2 or alpha.shape != (Phi.shape[0],):
        raise DimensionError(f"Phi {Phi.shape} and alpha {alpha.shape} do not agree")
    lam = estimate_operator_norm_sq(Phi, max_iters=config.power_iters)
    if lam == 0.0:
        raise DomainError("Phi is zero; FISTA step size is undefined")
    c = config.lipschitz_margin * lam
    theta, iters, conv, traces = _fista_core(
        Phi, alpha[:, None], np.array([c]), config.mu1, config.max_iters, config.rel_tol)
    th = theta[:, 0]
    return SolveResult(th, int(iters[0]), traces[0], bool(conv[0]),
                       float(np.linalg.norm(Phi @ th - alpha)), c)


def solve_l1l2_fista_batch(G, betas, row_sets, config: SolverConfig) -> list[SolveResult]:
    """Solve several compressed problems that share the full matrix G.

    Problem b uses Phi_b = G[row_sets[b]] and alpha_b = betas[row_sets[b], b].
    All problems advance together through dense products with G.
    """
    G = np.asarray(G)
    betas, _ = _as_2d(betas)
    N, B = betas.shape
    if len(row_sets) != B:
        raise DimensionError("need one row set per right-hand side")
    mask = np.zeros((N, B))
    lips = np.empty(B)
    for b, rows in enumerate(row_sets):
        rows = np.asarray(rows)
        mask[rows, b] = 1.0
        lam = estimate_operator_norm_sq(G[rows], max_iters=config.power_iters)
        if lam == 0.0:
            raise DomainError("a compressed operator is zero; FISTA step size is undefined")
        lips[b] = config.lipschitz_margin * lam
    alpha = betas * mask
    theta, iters, conv, traces = _fista_core(
        G, alpha, lips, config.mu1, config.max_iters, config.rel_tol, mask=mask)
    results = []
    for b, rows in enumerate(row_sets):
        th = theta[:, b]
        resid = float(np.linalg.norm(G[rows] @ th - betas[rows, b]))
        results.append(SolveResult(th, int(iters[b]), traces[b], bool(conv[b]), resid, lips[b]))
    return results


def l1_optimality_violation(Phi, alpha, theta, mu1: float) -> float:
    """Largest violation of the subgradient conditions for J1 at ``theta``.

    With g = 2 Phi^*(Phi theta - alpha): zero entries need |g_i| <= mu1 and
    nonzero entries need g_i = -mu1 sgn(theta_i).
    """
    Phi = np.asarray(Phi)
    theta = np.asarray(theta)
    g = 2.0 * Phi.conj().T @ (Phi @ theta - alpha)
    mag = np.abs(theta)
    nz = mag > 0
    viol = np.zeros(theta.shape)
    viol[~nz] = np.maximum(np.abs(g[~nz]) - mu1, 0.0)
    viol[nz] = np.abs(g[nz] + mu1 * theta[nz] / mag[nz])
    return float(viol.max(initial=0.0))


def _check(Phi, alpha, theta):
    Phi = np.asarray(Phi)
    alpha = np.asarray(alpha)
    theta = np.asarray(getattr(theta, "values", theta))
    if Phi.ndim != 2 or alpha.shape != (Phi.shape[0],) or theta.shape != (Phi.shape[1],):
        raise DimensionError(
            f"shapes do not agree: Phi {Phi.shape}, alpha {alpha.shape}, theta {theta.shape}")
    return Phi, alpha, theta


def _sq_residual(Phi, alpha, theta):
    r = Phi @ theta - alpha
    return float(np.real(np.vdot(r, r)))


def objective_j1(Phi, alpha, theta, mu1: float) -> float:
    Phi, alpha, theta = _check(Phi, alpha, theta)
    return _sq_residual(Phi, alpha, theta) + mu1 * float(np.abs(theta).sum())


def objective_j2(G, beta, theta, mu2: float) -> float:
    G, beta, theta = _check(G, beta, theta)
    return _sq_residual(G, beta, theta) + mu2 * float(np.real(np.vdot(theta, theta)))


def objective_j0(Phi, alpha, theta, mu: float) -> float:
    Phi, alpha, theta = _check(Phi, alpha, theta)
    return _sq_residual(Phi, alpha, theta) + mu * cardinality(theta, 1e-12)


def truncate_top_s(theta, S: int) -> np.ndarray:
    """Keep the S largest-magnitude entries and zero the rest.

    Entries are taken to be indexed m = -M..M (odd length) or 0..n-1 (even
    length).  Ties go to the smaller |m|, then to the negative m.
    """
    theta = np.asarray(getattr(theta, "values", theta))
    n = theta.size
    if not 0 <= S <= n:
        raise DomainError(f"S must lie in [0, {n}], got {S}")
    m = np.arange(n) - (n // 2 if n % 2 else 0)
    order = np.lexsort((m, np.abs(m), -np.abs(theta)))
    out = np.zeros_like(theta)
    keep = order[:S]
    out[keep] = theta[keep]
    return out
