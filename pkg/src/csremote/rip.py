"""Restricted isometry constants and the resulting error bounds.

For an l-sparse support S, the extreme eigenvalues of Phi_S^* Phi_S bound
||Phi theta||^2 / ||theta||^2 over vectors supported on S, so

    delta_l = max_S max(lambda_max(Phi_S^* Phi_S) - 1, 1 - lambda_min(Phi_S^* Phi_S)).

When delta_2S < sqrt(2) - 1 the l1-l2 coefficients obey

    ||theta_1 - theta*|| <= C1 eps1 / sqrt(S) + C2 eps2,

and the tracking error picks up at most that amount times eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, islice

import numpy as np
from scipy.integrate import simpson

from .exceptions import DimensionError, EnumerationGuardError, NotApplicableError
from .lti import Plant, kernel_on_uniform_grid, output_operator
from .sensing import SensingSystem, draw_plan
from .signals import ReferenceSpec, SignalSpace, evaluate_reference
from .solvers import SolveResult, solve_ideal, truncate_top_s

RIP_THRESHOLD = math.sqrt(2.0) - 1.0
ENUMERATION_GUARD = 2_000_000


@dataclass(frozen=True)
class RipReport:
    l: int
    delta_l: float
    method: str               # "exact-enumeration" or "monte-carlo-lower-bound"
    supports_checked: int


def _support_deviation(gram: np.ndarray, supports: np.ndarray) -> float:
    sub = gram[supports[:, :, None], supports[:, None, :]]
    eig = np.linalg.eigvalsh(sub)
    return float(max(np.max(eig[:, -1] - 1.0), np.max(1.0 - eig[:, 0]), 0.0))


def rip_constant_exact(Phi, l: int, guard: int = ENUMERATION_GUARD,
                       chunk: int = 50_000) -> RipReport:
    """Isometry constant delta_l by enumerating every size-l column support."""
    Phi = np.asarray(Phi)
    n = Phi.shape[1]
    if not 1 <= l <= n:
        raise DimensionError(f"sparsity level l must lie in [1, {n}]")
    total = math.comb(n, l)
    if total > guard:
        raise EnumerationGuardError(
            f"C({n}, {l}) = {total} supports exceeds the guard {guard}; "
            "use rip_constant_monte_carlo for a lower bound")
    gram = Phi.conj().T @ Phi
    delta = 0.0
    it = combinations(range(n), l)
    while True:
        block = np.array(list(islice(it, chunk)), dtype=int)
        if block.size == 0:
            break
        delta = max(delta, _support_deviation(gram, block.reshape(-1, l)))
    return RipReport(l, delta, "exact-enumeration", total)


def rip_constant_monte_carlo(Phi, l: int, trials: int, seed: int) -> RipReport:
    """Lower bound on delta_l from ``trials`` uniformly drawn supports."""
    Phi = np.asarray(Phi)
    n = Phi.shape[1]
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 1 <= l <= n:
        raise DimensionError(f"sparsity level l must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    supports = np.sort(np.argsort(rng.random((trials, n)), axis=1)[:, :l], axis=1)
    gram = Phi.conj().T @ Phi
    delta = 0.0
    for start in range(0, trials, 50_000):
        delta = max(delta, _support_deviation(gram, supports[start:start + 50_000]))
    return RipReport(l, delta, "monte-carlo-lower-bound", trials)


def bound_constants(delta_2S: float):
    """Constants (C1, C2) of the coefficient-error estimate."""
    if not delta_2S < RIP_THRESHOLD:
        raise NotApplicableError(
            f"delta_2S = {delta_2S:.6g} is not below sqrt(2) - 1; the bound does not apply")
    denom = 1.0 - (math.sqrt(2.0) + 1.0) * delta_2S
    C1 = 2.0 * (1.0 + (math.sqrt(2.0) - 1.0) * delta_2S) / denom
    C2 = 4.0 * math.sqrt(1.0 + delta_2S) / denom
    return C1, C2


def _eta_sq_trapezoid(plant: Plant, space: SignalSpace, n: int) -> float:
    g = kernel_on_uniform_grid(plant, space.omegas, space.T, n)
    f = np.sum(np.abs(g) ** 2, axis=1)
    dt = space.T / n
    return float(dt * (f.sum() - 0.5 * (f[0] + f[-1])))


def compute_eta(plant: Plant, space: SignalSpace, rel_tol: float = 1e-6,
                start_exp: int = 10, max_exp: int = 22) -> float:
    """Amplification eta = sqrt(sum_m int_0^T |<kappa(tau, .), psi_m>|^2 dtau).

    Composite trapezoid over tau, doubling the grid from 2**start_exp
    intervals until successive values agree to ``rel_tol``.
    """
    prev = _eta_sq_trapezoid(plant, space, 2 ** start_exp)
    for k in range(start_exp + 1, max_exp + 1):
        cur = _eta_sq_trapezoid(plant, space, 2 ** k)
        if cur == 0.0 or abs(cur - prev) <= rel_tol * abs(cur):
            return math.sqrt(cur)
        prev = cur
    raise RuntimeError(f"eta quadrature did not settle within 2**{max_exp} intervals")


@dataclass
class BoundReport:
    S: int
    epsilon1: float
    epsilon2: float
    delta_2S: float
    delta_method: str
    applicable: bool
    C1: float = math.nan
    C2: float = math.nan
    eta: float = math.nan
    coef_bound: float = math.nan
    tracking_bound: float = math.nan
    coef_error: float = math.nan          # ||theta_1 - theta*||_2
    ideal_error: float = math.nan         # ||y* - r||
    l1l2_error: float = math.nan          # ||y_1 - r||
    notes: list = field(default_factory=list)

    @property
    def coef_bound_holds(self) -> bool:
        return self.applicable and self.coef_error <= self.coef_bound

    @property
    def tracking_bound_holds(self) -> bool:
        return self.applicable and self.l1l2_error <= self.tracking_bound


def tracking_error_norm(plant: Plant, space: SignalSpace, theta, reference,
                        n_points: int = 4001, operator=None) -> float:
    """L2[0, T] norm of y - r by Simpson quadrature on a uniform grid.

    y is the linear response to ``theta`` without a realness check, so a
    slightly non-conjugate-symmetric iterate is measured, not rejected; its
    imaginary part only adds to the error.
    """
    if operator is None:
        operator = output_operator(plant, space, np.linspace(0.0, space.T, n_points))
    t = operator.taus
    values = np.asarray(getattr(theta, "values", theta))
    y = operator.K @ values + operator.H @ plant.x0
    if isinstance(reference, ReferenceSpec):
        r = evaluate_reference(reference, space, t)
    else:
        r = np.asarray(reference(t), dtype=float)
    return math.sqrt(simpson(np.abs(y - r) ** 2, x=t))


def evaluate_bounds(system: SensingSystem, theta_star, theta_1: SolveResult, S: int,
                    plant: Plant, space: SignalSpace, reference,
                    rip_trials: int = 20000, rip_seed: int = 0,
                    n_points: int = 4001, eta: float | None = None) -> BoundReport:
    """Evaluate the coefficient and tracking-error bounds for one design.

    ``theta_star`` is the ideal (unregularized least-squares) coefficient
    vector and ``reference`` a ReferenceSpec or a callable r(t).  delta_2S is
    enumerated exactly when the guard allows; otherwise a Monte-Carlo lower
    bound is reported and the bound is marked not certified.
    """
    theta_star = np.asarray(getattr(theta_star, "values", theta_star))
    theta_1_vec = np.asarray(theta_1.theta)
    n = system.Phi.shape[1]
    eps1 = float(np.abs(theta_star - truncate_top_s(theta_star, S)).sum())
    eps2 = float(theta_1.residual)
    try:
        rip = rip_constant_exact(system.Phi, min(2 * S, n))
    except EnumerationGuardError:
        rip = rip_constant_monte_carlo(system.Phi, min(2 * S, n), rip_trials, rip_seed)

    op = output_operator(plant, space, np.linspace(0.0, space.T, n_points))
    report = BoundReport(
        S=S, epsilon1=eps1, epsilon2=eps2, delta_2S=rip.delta_l,
        delta_method=rip.method, applicable=False,
        coef_error=float(np.linalg.norm(theta_1_vec - theta_star)),
        ideal_error=tracking_error_norm(plant, space, theta_star, reference, operator=op),
        l1l2_error=tracking_error_norm(plant, space, theta_1_vec, reference, operator=op),
    )
    if rip.method != "exact-enumeration":
        report.notes.append("delta_2S is a Monte-Carlo lower bound; hypothesis not certified")
        return report
    try:
        C1, C2 = bound_constants(rip.delta_l)
    except NotApplicableError as exc:
        report.notes.append(str(exc))
        return report
    report.applicable = True
    report.C1, report.C2 = C1, C2
    report.eta = compute_eta(plant, space) if eta is None else eta
    report.coef_bound = C1 * eps1 / math.sqrt(S) + C2 * eps2
    report.tracking_bound = report.ideal_error + report.coef_bound * report.eta
    return report


@dataclass(frozen=True)
class SyntheticInstance:
    """A small sensing problem whose isometry constant can be certified.

    ``system.G`` is the scaled conjugate-symmetric DFT sqrt(N/K) F with
    F[n, m] = exp(2 pi j n m / N) / sqrt(N), so every K-row decimation has
    unit-norm columns.  The data are noise free, ``theta_star`` has one
    dominant (DC) entry plus a small conjugate-symmetric tail, and the
    reference is the output y* that ``theta_star`` produces on ``plant``.
    """

    system: SensingSystem
    theta_star: np.ndarray
    plant: Plant
    space: SignalSpace
    reference: object
    seed: int


def synthetic_instance(seed: int, M: int = 5, K: int | None = None, tail: float = 0.02,
                       plant: Plant | None = None, T: float = 2 * math.pi) -> SyntheticInstance:
    """Draw a synthetic instance; K defaults to a seeded draw from [N - 5, N - 2]."""
    space = SignalSpace(T, M)
    N = space.N
    rng = np.random.default_rng([seed, 8])
    if K is None:
        K = int(rng.integers(N - 5, N - 1))
    if plant is None:
        a = 0.5
        plant = Plant([[0.0, 1.0], [-a, -a - 1.0]], [0.0, 1.0], [-a, 1.0])
    n = np.arange(N)
    G = np.sqrt(N / K) * np.exp(2j * np.pi * np.outer(n, space.ms) / N) / np.sqrt(N)
    theta = np.zeros(N, dtype=complex)
    theta[M] = rng.choice([-1.0, 1.0]) * (0.5 + rng.random())
    side = tail * (rng.standard_normal(M) + 1j * rng.standard_normal(M))
    theta[M + 1:] = side
    theta[:M] = np.conj(side[::-1])
    beta = (G @ theta).real
    plan = draw_plan(N, K, seed)
    system = SensingSystem(G, np.zeros((N, plant.nu)), beta, beta, plan,
                           G[plan.indices], beta[plan.indices])
    theta_star = solve_ideal(G, beta)

    cache = {}

    def reference(t):
        t = np.asarray(t, dtype=float)
        key = t.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = output_operator(plant, space, t).apply(theta_star, plant.x0)
        return cache[key]

    return SyntheticInstance(system, theta_star, plant, space, reference, seed)
