"""Least-squares data for the tracking problem and its randomly decimated form.

Sample indices are 0-based throughout: index ``n`` refers to the instant
``space.times[n] = n * h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, DomainError
from .lti import Plant, free_response_rows, response_matrix
from .signals import ReferenceSpec, SignalSpace, sample_reference


def build_gram(plant: Plant, space: SignalSpace):
    """Gram matrix G and initial-condition matrix H.

    G[n, m] = <phi_n, psi_{-m}> is the sampled response to u = psi_m, so
    G theta + H x0 are the samples of y under u = sum_m theta_m psi_m.

    Returns
    -------
    G : (N, N) complex ndarray
    H : (N, nu) real ndarray with rows c^T exp(t_n A)
    """
    t = space.times
    G = response_matrix(plant, space, t)
    G[0] = 0.0  # kappa(0, .) vanishes identically
    return G, free_response_rows(plant, t)


@dataclass(frozen=True)
class SamplingPlan:
    """K distinct sample indices drawn uniformly from 0..N-1, sorted ascending."""

    K: int
    seed: int
    indices: np.ndarray
    N: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.shape != (self.K,) or not 1 <= self.K <= self.N:
            raise DomainError(f"plan must hold 1 <= K <= N indices (K={self.K}, N={self.N})")
        if np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.N:
            raise DomainError("plan indices must be strictly increasing within 0..N-1")
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, N: int, seed: int = 0) -> "SamplingPlan":
        return cls(N, seed, np.arange(N), N)


def _partial_fisher_yates(rng: np.random.Generator, N: int, K: int) -> np.ndarray:
    pool = np.arange(N)
    for i in range(K):
        j = int(rng.integers(i, N))
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:K])


def draw_plan(space: SignalSpace | int, K: int, seed: int) -> SamplingPlan:
    """Uniformly random K-subset of the N sampling instants (without replacement)."""
    N = space if isinstance(space, int) else space.N
    if not 1 <= K <= N:
        raise DomainError(f"sample count K must satisfy 1 <= K <= N = {N}, got {K}")
    if K == N:
        return SamplingPlan.full(N, seed)
    rng = np.random.default_rng(seed)
    return SamplingPlan(K, seed, _partial_fisher_yates(rng, N, K), N)


def compress(G, beta, plan: SamplingPlan):
    """Select the planned rows: Phi = U G and alpha = U beta."""
    G = np.asarray(G)
    beta = np.asarray(beta)
    if G.shape[0] != plan.N or beta.shape[0] != plan.N:
        raise DimensionError(
            f"plan is for N = {plan.N} rows but G has {G.shape[0]} and beta {beta.shape[0]}"
        )
    return G[plan.indices], beta[plan.indices]


def advise_sample_count(S_theta: int, N: int, C: float) -> int:
    """Advisory sample count ceil(C * S * (log N)^4), clamped to [1, N]."""
    if S_theta < 1:
        raise DomainError("S_theta must be at least 1")
    if N < 2:
        raise DomainError("N must be at least 2")
    if C <= 0:
        raise DomainError("C must be positive")
    K = math.ceil(C * S_theta * math.log(N) ** 4)
    return int(min(max(K, 1), N))


@dataclass(frozen=True)
class SensingSystem:
    G: np.ndarray
    H: np.ndarray
    r_vec: np.ndarray
    beta: np.ndarray
    plan: SamplingPlan
    Phi: np.ndarray
    alpha: np.ndarray

    @property
    def U_indices(self) -> np.ndarray:
        return self.plan.indices


def assemble(plant: Plant, space: SignalSpace, reference, plan: SamplingPlan,
             gram=None) -> SensingSystem:
    """Build the full and compressed least-squares data in one go.

    ``reference`` is a ReferenceSpec or an explicit length-N sample vector.
    ``gram`` may carry a precomputed ``(G, H)`` pair.
    """
    G, H = build_gram(plant, space) if gram is None else gram
    if isinstance(reference, ReferenceSpec):
        r = sample_reference(reference, space)
    else:
        r = np.asarray(reference, dtype=float)
        if r.shape != (space.N,):
            raise DimensionError(f"reference samples have shape {r.shape}")
    beta = r - H @ plant.x0
    Phi, alpha = compress(G, beta, plan)
    return SensingSystem(G, H, r, beta, plan, Phi, alpha)
