"""Stable SISO LTI plants and the matrix-exponential machinery around them.

The plant is

    x'(t) = A x(t) + b u(t),   y(t) = c^T x(t),   x(0) = x0,

and a control ``u = sum_m theta_m psi_m`` drives the output

    y(tau) = c^T exp(tau A) x0 + sum_m theta_m int_0^tau kappa(tau, t) psi_m(t) dt,

where kappa(tau, t) = c^T exp((tau - t) A) b for 0 <= t < tau and zero
otherwise.  Each integral equals <kappa(tau, .), psi_{-m}> and is the
top-right entry of the exponential of an augmented matrix (Van Loan's
construction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, DomainError
from .signals import CoefVector, SignalSpace, _check_real

STABILITY_MARGIN = -1e-12


def matrix_exponential(M) -> np.ndarray:
    """exp(M) by scaling and squaring with Pade approximation.

    Accepts a single square matrix or a stack of them (shape ``(..., n, n)``).
    """
    M = np.asarray(M)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DimensionError(f"matrix exponential needs square input, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix exponential input has non-finite entries")
    return scipy.linalg.expm(M)


@dataclass(frozen=True)
class Plant:
    """State-space data (A, b, c, x0) of a stable single-input single-output plant."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x0: np.ndarray = field(default=None)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        nu = A.shape[0]
        if A.shape != (nu, nu):
            raise DimensionError(f"A must be square, got shape {A.shape}")
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        x0 = np.zeros(nu) if self.x0 is None else np.asarray(self.x0, dtype=float).reshape(-1)
        for name, v in (("b", b), ("c", c), ("x0", x0)):
            if v.shape != (nu,):
                raise DimensionError(f"{name} has length {v.size}, expected {nu}")
        if not all(np.all(np.isfinite(v)) for v in (A, b, c, x0)):
            raise DomainError("plant data must be finite")
        worst = np.max(np.linalg.eigvals(A).real)
        if worst >= STABILITY_MARGIN:
            raise DomainError(
                f"plant is not asymptotically stable (max Re eig(A) = {worst:.3e})"
            )
        for name, v in (("A", A), ("b", b), ("c", c), ("x0", x0)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def nu(self) -> int:
        return self.A.shape[0]

    def with_x0(self, x0) -> "Plant":
        return Plant(self.A, self.b, self.c, x0)


@dataclass(frozen=True)
class TransferEval:
    """Value of the transfer function c^T (sI - A)^{-1} b at ``s``."""

    s: complex
    value: complex


def transfer(plant: Plant, s: complex) -> TransferEval:
    nu = plant.nu
    value = plant.c @ np.linalg.solve(s * np.eye(nu) - plant.A, plant.b.astype(complex))
    return TransferEval(complex(s), complex(value))


def _augmented(plant: Plant, omegas) -> np.ndarray:
    """Stack of [[A, b], [0, -j omega]] for each omega; shape (len(omegas), nu+1, nu+1)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    nu = plant.nu
    Z = np.zeros((omegas.size, nu + 1, nu + 1), dtype=complex)
    Z[:, :nu, :nu] = plant.A
    Z[:, :nu, nu] = plant.b
    Z[:, nu, nu] = -1j * omegas
    return Z


def kernel_basis_inner_product(plant: Plant, tau: float, omega: float, T: float) -> complex:
    """<kappa(tau, .), psi> for the basis element of frequency ``omega``.

    Computed as (1/sqrt(T)) [c^T, 0] exp(tau [[A, b], [0, -j omega]]) [0; 1].
    """
    if T <= 0:
        raise DomainError("horizon T must be positive")
    if not (0.0 <= tau <= T * (1 + 1e-12)):
        raise DomainError(f"tau = {tau} lies outside [0, {T}]")
    E = matrix_exponential(tau * _augmented(plant, [omega])[0])
    return complex(plant.c @ E[:plant.nu, plant.nu]) / np.sqrt(T)


def kernel_matrix(plant: Plant, taus, omegas, T: float) -> np.ndarray:
    """Inner products for every (tau, omega) pair; shape ``(len(taus), len(omegas))``."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any(taus < 0) or np.any(taus > T * (1 + 1e-12)):
        raise DomainError(f"all tau must lie in [0, {T}]")
    Z = _augmented(plant, omegas)
    nu = plant.nu
    out = np.empty((taus.size, Z.shape[0]), dtype=complex)
    # chunk over tau to bound the size of the stacked exponential
    step = max(1, 20000 // max(1, Z.shape[0]))
    for start in range(0, taus.size, step):
        chunk = taus[start:start + step]
        E = matrix_exponential(chunk[:, None, None, None] * Z[None])
        out[start:start + step] = E[..., :nu, nu] @ plant.c
    return out / np.sqrt(T)


def kernel_on_uniform_grid(plant: Plant, omegas, T: float, n_intervals: int,
                           block: int = 256) -> np.ndarray:
    """Inner products at tau_k = k T / n_intervals, k = 0..n_intervals.

    The augmented state is advanced by the exact step exponential, so the
    cost per grid point is one small matrix-vector product rather than a
    fresh exponential.  Returns shape ``(n_intervals + 1, len(omegas))``.
    """
    Z = _augmented(plant, omegas)
    nu = plant.nu
    n_w = Z.shape[0]
    delta = T / n_intervals
    block = min(block, n_intervals)
    # powers[k] = exp(k * delta * Z) for k = 1..block
    step = matrix_exponential(delta * Z)
    powers = np.empty((block, n_w, nu + 1, nu + 1), dtype=complex)
    powers[0] = step
    for k in range(1, block):
        powers[k] = powers[k - 1] @ step
    big = matrix_exponential((block * delta) * Z)

    out = np.empty((n_intervals + 1, n_w), dtype=complex)
    out[0] = 0.0
    # v = exp(tau Z) e_{nu+1} at the start of the current block
    v = np.zeros((n_w, nu + 1), dtype=complex)
    v[:, nu] = 1.0
    k = 0
    while k < n_intervals:
        count = min(block, n_intervals - k)
        vs = np.einsum("kwij,wj->kwi", powers[:count], v)
        out[k + 1:k + 1 + count] = vs[..., :nu] @ plant.c
        k += count
        if count == block:
            v = np.einsum("wij,wj->wi", big, v)
    return out / np.sqrt(T)


def response_matrix(plant: Plant, space: SignalSpace, taus) -> np.ndarray:
    """Column m holds the zero-state output at ``taus`` when u = psi_m.

    That output is int kappa(tau, t) psi_m(t) dt, i.e. the inner product
    with psi_{-m}; pairing with psi_m itself would describe the control
    sum_m theta_m conj(psi_m), the time reversal of u.
    """
    return kernel_matrix(plant, taus, -space.omegas, space.T)


def free_response_rows(plant: Plant, taus) -> np.ndarray:
    """Rows c^T exp(tau A); shape ``(len(taus), nu)``."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    E = matrix_exponential(taus[:, None, None] * plant.A[None])
    return np.einsum("i,kij->kj", plant.c, E)


@dataclass(frozen=True)
class OutputOperator:
    """Linear map from (theta, x0) to outputs on a fixed time grid."""

    taus: np.ndarray
    K: np.ndarray   # kernel inner products, (len(taus), N)
    H: np.ndarray   # free-response rows, (len(taus), nu)

    def apply(self, theta, x0, realize: bool = False) -> np.ndarray:
        """Outputs at ``taus``.

        With ``realize`` the control actually applied is Re u, so the output
        is the real part of the linear response; otherwise ``theta`` must be
        conjugate-symmetric.
        """
        values = theta.values if isinstance(theta, CoefVector) else np.asarray(theta)
        z = self.K @ values + self.H @ np.asarray(x0, dtype=float)
        if not realize:
            _check_real(z)
        return z.real


def _is_uniform_from_zero(taus) -> bool:
    if taus.size < 3 or taus[0] != 0.0:
        return False
    step = taus[-1] / (taus.size - 1)
    return step > 0 and np.allclose(np.diff(taus), step, rtol=1e-12, atol=0.0)


def output_operator(plant: Plant, space: SignalSpace, taus) -> OutputOperator:
    taus = space.check_times(np.atleast_1d(taus))
    if _is_uniform_from_zero(taus):
        # one exponential per frequency, then exact stepping along the grid
        K = kernel_on_uniform_grid(plant, -space.omegas, taus[-1], taus.size - 1)
        K *= np.sqrt(taus[-1] / space.T)   # undo the 1/sqrt(horizon) scaling
    else:
        K = response_matrix(plant, space, taus)
    return OutputOperator(taus, K, free_response_rows(plant, taus))


def simulate_output(plant: Plant, theta: CoefVector, space: SignalSpace, tau_grid) -> np.ndarray:
    """Plant output at the times in ``tau_grid`` under the control ``theta``."""
    values = theta.values if isinstance(theta, CoefVector) else np.asarray(theta)
    if values.shape != (space.N,):
        raise DimensionError(f"theta has shape {values.shape}, expected ({space.N},)")
    return output_operator(plant, space, tau_grid).apply(values, plant.x0)


def steady_state_output_coefs(plant: Plant, theta: CoefVector, space: SignalSpace) -> CoefVector:
    """Fourier coefficients P(j omega_m) theta_m of the steady-state output."""
    gains = np.array([transfer(plant, 1j * w).value for w in space.omegas])
    return CoefVector(gains * theta.values, space)
