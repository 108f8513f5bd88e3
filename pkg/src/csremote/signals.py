"""Band-limited periodic signals on a finite horizon.

Signals live in the span of the normalized Fourier basis

    psi_m(t) = exp(1j * omega_m * t) / sqrt(T),   omega_m = 2 pi m / T,

for m = -M..M.  Coefficient vectors are stored in ascending-m order, so
entry ``i`` corresponds to ``m = i - M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DimensionError, DomainError

# Tolerance on time arguments that land a hair outside [0, T] through rounding.
_TIME_SLACK = 1e-12


@dataclass(frozen=True)
class SignalSpace:
    """Horizon ``T`` and band index ``M`` of the signal subspace V_M."""

    T: float
    M: int

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"band index M must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "T", float(self.T))

    @property
    def N(self) -> int:
        return 2 * self.M + 1

    @property
    def h(self) -> float:
        """Sampling period T / (N - 1)."""
        return self.T / (self.N - 1)

    @property
    def ms(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.ms / self.T

    def omega(self, m: int) -> float:
        return 2.0 * np.pi * m / self.T

    @property
    def times(self) -> np.ndarray:
        """Sampling instants t_n = (n - 1) h, n = 1..N; t_1 = 0 and t_N = T."""
        t = np.arange(self.N) * self.h
        t[-1] = self.T
        return t

    def index(self, m: int) -> int:
        """Array position of frequency index ``m``."""
        if abs(m) > self.M:
            raise DomainError(f"|m| = {abs(m)} exceeds band index M = {self.M}")
        return int(m) + self.M

    def check_times(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        slack = _TIME_SLACK * max(1.0, self.T)
        if np.any(t < -slack) or np.any(t > self.T + slack):
            raise DomainError(f"times must lie in [0, {self.T}]")
        return np.clip(t, 0.0, self.T)

    def basis(self, t) -> np.ndarray:
        """Matrix of psi_m(t_k); shape ``(len(t), N)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.exp(1j * np.outer(t, self.omegas)) / np.sqrt(self.T)


@dataclass(frozen=True)
class CoefVector:
    """Fourier coefficients theta_m, m = -M..M, of a signal in ``space``."""

    values: np.ndarray
    space: SignalSpace

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.space.N,):
            raise DimensionError(
                f"coefficient vector has shape {v.shape}, expected ({self.space.N},)"
            )
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, m: int) -> complex:
        return self.values[self.space.index(m)]

    def __len__(self) -> int:
        return self.space.N

    @classmethod
    def zeros(cls, space: SignalSpace) -> "CoefVector":
        return cls(np.zeros(space.N, dtype=complex), space)

    @classmethod
    def from_dict(cls, space: SignalSpace, entries: dict) -> "CoefVector":
        v = np.zeros(space.N, dtype=complex)
        for m, value in entries.items():
            v[space.index(m)] = value
        return cls(v, space)


_KINDS = ("sin", "cos", "const")


@dataclass(frozen=True)
class ReferenceSpec:
    """A reference signal given as a list of ``(kind, m, amplitude)`` terms.

    ``kind`` is one of ``"sin"``, ``"cos"`` or ``"const"``; a term
    contributes ``amplitude * sin(omega_m t)``, ``amplitude * cos(omega_m t)``
    or ``amplitude`` respectively.  The frequency index of a ``const`` term
    is ignored.
    """

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        cleaned = []
        for term in self.terms:
            kind, m, amp = term
            if kind not in _KINDS:
                raise DomainError(f"unknown reference term kind {kind!r}")
            if int(m) != m:
                raise DomainError(f"frequency index must be an integer, got {m}")
            cleaned.append((kind, 0 if kind == "const" else int(m), float(amp)))
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def from_terms(cls, terms: Iterable[Sequence]) -> "ReferenceSpec":
        return cls(tuple(tuple(t) for t in terms))

    def validate_for(self, space: SignalSpace) -> None:
        for kind, m, _ in self.terms:
            if abs(m) > space.M:
                raise DomainError(
                    f"reference term {kind}({m}) lies outside band M = {space.M}"
                )

    def __call__(self, t, space: SignalSpace) -> np.ndarray:
        return evaluate_reference(self, space, t)


def evaluate_reference(spec: ReferenceSpec, space: SignalSpace, t) -> np.ndarray:
    """Evaluate the reference at arbitrary times (no horizon check)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for kind, m, amp in spec.terms:
        w = space.omega(m)
        if kind == "sin":
            out = out + amp * np.sin(w * t)
        elif kind == "cos":
            out = out + amp * np.cos(w * t)
        else:
            out = out + amp
    return out


def synthesize(theta: CoefVector, t):
    """Real control signal ``u(t) = Re sum_m theta_m psi_m(t)``.

    Raises DomainError if ``t`` leaves [0, T] or if the imaginary part of the
    sum is not negligible (i.e. ``theta`` is not conjugate-symmetric).
    """
    space = theta.space
    scalar = np.ndim(t) == 0
    tt = space.check_times(np.atleast_1d(t))
    z = space.basis(tt) @ theta.values
    _check_real(z)
    return float(z.real[0]) if scalar else z.real


def _check_real(z: np.ndarray, rtol: float = 1e-6) -> None:
    bad = np.abs(z.imag) > rtol * (1.0 + np.abs(z.real))
    if np.any(bad):
        worst = float(np.max(np.abs(z.imag)))
        raise DomainError(
            f"signal has imaginary residue {worst:.3e}; coefficients are not "
            "conjugate-symmetric"
        )


def sample_reference(spec: ReferenceSpec, space: SignalSpace) -> np.ndarray:
    """The vector r = [r(t_1), ..., r(t_N)]."""
    spec.validate_for(space)
    return evaluate_reference(spec, space, space.times)


def reference_to_coefs(spec: ReferenceSpec, space: SignalSpace) -> CoefVector:
    """Exact Fourier coefficients of a structurally specified reference."""
    spec.validate_for(space)
    v = np.zeros(space.N, dtype=complex)
    root_t = np.sqrt(space.T)
    for kind, m, amp in spec.terms:
        if kind == "const" or (kind == "cos" and m == 0):
            v[space.index(0)] += amp * root_t
        elif kind == "cos":
            v[space.index(m)] += amp * root_t / 2
            v[space.index(-m)] += amp * root_t / 2
        elif m != 0:
            v[space.index(m)] += amp * root_t / 2j
            v[space.index(-m)] -= amp * root_t / 2j
    return CoefVector(v, space)


def coefficients_from_samples(samples, space: SignalSpace) -> np.ndarray:
    """Fourier coefficients of a V_M signal from its N uniform samples.

    The endpoint sample t_N = T duplicates t_1 for a T-periodic signal, so the
    first N - 1 = 2M samples form one period and are transformed with an FFT.
    The frequencies +M and -M alias onto the same bin; that bin is split evenly
    between them.
    """
    x = np.asarray(samples, dtype=float)
    if x.shape != (space.N,):
        raise DimensionError(f"expected {space.N} samples, got shape {x.shape}")
    M = space.M
    F = np.fft.fft(x[:-1]) * np.sqrt(space.T) / (2 * M)
    coefs = np.empty(space.N, dtype=complex)
    coefs[M:2 * M] = F[:M]                 # m = 0..M-1
    coefs[1:M] = F[M + 1:]                 # m = -(M-1)..-1
    coefs[0] = coefs[-1] = F[M] / 2        # m = -M and +M share the Nyquist bin
    return coefs


def measure_sparsity(samples, space: SignalSpace, rel_tol: float = 1e-3):
    """Count the significant Fourier coefficients of a sampled signal.

    Follows the sample / FFT / truncate / count procedure: coefficients with
    magnitude below ``rel_tol`` times the largest magnitude are discarded.

    Returns
    -------
    count : int
    support : ndarray of int
        Frequency indices m of the surviving coefficients, ascending.
    """
    if not 0 < rel_tol < 1:
        raise DomainError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    mag = np.abs(coefficients_from_samples(samples, space))
    peak = mag.max()
    if peak == 0:
        return 0, np.array([], dtype=int)
    support = space.ms[mag >= rel_tol * peak]
    return int(support.size), support


def cardinality(theta, abs_tol: float = 1e-12) -> int:
    """Number of entries with magnitude strictly greater than ``abs_tol``."""
    if abs_tol < 0:
        raise DomainError("abs_tol must be non-negative")
    values = theta.values if isinstance(theta, CoefVector) else np.asarray(theta)
    return int(np.count_nonzero(np.abs(values) > abs_tol))


def l1_bound(theta: CoefVector) -> float:
    """Upper bound on the L1 norm of the synthesized signal.

    With |psi_m(t)| = 1/sqrt(T), integrating over [0, T] gives
    ``int |u| <= sqrt(T) * ||theta||_1``.
    """
    return float(np.sqrt(theta.space.T) * np.abs(theta.values).sum())
