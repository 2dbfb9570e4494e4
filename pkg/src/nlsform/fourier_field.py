"""Truncated Fourier data on the circle.

A :class:`FourierField` stores the coefficients ``q_n`` for ``|n| <= M`` as a
dense complex array ordered ``n = -M, ..., M``.  Everything here is a pure
function of its inputs.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np


class SizingError(ValueError):
    """Raised when a physical grid is too small for the requested field."""


class WeightKind(enum.Enum):
    BRACKET = "bracket"          # <n> = 1 + |n|
    HOMOGENEOUS = "homogeneous"  # |n|


@dataclass(frozen=True)
class FourierField:
    """Fourier coefficients ``q_n`` on ``-M <= n <= M``."""

    M: int
    coeffs: np.ndarray

    def __post_init__(self):
        if int(self.M) < 0:
            raise ValueError("M must be nonnegative")
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (2 * self.M + 1,):
            raise ValueError(f"expected {2 * self.M + 1} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("field coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, M: int) -> "FourierField":
        return cls(M, np.zeros(2 * M + 1, dtype=complex))

    @classmethod
    def from_modes(cls, M: int, modes: dict[int, complex]) -> "FourierField":
        c = np.zeros(2 * M + 1, dtype=complex)
        for n, v in modes.items():
            if abs(n) > M:
                raise ValueError(f"mode {n} outside |n| <= {M}")
            c[n + M] += v
        return cls(M, c)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.M:
            return 0j
        return complex(self.coeffs[n + self.M])

    def resized(self, M: int) -> "FourierField":
        """Zero-pad or truncate to radius ``M``."""
        out = np.zeros(2 * M + 1, dtype=complex)
        k = min(M, self.M)
        out[M - k:M + k + 1] = self.coeffs[self.M - k:self.M + k + 1]
        return FourierField(M, out)

    def conj(self) -> "FourierField":
        return FourierField(self.M, np.conj(self.coeffs))

    def __add__(self, other: "FourierField") -> "FourierField":
        M = max(self.M, other.M)
        return FourierField(M, self.resized(M).coeffs + other.resized(M).coeffs)

    def __sub__(self, other: "FourierField") -> "FourierField":
        return self + (-1.0) * other

    def __mul__(self, a: complex) -> "FourierField":
        return FourierField(self.M, a * self.coeffs)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        entries = [
            [int(n), float(v.real), float(v.imag)]
            for n, v in zip(self.frequencies, self.coeffs)
            if v != 0
        ]
        return {"M": self.M, "coeffs": entries}

    @classmethod
    def from_json(cls, payload: dict | str) -> "FourierField":
        if isinstance(payload, str):
            payload = json.loads(payload)
        M = int(payload["M"])
        c = np.zeros(2 * M + 1, dtype=complex)
        for n, re, im in payload["coeffs"]:
            c[int(n) + M] = complex(float(re), float(im))
        return cls(M, c)


def weights(M: int, kind: WeightKind = WeightKind.BRACKET) -> np.ndarray:
    n = np.abs(np.arange(-M, M + 1)).astype(float)
    if kind is WeightKind.BRACKET:
        return 1.0 + n
    return n


def sobolev_norm(q: FourierField, s: float, kind: WeightKind = WeightKind.BRACKET) -> float:
    """``(sum_n w(n)^{2s} |q_n|^2)^{1/2}`` with ``w`` chosen by ``kind``."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    w = weights(q.M, kind)
    return float(np.sqrt(np.sum(w ** (2 * s) * np.abs(q.coeffs) ** 2)))


def mass(q: FourierField) -> float:
    return float(np.sum(np.abs(q.coeffs) ** 2))


def momentum(q: FourierField) -> float:
    # 2*pi dropped
    return float(np.sum(q.frequencies * np.abs(q.coeffs) ** 2))


@dataclass(frozen=True)
class MultiplierSpec:
    """Cutoff ``N`` and Sobolev index ``s`` of the upside-down multiplier."""

    N: int
    s: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not self.s > 1:
            raise ValueError("s must be > 1")


def m_value(spec: MultiplierSpec, n) -> np.ndarray | float:
    """1 on ``|n| <= N`` and ``(|n|/N)^(s-1)`` beyond."""
    a = np.abs(np.asarray(n, dtype=float))
    out = np.where(a <= spec.N, 1.0, (a / spec.N) ** (spec.s - 1.0))
    return float(out) if out.ndim == 0 else out


def apply_multiplier(q: FourierField, spec: MultiplierSpec) -> FourierField:
    return FourierField(q.M, m_value(spec, q.frequencies) * q.coeffs)


def project_high(q: FourierField, N: int) -> FourierField:
    """Keep only the frequencies ``|n| >= N``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    keep = np.abs(q.frequencies) >= N
    return FourierField(q.M, np.where(keep, q.coeffs, 0))


def to_physical(q: FourierField, gridsize: int) -> np.ndarray:
    """Samples ``u(x_j) = sum_n q_n exp(i n x_j)`` at ``x_j = 2 pi j / gridsize``."""
    if gridsize < 2 * q.M + 1:
        raise SizingError(f"gridsize {gridsize} < 2M+1 = {2 * q.M + 1}")
    spec = np.zeros(gridsize, dtype=complex)
    n = q.frequencies
    spec[n % gridsize] = q.coeffs
    return np.fft.ifft(spec) * gridsize


def from_physical(samples: np.ndarray, M: int | None = None) -> FourierField:
    """Inverse of :func:`to_physical`, truncated to radius ``M``."""
    samples = np.asarray(samples, dtype=complex)
    G = samples.shape[0]
    if M is None:
        M = (G - 1) // 2
    if 2 * M + 1 > G:
        raise SizingError(f"radius {M} not resolvable on {G} samples")
    spec = np.fft.fft(samples) / G
    n = np.arange(-M, M + 1)
    return FourierField(M, spec[n % G])


def random_field(
    M: int,
    rng: np.random.Generator,
    decay: float = 1.0,
    scale: float = 1.0,
) -> FourierField:
    """Gaussian coefficients damped by ``<n>^{-decay}``; handy for tests."""
    z = rng.standard_normal(2 * M + 1) + 1j * rng.standard_normal(2 * M + 1)
    return FourierField(M, scale * z * weights(M) ** (-decay))
