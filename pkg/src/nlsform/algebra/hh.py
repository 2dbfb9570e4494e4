"""The three sums making up ``d/dt [ sum m^2 w |q|^2 + N(Dq) ]``.

With ``q_t = i dH/d conj(q)`` for ``H = sum w |q|^2 + N`` and ``D`` the
multiplier, the time derivative of the modified energy splits as

    v1 = i sum_n m_n^2 w_n (conj(q_n) dN/dq̄_n(q) - q_n dN/dq_n(q))
    v2 = i sum_n m_n w_n (q_n dN/dq_n(Dq) - conj(q_n) dN/dq̄_n(Dq))
    v3 = i sum_n m_n (dN/dq_n(Dq) dN/dq̄_n(q) - dN/dq_n(q) dN/dq̄_n(Dq))

For ``q`` supported where ``m = 1`` the first two cancel and the third vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fourier_field import FourierField, MultiplierSpec, m_value
from .tensor import RealityViolation, _field_array, gradient_bar, gradient_unbar


@dataclass(frozen=True)
class HHTerms:
    v1: float
    v2: float
    v3: float
    scale: float

    def total(self) -> float:
        return self.v1 + self.v2 + self.v3


def _real(terms: np.ndarray, rtol: float) -> tuple[float, float]:
    val = complex(terms.sum())
    mag = float(np.abs(terms).sum())
    if abs(val.imag) > rtol * mag + 1e-14:
        raise RealityViolation(f"imaginary residual {val.imag:.3e} vs magnitude {mag:.3e}")
    return val.real, mag


def _grads(pieces, q, M):
    gb = np.zeros(2 * M + 1, dtype=complex)
    gu = np.zeros(2 * M + 1, dtype=complex)
    for h in pieces:
        h = h.with_radius(M) if h.M < M else h
        gb += gradient_bar(h, q).coeffs
        gu += gradient_unbar(h, q).coeffs
    return gb, gu


def hh_terms(pieces, q: FourierField, spec: MultiplierSpec, quadratic_weights: np.ndarray, rtol: float = 1e-10) -> HHTerms:
    """``(v1, v2, v3)`` for the homogeneous ``pieces`` (a tensor or a list of them)."""
    if hasattr(pieces, "degree"):
        pieces = [pieces]
    pieces = list(pieces)
    w = np.asarray(quadratic_weights, dtype=float)
    M = (w.size - 1) // 2
    if not pieces:
        return HHTerms(0.0, 0.0, 0.0, 0.0)
    qa = _field_array(q, M)
    m = m_value(spec, np.arange(-M, M + 1))
    Dq = m * qa
    gb, gu = _grads(pieces, qa, M)
    gbD, guD = _grads(pieces, Dq, M)
    v1, s1 = _real(1j * m ** 2 * w * (np.conj(qa) * gb - qa * gu), rtol)
    v2, s2 = _real(1j * m * w * (qa * guD - np.conj(qa) * gbD), rtol)
    v3, s3 = _real(1j * m * (guD * gb - gu * gbD), rtol)
    return HHTerms(v1, v2, v3, s1 + s2 + s3)
