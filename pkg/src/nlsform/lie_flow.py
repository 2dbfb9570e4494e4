"""Time-t maps of ``q_t = i dF/d conj(q)`` by the classical four-stage rule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier_field import FourierField
from .algebra.tensor import HomogeneousHamiltonian, _field_array, gradient_bar

BLOWUP = 1e6


class FlowBlowUp(ArithmeticError):
    """A coefficient left the ``|q_n| <= 1e6`` guard band."""


@dataclass(frozen=True)
class FlowConfig:
    dt: float = 1e-2
    method_order: int = 4

    def __post_init__(self):
        if not 0 < self.dt <= 0.1:
            raise ValueError("dt must be in (0, 0.1]")
        if self.method_order != 4:
            raise ValueError("only the four-stage method is available")


def f_flow_rhs(F, q) -> FourierField:
    """``i dF/d conj(q)``."""
    return FourierField(F.M, 1j * gradient_bar(F, q).coeffs)


def _rhs(F, qa: np.ndarray) -> np.ndarray:
    return 1j * gradient_bar(F, qa).coeffs


def integrate_flow(q0: FourierField, F: HomogeneousHamiltonian, t: float, cfg: FlowConfig = FlowConfig()) -> FourierField:
    """Approximate ``Gamma_t q0``; the step count is ``ceil(|t| / dt)``."""
    M = max(F.M, q0.M)
    F = F.with_radius(M) if hasattr(F, "with_radius") else F
    y = _field_array(q0.resized(M), M).copy()
    if t == 0 or len(F) == 0:
        return FourierField(M, y)
    n = max(1, math.ceil(abs(t) / cfg.dt - 1e-12))
    h = t / n
    for _ in range(n):
        k1 = _rhs(F, y)
        k2 = _rhs(F, y + 0.5 * h * k1)
        k3 = _rhs(F, y + 0.5 * h * k2)
        k4 = _rhs(F, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.abs(y).max() > BLOWUP:
            raise FlowBlowUp("flow left the guard band; check the generator")
    return FourierField(M, y)


def lie_transform(q: FourierField, F, cfg: FlowConfig = FlowConfig(), inverse: bool = False) -> FourierField:
    """Time-1 map of the ``F`` flow (time -1 when ``inverse``)."""
    return integrate_flow(q, F, -1.0 if inverse else 1.0, cfg)
