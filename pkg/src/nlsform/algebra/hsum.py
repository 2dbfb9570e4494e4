"""Quadratic part plus tagged homogeneous pieces."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..fourier_field import FourierField
from .tensor import (
    HomogeneousHamiltonian,
    RealityViolation,
    _field_array,
    class_D,
    evaluate_complex,
    free_weights,
    gradient_bar as _gbar,
    gradient_unbar as _gunbar,
)


class Tag(enum.Enum):
    RESONANT = "resonant"
    NONRESONANT = "nonresonant"
    REMAINDER = "remainder"


@dataclass(frozen=True)
class Piece:
    h: HomogeneousHamiltonian
    tag: Tag


@dataclass(frozen=True)
class OverflowRecord:
    """A bracket term above the degree cap, kept unevaluated.

    ``l1_bound`` bounds the l1 class-coefficient mass of the term, so the
    value of the term at ``q`` is at most ``l1_bound * max|q_n|^degree``.
    """

    degree: int
    l1_bound: float
    origin: str

    def to_json(self) -> dict:
        return {"degree": self.degree, "l1_bound": self.l1_bound, "origin": self.origin}


@dataclass(frozen=True)
class HamiltonianSum:
    """``sum_n w_n |q_n|^2`` plus tagged homogeneous pieces on one lattice."""

    M: int
    quadratic_weights: np.ndarray
    pieces: tuple[Piece, ...] = ()
    K: float | None = None
    overflow: tuple[OverflowRecord, ...] = field(default=())

    def __post_init__(self):
        w = np.array(self.quadratic_weights, dtype=float)
        if w.shape != (2 * self.M + 1,) or not np.all(np.isfinite(w)):
            raise ValueError("quadratic weights must be finite, one per frequency")
        w.setflags(write=False)
        object.__setattr__(self, "quadratic_weights", w)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "overflow", tuple(self.overflow))
        for p in self.pieces:
            if p.h.M != self.M:
                raise ValueError(f"piece radius {p.h.M} differs from {self.M}")

    def with_pieces(self, pieces, **kw) -> "HamiltonianSum":
        return replace(self, pieces=tuple(pieces), **kw)

    def tagged(self, tag: Tag) -> list[HomogeneousHamiltonian]:
        return [p.h for p in self.pieces if p.tag is tag]

    def merged(self, tag: Tag) -> dict[int, HomogeneousHamiltonian]:
        """Pieces of one tag summed per degree."""
        out: dict[int, HomogeneousHamiltonian] = {}
        for h in self.tagged(tag):
            out[h.degree] = out[h.degree] + h if h.degree in out else h
        return dict(sorted(out.items()))

    def audit(self) -> list[str]:
        """Tag/threshold violations (empty when consistent)."""
        problems = []
        if self.K is None:
            return problems
        for i, p in enumerate(self.pieces):
            D = np.abs(class_D(p.h))
            if p.tag is Tag.RESONANT and np.any(D > self.K):
                problems.append(f"piece {i}: resonant class with |D| > {self.K}")
            if p.tag is Tag.NONRESONANT and np.any(D <= self.K):
                problems.append(f"piece {i}: nonresonant class with |D| <= {self.K}")
        return problems

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, q, rtol: float = 1e-10, tags=None) -> float:
        qa = _field_array(q, self.M)
        total = complex(np.sum(self.quadratic_weights * np.abs(qa) ** 2))
        mag = abs(total)
        for p in self.pieces:
            if tags is not None and p.tag not in tags:
                continue
            v, m = evaluate_complex(p.h, qa)
            total += v
            mag += m
        if abs(total.imag) > rtol * mag + 1e-14:
            raise RealityViolation(f"imaginary residual {total.imag:.3e} vs magnitude {mag:.3e}")
        return total.real

    def gradient_bar(self, q) -> FourierField:
        qa = _field_array(q, self.M)
        g = self.quadratic_weights * qa
        for p in self.pieces:
            g = g + _gbar(p.h, qa).coeffs
        return FourierField(self.M, g)

    def gradient_unbar(self, q) -> FourierField:
        qa = _field_array(q, self.M)
        g = self.quadratic_weights * np.conj(qa)
        for p in self.pieces:
            g = g + _gunbar(p.h, qa).coeffs
        return FourierField(self.M, g)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "K": self.K,
            "quadratic_weights": [float(x) for x in self.quadratic_weights],
            "pieces": [{"tag": p.tag.value, "tensor": p.h.to_json()} for p in self.pieces],
            "overflow": [o.to_json() for o in self.overflow],
        }

    @classmethod
    def from_json(cls, payload: dict | str) -> "HamiltonianSum":
        if isinstance(payload, str):
            payload = json.loads(payload)
        pieces = [Piece(HomogeneousHamiltonian.from_json(p["tensor"]), Tag(p["tag"])) for p in payload["pieces"]]
        overflow = [OverflowRecord(int(o["degree"]), float(o["l1_bound"]), str(o["origin"])) for o in payload.get("overflow", [])]
        K = payload.get("K")
        return cls(int(payload["M"]), np.array(payload["quadratic_weights"]), pieces, None if K is None else float(K), overflow)


def make_quadratic(weights=None, M: int | None = None, mu: float = 0.0) -> HamiltonianSum:
    """``sum_n w_n |q_n|^2``; defaults to ``w_n = n^2 + 2 mu``."""
    if weights is None:
        if M is None:
            raise ValueError("give weights or M")
        weights = free_weights(M, mu)
    w = np.asarray(weights, dtype=float)
    return HamiltonianSum((w.size - 1) // 2, w)


def split_into_sum(
    quadratic_weights: np.ndarray,
    pieces: list[HomogeneousHamiltonian],
    K: float,
) -> HamiltonianSum:
    """Tag each piece's classes by ``|D| <= K``."""
    from .tensor import split_resonant

    M = (len(quadratic_weights) - 1) // 2
    out = []
    for h in pieces:
        res, non = split_resonant(h.with_radius(M), K)
        if len(res):
            out.append(Piece(res, Tag.RESONANT))
        if len(non):
            out.append(Piece(non, Tag.NONRESONANT))
    return HamiltonianSum(M, quadratic_weights, out, K)
