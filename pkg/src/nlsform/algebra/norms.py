"""Certified upper and witness lower bounds for the multilinear size norm.

The size of ``N = sum c(n) q_{n_1} conj(q_{n_2}) ...`` is the supremum of
``sum |c(n)| prod_j |q^(j)_{n_j}|`` over factors that all have l2 norm at most
``C1`` and, except for at most two exceptional slots, H^1 norm at most ``C2``
(weight ``<n> = 1 + |n|``).  Raw coefficients are the class coefficients spread
uniformly over distinct orderings, so the surrogate only depends on which
*kinds* of slots (unconjugated / conjugated) are exceptional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import HomogeneousHamiltonian


@dataclass(frozen=True)
class NormBounds:
    lower: float
    upper: float
    C1: float
    C2: float

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper * (1 + 1e-12) + 1e-300:
            raise ValueError(f"inconsistent bounds {self.lower} > {self.upper}")


def _cap(M: int, C1: float, C2: float) -> np.ndarray:
    """Pointwise bound on a factor obeying both budgets."""
    n = np.arange(-M, M + 1)
    return np.minimum(C1, C2 / (1.0 + np.abs(n)))


def _pair_types(r: int) -> list[str]:
    types = ["oe"]
    if r >= 2:
        types += ["oo", "ee"]
    return types


def exceptional_matrices(h: HomogeneousHamiltonian, C1: float, C2: float) -> dict[str, np.ndarray]:
    """``B(x, y)``: weight carried by tuples with the exceptional pair at ``(x, y)``.

    Keys ``oe``, ``oo``, ``ee`` give the slot kinds of the exceptional pair.
    """
    M, r = h.M, h.r
    L = 2 * M + 1
    w = _cap(M, C1, C2)
    out = {t: np.zeros((L, L)) for t in _pair_types(r)}
    if len(h) == 0:
        return out
    a = np.abs(h.coeffs)
    wo = w[h.odd + M]
    we = w[h.even + M]
    total = np.prod(wo, axis=1) * np.prod(we, axis=1) * a
    for kind in out:
        if kind == "oe":
            X, Y, WX, WY, norm = h.odd, h.even, wo, we, r * r
            pairs = [(i, k) for i in range(r) for k in range(r)]
        else:
            side, ws = (h.odd, wo) if kind == "oo" else (h.even, we)
            X, Y, WX, WY, norm = side, side, ws, ws, r * (r - 1)
            pairs = [(i, k) for i in range(r) for k in range(r) if i != k]
        B = out[kind]
        for i, k in pairs:
            vals = total / (WX[:, i] * WY[:, k]) / norm
            np.add.at(B, (X[:, i] + M, Y[:, k] + M), vals)
    return out


def norm_upper_bound(h: HomogeneousHamiltonian, C1: float = 1.0, C2: float = 1.0) -> float:
    """``max`` over exceptional-pair kinds of ``C1^2 * sigma_max(B)``.

    Non-exceptional factors obey ``|q_n| <= min(C1, C2/<n>)``; Cauchy-Schwarz in
    the exceptional pair gives the singular-value bound.
    """
    if C1 <= 0 or C2 <= 0:
        raise ValueError("budgets must be positive")
    if len(h) == 0:
        return 0.0
    mats = exceptional_matrices(h, C1, C2)
    return float(C1 ** 2 * max(np.linalg.norm(B, 2) for B in mats.values()))


# ----------------------------------------------------------------------------
# witness search


def _best_exceptional(g: np.ndarray, C1: float) -> np.ndarray:
    nrm = np.linalg.norm(g)
    return C1 * g / nrm if nrm > 0 else np.zeros_like(g)


def _best_regular(g: np.ndarray, jb: np.ndarray, C1: float, C2: float) -> np.ndarray:
    """Maximize ``g . v`` over ``v >= 0, |v| <= C1, |<n> v| <= C2``.

    The maximizer is ``g / (a + b <n>^2)`` up to scale; scan the ratio and keep
    the best feasible candidate.
    """
    if not np.any(g > 0):
        return np.zeros_like(g)

    def candidate(t):
        v = g / ((1.0 - t) + t * jb ** 2)
        s = min(C1 / np.linalg.norm(v), C2 / np.linalg.norm(jb * v))
        return v * s

    ts = np.linspace(0.0, 1.0, 41)
    vals = [g @ candidate(t) for t in ts]
    k = int(np.argmax(vals))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
    gr = (np.sqrt(5) - 1) / 2
    for _ in range(40):
        m1 = hi - gr * (hi - lo)
        m2 = lo + gr * (hi - lo)
        if g @ candidate(m1) < g @ candidate(m2):
            lo = m1
        else:
            hi = m2
    best = max([ts[k], 0.5 * (lo + hi)], key=lambda t: g @ candidate(t))
    return candidate(best)


def norm_lower_bound(
    h: HomogeneousHamiltonian,
    C1: float = 1.0,
    C2: float = 1.0,
    iters: int = 10,
    seed: int = 0,
    max_rows: int = 2_000_000,
) -> float:
    """Objective value at the best feasible factors found by block ascent.

    Every candidate is feasible, so the result never exceeds the supremum (and
    hence :func:`norm_upper_bound`).  Deterministic for a given ``seed``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if len(h) == 0:
        return 0.0
    tuples, coeffs = h.raw_tuples(max_rows=max_rows)
    wts = np.abs(coeffs)
    M, r = h.M, h.r
    L, width = 2 * M + 1, 2 * r
    idx = tuples + M
    jb = 1.0 + np.abs(np.arange(-M, M + 1))
    rng = np.random.default_rng(seed)
    pairs = {"oe": (0, 1), "oo": (0, 2), "ee": (1, 3)}
    best = 0.0
    for kind in _pair_types(r):
        exc = set(pairs[kind])
        v = []
        for j in range(width):
            g = rng.uniform(0.5, 1.5, L)
            v.append(_best_exceptional(g, C1) if j in exc else _best_regular(g, jb, C1, C2))
        for _ in range(iters):
            for j in range(width):
                prod = wts.copy()
                for i in range(width):
                    if i != j:
                        prod *= v[i][idx[:, i]]
                g = np.bincount(idx[:, j], weights=prod, minlength=L)
                v[j] = _best_exceptional(g, C1) if j in exc else _best_regular(g, jb, C1, C2)
            val = wts.copy()
            for i in range(width):
                val *= v[i][idx[:, i]]
            best = max(best, float(val.sum()))
    return best


def norm_bounds(h: HomogeneousHamiltonian, C1: float = 1.0, C2: float = 1.0, iters: int = 10, seed: int = 0) -> NormBounds:
    return NormBounds(norm_lower_bound(h, C1, C2, iters, seed), norm_upper_bound(h, C1, C2), C1, C2)
