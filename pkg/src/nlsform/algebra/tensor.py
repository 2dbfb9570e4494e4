"""Sparse homogeneous multilinear Hamiltonians on the frequency lattice.

A homogeneous piece of degree ``2r`` is

    sum c(n_1, ..., n_2r) q_{n_1} conj(q_{n_2}) ... q_{n_{2r-1}} conj(q_{n_2r})

over tuples with ``n_1 - n_2 + ... - n_2r = 0``.  The monomial depends only on
the multiset of unconjugated ("odd") indices and the multiset of conjugated
("even") indices, so raw tuples are merged into canonical classes keyed by the
two sorted multisets.  A class coefficient is the sum of the raw coefficients
it absorbs.  When raw coefficients are needed again (size norms, raw-tuple
oracles) a class coefficient is spread uniformly over its distinct orderings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations

import numpy as np

from ..fourier_field import FourierField, MultiplierSpec, m_value

PRUNE_RELATIVE = 1e-15


class RealityViolation(ArithmeticError):
    """Evaluation produced an imaginary part far above rounding level."""


class ResonantClassError(ValueError):
    """A class with zero phase divisor reached the homological solver."""


# ----------------------------------------------------------------------------
# canonical keys


def _fits_int64(L: int, width: int) -> bool:
    return L ** width < 2 ** 62


def _encode(rows: np.ndarray, M: int) -> np.ndarray | None:
    """Horner-encode digit rows ``n + M`` in base ``2M + 1``; None on overflow."""
    L = 2 * M + 1
    width = rows.shape[1]
    if not _fits_int64(L, width):
        return None
    keys = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(width):
        keys = keys * L + (rows[:, j].astype(np.int64) + M)
    return keys


def _decode(keys: np.ndarray, M: int, width: int) -> np.ndarray:
    L = 2 * M + 1
    out = np.empty((keys.shape[0], width), dtype=np.int64)
    k = keys.copy()
    for j in range(width - 1, -1, -1):
        out[:, j] = k % L - M
        k //= L
    return out


def merge_rows(rows: np.ndarray, coeffs: np.ndarray, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Sum coefficients of identical rows; rows come back lexicographically sorted."""
    width = rows.shape[1]
    if rows.shape[0] == 0:
        return np.zeros((0, width), dtype=np.int64), np.zeros(0, dtype=complex)
    keys = _encode(rows, M)
    if keys is not None:
        uniq, inv = np.unique(keys, return_inverse=True)
        out_rows = _decode(uniq, M, width)
    else:
        out_rows, inv = np.unique(rows, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    n = out_rows.shape[0]
    re = np.bincount(inv, weights=coeffs.real, minlength=n)
    im = np.bincount(inv, weights=coeffs.imag, minlength=n)
    return out_rows, re + 1j * im


# ----------------------------------------------------------------------------
# the tensor type


@dataclass(frozen=True, eq=False)
class HomogeneousHamiltonian:
    """Canonical-class representation of a degree ``2r`` piece.

    ``odd`` and ``even`` are ``(C, r)`` integer arrays of sorted rows, classes
    ordered lexicographically by ``(odd, even)``.  Construct through
    :meth:`from_classes` or :meth:`from_tuples`, which canonicalize.
    """

    M: int
    degree: int
    odd: np.ndarray
    even: np.ndarray
    coeffs: np.ndarray
    pruned_mass: float = field(default=0.0)

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls, M: int, degree: int) -> "HomogeneousHamiltonian":
        r = degree // 2
        z = np.zeros((0, r), dtype=np.int64)
        return cls(M, degree, z, z.copy(), np.zeros(0, dtype=complex))

    @classmethod
    def from_classes(cls, M, odd, even, coeffs, pruned_mass=0.0) -> "HomogeneousHamiltonian":
        odd = np.sort(np.asarray(odd, dtype=np.int64), axis=1)
        even = np.sort(np.asarray(even, dtype=np.int64), axis=1)
        if odd.shape != even.shape:
            raise ValueError("odd and even multisets must have equal size")
        r = odd.shape[1]
        if r < 1:
            raise ValueError("degree must be at least 2")
        if odd.size and (np.abs(odd).max() > M or np.abs(even).max() > M):
            raise ValueError(f"index outside |n| <= {M}")
        if np.any(odd.sum(axis=1) != even.sum(axis=1)):
            raise ValueError("tuple violates the zero alternating-sum constraint")
        coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        rows, c = merge_rows(np.hstack([odd, even]), coeffs, M)
        keep = c != 0
        rows, c = rows[keep], c[keep]
        return cls(M, 2 * r, rows[:, :r].copy(), rows[:, r:].copy(), c, pruned_mass)

    @classmethod
    def from_tuples(cls, M, tuples, coeffs=None) -> "HomogeneousHamiltonian":
        """Merge raw ordered tuples ``(n_1, n_2, ..., n_2r)`` into classes."""
        t = np.atleast_2d(np.asarray(tuples, dtype=np.int64))
        if t.shape[1] % 2 or t.shape[1] < 2:
            raise ValueError("tuples must have even length >= 2")
        if coeffs is None:
            coeffs = np.ones(t.shape[0])
        return cls.from_classes(M, t[:, 0::2], t[:, 1::2], coeffs)

    # -- basic protocol -----------------------------------------------------

    @property
    def r(self) -> int:
        return self.degree // 2

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def rows(self) -> np.ndarray:
        return np.hstack([self.odd, self.even])

    def keys(self) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        return [(tuple(map(int, a)), tuple(map(int, b))) for a, b in zip(self.odd, self.even)]

    def as_dict(self) -> dict:
        return dict(zip(self.keys(), self.coeffs.tolist()))

    def coefficient(self, odd, even) -> complex:
        """Class coefficient of the multisets ``odd``/``even`` (0 if absent)."""
        row = np.concatenate([np.sort(odd), np.sort(even)])[None, :]
        idx = self._locate(row)
        return complex(self.coeffs[idx[0]]) if idx[0] >= 0 else 0j

    def _locate(self, rows: np.ndarray) -> np.ndarray:
        """Index of each row among this tensor's classes, -1 if absent."""
        if len(self) == 0:
            return -np.ones(rows.shape[0], dtype=np.int64)
        mine = _encode(self.rows(), self.M)
        theirs = _encode(rows, self.M)
        if mine is None:
            table = {tuple(r): i for i, r in enumerate(self.rows().tolist())}
            return np.array([table.get(tuple(r), -1) for r in rows.tolist()], dtype=np.int64)
        pos = np.searchsorted(mine, theirs)
        pos = np.clip(pos, 0, len(mine) - 1)
        return np.where(mine[pos] == theirs, pos, -1)

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if len(self) else 0.0

    def l1(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def _with(self, coeffs, mask=None, pruned_mass=None) -> "HomogeneousHamiltonian":
        odd, even = self.odd, self.even
        if mask is not None:
            odd, even, coeffs = odd[mask], even[mask], coeffs[mask]
        pm = self.pruned_mass if pruned_mass is None else pruned_mass
        return HomogeneousHamiltonian(self.M, self.degree, odd, even, coeffs, pm)

    def scale(self, a: complex) -> "HomogeneousHamiltonian":
        if a == 0:
            return HomogeneousHamiltonian.empty(self.M, self.degree)
        return self._with(self.coeffs * a)

    def __mul__(self, a):
        return self.scale(a)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def __add__(self, other: "HomogeneousHamiltonian") -> "HomogeneousHamiltonian":
        if other.degree != self.degree:
            raise ValueError(f"cannot add degree {self.degree} and {other.degree}")
        M = max(self.M, other.M)
        out = HomogeneousHamiltonian.from_classes(
            M,
            np.vstack([self.odd, other.odd]),
            np.vstack([self.even, other.even]),
            np.concatenate([self.coeffs, other.coeffs]),
            self.pruned_mass + other.pruned_mass,
        )
        return out

    def __sub__(self, other):
        return self + (-other)

    def restrict(self, mask: np.ndarray) -> "HomogeneousHamiltonian":
        return self._with(self.coeffs, mask=np.asarray(mask, dtype=bool))

    def with_radius(self, M: int) -> "HomogeneousHamiltonian":
        """Same classes on a larger lattice (or pruned to a smaller one)."""
        if M >= self.M:
            return HomogeneousHamiltonian(M, self.degree, self.odd, self.even, self.coeffs, self.pruned_mass)
        inside = (np.abs(self.odd).max(axis=1, initial=0) <= M) & (np.abs(self.even).max(axis=1, initial=0) <= M)
        t = self.restrict(inside)
        return HomogeneousHamiltonian(M, t.degree, t.odd, t.even, t.coeffs, t.pruned_mass)

    def prune(self, rel: float = PRUNE_RELATIVE) -> "HomogeneousHamiltonian":
        """Drop classes with ``|c| <= rel * max|c|``; removed mass is recorded."""
        if len(self) == 0:
            return self
        a = np.abs(self.coeffs)
        keep = a > rel * a.max()
        if keep.all():
            return self
        return self._with(self.coeffs, mask=keep, pruned_mass=self.pruned_mass + float(a[~keep].sum()))

    # -- reality ------------------------------------------------------------

    def swapped_index(self) -> np.ndarray:
        """For each class ``(A, B)``, the index of ``(B, A)`` or -1."""
        return self._locate(np.hstack([self.even, self.odd]))

    def reality_defect(self) -> float:
        """``max |c(A,B) - conj c(B,A)|`` relative to ``max |c|``."""
        if len(self) == 0:
            return 0.0
        idx = self.swapped_index()
        partner = np.where(idx >= 0, np.conj(self.coeffs[np.maximum(idx, 0)]), 0)
        return float(np.abs(self.coeffs - partner).max() / self.max_abs())

    def is_real(self, tol: float = 1e-12) -> bool:
        return self.reality_defect() <= tol

    def symmetrized(self) -> "HomogeneousHamiltonian":
        """Project onto reality-symmetric tensors: ``c <- (c(A,B) + conj c(B,A)) / 2``."""
        if len(self) == 0:
            return self
        both = HomogeneousHamiltonian.from_classes(
            self.M,
            np.vstack([self.odd, self.even]),
            np.vstack([self.even, self.odd]),
            np.concatenate([self.coeffs, np.conj(self.coeffs)]) / 2,
            self.pruned_mass,
        )
        return both

    def conj(self) -> "HomogeneousHamiltonian":
        """The tensor of the complex-conjugate function."""
        return HomogeneousHamiltonian.from_classes(
            self.M, self.even, self.odd, np.conj(self.coeffs), self.pruned_mass
        )

    # -- raw orderings ------------------------------------------------------

    def ordering_counts(self) -> np.ndarray:
        """Number of distinct ordered tuples in each class."""
        return _distinct_perms(self.odd) * _distinct_perms(self.even)

    def raw_tuples(self, max_rows: int = 5_000_000) -> tuple[np.ndarray, np.ndarray]:
        """All ordered tuples with the uniformly spread raw coefficients.

        Returns ``(tuples, coeffs)`` where ``tuples`` has shape ``(R, 2r)`` in
        the interleaved layout ``(n_1, n_2, ...)``.  Position permutations are
        enumerated with weight ``1/(r!)^2`` which equals uniform spreading over
        distinct orderings; rows are then merged.
        """
        r = self.r
        perms = list(permutations(range(r)))
        total = len(self) * len(perms) ** 2
        if total > max_rows:
            raise MemoryError(f"raw expansion needs {total} rows (> {max_rows})")
        blocks, coefs = [], []
        w = self.coeffs / (len(perms) ** 2)
        for po in perms:
            o = self.odd[:, po]
            for pe in perms:
                e = self.even[:, pe]
                t = np.empty((len(self), 2 * r), dtype=np.int64)
                t[:, 0::2] = o
                t[:, 1::2] = e
                blocks.append(t)
                coefs.append(w)
        if not blocks:
            return np.zeros((0, 2 * r), dtype=np.int64), np.zeros(0, dtype=complex)
        return merge_rows(np.vstack(blocks), np.concatenate(coefs), self.M)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "M": self.M,
            "entries": [
                {"odd": list(map(int, a)), "even": list(map(int, b)), "re": float(c.real), "im": float(c.imag)}
                for a, b, c in zip(self.odd, self.even, self.coeffs)
            ],
        }

    @classmethod
    def from_json(cls, payload: dict | str) -> "HomogeneousHamiltonian":
        if isinstance(payload, str):
            payload = json.loads(payload)
        M, degree = int(payload["M"]), int(payload["degree"])
        entries = payload["entries"]
        if not entries:
            return cls.empty(M, degree)
        odd = [e["odd"] for e in entries]
        even = [e["even"] for e in entries]
        c = [complex(e["re"], e["im"]) for e in entries]
        out = cls.from_classes(M, odd, even, c)
        if out.degree != degree:
            raise ValueError("degree field disagrees with entries")
        return out

    def __repr__(self) -> str:
        return f"HomogeneousHamiltonian(degree={self.degree}, M={self.M}, classes={len(self)})"


def _distinct_perms(rows: np.ndarray) -> np.ndarray:
    """Multinomial ``r! / prod(mult!)`` per sorted row."""
    C, r = rows.shape
    out = np.full(C, math.factorial(r), dtype=np.int64)
    if r <= 1:
        return out
    run = np.ones(C, dtype=np.int64)
    for j in range(1, r):
        same = rows[:, j] == rows[:, j - 1]
        run = np.where(same, run + 1, 1)
        out //= np.where(same, run, 1)
    return out


def max_abs_difference(a: HomogeneousHamiltonian, b: HomogeneousHamiltonian) -> float:
    """Classwise sup-norm of ``a - b`` (no pruning)."""
    if a.degree != b.degree:
        return max(a.max_abs(), b.max_abs())
    M = max(a.M, b.M)
    rows, c = merge_rows(
        np.vstack([a.rows(), b.rows()]), np.concatenate([a.coeffs, -b.coeffs]), M
    )
    return float(np.abs(c).max()) if c.size else 0.0


# ----------------------------------------------------------------------------
# constructors


def quadratic_tensor(weights: np.ndarray, M: int) -> HomogeneousHamiltonian:
    """``sum_n w_n |q_n|^2`` as a degree-2 tensor (``weights`` over ``-M..M``)."""
    w = np.asarray(weights, dtype=float)
    n = np.arange(-M, M + 1)
    keep = w != 0
    return HomogeneousHamiltonian.from_classes(M, n[keep, None], n[keep, None], w[keep])


def mass_tensor(M: int) -> HomogeneousHamiltonian:
    return quadratic_tensor(np.ones(2 * M + 1), M)


def free_weights(M: int, mu: float = 0.0) -> np.ndarray:
    n = np.arange(-M, M + 1, dtype=float)
    return n ** 2 + 2.0 * mu


def _multisets_by_sum(values: range, size: int) -> dict[int, list[tuple[int, ...]]]:
    out: dict[int, list[tuple[int, ...]]] = {}
    for ms in combinations_with_replacement(values, size):
        out.setdefault(sum(ms), []).append(ms)
    return out


def make_nls_nonlinearity(p: int, M: int) -> HomogeneousHamiltonian:
    """All-ones tensor of degree ``2p + 2`` on ``|n| <= M``.

    Each class coefficient equals the number of raw tuples it merges.
    """
    if p < 1 or M < 1:
        raise ValueError("need p >= 1 and M >= 1")
    r = p + 1
    groups = _multisets_by_sum(range(-M, M + 1), r)
    odd, even = [], []
    for ms in groups.values():
        for a in ms:
            for b in ms:
                odd.append(a)
                even.append(b)
    odd = np.array(odd, dtype=np.int64)
    even = np.array(even, dtype=np.int64)
    c = (_distinct_perms(odd) * _distinct_perms(even)).astype(float)
    return HomogeneousHamiltonian.from_classes(M, odd, even, c)


def random_tensor(
    M: int,
    degree: int,
    n_classes: int,
    rng: np.random.Generator,
    nonresonant: bool = False,
    real: bool = True,
) -> HomogeneousHamiltonian:
    """Random sparse tensor with Gaussian complex coefficients (test helper)."""
    r = degree // 2
    odd_rows, even_rows = [], []
    tries = 0
    while len(odd_rows) < n_classes and tries < 200 * n_classes:
        tries += 1
        a = rng.integers(-M, M + 1, size=r)
        b = rng.integers(-M, M + 1, size=r - 1)
        last = a.sum() - b.sum()
        if abs(last) > M:
            continue
        b = np.append(b, last)
        if nonresonant and (a ** 2).sum() == (b ** 2).sum():
            continue
        odd_rows.append(a)
        even_rows.append(b)
    c = rng.standard_normal(len(odd_rows)) + 1j * rng.standard_normal(len(odd_rows))
    h = HomogeneousHamiltonian.from_classes(M, np.array(odd_rows).reshape(-1, r), np.array(even_rows).reshape(-1, r), c)
    return h.symmetrized() if real else h


# ----------------------------------------------------------------------------
# evaluation and gradients


def _field_array(q: FourierField | np.ndarray, M: int) -> np.ndarray:
    if isinstance(q, FourierField):
        if q.M > M:
            raise ValueError(f"field radius {q.M} exceeds lattice radius {M}")
        return q.resized(M).coeffs
    q = np.asarray(q, dtype=complex)
    if q.shape != (2 * M + 1,):
        raise ValueError("coefficient array does not match lattice radius")
    return q


def _factors(h: HomogeneousHamiltonian, q: np.ndarray) -> np.ndarray:
    """``(C, 2r)`` matrix of factor values: q at odd slots, conj(q) at even."""
    return np.hstack([q[h.odd + h.M], np.conj(q)[h.even + h.M]])


def monomials(h: HomogeneousHamiltonian, q) -> np.ndarray:
    qa = _field_array(q, h.M)
    if len(h) == 0:
        return np.zeros(0, dtype=complex)
    return np.prod(_factors(h, qa), axis=1)


def evaluate_complex(h: HomogeneousHamiltonian, q) -> tuple[complex, float]:
    """Raw complex value and the magnitude ``sum |c * monomial|``."""
    terms = h.coeffs * monomials(h, q)
    return complex(terms.sum()), float(np.abs(terms).sum())


def evaluate(h, q, rtol: float = 1e-10) -> float:
    """Value of a real Hamiltonian (tensor or :class:`HamiltonianSum`) at ``q``.

    Raises :class:`RealityViolation` when the imaginary residual exceeds
    ``rtol`` times the magnitude of the sum.
    """
    if hasattr(h, "pieces"):
        return h.evaluate(q, rtol=rtol)
    val, mag = evaluate_complex(h, q)
    if abs(val.imag) > rtol * mag + 1e-14:
        raise RealityViolation(f"imaginary residual {val.imag:.3e} vs magnitude {mag:.3e}")
    return val.real


def _leave_one_out(F: np.ndarray) -> np.ndarray:
    """``out[:, j] = prod_{i != j} F[:, i]`` without division."""
    C, w = F.shape
    left = np.ones((C, w + 1), dtype=complex)
    right = np.ones((C, w + 1), dtype=complex)
    for j in range(w):
        left[:, j + 1] = left[:, j] * F[:, j]
        right[:, w - j - 1] = right[:, w - j] * F[:, w - j - 1]
    return left[:, :w] * right[:, 1:]


def _gradient(h: HomogeneousHamiltonian, q, conjugated: bool) -> np.ndarray:
    qa = _field_array(q, h.M)
    out = np.zeros(2 * h.M + 1, dtype=complex)
    if len(h) == 0:
        return out
    loo = _leave_one_out(_factors(h, qa)) * h.coeffs[:, None]
    r = h.r
    cols = range(r, 2 * r) if conjugated else range(r)
    side = h.even if conjugated else h.odd
    L = 2 * h.M + 1
    for k, j in enumerate(cols):
        idx = side[:, k] + h.M
        out += np.bincount(idx, weights=loo[:, j].real, minlength=L)
        out += 1j * np.bincount(idx, weights=loo[:, j].imag, minlength=L)
    return out


def gradient_bar(h, q) -> FourierField:
    """``dH/d conj(q_n)`` for a tensor or a :class:`HamiltonianSum`."""
    if hasattr(h, "pieces"):
        return h.gradient_bar(q)
    return FourierField(h.M, _gradient(h, q, conjugated=True))


def gradient_unbar(h, q) -> FourierField:
    """``dH/d q_n`` for a tensor or a :class:`HamiltonianSum`."""
    if hasattr(h, "pieces"):
        return h.gradient_unbar(q)
    return FourierField(h.M, _gradient(h, q, conjugated=False))


# ----------------------------------------------------------------------------
# phase divisors and multiplier-weighted variants (all multiset functions)


def D_value(t) -> int:
    t = np.asarray(t, dtype=np.int64)
    return int((t[0::2] ** 2).sum() - (t[1::2] ** 2).sum())


def R_value(t, spec: MultiplierSpec) -> float:
    t = np.asarray(t, dtype=float)
    w = m_value(spec, t) ** 2 * t ** 2
    return float(w[0::2].sum() - w[1::2].sum())


def R_tilde_value(t, spec: MultiplierSpec, mu: float) -> float:
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    t = np.asarray(t, dtype=float)
    w = m_value(spec, t) ** 2 * (t ** 2 + 2.0 * mu)
    return float(w[0::2].sum() - w[1::2].sum())


def Ds_value(t, s: float) -> float:
    """``sum_j (-1)^j |n_j|^{2s}`` with ``j`` counted from 1 (odd slots negative)."""
    t = np.abs(np.asarray(t, dtype=float)) ** (2 * s)
    return float(t[1::2].sum() - t[0::2].sum())


def class_D(h: HomogeneousHamiltonian) -> np.ndarray:
    return (h.odd ** 2).sum(axis=1) - (h.even ** 2).sum(axis=1)


def class_weighted_divisor(h: HomogeneousHamiltonian, weights: np.ndarray) -> np.ndarray:
    """``sum_odd w(n) - sum_even w(n)`` per class for weights over ``-M..M``."""
    w = np.asarray(weights, dtype=float)
    return w[h.odd + h.M].sum(axis=1) - w[h.even + h.M].sum(axis=1)


def class_R(h: HomogeneousHamiltonian, spec: MultiplierSpec, mu: float = 0.0) -> np.ndarray:
    n = np.arange(-h.M, h.M + 1, dtype=float)
    return class_weighted_divisor(h, m_value(spec, n) ** 2 * (n ** 2 + 2.0 * mu))


# ----------------------------------------------------------------------------
# resonance splitting and the homological equation


def split_resonant(h: HomogeneousHamiltonian, K: float) -> tuple[HomogeneousHamiltonian, HomogeneousHamiltonian]:
    """Partition classes by ``|D| <= K`` (resonant) versus ``|D| > K``."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    res = np.abs(class_D(h)) <= K
    return h.restrict(res), h.restrict(~res)


def homological_solve(h: HomogeneousHamiltonian, weights: np.ndarray | None = None) -> HomogeneousHamiltonian:
    """Generator ``F`` with ``{H0, F} = -h`` for ``H0 = sum n^2 |q_n|^2``.

    Class coefficients are ``c / (i D)``.  The bracket gives
    ``{H0, monomial} = -i D monomial``, so the factor ``i`` in the divisor
    makes the equation hold exactly.  Other quadratic parts ``sum w |q|^2``
    replace ``D`` by the ``w``-weighted divisor.
    """
    D = class_D(h) if weights is None else class_weighted_divisor(h, weights)
    if np.any(D == 0):
        bad = int(np.count_nonzero(D == 0))
        raise ResonantClassError(f"{bad} class(es) with D = 0; split off the resonant part first")
    return h._with(h.coeffs / (1j * D), pruned_mass=0.0)
