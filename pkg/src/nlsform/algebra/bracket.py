"""Poisson brackets of canonical-class tensors.

    {H1, H2} = i sum_n [ dH1/dq_n dH2/dq̄_n - dH1/dq̄_n dH2/dq_n ]

Each term contracts one unconjugated slot of one factor with one conjugated
slot of the other.  Both sides are expanded into "slot removed" rows keyed by
the contracted frequency, joined on that frequency, and the products merged
back into canonical classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import HomogeneousHamiltonian, merge_rows

# rows per join block before an intermediate merge
_CHUNK = 4_000_000


@dataclass(frozen=True)
class _Removed:
    """Rows ``(n, rest_of_side, other_side, coeff)`` for one side removed."""

    n: np.ndarray
    rest: np.ndarray
    other: np.ndarray
    coeffs: np.ndarray


def _remove_slot(h: HomogeneousHamiltonian, side: str) -> _Removed:
    r = h.r
    arr = h.odd if side == "odd" else h.even
    oth = h.even if side == "odd" else h.odd
    C = len(h)
    if C == 0:
        z = np.zeros((0, r - 1), dtype=np.int64)
        return _Removed(np.zeros(0, dtype=np.int64), z, np.zeros((0, r), dtype=np.int64), np.zeros(0, dtype=complex))
    n = arr.T.reshape(-1)
    rest = np.vstack([np.delete(arr, j, axis=1) for j in range(r)])
    other = np.tile(oth, (r, 1))
    coeffs = np.tile(h.coeffs, r)
    # equal entries give identical rows: merge them (this is the multiplicity factor)
    rows, c = merge_rows(np.hstack([n[:, None], rest, other]), coeffs, h.M)
    return _Removed(rows[:, 0].copy(), rows[:, 1:r].copy(), rows[:, r:].copy(), c)


def _join(left: _Removed, right: _Removed, left_side: str, M: int, sign: complex):
    """Contract ``left`` (one ``left_side`` slot removed) with ``right``.

    Yields (odd_rows, even_rows, coeffs) blocks of the product classes.
    """
    if left.n.size == 0 or right.n.size == 0:
        return
    lo = np.argsort(left.n, kind="stable")
    ro = np.argsort(right.n, kind="stable")
    ln, rn = left.n[lo], right.n[ro]
    values = np.intersect1d(ln, rn)
    l_start = np.searchsorted(ln, values, "left")
    l_stop = np.searchsorted(ln, values, "right")
    r_start = np.searchsorted(rn, values, "left")
    r_stop = np.searchsorted(rn, values, "right")
    for a0, a1, b0, b1 in zip(l_start, l_stop, r_start, r_stop):
        ia = lo[a0:a1]
        ib = ro[b0:b1]
        step = max(1, _CHUNK // max(1, len(ib)))
        for s in range(0, len(ia), step):
            ja = np.repeat(ia[s:s + step], len(ib))
            jb = np.tile(ib, min(step, len(ia) - s))
            if left_side == "odd":
                # left lost an odd slot; right lost an even slot
                odd = np.hstack([left.rest[ja], right.other[jb]])
                even = np.hstack([left.other[ja], right.rest[jb]])
            else:
                odd = np.hstack([left.other[ja], right.rest[jb]])
                even = np.hstack([left.rest[ja], right.other[jb]])
            yield np.sort(odd, axis=1), np.sort(even, axis=1), sign * left.coeffs[ja] * right.coeffs[jb]


def poisson_bracket(
    h1: HomogeneousHamiltonian,
    h2: HomogeneousHamiltonian,
    prune: bool = True,
) -> HomogeneousHamiltonian:
    """Bracket of two homogeneous pieces, degree ``deg h1 + deg h2 - 2``.

    When both inputs are reality-symmetric the output is re-symmetrized, so
    reality holds exactly rather than to rounding.  Coefficients below
    ``1e-15 * max|c|`` are pruned and their mass recorded on the result.
    """
    if h1.M != h2.M:
        M = max(h1.M, h2.M)
        h1, h2 = h1.with_radius(M), h2.with_radius(M)
    M = h1.M
    degree = h1.degree + h2.degree - 2
    r = degree // 2
    if len(h1) == 0 or len(h2) == 0:
        return HomogeneousHamiltonian.empty(M, degree)
    # diagonal quadratic parts act by a divisor; this keeps cancellations exact
    w = _diagonal_weights(h1)
    if w is not None:
        out = bracket_with_quadratic(w, h2)
        return out.prune() if prune else out
    w = _diagonal_weights(h2)
    if w is not None:
        out = -bracket_with_quadratic(w, h1)
        return out.prune() if prune else out
    blocks_odd, blocks_even, blocks_c = [], [], []
    acc_rows = np.zeros((0, degree), dtype=np.int64)
    acc_c = np.zeros(0, dtype=complex)
    pending = 0

    def flush():
        nonlocal acc_rows, acc_c, pending
        if not blocks_c:
            return
        rows = np.vstack([acc_rows] + [np.hstack([o, e]) for o, e in zip(blocks_odd, blocks_even)])
        c = np.concatenate([acc_c] + blocks_c)
        acc_rows, acc_c = merge_rows(rows, c, M)
        blocks_odd.clear()
        blocks_even.clear()
        blocks_c.clear()
        pending = 0

    terms = (
        (_remove_slot(h1, "odd"), _remove_slot(h2, "even"), "odd", 1j),
        (_remove_slot(h1, "even"), _remove_slot(h2, "odd"), "even", -1j),
    )
    for left, right, side, sign in terms:
        for o, e, c in _join(left, right, side, M, sign):
            blocks_odd.append(o)
            blocks_even.append(e)
            blocks_c.append(c)
            pending += c.size
            if pending >= _CHUNK:
                flush()
    flush()
    keep = acc_c != 0
    out = HomogeneousHamiltonian(M, degree, acc_rows[keep, :r].copy(), acc_rows[keep, r:].copy(), acc_c[keep])
    if h1.is_real() and h2.is_real():
        out = out.symmetrized()
    return out.prune() if prune else out


def _diagonal_weights(h: HomogeneousHamiltonian) -> np.ndarray | None:
    """Weights ``w`` if ``h = sum w_n |q_n|^2`` with real ``w``, else None."""
    if h.degree != 2 or np.any(h.odd != h.even) or np.any(h.coeffs.imag != 0):
        return None
    w = np.zeros(2 * h.M + 1)
    w[h.odd[:, 0] + h.M] = h.coeffs.real
    return w


def bracket_with_quadratic(weights: np.ndarray, h: HomogeneousHamiltonian) -> HomogeneousHamiltonian:
    """``{sum w_n |q_n|^2, h}`` classwise: ``-i (sum_odd w - sum_even w) c``."""
    w = np.asarray(weights, dtype=float)
    div = w[h.odd + h.M].sum(axis=1) - w[h.even + h.M].sum(axis=1)
    return h._with(-1j * div * h.coeffs, pruned_mass=0.0).restrict(div != 0)


def slot_mass(h: HomogeneousHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """``sum |c| * multiplicity`` of each frequency on the odd and on the even side."""
    L = 2 * h.M + 1
    a = np.abs(h.coeffs)
    odd = sum(np.bincount(h.odd[:, j] + h.M, weights=a, minlength=L) for j in range(h.r))
    even = sum(np.bincount(h.even[:, j] + h.M, weights=a, minlength=L) for j in range(h.r))
    return np.asarray(odd, dtype=float), np.asarray(even, dtype=float)


def bracket_l1_bound(h1: HomogeneousHamiltonian, h2: HomogeneousHamiltonian) -> float:
    """Certified bound on the l1 class-coefficient mass of ``{h1, h2}``."""
    if len(h1) == 0 or len(h2) == 0:
        return 0.0
    M = max(h1.M, h2.M)
    o1, e1 = slot_mass(h1.with_radius(M))
    o2, e2 = slot_mass(h2.with_radius(M))
    return float(o1 @ e2 + e1 @ o2)
