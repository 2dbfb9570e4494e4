"""Closed-form quartic and sextic tensors of the cubic reduction.

These are built by direct enumeration, independently of the bracket engine,
so :func:`verify_cubic` can use one to check the other.

Generators built here have raw coefficients ``1/D``.  The engine's
generators carry the extra ``1/i`` of :func:`homological_solve`; the
``*_generator`` helpers apply it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fourier_field import FourierField, mass
from .algebra.bracket import poisson_bracket
from .algebra.tensor import (
    HomogeneousHamiltonian,
    class_D,
    free_weights,
    homological_solve,
    make_nls_nonlinearity,
    max_abs_difference,
    quadratic_tensor,
    split_resonant,
)

# numeric stand-ins for "much smaller than" in the subcase search
SMALL_FRACTION = 1.0 / 8.0       # max(|n1|,|n2|,|n3|) <= N / 8
SQRT_FRACTION = 1.0 / 8.0        # third-largest magnitude <= sqrt(N) / 8
IDENTITY_TOL = 1e-12
MAX_VERIFY_M = 8


@dataclass(frozen=True)
class CubicContext:
    M: int = 6
    N: int = 8
    beta: float = 0.25
    mu: float = 0.0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")

    @property
    def K2(self) -> float:
        return float(self.N) ** self.beta


def _check_zero_sum(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.int64)
    if t[0::2].sum() != t[1::2].sum():
        raise ValueError(f"{tuple(t)} does not have zero alternating sum")
    return t


def D1_value(t) -> int:
    t = _check_zero_sum(t)
    if t.shape != (4,):
        raise ValueError("expected a quadruple")
    n1, n2, n3, n4 = map(int, t)
    quad = n1 * n1 - n2 * n2 + n3 * n3 - n4 * n4
    factored = -2 * (n1 - n2) * (n3 - n2)
    if quad != factored:
        raise ArithmeticError("quadratic and factored forms disagree")
    return quad


def D2_value(t) -> int:
    t = _check_zero_sum(t)
    if t.shape != (6,):
        raise ValueError("expected a sextuple")
    return int((t[0::2] ** 2).sum() - (t[1::2] ** 2).sum())


# ----------------------------------------------------------------------------
# quartic pieces


def build_R1_value(q: FourierField) -> float:
    """``2 mass(q)^2``."""
    return 2.0 * mass(q) ** 2


def build_R1(ctx: CubicContext) -> HomogeneousHamiltonian:
    """``2 (sum |q_n|^2)^2`` as a tensor: 4 on ``{a,b},{a,b}``, 2 on ``{a,a},{a,a}``."""
    M = ctx.M
    odd, coeffs = [], []
    for a in range(-M, M + 1):
        for b in range(a, M + 1):
            odd.append((a, b))
            coeffs.append(2.0 if a == b else 4.0)
    return HomogeneousHamiltonian.from_classes(M, odd, odd, coeffs)


def build_R2(ctx: CubicContext) -> HomogeneousHamiltonian:
    """``-sum |q_n|^4``."""
    rows = [(a, a) for a in range(-ctx.M, ctx.M + 1)]
    return HomogeneousHamiltonian.from_classes(ctx.M, rows, rows, -np.ones(len(rows)))


def _quadruples(M: int) -> np.ndarray:
    n = np.arange(-M, M + 1)
    n1, n2, n3 = (a.ravel() for a in np.meshgrid(n, n, n, indexing="ij"))
    n4 = n1 - n2 + n3
    keep = (np.abs(n4) <= M) & (n2 != n1) & (n2 != n3)
    return np.stack([n1, n2, n3, n4], axis=1)[keep]


def build_F1(ctx: CubicContext) -> HomogeneousHamiltonian:
    """Raw coefficient ``1 / (-2 (n1 - n2)(n3 - n2))`` on nonresonant quadruples."""
    t = _quadruples(ctx.M)
    c = 1.0 / (-2.0 * (t[:, 0] - t[:, 1]) * (t[:, 2] - t[:, 1]))
    return HomogeneousHamiltonian.from_tuples(ctx.M, t, c)


def build_N(ctx: CubicContext) -> HomogeneousHamiltonian:
    """Nonresonant part of the all-ones quartic, by enumeration."""
    t = _quadruples(ctx.M)
    return HomogeneousHamiltonian.from_tuples(ctx.M, t, np.ones(len(t)))


# ----------------------------------------------------------------------------
# sextic pieces


def build_I0(ctx: CubicContext) -> HomogeneousHamiltonian:
    t = _quadruples(ctx.M)
    m = t[:, 3]
    six = np.stack([t[:, 0], t[:, 1], t[:, 2], m, m, m], axis=1)
    c = 1.0 / ((t[:, 0] - t[:, 1]) * (t[:, 2] - t[:, 1]))
    return HomogeneousHamiltonian.from_tuples(ctx.M, six, c)


def _D2_rows(h: HomogeneousHamiltonian) -> np.ndarray:
    return np.abs(class_D(h))


def build_I1(ctx: CubicContext) -> HomogeneousHamiltonian:
    I0 = build_I0(ctx)
    return I0.restrict(_D2_rows(I0) <= ctx.K2)


def _sextuples(M: int, K2: float | None) -> np.ndarray:
    """Sextuples with ``n2 not in {n1,n3}``, ``n5 not in {n4,n6}``, ``|n1-n2+n3| <= M``."""
    n = np.arange(-M, M + 1)
    blocks = []
    for n1, n2, n3 in itertools.product(n, n, n):
        if n2 == n1 or n2 == n3 or abs(n1 - n2 + n3) > M:
            continue
        a, b = np.meshgrid(n, n, indexing="ij")
        n4, n5 = a.ravel(), b.ravel()
        n6 = n1 - n2 + n3 - n4 + n5
        keep = (np.abs(n6) <= M) & (n5 != n4) & (n5 != n6)
        if K2 is not None:
            D2 = n1 * n1 - n2 * n2 + n3 * n3 - n4 ** 2 + n5 ** 2 - n6 ** 2
            keep &= np.abs(D2) <= K2
        k = int(keep.sum())
        if k:
            blocks.append(np.column_stack([np.full(k, n1), np.full(k, n2), np.full(k, n3), n4[keep], n5[keep], n6[keep]]))
    if not blocks:
        return np.zeros((0, 6), dtype=np.int64)
    return np.vstack(blocks).astype(np.int64)


def build_I2(ctx: CubicContext) -> HomogeneousHamiltonian:
    """Coefficient ``1/((n1-n2)(n3-n2))`` over the sextuples with ``|D2| <= N^beta``.

    The intermediate frequency ``n1 - n2 + n3`` is kept inside the lattice,
    since it is the contracted index of a bracket of two quartics.
    """
    t = _sextuples(ctx.M, ctx.K2)
    if len(t) == 0:
        return HomogeneousHamiltonian.empty(ctx.M, 6)
    c = 1.0 / ((t[:, 0] - t[:, 1]) * (t[:, 2] - t[:, 1]))
    return HomogeneousHamiltonian.from_tuples(ctx.M, t, c)


def as_generator(h: HomogeneousHamiltonian) -> HomogeneousHamiltonian:
    """Divide by ``i`` (the engine's convention for generators and brackets)."""
    return h * (-1j)


# ----------------------------------------------------------------------------
# identity suite


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_residual: float
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "max_residual": self.max_residual, "pass": self.passed}


def _residual(a: HomogeneousHamiltonian, b: HomogeneousHamiltonian) -> float:
    scale = max(1.0, a.max_abs(), b.max_abs())
    return max_abs_difference(a, b) / scale


def verify_cubic(ctx: CubicContext = CubicContext(), corrupt: bool = False, tol: float = IDENTITY_TOL) -> dict:
    """Check the closed forms against the bracket engine classwise.

    With ``corrupt`` set, one coefficient of the closed-form generator is
    flipped first; the suite must then report failures.
    """
    from .normal_form import ReductionConfig, reduce_step, resplit

    if ctx.M > MAX_VERIFY_M:
        raise ValueError(f"M <= {MAX_VERIFY_M} required")
    M = ctx.M
    quartic = make_nls_nonlinearity(1, M)
    res, non = split_resonant(quartic, 0)
    R1, R2 = build_R1(ctx), build_R2(ctx)
    F1raw = build_F1(ctx)
    if corrupt and len(F1raw):
        c = F1raw.coeffs.copy()
        c[0] = -c[0] + 1.0
        F1raw = F1raw._with(c)
    F1 = as_generator(F1raw)
    I0, I1, I2 = build_I0(ctx), build_I1(ctx), build_I2(ctx)
    H0 = quadratic_tensor(free_weights(M), M)
    zero6 = HomogeneousHamiltonian.empty(M, 6)

    checks: list[tuple[str, HomogeneousHamiltonian, HomogeneousHamiltonian]] = []
    checks.append(("resonant_split_R1_plus_R2", res, R1 + R2))
    checks.append(("nonresonant_enumeration", non, build_N(ctx)))
    checks.append(("F1_matches_homological_solve", F1, homological_solve(non)))
    checks.append(("R1_F1_bracket_vanishes", poisson_bracket(R1, F1, prune=False), zero6))
    checks.append(("H0_F1_equals_minus_N", poisson_bracket(H0, F1, prune=False), -non))
    RF = poisson_bracket(R2, F1, prune=False)
    checks.append(("R2_F1_equals_I0_combination", RF, 2.0 * (I0 + I0.conj())))
    RF_r, _ = split_resonant(RF, ctx.K2)
    checks.append(("R2_F1_resonant_equals_I1_combination", RF_r, 2.0 * (I1 + I1.conj())))
    NF_r, _ = split_resonant(poisson_bracket(non, F1, prune=False) * 0.5, ctx.K2)
    checks.append(("half_N_F1_resonant_equals_I2_combination", NF_r, -(I2 + I2.conj())))

    # first pipeline step against the surviving terms
    H = resplit(_cubic_sum(M), 0.5)
    out, _ = reduce_step(H, ReductionConfig(K=0.5, taylor_order=2, max_degree=6, steps=1))
    got4 = _degree_total(out, 4, M)
    got6 = _degree_total(out, 6, M)
    checks.append(("first_step_quartic_is_R1_plus_R2", got4, R1 + R2))
    checks.append(("first_step_sextic_matches", got6, 2.0 * (I0 + I0.conj()) + poisson_bracket(non, F1) * 0.5))

    results = [IdentityResult(name, _residual(a, b), False) for name, a, b in checks]
    results = [IdentityResult(r.name, r.max_residual, r.max_residual <= tol) for r in results]

    # functional and tensor forms of R1 on a fixed field
    q = FourierField(M, np.exp(1j * np.arange(2 * M + 1)) / (1.0 + np.abs(np.arange(-M, M + 1))))
    from .algebra.tensor import evaluate

    r1 = abs(evaluate(R1, q) - build_R1_value(q)) / max(1.0, build_R1_value(q))
    results.append(IdentityResult("R1_functional_matches_tensor", r1, r1 <= tol))
    return {
        "identities": [r.to_json() for r in results],
        "passed": all(r.passed for r in results),
        "margins": {
            "M": M, "N": ctx.N, "beta": ctx.beta, "K2": ctx.K2, "tolerance": tol,
            "small_fraction": SMALL_FRACTION, "sqrt_fraction": SQRT_FRACTION,
            "I2_classes": len(I2), "corrupted": corrupt,
        },
    }


def _cubic_sum(M: int):
    from .algebra.hsum import HamiltonianSum, Piece, Tag

    return HamiltonianSum(M, free_weights(M), [Piece(make_nls_nonlinearity(1, M), Tag.NONRESONANT)])


def _degree_total(H, degree: int, M: int) -> HomogeneousHamiltonian:
    total = HomogeneousHamiltonian.empty(M, degree)
    for p in H.pieces:
        if p.h.degree == degree:
            total = total + p.h
    return total


# ----------------------------------------------------------------------------
# subcase search


def subcase_search(N: int = 64, M: int = 96, beta: float = 0.25) -> dict:
    """Search sextuples that would be resonant with small first three entries.

    Conditions: ``n2 not in {n1,n3}``, ``n5 not in {n4,n6}``, all ``|n_j| <= M``,
    ``max(|n1|,|n2|,|n3|) <= N * SMALL_FRACTION``, third-largest magnitude
    ``<= sqrt(N) * SQRT_FRACTION``, largest magnitude ``> N`` and
    ``|D2| <= N^beta``.  The expected count is zero.
    """
    small = int(np.floor(N * SMALL_FRACTION))
    third = np.sqrt(N) * SQRT_FRACTION
    K2 = float(N) ** beta
    found = []
    rng = np.arange(-small, small + 1)
    big = np.arange(-M, M + 1)
    n4, n5 = (a.ravel() for a in np.meshgrid(big, big, indexing="ij"))
    checked = 0
    for n1, n2, n3 in itertools.product(rng, rng, rng):
        if n2 == n1 or n2 == n3:
            continue
        n6 = n1 - n2 + n3 - n4 + n5
        ok = (np.abs(n6) <= M) & (n5 != n4) & (n5 != n6)
        D2 = n1 * n1 - n2 * n2 + n3 * n3 - n4 ** 2 + n5 ** 2 - n6 ** 2
        ok &= np.abs(D2) <= K2
        mags = np.sort(np.abs(np.stack([np.full_like(n4, n1), np.full_like(n4, n2), np.full_like(n4, n3), n4, n5, n6])), axis=0)
        ok &= (mags[-3] <= third) & (mags[-1] > N)
        checked += int(ok.size)
        for j in np.flatnonzero(ok):
            found.append([int(n1), int(n2), int(n3), int(n4[j]), int(n5[j]), int(n6[j])])
    return {
        "N": N, "M": M, "beta": beta, "checked": checked, "count": len(found),
        "examples": found[:10], "small_fraction": SMALL_FRACTION, "sqrt_fraction": SQRT_FRACTION,
    }
