"""Iterated elimination of nonresonant terms by Lie transforms.

Each step takes the lowest-degree nonresonant part ``N``, solves
``{H0, F} = -N`` and replaces every piece ``G`` by its Lie series
``sum_k {G, F}^(k) / k!``.  Terms above the degree cap are kept as
:class:`OverflowRecord` entries with a certified l1 bound and count toward
the remainder.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra.bracket import bracket_l1_bound, poisson_bracket, slot_mass
from .algebra.hsum import HamiltonianSum, OverflowRecord, Piece, Tag
from .algebra.norms import norm_upper_bound
from .algebra.tensor import HomogeneousHamiltonian, quadratic_tensor, homological_solve, split_resonant

# relative level (vs. the largest summand) below which cancellation residue is dropped
CANCEL_RELATIVE = 1e-14


@dataclass(frozen=True)
class ReductionConfig:
    K: float
    taylor_order: int = 3
    max_degree: int = 8
    steps: int = 3
    remainder_threshold: float = 0.0
    C1: float = 1.0
    C2: float = 1.0

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not 1 <= self.taylor_order <= 12:
            raise ValueError("taylor_order must be in 1..12")
        if self.max_degree < 4 or self.max_degree % 2:
            raise ValueError("max_degree must be an even integer >= 4")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.remainder_threshold < 0:
            raise ValueError("remainder_threshold must be >= 0")


@dataclass
class StepReport:
    degree_min: int
    nonres_norm_upper_before: float
    nonres_norm_upper: float
    res_norm_upper: float
    remainder_norm_upper: float
    overflow_mass: float
    pruned_mass: float
    cancellation_residual: float


@dataclass
class ReductionReport:
    steps: list[StepReport] = field(default_factory=list)
    unconverged: bool = False

    def to_json(self) -> dict:
        return {"steps": [asdict(s) for s in self.steps], "unconverged": self.unconverged}

    def nonres_norms(self) -> list[float]:
        return [s.nonres_norm_upper for s in self.steps]


@dataclass(frozen=True)
class LieSeries:
    terms: list[HomogeneousHamiltonian]
    overflow: list[OverflowRecord]


def _deferred_growth(F: HomogeneousHamiltonian) -> float:
    """``l1({X, F}) <= r_X * l1(X) * growth`` for any ``X``."""
    o, e = slot_mass(F)
    return float(o.max() + e.max()) if len(F) else 0.0


def lie_series(G: HomogeneousHamiltonian, F: HomogeneousHamiltonian, order: int, max_degree: int | None = None, label: str = "G") -> LieSeries:
    """``sum_{k<=order} {G, F}^(k) / k!`` with terms above ``max_degree`` deferred."""
    if order < 0:
        raise ValueError("order must be >= 0")
    terms = [G]
    overflow: list[OverflowRecord] = []
    cur = G
    bound = None
    growth = _deferred_growth(F)
    for k in range(1, order + 1):
        degree = cur.degree + F.degree - 2 if bound is None else overflow[-1].degree + F.degree - 2
        if len(F) == 0:
            break
        if bound is None and (max_degree is None or degree <= max_degree):
            cur = poisson_bracket(cur, F) * (1.0 / k)
            if len(cur) == 0:
                break
            terms.append(cur)
            continue
        if bound is None:
            bound = bracket_l1_bound(cur, F) / k
        else:
            prev = overflow[-1]
            bound = (prev.degree // 2) * prev.l1_bound * growth / k
        overflow.append(OverflowRecord(degree, float(bound), f"{{{label},F}}^({k})/{k}!"))
    return LieSeries(terms, overflow)


def _sum_by_degree(items: list[HomogeneousHamiltonian]) -> tuple[dict[int, HomogeneousHamiltonian], float]:
    groups: dict[int, list[HomogeneousHamiltonian]] = {}
    for h in items:
        groups.setdefault(h.degree, []).append(h)
    out, pruned = {}, 0.0
    for d, hs in sorted(groups.items()):
        scale = max(h.max_abs() for h in hs)
        total = hs[0]
        for h in hs[1:]:
            total = total + h
        small = np.abs(total.coeffs) <= CANCEL_RELATIVE * scale
        pruned += float(np.abs(total.coeffs[small]).sum())
        total = total.restrict(~small)
        if len(total):
            out[d] = total
    return out, pruned


def _norm(hs, cfg: ReductionConfig) -> float:
    return float(sum(norm_upper_bound(h, cfg.C1, cfg.C2) for h in hs))


def reduce_step(H: HamiltonianSum, cfg: ReductionConfig) -> tuple[HamiltonianSum, StepReport | None]:
    """Eliminate the lowest-degree nonresonant part; ``None`` report if there is none."""
    nonres = H.merged(Tag.NONRESONANT)
    if not nonres:
        return H, None
    d = min(nonres)
    target = nonres[d]
    before = _norm(nonres.values(), cfg)
    F = homological_solve(target, H.quadratic_weights)

    Q = quadratic_tensor(H.quadratic_weights, H.M)
    live: list[HomogeneousHamiltonian] = []
    rem: list[HomogeneousHamiltonian] = []
    overflow = list(H.overflow)
    # the quadratic part stays as weights; only its corrections are new pieces
    qs = lie_series(Q, F, cfg.taylor_order, cfg.max_degree, "H0")
    live += qs.terms[1:]
    overflow += qs.overflow
    for p in H.pieces:
        s = lie_series(p.h, F, cfg.taylor_order, cfg.max_degree, f"{p.tag.value}{p.h.degree}")
        (rem if p.tag is Tag.REMAINDER else live).extend(s.terms)
        overflow += s.overflow

    live_sum, pruned = _sum_by_degree(live)
    rem_sum, pruned_r = _sum_by_degree(rem)
    pruned += pruned_r
    residual = 0.0
    if d in live_sum:
        idx = live_sum[d]._locate(target.rows())
        hit = live_sum[d].coeffs[idx[idx >= 0]]
        residual = float(np.abs(hit).max() / target.max_abs()) if hit.size else 0.0

    pieces = []
    for deg, h in live_sum.items():
        res, non = split_resonant(h, cfg.K)
        if len(res):
            pieces.append(Piece(res, Tag.RESONANT))
        if len(non):
            small = cfg.remainder_threshold > 0 and norm_upper_bound(non, cfg.C1, cfg.C2) < cfg.remainder_threshold
            pieces.append(Piece(non, Tag.REMAINDER if small else Tag.NONRESONANT))
    for deg, h in rem_sum.items():
        pieces.append(Piece(h, Tag.REMAINDER))
    out = H.with_pieces(pieces, K=cfg.K, overflow=tuple(overflow))
    report = StepReport(
        degree_min=d,
        nonres_norm_upper_before=before,
        nonres_norm_upper=_norm(out.tagged(Tag.NONRESONANT), cfg),
        res_norm_upper=_norm(out.tagged(Tag.RESONANT), cfg),
        remainder_norm_upper=_norm(out.tagged(Tag.REMAINDER), cfg),
        overflow_mass=float(sum(o.l1_bound for o in overflow)),
        pruned_mass=pruned + float(sum(h.pruned_mass for h in live_sum.values())),
        cancellation_residual=residual,
    )
    return out, report


def resplit(H: HamiltonianSum, K: float) -> HamiltonianSum:
    """Re-tag every non-remainder piece by ``|D| <= K``."""
    pieces = []
    for p in H.pieces:
        if p.tag is Tag.REMAINDER:
            pieces.append(p)
            continue
        res, non = split_resonant(p.h, K)
        if len(res):
            pieces.append(Piece(res, Tag.RESONANT))
        if len(non):
            pieces.append(Piece(non, Tag.NONRESONANT))
    return H.with_pieces(pieces, K=K)


def reduce(H: HamiltonianSum, cfg: ReductionConfig) -> tuple[HamiltonianSum, ReductionReport]:
    """Run up to ``cfg.steps`` steps; leftover nonresonant parts become remainder."""
    H = resplit(H, cfg.K)
    report = ReductionReport()
    for _ in range(cfg.steps):
        H, rec = reduce_step(H, cfg)
        if rec is None:
            break
        report.steps.append(rec)
    if H.tagged(Tag.NONRESONANT):
        report.unconverged = True
        H = H.with_pieces([Piece(p.h, Tag.REMAINDER) if p.tag is Tag.NONRESONANT else p for p in H.pieces])
    return H, report


def write_reduction(H: HamiltonianSum, report: ReductionReport, tensor_path, report_path) -> None:
    with open(tensor_path, "w") as fh:
        json.dump(H.to_json(), fh, indent=2)
    with open(report_path, "w") as fh:
        json.dump(report.to_json(), fh, indent=2)
