"""Pseudospectral integrator for ``i u_t - u_xx + |u|^{2p} u = 0`` on the circle.

In Fourier variables ``q_n' = i n^2 q_n + i (|u|^{2p} u)^_n``.  The linear
phase is integrated exactly and the classical four-stage rule is applied to
``v_n = exp(-i n^2 t) q_n``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fourier_field import (
    FourierField,
    MultiplierSpec,
    SizingError,
    apply_multiplier,
    m_value,
    mass,
    momentum,
    sobolev_norm,
    to_physical,
    weights,
)
from .algebra.tensor import evaluate
from .algebra.hh import hh_terms
from .algebra.hsum import HamiltonianSum, Tag

BLOWUP = 1e6
COLUMNS = ["t", "mass", "momentum", "hamiltonian", "hs_norm", "d_h1_norm", "modified_energy", "hh1", "hh2", "hh3"]


class SimulationAbort(ArithmeticError):
    """The integration left the guard band; ``series`` holds the rows so far."""

    def __init__(self, message, series=None):
        super().__init__(message)
        self.series = series


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "random"           # "random" | "plane_wave"
    amplitude: float = 1.0         # plane wave amplitude, or H^s norm for random data
    mode: int = 1
    decay_offset: float = 0.6      # random data: |q_n| ~ <n>^{-s - decay_offset}
    support: int | None = None     # random data: keep |n| <= support

    def __post_init__(self):
        if self.kind not in ("random", "plane_wave"):
            raise ValueError(f"unknown initial condition {self.kind!r}")


@dataclass(frozen=True)
class SimulationConfig:
    p: int = 1
    M: int = 32
    gridsize: int | None = None
    dt: float = 1e-3
    T: float = 1.0
    s: float = 1.5
    N: int = 8
    ic: InitialCondition = field(default_factory=InitialCondition)
    seed: int = 0
    record_every: int = 100

    def __post_init__(self):
        if self.p < 1 or self.M < 1:
            raise ValueError("p and M must be >= 1")
        if self.gridsize is None:
            object.__setattr__(self, "gridsize", dealiased_gridsize(self.p, self.M))
        if self.gridsize < 2 * (self.p + 1) * self.M + 1:
            raise SizingError(f"gridsize {self.gridsize} < 2(p+1)M+1 = {2 * (self.p + 1) * self.M + 1}")
        if not self.dt > 0 or not self.T >= 0:
            raise ValueError("dt must be positive and T nonnegative")
        if self.dt * self.M ** 2 > 10:
            raise ValueError("dt * M^2 must be <= 10")
        if not self.s > 1:
            raise ValueError("s must be > 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def spec(self) -> MultiplierSpec:
        return MultiplierSpec(self.N, self.s)

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        d = dict(d)
        ic = d.pop("ic", {})
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown simulation fields: {sorted(extra)}")
        return cls(ic=InitialCondition(**ic) if isinstance(ic, dict) else ic, **d)

    def to_dict(self) -> dict:
        return asdict(self)


def dealiased_gridsize(p: int, M: int) -> int:
    """Smallest power of two at least ``2(p+1)M + 1``."""
    return 1 << math.ceil(math.log2(2 * (p + 1) * M + 1))


# ----------------------------------------------------------------------------
# nonlinearity, energy, stepping


def _nonlin(qa: np.ndarray, p: int, G: int, M: int) -> np.ndarray:
    spec = np.zeros(G, dtype=complex)
    n = np.arange(-M, M + 1)
    spec[n % G] = qa
    u = np.fft.ifft(spec) * G
    w = np.abs(u) ** (2 * p) * u
    return (np.fft.fft(w) / G)[n % G]


def nonlinearity(q: FourierField, p: int, gridsize: int) -> FourierField:
    """Fourier coefficients of ``|u|^{2p} u`` on ``|n| <= M``."""
    if gridsize < 2 * (p + 1) * q.M + 1:
        raise SizingError(f"gridsize {gridsize} aliases the degree-{2 * p + 1} product")
    return FourierField(q.M, _nonlin(q.coeffs, p, gridsize, q.M))


def hamiltonian_physical(q: FourierField, p: int, gridsize: int | None = None) -> float:
    """``1/2 int |u_x|^2 + 1/(2p+2) int |u|^{2p+2}`` over one period."""
    G = dealiased_gridsize(p, q.M) if gridsize is None else gridsize
    if G < 2 * (p + 1) * q.M + 1:
        raise SizingError(f"gridsize {G} too small for exact quadrature")
    kinetic = 0.5 * 2 * np.pi * float(np.sum(q.frequencies ** 2 * np.abs(q.coeffs) ** 2))
    u = to_physical(q, G)
    potential = 2 * np.pi * float(np.mean(np.abs(u) ** (2 * p + 2))) / (2 * p + 2)
    return kinetic + potential


def step(q: FourierField, dt: float, cfg: SimulationConfig) -> FourierField:
    """One integrating-factor step of length ``dt``."""
    return FourierField(q.M, _step(q.coeffs, dt, cfg.p, cfg.gridsize, q.M))


def _step(qa: np.ndarray, dt: float, p: int, G: int, M: int) -> np.ndarray:
    n2 = np.arange(-M, M + 1) ** 2
    half = np.exp(1j * n2 * dt / 2)
    full = half * half

    def f(y):
        return 1j * _nonlin(y, p, G, M)

    k1 = f(qa)
    k2 = f(half * (qa + 0.5 * dt * k1))
    k3 = f(half * qa + 0.5 * dt * k2)
    k4 = f(full * qa + dt * half * k3)
    return full * qa + (dt / 6.0) * (full * k1 + 2 * half * (k2 + k3) + k4)


# ----------------------------------------------------------------------------
# initial data


def initial_field(cfg: SimulationConfig) -> FourierField:
    ic = cfg.ic
    M = cfg.M
    if ic.kind == "plane_wave":
        return FourierField.from_modes(M, {ic.mode: ic.amplitude})
    rng = np.random.default_rng(cfg.seed)
    phases = np.exp(2j * np.pi * rng.random(2 * M + 1))
    c = phases * weights(M) ** (-cfg.s - ic.decay_offset)
    if ic.support is not None:
        c = np.where(np.abs(np.arange(-M, M + 1)) <= ic.support, c, 0)
    q = FourierField(M, c)
    return q * (ic.amplitude / sobolev_norm(q, cfg.s))


# ----------------------------------------------------------------------------
# time series


@dataclass
class TimeSeries:
    rows: list[dict] = field(default_factory=list)
    aborted: bool = False

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], dtype=float)

    def append(self, row: dict) -> None:
        if self.rows and not row["t"] > self.rows[-1]["t"]:
            raise ValueError("time must increase")
        self.rows.append(row)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow(["" if r.get(c) is None else repr(float(r[c])) for c in COLUMNS])

    @classmethod
    def read_csv(cls, path) -> "TimeSeries":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != COLUMNS:
                raise ValueError(f"unexpected header {reader.fieldnames}")
            rows = [{k: (float(v) if v != "" else None) for k, v in r.items()} for r in reader]
        return cls(rows)


def modified_energy(q: FourierField, reduced: HamiltonianSum, spec: MultiplierSpec) -> float:
    """``sum m^2 w |q|^2 + N0(Dq)`` with ``N0`` the resonant pieces."""
    qa = q.resized(reduced.M)
    m = m_value(spec, qa.frequencies)
    quad = float(np.sum(m ** 2 * reduced.quadratic_weights * np.abs(qa.coeffs) ** 2))
    Dq = apply_multiplier(qa, spec)
    return quad + sum(evaluate(h, Dq) for h in reduced.tagged(Tag.RESONANT))


def _record(t, qa, cfg, reduced) -> dict:
    q = FourierField(cfg.M, qa)
    spec = cfg.spec
    row = {
        "t": t,
        "mass": mass(q),
        "momentum": momentum(q),
        "hamiltonian": hamiltonian_physical(q, cfg.p, cfg.gridsize),
        "hs_norm": sobolev_norm(q, cfg.s),
        "d_h1_norm": sobolev_norm(apply_multiplier(q, spec), 1.0),
    }
    if reduced is not None:
        row["modified_energy"] = modified_energy(q, reduced, spec)
        hh = hh_terms(reduced.tagged(Tag.RESONANT), q.resized(reduced.M), spec, reduced.quadratic_weights)
        row.update(hh1=hh.v1, hh2=hh.v2, hh3=hh.v3)
    return row


def run(cfg: SimulationConfig, reduced: HamiltonianSum | None = None, q0: FourierField | None = None) -> TimeSeries:
    """Integrate to ``cfg.T`` and record every ``cfg.record_every`` steps."""
    if reduced is not None and reduced.M < cfg.M:
        raise ValueError("reduced Hamiltonian radius is smaller than M")
    qa = (initial_field(cfg) if q0 is None else q0.resized(cfg.M)).coeffs.copy()
    nsteps = int(round(cfg.T / cfg.dt))
    if abs(nsteps * cfg.dt - cfg.T) > 1e-9 * max(1.0, cfg.T):
        raise ValueError("T must be a multiple of dt")
    series = TimeSeries()
    series.append(_record(0.0, qa, cfg, reduced))
    for k in range(1, nsteps + 1):
        qa = _step(qa, cfg.dt, cfg.p, cfg.gridsize, cfg.M)
        if not np.all(np.isfinite(qa)) or np.abs(qa).max() > BLOWUP:
            series.aborted = True
            raise SimulationAbort(f"blow-up guard tripped at t={k * cfg.dt:.6g}", series)
        if k % cfg.record_every == 0 or k == nsteps:
            series.append(_record(k * cfg.dt, qa, cfg, reduced))
    return series


def final_field(cfg: SimulationConfig, q0: FourierField | None = None) -> FourierField:
    qa = (initial_field(cfg) if q0 is None else q0.resized(cfg.M)).coeffs.copy()
    for _ in range(int(round(cfg.T / cfg.dt))):
        qa = _step(qa, cfg.dt, cfg.p, cfg.gridsize, cfg.M)
    return FourierField(cfg.M, qa)


# ----------------------------------------------------------------------------
# growth fit and divisor scan


@dataclass(frozen=True)
class GrowthFit:
    alpha: float
    r2: float | None


def growth_fit(series: TimeSeries, column: str = "hs_norm") -> GrowthFit:
    """Slope of ``log(column)`` against ``log(1 + t)``."""
    if len(series.rows) < 10:
        raise ValueError("need at least 10 rows")
    x = np.log1p(series.column("t"))
    y = np.log(series.column(column))
    if np.ptp(y) <= 1e-14 * max(1.0, float(np.abs(y).max())):
        return GrowthFit(0.0, None)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, icpt])
    r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return GrowthFit(float(slope), r2)


def _ds_ratio(t: np.ndarray, s: float, K: float) -> np.ndarray:
    """``|D_s| / ((n1*)^{2(s-1)} (n3* n4* + max(K, |D|)))`` row-wise."""
    a = np.abs(t).astype(float)
    Ds = (a[:, 1::2] ** (2 * s)).sum(axis=1) - (a[:, 0::2] ** (2 * s)).sum(axis=1)
    D = (t[:, 0::2].astype(float) ** 2).sum(axis=1) - (t[:, 1::2].astype(float) ** 2).sum(axis=1)
    srt = -np.sort(-a, axis=1)
    den = srt[:, 0] ** (2 * (s - 1)) * (srt[:, 2] * srt[:, 3] + np.maximum(K, np.abs(D)))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(Ds == 0, 0.0, np.abs(Ds) / den)


def ds_exhaustive(s: float, K: float, range_: int, degree: int = 4) -> float:
    """Max ratio over every zero-sum tuple of the given degree in ``[-range_, range_]``."""
    n = np.arange(-range_, range_ + 1)
    free = [a.ravel() for a in np.meshgrid(*([n] * (degree - 1)), indexing="ij")]
    last = sum(free[j] * (1 if j % 2 == 0 else -1) for j in range(degree - 1))
    keep = np.abs(last) <= range_
    t = np.column_stack([f[keep] for f in free] + [last[keep]])
    return float(_ds_ratio(t, s, K).max())


def _random_tuples(rng, degree: int, range_: int, count: int) -> np.ndarray:
    out = np.zeros((0, degree), dtype=np.int64)
    while len(out) < count:
        t = rng.integers(-range_, range_ + 1, size=(2 * count, degree))
        t[:, -1] = t[:, 0:-1:2].sum(axis=1) - t[:, 1:-1:2].sum(axis=1)
        out = np.vstack([out, t[np.abs(t[:, -1]) <= range_]])
    return out[:count]


def ds_lemma_scan(s: float, K: float, range_: int, samples: int, seed: int = 0, degrees=(4, 6, 8)) -> dict:
    """Max of the divisor ratio over random zero-sum tuples, per degree."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not K > 0:
        raise ValueError("K must be positive")
    rng = np.random.default_rng(seed)
    per = {}
    for d in degrees:
        t = _random_tuples(rng, d, range_, samples)
        per[str(d)] = float(_ds_ratio(t, s, K).max())
    return {"s": s, "K": K, "range": range_, "samples": samples, "seed": seed, "per_degree": per, "max_ratio": max(per.values())}


__all__ = [
    "COLUMNS", "GrowthFit", "InitialCondition", "SimulationAbort", "SimulationConfig", "TimeSeries",
    "dealiased_gridsize", "ds_exhaustive", "ds_lemma_scan", "final_field", "growth_fit",
    "hamiltonian_physical", "initial_field", "modified_energy", "nonlinearity", "run", "step",
]
