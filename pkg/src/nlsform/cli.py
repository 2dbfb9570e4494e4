"""Command-line entry points: reduce, simulate, verify-cubic, ds-scan, growth-report.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical abort.  ``NLSFORM_THREADS`` sets the default BLAS/FFT thread count.
"""

from __future__ import annotations

import os

_threads = os.environ.get("NLSFORM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from concurrent.futures import ProcessPoolExecutor  # noqa: E402
from pathlib import Path  # noqa: E402

from . import __version__  # noqa: E402

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------------
# config plumbing


def _key_line(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def load_config(path: str | None) -> tuple[dict, str]:
    if path is None:
        return {}, ""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    return data, text


def _schema_error(path, text, key, msg) -> ConfigError:
    line = _key_line(text, key) if text else None
    where = f"{path}:{line}" if line else str(path or "<flags>")
    return ConfigError(f"{where}: {key}: {msg}")


def _override(cfg: dict, args: argparse.Namespace, names: list[str]) -> dict:
    cfg = dict(cfg)
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            cfg[name] = v
    return cfg


def resolve_K(cfg: dict, path=None, text="") -> float:
    """``K`` directly, or ``N**delta`` / ``T**delta``."""
    if cfg.get("K") is not None:
        K = float(cfg["K"])
    elif cfg.get("delta") is not None and cfg.get("N") is not None:
        K = float(cfg["N"]) ** float(cfg["delta"])
    elif cfg.get("delta") is not None and cfg.get("T") is not None:
        K = float(cfg["T"]) ** float(cfg["delta"])
    else:
        raise _schema_error(path, text, "K", "give K, or delta with N or T")
    if not K > 0:
        raise _schema_error(path, text, "K", "must be positive")
    return K


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(command, config, seed, inputs, outputs, started, deterministic, status="ok", **extra) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "tool_version": __version__,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.perf_counter() - started, 6),
        "deterministic": deterministic,
        "status": status,
    }
    out.update(extra)
    return out


# ----------------------------------------------------------------------------
# commands

REDUCE_KEYS = {"p", "M", "K", "N", "T", "delta", "steps", "taylor_order", "max_degree", "remainder_threshold", "out", "mu"}


def cmd_reduce(args) -> int:
    from .algebra.hsum import HamiltonianSum, Piece, Tag
    from .algebra.tensor import free_weights, make_nls_nonlinearity
    from .normal_form import ReductionConfig, reduce, resplit

    started = time.perf_counter()
    raw, text = load_config(args.config)
    cfg = _override(raw, args, ["p", "M", "K", "N", "T", "delta", "steps", "taylor_order", "max_degree", "remainder_threshold", "out"])
    unknown = set(cfg) - REDUCE_KEYS
    if unknown:
        k = sorted(unknown)[0]
        raise _schema_error(args.config, text, k, "unknown field")
    for key in ("p", "M"):
        if key not in cfg:
            raise _schema_error(args.config, text, key, "required")
    p, M = int(cfg["p"]), int(cfg["M"])
    if p < 1 or M < 1:
        raise _schema_error(args.config, text, "p" if p < 1 else "M", "must be >= 1")
    K = resolve_K(cfg, args.config, text)
    steps = int(cfg.get("steps", 3))
    try:
        rc = ReductionConfig(
            K=K,
            taylor_order=int(cfg.get("taylor_order", 3)),
            max_degree=int(cfg.get("max_degree", 8 if p == 1 else 2 * p + 6)),
            steps=steps,
            remainder_threshold=float(cfg.get("remainder_threshold", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{args.config or '<flags>'}: {exc}") from exc
    weights = free_weights(M, float(cfg.get("mu", 0.0)))
    H = HamiltonianSum(M, weights, [Piece(make_nls_nonlinearity(p, M), Tag.NONRESONANT)])
    if steps == 0:
        from .normal_form import ReductionReport

        out_H, report = resplit(H, K), ReductionReport()
    else:
        out_H, report = reduce(H, rc)
    out = Path(cfg.get("out", "reduce_out"))
    files = [out / "reduced.json", out / "report.json", out / "manifest.json"]
    _write_json(files[0], out_H.to_json())
    _write_json(files[1], report.to_json())
    resolved = dict(cfg, K=K, steps=steps, taylor_order=rc.taylor_order, max_degree=rc.max_degree,
                    remainder_threshold=rc.remainder_threshold, out=str(out))
    _write_json(files[2], _manifest("reduce", resolved, None, [args.config] if args.config else [], files[:2], started, args.deterministic))
    print(f"wrote {files[0]} and {files[1]}")
    return EXIT_OK


def _simulate_one(cfg_dict, reduced_path, out_dir: str, fit: bool, deterministic: bool, tag: str = "") -> tuple[int, list[str]]:
    from .algebra.hsum import HamiltonianSum
    from .nls_simulator import SimulationAbort, SimulationConfig, growth_fit, run

    started = time.perf_counter()
    cfg = SimulationConfig.from_dict(cfg_dict)
    reduced = None
    if reduced_path:
        try:
            reduced = HamiltonianSum.from_json(Path(reduced_path).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"{reduced_path}: cannot load reduced Hamiltonian ({exc})") from exc
        if reduced.M < cfg.M:
            raise ConfigError(f"{reduced_path}: radius {reduced.M} is smaller than M = {cfg.M}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"series{tag}.csv"
    files = [csv_path]
    status, code = "ok", EXIT_OK
    try:
        series = run(cfg, reduced)
    except SimulationAbort as exc:
        series, status, code = exc.series, f"aborted: {exc}", EXIT_ABORT
    series.write_csv(csv_path)
    extra = {"partial": code == EXIT_ABORT}
    if fit and code == EXIT_OK:
        g = growth_fit(series)
        rep = {"alpha": g.alpha, "r2": g.r2, "s": cfg.s, "p": cfg.p, "T": cfg.T, "N": cfg.N, "seed": cfg.seed}
        gpath = out / f"growth{tag}.json"
        _write_json(gpath, rep)
        files.append(gpath)
    inputs = [reduced_path] if reduced_path else []
    mpath = out / f"manifest{tag}.json"
    _write_json(mpath, _manifest("simulate", cfg.to_dict(), cfg.seed, inputs, files, started, deterministic, status, **extra))
    return code, [str(f) for f in files]


SIM_FLAGS = ["p", "M", "gridsize", "dt", "T", "s", "N", "seed", "record_every"]


def cmd_simulate(args) -> int:
    raw, text = load_config(args.config)
    cfg = _override(raw, args, SIM_FLAGS)
    out = args.out or cfg.pop("out", None) or "simulate_out"
    cfg.pop("out", None)
    reduced = args.reduced or cfg.pop("reduced", None)
    cfg.pop("reduced", None)
    seeds = args.seeds or [cfg.get("seed", 0)]
    from .fourier_field import SizingError
    from .nls_simulator import SimulationConfig

    try:
        for sd in seeds:
            SimulationConfig.from_dict(dict(cfg, seed=sd))
    except (ValueError, TypeError, SizingError) as exc:
        raise ConfigError(f"{args.config or '<flags>'}: {exc}") from exc
    jobs = 1 if args.deterministic else max(1, args.jobs)
    tags = [f"_seed{sd}" if len(seeds) > 1 else "" for sd in seeds]
    work = [(dict(cfg, seed=sd), reduced, out, args.fit, args.deterministic, tag) for sd, tag in zip(seeds, tags)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_simulate_star, work))
    else:
        results = [_simulate_one(*w) for w in work]
    for code, files in results:
        print("wrote " + ", ".join(files))
    return max(code for code, _ in results)


def _simulate_star(w):
    return _simulate_one(*w)


def cmd_verify_cubic(args) -> int:
    from .cubic_explicit import MAX_VERIFY_M, CubicContext, verify_cubic

    started = time.perf_counter()
    if args.M > MAX_VERIFY_M:
        raise ConfigError(f"--M {args.M}: must be <= {MAX_VERIFY_M}")
    try:
        ctx = CubicContext(M=args.M, N=args.N, beta=args.beta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = verify_cubic(ctx, corrupt=args.corrupt)
    out = Path(args.out)
    _write_json(out, report)
    _write_json(out.with_name(out.stem + "_manifest.json"),
                _manifest("verify-cubic", {"M": args.M, "N": args.N, "beta": args.beta, "corrupt": args.corrupt},
                          None, [], [out], started, args.deterministic, "ok" if report["passed"] else "failed"))
    for r in report["identities"]:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['name']}  {r['max_residual']:.3e}")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_ds_scan(args) -> int:
    from .nls_simulator import ds_exhaustive, ds_lemma_scan

    started = time.perf_counter()
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    if not args.K > 0 or not args.s > 1:
        raise ConfigError("--K must be > 0 and --s > 1")
    rep = ds_lemma_scan(args.s, args.K, args.range, args.samples, args.seed)
    rep["degree4_exhaustive"] = ds_exhaustive(args.s, args.K, args.baseline_range)
    rep["baseline_range"] = args.baseline_range
    out = Path(args.out)
    _write_json(out, rep)
    _write_json(out.with_name(out.stem + "_manifest.json"),
                _manifest("ds-scan", vars_json(args), args.seed, [], [out], started, args.deterministic))
    print(f"max_ratio {rep['max_ratio']:.6g}  degree-4 exhaustive {rep['degree4_exhaustive']:.6g}")
    return EXIT_OK


def cmd_growth_report(args) -> int:
    from .nls_simulator import TimeSeries, growth_fit

    started = time.perf_counter()
    try:
        series = TimeSeries.read_csv(args.csv)
        g = growth_fit(series)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{args.csv}: {exc}") from exc
    rep = {"alpha": g.alpha, "r2": g.r2, "s": args.s, "p": args.p, "T": float(series.column("t")[-1]), "N": args.N, "seed": args.seed}
    out = Path(args.out)
    _write_json(out, rep)
    _write_json(out.with_name(out.stem + "_manifest.json"),
                _manifest("growth-report", vars_json(args), args.seed, [args.csv], [out], started, args.deterministic))
    print(f"alpha {g.alpha:.6g}  r2 {g.r2}")
    return EXIT_OK


def vars_json(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlsform", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--deterministic", action="store_true", help="single worker, fixed reduction order")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", parents=[common], help="normal-form reduction of the NLS Hamiltonian")
    r.add_argument("config", nargs="?")
    r.add_argument("--p", type=int)
    r.add_argument("--M", type=int)
    r.add_argument("--K", type=float)
    r.add_argument("--N", type=float)
    r.add_argument("--T", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--steps", type=int)
    r.add_argument("--taylor-order", dest="taylor_order", type=int)
    r.add_argument("--max-degree", dest="max_degree", type=int)
    r.add_argument("--remainder-threshold", dest="remainder_threshold", type=float)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("simulate", parents=[common], help="integrate NLS and record a time series")
    s.add_argument("config", nargs="?")
    s.add_argument("--reduced", help="reduced Hamiltonian JSON from `reduce`")
    s.add_argument("--fit", action="store_true", help="also write a growth report")
    s.add_argument("--out")
    s.add_argument("--seeds", type=int, nargs="+")
    s.add_argument("--jobs", type=int, default=int(os.environ.get("NLSFORM_THREADS", "1")))
    for name, typ in (("p", int), ("M", int), ("gridsize", int), ("dt", float), ("T", float), ("s", float), ("N", int), ("seed", int)):
        s.add_argument(f"--{name}", type=typ)
    s.add_argument("--record-every", dest="record_every", type=int)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify-cubic", parents=[common], help="check the cubic closed forms")
    v.add_argument("--M", type=int, default=6)
    v.add_argument("--N", type=int, default=8)
    v.add_argument("--beta", type=float, default=0.25)
    v.add_argument("--corrupt", action="store_true", help="negative control: flip one generator coefficient")
    v.add_argument("--out", default="verify_cubic.json")
    v.set_defaults(func=cmd_verify_cubic)

    d = sub.add_parser("ds-scan", parents=[common], help="sampled divisor-size ratio")
    d.add_argument("--s", type=float, default=2.0)
    d.add_argument("--K", type=float, default=1.0)
    d.add_argument("--range", type=int, default=64)
    d.add_argument("--samples", type=int, default=100_000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--baseline-range", dest="baseline_range", type=int, default=8)
    d.add_argument("--out", default="ds_scan.json")
    d.set_defaults(func=cmd_ds_scan)

    g = sub.add_parser("growth-report", parents=[common], help="refit an existing time-series CSV")
    g.add_argument("csv")
    g.add_argument("--s", type=float)
    g.add_argument("--p", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="growth.json")
    g.set_defaults(func=cmd_growth_report)
    return ap


def main(argv=None) -> int:
    from .fourier_field import SizingError
    from .lie_flow import FlowBlowUp

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SizingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlowBlowUp as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
