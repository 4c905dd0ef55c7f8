"""Command-line front end.

Subcommands::

    attack        run one attack and write a trace CSV
    bench         run a benchmark grid from a config file
    sample        draw a noise batch and print uniformity diagnostics
    oracle-serve  expose a built-in oracle over stdin/stdout (line protocol)

Oracle argument grammar (shared by ``attack`` and ``oracle-serve``)::

    kind:key=value,key=value,...

    hypersphere:r=0.5,m=20[,center=0.1;0.2;...]
    halfspace:w=1;0;0,b=-0.5            (vectors: ';'-separated or @file)
    mlp:weights=model.txt[,class=0|target=1]
    external:m=20,cmd=python serve.py   (cmd= must come last; rest is raw)

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .attack import AttackConfig, run_attack
from .errors import (
    ConfigError,
    InitFailedError,
    LhsAttackError,
    OracleFailedError,
    WeightsFormatError,
)
from .harness import (
    OracleSpecConfig,
    build_oracle,
    emit_trace_csv,
    generate_points,
    load_points_file,
    parse_config,
    run_experiment,
    _setup_decision,
)
from .oracles import (
    PHASE_INIT,
    TARGETED,
    UNTARGETED,
    ExternalOracle,
    HalfspaceOracle,
    HypersphereOracle,
    MlpOracle,
    QueryLedger,
    decide,
    format_floats,
    load_mlp,
    serve_oracle,
)
from .samplers import (
    LHS,
    SRS,
    batch_discrepancy,
    lhs_normal,
    normalize_rows,
    srs_normal,
)

__all__ = ["main", "parse_oracle_spec"]


def _err(msg: str) -> None:
    print(f"lhsattack: {msg}", file=sys.stderr)


def _parse_vector(text: str) -> np.ndarray:
    """A ';'-separated float list, or @path to a float-line file."""
    if text.startswith("@"):
        return load_points_file(text[1:])[0]
    try:
        vals = [float(t) for t in text.split(";") if t.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad vector {text!r}: {exc}") from exc
    if not vals:
        raise ConfigError(f"bad vector {text!r}: no values")
    return np.array(vals, dtype=np.float64)


_SPEC_FIELDS = {
    "r": ("radius", float), "radius": ("radius", float),
    "m": ("dim", int), "dim": ("dim", int),
    "b": ("offset", float), "offset": ("offset", float),
    "w": ("normal", _parse_vector), "normal": ("normal", _parse_vector),
    "weights": ("weights", str),
    "timeout": ("timeout", float),
    "target": ("target_class", int), "target_class": ("target_class", int),
    "class": ("original_class", int), "original_class": ("original_class", int),
    "center": ("center", _parse_vector),
}


def parse_oracle_spec(text: str) -> OracleSpecConfig:
    """Parse a ``kind:key=value,...`` oracle argument.

    ``cmd=`` consumes the remainder of the string verbatim (so external
    commands may contain commas); every other value is a scalar, a
    ';'-separated vector, or ``@file``.
    """
    kind, sep, rest = text.partition(":")
    kind = kind.strip()
    if not kind:
        raise ConfigError(f"oracle spec {text!r}: missing kind")
    kwargs = {}
    while rest:
        if rest.startswith("cmd="):
            kwargs["cmd"] = rest[4:]
            if not kwargs["cmd"].strip():
                raise ConfigError(f"oracle spec {text!r}: empty cmd")
            break
        part, _, rest = rest.partition(",")
        part = part.strip()
        if not part:
            continue
        key, eq, value = part.partition("=")
        key = key.strip()
        if not eq or key not in _SPEC_FIELDS:
            raise ConfigError(f"oracle spec: unknown or malformed token {part!r}")
        field, conv = _SPEC_FIELDS[key]
        try:
            kwargs[field] = conv(value.strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"oracle spec: bad value for {key!r}: {exc}") from exc
    return OracleSpecConfig(name=kind, kind=kind, **kwargs)


def _resolve_dim(spec: OracleSpecConfig, point, dim_flag, model_cache) -> int:
    candidates = []
    if point is not None:
        candidates.append(len(point))
    if dim_flag:
        candidates.append(dim_flag)
    if spec.normal is not None:
        candidates.append(spec.normal.shape[0])
    if spec.kind == "mlp":
        if spec.weights not in model_cache:
            model_cache[spec.weights] = load_mlp(spec.weights)
        candidates.append(model_cache[spec.weights].input_dim)
    if spec.dim:
        candidates.append(spec.dim)
    if not candidates:
        raise ConfigError(
            "input dimension unknown; give --point, --dim, or m= in the oracle spec")
    if len(set(candidates)) != 1:
        raise ConfigError(f"conflicting input dimensions {sorted(set(candidates))}")
    return candidates[0]


def cmd_attack(args) -> int:
    spec = parse_oracle_spec(args.oracle)
    if args.target_class is not None:
        spec.target_class = args.target_class
    model_cache: dict = {}

    point = None
    if args.point is not None:
        try:
            point = np.array([float(t) for t in args.point.split()], dtype=np.float64)
        except ValueError as exc:
            raise ConfigError(f"--point: {exc}") from exc
    elif args.point_file is not None:
        point = load_points_file(args.point_file)[0]
    dim = _resolve_dim(spec, point, args.dim, model_cache)
    if spec.dim is None:
        spec.dim = dim

    target_image = None
    if args.target_image is not None:
        target_image = load_points_file(args.target_image)[0]

    external = None
    if spec.kind == "external":
        external = ExternalOracle(spec.cmd, dim=dim, timeout=spec.timeout)
    try:
        if point is None:
            if spec.kind == "hypersphere":
                accept = None
            elif spec.kind == "external":
                accept = lambda c: _setup_decision(external, c) == -1
            else:
                accept = lambda c: _setup_decision(
                    build_oracle(spec, c, model_cache), c) == -1
            point = generate_points(1, dim, args.seed, args.clip_low,
                                    args.clip_high, accept=accept)[0]
        else:
            if len(point) != dim:
                raise ConfigError(f"point has {len(point)} coordinates, expected {dim}")
            probe = external if external is not None \
                else build_oracle(spec, point, model_cache)
            if _setup_decision(probe, point) != -1:
                raise ConfigError(
                    "original point is already adversarial for this oracle")

        oracle = external if external is not None \
            else build_oracle(spec, point, model_cache)
        config = AttackConfig(
            initial_samples=args.initial_samples,
            iterations=args.iterations,
            bisect_tol=args.bisect_tol,
            max_queries=args.budget,
            sampler_kind=args.sampler,
            mode=args.mode,
            seed=args.seed,
            init_target_image=target_image,
            max_init_tries=args.max_init_tries,
            max_step_retries=args.max_step_retries,
            clip_low=args.clip_low,
            clip_high=args.clip_high,
        )
        try:
            best, trace = run_attack(oracle, point, config)
        except (InitFailedError, OracleFailedError) as exc:
            if exc.trace is not None:
                emit_trace_csv(exc.trace, args.out)
            _err(f"attack failed: {exc}")
            return 2
        emit_trace_csv(trace, args.out)
        distortion = float(np.linalg.norm(best - point))
        print(f"status={trace.status} queries={trace.queries_total} "
              f"distortion={distortion:.6g} trace={args.out}")
        return 0
    finally:
        if external is not None:
            external.close()


def cmd_bench(args) -> int:
    config = parse_config(args.config)
    result = run_experiment(config, output_dir=args.output_dir)
    for row in result.summary_rows:
        print(f"{row.oracle} {row.sampler} budget={row.budget} "
              f"{row.statistic}={row.distortion:.6g} (n={row.repetitions})")
    failures = [r for r in result.runs if r.error is not None]
    if failures:
        _err(f"{len(failures)} of {len(result.runs)} runs failed; see summary comments")
    print(f"summary written to {result.summary_path}")
    return 0


def cmd_sample(args) -> int:
    sampler = lhs_normal if args.sampler == LHS else srs_normal
    batch = sampler(args.count, args.dim, args.seed)
    if args.normalize:
        batch = normalize_rows(batch)
    print(f"sampler={batch.sampler_kind} n={batch.n_samples} "
          f"dim={batch.dim} seed={batch.seed}")
    col_means = batch.rows.mean(axis=0)
    print(f"worst_coordinate_mean={np.abs(col_means).max():.6g}")
    if batch.n_samples >= 2 and not args.normalize:
        print(f"ks_discrepancy={batch_discrepancy(batch):.6g}")
    if batch.stratum_index is not None:
        full = np.arange(batch.n_samples)
        ok = all(np.array_equal(np.sort(batch.stratum_index[:, j]), full)
                 for j in range(batch.dim))
        print(f"one_sample_per_stratum={'yes' if ok else 'NO'}")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            for row in batch.rows:
                fh.write(format_floats(row) + "\n")
        print(f"rows written to {args.out}")
    return 0


def _build_serve_oracle(spec: OracleSpecConfig):
    if spec.kind == "halfspace":
        return HalfspaceOracle(spec.normal, spec.offset)
    if spec.kind == "hypersphere":
        if spec.center is None:
            raise ConfigError("hypersphere serving needs center=<vector>")
        return HypersphereOracle(spec.center, spec.radius)
    if spec.kind == "mlp":
        model = load_mlp(spec.weights)
        mode = TARGETED if spec.target_class is not None else UNTARGETED
        try:
            return MlpOracle(model, None, mode=mode,
                             original_class=spec.original_class,
                             target_class=spec.target_class)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"cannot serve oracle kind {spec.kind!r}")


def cmd_oracle_serve(args) -> int:
    spec = parse_oracle_spec(args.spec)
    oracle = _build_serve_oracle(spec)
    ledger = QueryLedger()
    served = serve_oracle(
        lambda x: decide(oracle, x, ledger, PHASE_INIT), oracle.dim)
    print(f"served {served} decisions", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lhsattack",
        description="Decision-based boundary attack with stratified gradient sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="run one attack and write a trace CSV")
    p.add_argument("--oracle", required=True,
                   help="oracle spec, e.g. hypersphere:r=0.5,m=20")
    p.add_argument("--sampler", choices=(LHS, SRS), default=LHS)
    p.add_argument("--budget", type=int, default=None,
                   help="hard query cap (default: unlimited)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--point", help="original point as space-separated floats")
    p.add_argument("--point-file", help="float-line file; first line is the original")
    p.add_argument("--dim", type=int, help="input dimension when not implied")
    p.add_argument("--iterations", type=int, default=64)
    p.add_argument("--initial-samples", type=int, default=100)
    p.add_argument("--bisect-tol", type=float, default=None)
    p.add_argument("--mode", choices=(UNTARGETED, TARGETED), default=UNTARGETED)
    p.add_argument("--target-class", type=int, default=None)
    p.add_argument("--target-image", help="float-line file with the targeted start")
    p.add_argument("--max-init-tries", type=int, default=1000)
    p.add_argument("--max-step-retries", type=int, default=30)
    p.add_argument("--clip-low", type=float, default=0.0)
    p.add_argument("--clip-high", type=float, default=1.0)
    p.add_argument("--out", default="trace.csv", help="trace CSV path")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="run a benchmark grid from a config file")
    p.add_argument("config", help="experiment config file (INI grammar)")
    p.add_argument("--output-dir", default=None,
                   help="override the config's output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sample", help="draw a noise batch and print diagnostics")
    p.add_argument("--sampler", choices=(LHS, SRS), default=LHS)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize", action="store_true",
                   help="scale rows to unit length")
    p.add_argument("--out", help="write rows as float lines")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("oracle-serve",
                       help="answer line-protocol queries on stdin/stdout")
    p.add_argument("spec", help="oracle spec, e.g. halfspace:w=1;0,b=-0.5")
    p.set_defaults(func=cmd_oracle_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ConfigError, WeightsFormatError) as exc:
        _err(str(exc))
        return 1
    except ValueError as exc:
        _err(str(exc))
        return 1
    except LhsAttackError as exc:
        _err(str(exc))
        return 2
    except OSError as exc:
        _err(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
