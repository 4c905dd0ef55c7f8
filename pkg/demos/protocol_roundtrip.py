"""Drive an oracle over the line protocol and match the in-process run.

First talks the protocol by hand — handshake plus two probes against a
served halfspace — printing everything that crosses the pipe. Then runs
the same attack twice: once against the in-process halfspace oracle,
once against ``oracle-serve`` in a child process, and checks the two
trace CSVs are byte-identical. The wire adds a process boundary, not a
single bit of drift.

Run:  python3 demos/protocol_roundtrip.py
"""

import argparse
import subprocess
import sys
import tempfile

from lhsattack import (
    AttackConfig,
    ExternalOracle,
    HalfspaceOracle,
    emit_trace_csv,
    run_attack,
)


def halfspace_spec(weights, offset) -> str:
    return "halfspace:w=" + ";".join(str(v) for v in weights) + f",b={offset}"


def manual_session(spec: str, dim: int) -> None:
    middle = ["0.5"] * (dim - 2)
    lines = [f"HELLO m={dim}", " ".join(["0"] + middle + ["1"]),
             " ".join(["1"] + middle + ["0"])]
    proc = subprocess.run(
        [sys.executable, "-m", "lhsattack", "oracle-serve", spec],
        input="".join(line + "\n" for line in lines),
        capture_output=True, text=True, check=True)
    replies = proc.stdout.splitlines()
    for sent, got in zip(lines, replies):
        print(f"   -> {sent}")
        print(f"   <- {got}")
    print(f"   [child stderr] {proc.stderr.strip()}")


def main() -> None:
    sys.stdout.reconfigure(line_buffering=True)
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=6)
    parser.add_argument("--iterations", type=int, default=10)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    weights = [round(0.1 * i - 0.3, 10) for i in range(args.dim)]
    offset = -0.05
    spec = halfspace_spec(weights, offset)
    original = [0.5] * args.dim

    print(f"-- hand-rolled session against: oracle-serve {spec}")
    manual_session(spec, args.dim)

    config = AttackConfig(iterations=args.iterations, seed=args.seed)
    best_local, trace_local = run_attack(
        HalfspaceOracle(weights, offset), original, config)

    cmd = f"{sys.executable} -m lhsattack oracle-serve {spec}"
    with ExternalOracle(cmd, dim=args.dim) as oracle:
        best_wire, trace_wire = run_attack(oracle, original, config)

    with tempfile.NamedTemporaryFile(suffix=".csv") as f_local, \
            tempfile.NamedTemporaryFile(suffix=".csv") as f_wire:
        emit_trace_csv(trace_local, f_local.name)
        emit_trace_csv(trace_wire, f_wire.name)
        local_bytes = open(f_local.name, "rb").read()
        wire_bytes = open(f_wire.name, "rb").read()

    print(f"\n-- full attack, seed {args.seed}, {args.iterations} iterations")
    print(f"   in-process: {trace_local.ledger.total_queries} queries, "
          f"final distortion {trace_local.rows[-1].distortion:.6f}")
    print(f"   over pipe:  {trace_wire.ledger.total_queries} queries, "
          f"final distortion {trace_wire.rows[-1].distortion:.6f}")
    print(f"   trace CSVs byte-identical: {local_bytes == wire_bytes}")
    if local_bytes != wire_bytes:
        raise SystemExit("traces diverged")


if __name__ == "__main__":
    main()
