"""Command line front end: experiment runs, sweeps, the CHC table, codec dumps.

Exit codes: 0 success, 1 configuration error, 2 runtime error. The
ABP_SIM_THREADS environment variable caps run parallelism (0 or unset means
automatic, 1 forces serial execution).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .codec import (
    HelloPacket,
    ProtocolVariant,
    encode_hello,
    format_bits,
    packet_size_bits,
)
from .config import (
    ConfigError,
    ExperimentSpec,
    format_resolved,
    load_config,
    validate_spec,
)
from .engine import SweepRow, sweep
from .protocols import ElectionParams, competence

FIGURE_METRICS = {
    "fig6": ("control_msgs", "fig6_messages.csv"),
    "fig7": ("control_bits", "fig7_bits.csv"),
    "fig8": ("ch_changes", "fig8_ch_changes.csv"),
    "fig9": ("energy_variance", "fig9_energy_var.csv"),
}

# d and b columns of the built-in competence table fixture (weights 0.4/0.6,
# penalty 1).
TABLE1_ROWS = [
    (1, 6, 4),
    (2, 4, 5),
    (3, 4, 3),
    (4, 3, 4),
    (5, 2, 2),
    (6, 5, 4),
    (7, 5, 2),
    (8, 5, 1),
    (9, 5, 4),
    (10, 5, 5),
    (11, 2, 4),
    (12, 5, 2),
    (13, 3, 4),
    (14, 2, 7),
    (15, 4, 2),
]


def _pstdev(values: list[float]) -> float:
    if not values:
        return 0.0
    mean = sum(values) / len(values)
    return (sum((v - mean) ** 2 for v in values) / len(values)) ** 0.5


def _parallel_map(jobs_hint: int):
    raw = os.environ.get("ABP_SIM_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"ABP_SIM_THREADS must be an integer, got {raw!r}") from None
    if cap == 0:
        cap = os.cpu_count() or 1
    workers = max(1, min(cap, jobs_hint))
    if workers == 1:
        return None
    return ProcessPoolExecutor(max_workers=workers)


def _execute_sweep(spec: ExperimentSpec) -> list[SweepRow]:
    jobs = len(spec.variants) * len(spec.values) * len(spec.seeds)
    pool = _parallel_map(jobs)
    if pool is None:
        return sweep(spec.config, spec.axis, spec.values, spec.variants, spec.seeds)
    with pool:
        return sweep(
            spec.config, spec.axis, spec.values, spec.variants, spec.seeds,
            map_fn=pool.map,
        )


def _metric(record, name: str) -> float:
    return getattr(record, name)


def _write_outputs(spec: ExperimentSpec, rows: list[SweepRow]) -> list[str]:
    os.makedirs(spec.out_dir, exist_ok=True)
    written = []
    for figure in spec.figures:
        metric, filename = FIGURE_METRICS[figure]
        path = os.path.join(spec.out_dir, filename)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"variant,{spec.axis},mean,stddev\n")
            for row in rows:
                values = [_metric(r, metric) for r in row.batch.per_seed]
                mean = _metric(row.batch.average, metric)
                fh.write(
                    f"{row.variant.value},{row.value!r},{mean!r},{_pstdev(values)!r}\n"
                )
        written.append(path)
    raw_path = os.path.join(spec.out_dir, "raw_long.csv")
    with open(raw_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("variant,axis,axis_value,seed,metric,value\n")
        for row in rows:
            for seed, record in zip(spec.seeds, row.batch.per_seed):
                for figure in spec.figures:
                    metric, _ = FIGURE_METRICS[figure]
                    fh.write(
                        f"{row.variant.value},{row.axis},{row.value!r},{seed},"
                        f"{metric},{_metric(record, metric)!r}\n"
                    )
    written.append(raw_path)
    resolved_path = os.path.join(spec.out_dir, "resolved_config.txt")
    with open(resolved_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_resolved(spec))
    written.append(resolved_path)
    return written


def _cmd_run(args) -> int:
    spec = load_config(args.config, args.set or [])
    if args.out:
        spec.out_dir = args.out
    if args.seed is not None:
        spec.seeds = [args.seed]
    print(format_resolved(spec), end="")
    rows = _execute_sweep(spec)
    for path in _write_outputs(spec, rows):
        print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    spec = load_config(args.config, args.set or [])
    if args.out:
        spec.out_dir = args.out
    if args.axis:
        spec.axis = args.axis
    if args.values:
        spec.values = [float(v) for v in args.values.split(",") if v.strip()]
    if args.variants:
        spec.variants = [
            ProtocolVariant(v.strip().upper()) for v in args.variants.split(",")
        ]
    # Re-validate after command-line adjustments.
    validate_spec(spec)
    print(format_resolved(spec), end="")
    rows = _execute_sweep(spec)
    for path in _write_outputs(spec, rows):
        print(f"wrote {path}")
    return 0


def format_chc(value: float, decimal: str) -> str:
    """Trim trailing zeros the way the reference table prints them."""
    if abs(value - round(value)) < 1e-9:
        text = str(int(round(value)))
    else:
        text = f"{value:.10g}"
    return text.replace(".", ",") if decimal == "comma" else text


def _cmd_table1(args) -> int:
    params = ElectionParams(
        degree_weight=args.c1,
        battery_weight=args.c2,
        handover_penalty=args.p,
        max_members=10,
    )
    if args.d or args.b:
        if not (args.d and args.b):
            raise ConfigError("provide both --d and --b, or neither")
        degrees = [int(v) for v in args.d.split(",")]
        batteries = [float(v) for v in args.b.split(",")]
        if len(degrees) != len(batteries):
            raise ConfigError(
                f"--d has {len(degrees)} entries but --b has {len(batteries)}"
            )
        rows = [(i + 1, d, b) for i, (d, b) in enumerate(zip(degrees, batteries))]
    else:
        rows = TABLE1_ROWS
    print("MH_ID\td\tb\tCHC")
    for mh_id, d, b in rows:
        score = competence(d, b, False, params)
        print(f"{mh_id}\t{d}\t{format_chc(b, args.decimal)}\t{format_chc(score, args.decimal)}")
    return 0


def _cmd_codec_dump(args) -> int:
    variant = ProtocolVariant(args.variant.upper())
    packet = HelloPacket(
        mh_id=args.mh_id,
        ch_id=args.ch_id,
        chc_q=args.chc_q,
        option=args.option,
        bp_code=args.bp_code,
    )
    bits = encode_hello(packet, variant)
    print(f"{variant.value} ({packet_size_bits(variant)} bits): {format_bits(bits, variant)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abpsim",
        description="MANET clustering simulator with adaptive Hello broadcast periods",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override one config key"
    )
    common.add_argument("--out", help="output directory for CSV artifacts")
    common.add_argument("--seed", type=int, help="run a single seed instead of the list")

    p_run = sub.add_parser("run", parents=[common], help="execute the configured experiment")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common], help="sweep an axis across variants")
    p_sweep.add_argument("--axis", choices=("mean_speed", "node_count"))
    p_sweep.add_argument("--values", help="comma-separated axis values")
    p_sweep.add_argument("--variants", help="comma-separated protocol variants")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_table = sub.add_parser("table1", help="print the competence table fixture")
    p_table.add_argument("--c1", type=float, default=0.4)
    p_table.add_argument("--c2", type=float, default=0.6)
    p_table.add_argument("--p", type=float, default=1.0)
    p_table.add_argument("--d", help="comma-separated degrees")
    p_table.add_argument("--b", help="comma-separated battery levels")
    p_table.add_argument("--decimal", choices=("dot", "comma"), default="dot")
    p_table.set_defaults(func=_cmd_table1)

    p_codec = sub.add_parser("codec", help="wire format utilities")
    codec_sub = p_codec.add_subparsers(dest="codec_command", required=True)
    p_dump = codec_sub.add_parser("dump", help="print a packet's bit layout")
    p_dump.add_argument("--variant", required=True, choices=[v.value for v in ProtocolVariant])
    p_dump.add_argument("--mh-id", dest="mh_id", type=int, required=True)
    p_dump.add_argument("--ch-id", dest="ch_id", type=int, default=255)
    p_dump.add_argument("--chc-q", dest="chc_q", type=int, default=0)
    p_dump.add_argument("--option", type=int, default=0)
    p_dump.add_argument("--bp-code", dest="bp_code", type=int, default=0)
    p_dump.set_defaults(func=_cmd_codec_dump)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
