"""Command-line pipelines: simulate, extract, analyze, efficiency, bench.

Every file-producing run writes a ``<output>.manifest.json`` holding
the exact argument vector, seeds, and toolkit version needed to
reproduce it byte for byte.  All randomness flows from the --seed
argument; nothing reads ambient entropy.

Exit codes: 0 success (and all requested property checks passed),
1 a property check failed, 2 usage or input-format errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import min_entropy, sanity_tests, uniformity_matrix
from .efficiency import (
    ModulationProfile,
    binary_rate,
    block_entropy_rate,
    shannon_binary,
    time_average_binary_rate,
)
from .errors import DomainError, StreamFormatError, TimebinError
from .extractor import (
    MERGE_POLICIES,
    DetectionStream,
    StreamingExtractor,
    StreamingMerger,
)
from .source_sim import GENERATOR_TAG, SCENARIOS, SourceModel, iter_simulate, preset
from . import streamio

_DEFAULT_CHUNK = 1 << 24


# ---------------------------------------------------------------------------
# helpers


def _model_to_dict(model: SourceModel) -> dict:
    d = asdict(model)
    d["afterpulse_taps"] = list(model.afterpulse_taps)
    return d


def _model_from_dict(d: dict) -> SourceModel:
    mod = d.get("modulation")
    modulation = ModulationProfile(**mod) if mod else None
    known = {
        "mean_photons",
        "dark_rate",
        "efficiency",
        "window",
        "afterpulse_taps",
        "gate_frequency",
    }
    kwargs = {k: v for k, v in d.items() if k in known}
    if "afterpulse_taps" in kwargs:
        kwargs["afterpulse_taps"] = tuple(kwargs["afterpulse_taps"])
    return SourceModel(modulation=modulation, **kwargs)


def _load_models(path) -> list[SourceModel]:
    cfg = json.loads(Path(path).read_text())
    entries = cfg["channels"] if isinstance(cfg, dict) else cfg
    if not entries:
        raise DomainError(f"{path}: no channels defined")
    return [_model_from_dict(e) for e in entries]


def _channel_path(base: str, channel: int, channels: int) -> Path:
    if channels == 1:
        return Path(base)
    p = Path(base)
    return p.with_name(f"{p.stem}.ch{channel}{p.suffix}")


def _write_manifest(primary_out: str, argv: list[str], command: str, outputs: list[str]) -> None:
    manifest = {
        "tool": "timebinrng",
        "version": __version__,
        "command": command,
        "argv": argv,
        "generator": GENERATOR_TAG,
        "outputs": outputs,
    }
    Path(str(primary_out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _parse_float_pi(text: str) -> float:
    text = text.strip()
    if text.endswith("pi"):
        return float(text[:-2] or "1") * math.pi
    return float(text)


def _parse_range(text: str, kind: str):
    """`4`, `2..8`, `2..8:2`, or comma lists; kind is 'int' or 'float'."""
    conv = int if kind == "int" else _parse_float_pi
    if "," in text:
        return [conv(s) for s in text.split(",") if s]
    if ".." in text:
        lo_s, rest = text.split("..", 1)
        if ":" in rest:
            hi_s, step_s = rest.split(":", 1)
            step = conv(step_s)
        else:
            hi_s, step = rest, conv("1") if kind == "int" else None
        if step is None:
            raise DomainError(f"float range {text!r} needs an explicit :step")
        lo, hi = conv(lo_s), conv(hi_s)
        out = []
        v = lo
        while v <= hi + (1e-12 if kind == "float" else 0):
            out.append(v if kind == "int" else round(v, 12))
            v += step
        return out
    return [conv(text)]


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args, argv: list[str]) -> int:
    if args.scenario:
        models = preset(args.scenario)
        scenario = args.scenario
    else:
        models = _load_models(args.model_file)
        scenario = None
    outputs = []
    for channel, model in enumerate(models):
        out_path = _channel_path(args.out, channel, len(models))
        outputs.append(str(out_path))
        period_ns = int(round(model.window_period * 1e9))
        chunks = iter_simulate(
            model,
            args.windows,
            args.seed,
            chunk_windows=args.chunk_windows,
            channel_id=channel,
            t0=args.t0,
        )
        if args.format == "tbd1":
            with streamio.StreamWriter(out_path, period_ns, channel) as writer:
                for chunk in chunks:
                    writer.write(chunk)
        else:
            with open(out_path, "wb") as fh:
                for chunk in chunks:
                    fh.write(
                        np.where(chunk, ord("1"), ord("0")).astype(np.uint8).tobytes()
                    )
        streamio.write_meta(
            out_path,
            {
                "command": "simulate",
                "version": __version__,
                "scenario": scenario,
                "model": _model_to_dict(model),
                "windows": args.windows,
                "seed": args.seed,
                "channel_id": channel,
                "generator": GENERATOR_TAG,
                "t0": args.t0,
                "format": args.format,
            },
        )
        print(f"wrote {out_path} ({args.windows} windows, channel {channel})")
    _write_manifest(args.out, argv, "simulate", outputs)
    return 0


# ---------------------------------------------------------------------------
# extract


def _iter_input_chunks(path, chunk_windows: int):
    if streamio.is_tbd1(path):
        yield from streamio.iter_stream_windows(path, chunk_windows)
    else:
        arr = streamio.parse_ascii_bits(Path(path).read_bytes(), source=str(path))
        for i in range(0, max(arr.size, 1), chunk_windows):
            chunk = arr[i : i + chunk_windows]
            if chunk.size or i == 0:
                yield chunk


def _input_window_count(path) -> int:
    if streamio.is_tbd1(path):
        return streamio.read_stream_header(path)[0]
    return int(streamio.parse_ascii_bits(Path(path).read_bytes(), source=str(path)).size)


def _input_period(path) -> float | None:
    if streamio.is_tbd1(path):
        return streamio.read_stream_header(path)[1] * 1e-9
    return None


def _cmd_extract(args, argv: list[str]) -> int:
    inputs = args.inputs
    counts = [_input_window_count(p) for p in inputs]
    if len(inputs) == 1:
        extractor = StreamingExtractor(args.block_len)
        for chunk in _iter_input_chunks(inputs[0], args.chunk_windows):
            extractor.feed(chunk)
        result = extractor.finish()
    else:
        if args.merge == "round-robin-block" and len(set(counts)) != 1:
            raise DomainError(
                "round-robin-block merging needs equal window counts per channel; "
                f"got {counts}"
            )
        merger = StreamingMerger(args.block_len, len(inputs), args.merge)
        iters = [_iter_input_chunks(p, args.chunk_windows) for p in inputs]
        empty = np.zeros(0, dtype=np.uint8)
        live = True
        while live:
            live = False
            chunks = []
            for it in iters:
                chunk = next(it, None)
                if chunk is None or chunk.size == 0:
                    chunks.append(empty)
                else:
                    chunks.append(chunk)
                    live = True
            if live:
                merger.feed(chunks)
        result = merger.finish()

    streamio.write_bit_output(
        args.out,
        result,
        fmt=args.format,
        extra={
            "command": "extract",
            "version": __version__,
            "block_len": args.block_len,
            "merge_policy": args.merge if len(inputs) > 1 else None,
            "inputs": list(inputs),
        },
    )
    _write_manifest(args.out, argv, "extract", [args.out])

    stats = result.stats
    windows_per_channel = max(counts)
    print(f"channels = {len(inputs)}")
    print(f"windows_seen = {stats.windows_seen}")
    print(f"blocks_scanned = {stats.blocks_scanned}")
    print(f"blocks_discarded_k0_kn = {stats.blocks_discarded_k0_kn}")
    print(f"fragments_discarded_alpha0 = {stats.fragments_discarded_alpha0}")
    print(f"bits_emitted = {stats.bits_emitted}")
    if stats.windows_seen:
        print(f"bits_per_window = {stats.bits_emitted / stats.windows_seen:.6f}")
        print(
            "bits_per_channel_window = "
            f"{stats.bits_emitted / windows_per_channel:.6f}"
        )
    period = _input_period(inputs[0])
    if period and windows_per_channel:
        rate = stats.bits_emitted / (windows_per_channel * period)
        print(f"throughput_mbps = {rate / 1e6:.4f}")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def _analyze_input(path):
    """Classify the input: ('tbd1'|'packed'|'ascii')."""
    if streamio.is_tbd1(path):
        return "tbd1"
    if streamio.meta_path(path).exists():
        return "packed"
    return "ascii"


def _cmd_analyze(args, argv: list[str]) -> int:
    checks = [
        name
        for name, wanted in (
            ("min-entropy", args.min_entropy),
            ("uniformity", args.uniformity),
            ("sanity", args.sanity),
        )
        if wanted
    ]
    if not checks:
        raise DomainError("select at least one of --min-entropy, --uniformity, --sanity")
    kind = _analyze_input(args.input)
    lines: list[str] = []
    all_pass = True

    def bits_input() -> np.ndarray:
        if kind == "tbd1":
            raise DomainError(
                "bit-level checks need a bit file (ascii or packed); "
                "got a TIMEBIN1 window stream"
            )
        return streamio.read_bits(args.input)

    def window_stream() -> DetectionStream:
        if kind == "packed":
            raise DomainError(
                "uniformity needs a window stream (TIMEBIN1 or ascii windows); "
                "got a packed bit file"
            )
        if kind == "tbd1":
            return streamio.read_stream(args.input)
        return DetectionStream(streamio.read_ascii_bits(args.input))

    for check in checks:
        lines.append(f"[{check}]")
        try:
            if check == "min-entropy":
                rep = min_entropy(bits_input(), args.word_bits)
                bound = 5.0 * rep.stat_error_scale
                ok = rep.deviation < bound
                lines += [
                    f"word_bits = {rep.word_bits}",
                    f"word_count = {rep.word_count}",
                    f"min_entropy = {rep.min_entropy:.6f}",
                    f"deviation = {rep.deviation:.6g}",
                    f"stat_error_scale = {rep.stat_error_scale:.6g}",
                    f"bound_5x_scale = {bound:.6g}",
                    f"pass = {str(ok).lower()}",
                ]
            elif check == "uniformity":
                rep = uniformity_matrix(window_stream(), args.block_len)
                ok = (
                    rep.symmetry_deviation < 5.0
                    and rep.independence_deviation < 5.0
                    and rep.subblock_max_z < 4.0
                )
                lines += [
                    f"block_len = {rep.block_len}",
                    f"pair_count = {rep.pair_count}",
                    f"symmetry_deviation = {rep.symmetry_deviation:.4f}",
                    f"independence_deviation = {rep.independence_deviation:.4f}",
                    f"subblock_max_z = {rep.subblock_max_z:.4f}",
                    f"pass = {str(ok).lower()}",
                ]
            else:
                rep = sanity_tests(bits_input())
                ok = rep.passed
                lines += [
                    f"n_bits = {rep.n_bits}",
                    f"monobit_z = {rep.monobit_z:.4f}",
                    f"runs_z = {rep.runs_z:.4f}",
                    f"lag1_z = {rep.lag1_z:.4f}",
                    f"pass = {str(ok).lower()}",
                ]
        except TimebinError as exc:
            lines.append(f"error = {exc}")
            ok = False
        all_pass = all_pass and ok
        lines.append("")

    report = "\n".join(lines).rstrip() + "\n"
    sys.stdout.write(report)
    if args.out:
        Path(args.out).write_text(report)
        _write_manifest(args.out, argv, "analyze", [args.out])
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# efficiency


def _parse_profile(text: str) -> ModulationProfile:
    fields = {}
    for part in text.split(","):
        if not part:
            continue
        key, _, value = part.partition("=")
        fields[key.strip()] = _parse_float_pi(value)
    aliases = {
        "base": "base",
        "amp": "amplitude",
        "amplitude": "amplitude",
        "omega": "angular_frequency",
        "angular_frequency": "angular_frequency",
        "t": "duration",
        "duration": "duration",
    }
    kwargs = {}
    for key, value in fields.items():
        name = aliases.get(key.lower())
        if name is None:
            raise DomainError(f"unknown profile key {key!r}")
        kwargs[name] = value
    return ModulationProfile(**kwargs)


def _cmd_efficiency(args, argv: list[str]) -> int:
    ns = _parse_range(args.block_len, "int")
    if args.profile:
        profile = _parse_profile(args.profile)
        print("N\tbase\tamplitude\tomega\tduration\tHb_avg")
        for n in ns:
            avg = time_average_binary_rate(n, profile)
            print(
                f"{n}\t{profile.base:.6g}\t{profile.amplitude:.6g}"
                f"\t{profile.angular_frequency:.6g}\t{profile.duration:.6g}\t{avg:.6f}"
            )
        return 0
    ps = _parse_range(args.p, "float")
    print("N\tp\tshannon\tblock_rate\tbinary_rate")
    for n in ns:
        for p in ps:
            print(
                f"{n}\t{p:.6g}\t{shannon_binary(p):.6f}"
                f"\t{block_entropy_rate(n, p):.6f}\t{binary_rate(n, p):.6f}"
            )
    return 0


# ---------------------------------------------------------------------------
# bench


def _cmd_bench(args, argv: list[str]) -> int:
    models = preset(args.scenario)
    model = models[0]
    t0 = time.perf_counter()
    extractor = StreamingExtractor(args.block_len)
    sim_seconds = 0.0
    mark = time.perf_counter()
    for chunk in iter_simulate(model, args.windows, args.seed, chunk_windows=args.chunk_windows):
        sim_seconds += time.perf_counter() - mark
        extractor.feed(chunk)
        mark = time.perf_counter()
    result = extractor.finish()
    total = time.perf_counter() - t0
    extract_seconds = total - sim_seconds
    print(f"windows = {args.windows}")
    print(f"bits_emitted = {result.stats.bits_emitted}")
    print(f"simulate_mwin_per_s = {args.windows / sim_seconds / 1e6:.1f}")
    print(f"extract_mwin_per_s = {args.windows / extract_seconds / 1e6:.1f}")
    print(f"end_to_end_mwin_per_s = {args.windows / total / 1e6:.1f}")
    print(f"bits_per_window = {result.stats.bits_emitted / max(args.windows, 1):.6f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timebinrng",
        description="Time-bin block randomness extraction toolkit",
    )
    parser.add_argument("--version", action="version", version=f"timebinrng {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate seeded detector streams")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=sorted(SCENARIOS), help="preset a, b, or c")
    src.add_argument("--model-file", help="JSON source model configuration")
    sim.add_argument("--windows", type=int, required=True, help="windows per channel")
    sim.add_argument("--seed", type=int, required=True, help="base seed (mandatory)")
    sim.add_argument("--out", required=True, help="output stream path (base name)")
    sim.add_argument("--format", choices=("tbd1", "ascii"), default="tbd1")
    sim.add_argument("--t0", type=float, default=0.0, help="simulation start time, s")
    sim.add_argument("--chunk-windows", type=int, default=_DEFAULT_CHUNK)
    sim.set_defaults(func=_cmd_simulate)

    ext = sub.add_parser("extract", help="turn streams into random bits")
    ext.add_argument("inputs", nargs="+", help="stream files (TIMEBIN1 or ascii)")
    ext.add_argument("-N", "--block-len", type=int, default=4)
    ext.add_argument("--format", choices=("packed", "ascii"), default="packed")
    ext.add_argument("--merge", choices=MERGE_POLICIES, default="round-robin-block")
    ext.add_argument("--out", required=True)
    ext.add_argument("--chunk-windows", type=int, default=_DEFAULT_CHUNK)
    ext.set_defaults(func=_cmd_extract)

    ana = sub.add_parser("analyze", help="quality reports on streams or bits")
    ana.add_argument("input")
    ana.add_argument("--min-entropy", action="store_true")
    ana.add_argument("-d", "--word-bits", type=int, default=8)
    ana.add_argument("--uniformity", action="store_true")
    ana.add_argument("-N", "--block-len", type=int, default=4)
    ana.add_argument("--sanity", action="store_true")
    ana.add_argument("--out", help="also write the report to this file")
    ana.set_defaults(func=_cmd_analyze)

    eff = sub.add_parser("efficiency", help="yield tables: S, H, Hb")
    eff.add_argument("-N", "--block-len", default="4", help="int, a..b, or comma list")
    eff.add_argument("-p", default="0.5", help="float, a..b:step, or comma list")
    eff.add_argument("--profile", help="base=..,amp=..,omega=..,T=.. (time-averaged)")
    eff.set_defaults(func=_cmd_efficiency)

    ben = sub.add_parser("bench", help="simulate+extract throughput")
    ben.add_argument("--scenario", choices=sorted(SCENARIOS), default="a")
    ben.add_argument("--windows", type=int, default=10_000_000)
    ben.add_argument("--seed", type=int, default=1)
    ben.add_argument("-N", "--block-len", type=int, default=4)
    ben.add_argument("--chunk-windows", type=int, default=_DEFAULT_CHUNK)
    ben.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except StreamFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TimebinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main())
