"""Command-line entry point: ``tmpc compile | run | deal | bench-conv | report``.

Exit codes: 0 success, 2 usage, 3 validation, 4 protocol or network, 5 overflow.
Machine-readable results go to stdout as JSON; progress goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import ring
from .athos import SweepConfig, calibrate, compile_to_llil, quantize, sweep_scale
from .errors import ProtocolError, QuantizationOverflow, TmpcError
from .ir import load_model, load_tensor, save_model, to_text
from .ir.graph import HLILGraph, LLILProgram
from .ir.interp import OverflowMonitor, eval_fixed, eval_float

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_PROTOCOL, EXIT_OVERFLOW = 0, 2, 3, 4, 5

log = logging.getLogger("tmpc")


class UsageError(Exception):
    pass


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    print(text)
    if out:
        Path(out).write_text(text + "\n")


def _jsonable(v):
    v = np.asarray(v)
    return v.tolist()


def load_calibration(path, input_shape) -> list[np.ndarray]:
    """Every ``*.tmpt`` under ``path``; a file with one extra leading axis is a batch."""
    d = Path(path)
    if not d.is_dir():
        raise UsageError(f"calibration directory {path} does not exist")
    inputs = []
    for f in sorted(d.glob("*.tmpt")):
        t = load_tensor(f).astype(np.float32)
        if t.shape == tuple(input_shape):
            inputs.append(t)
        elif t.shape[1:] == tuple(input_shape):
            inputs.extend(t)
        else:
            raise UsageError(f"{f}: shape {t.shape} does not match model input {tuple(input_shape)}")
    if not inputs:
        raise UsageError(f"no calibration tensors (*.tmpt) in {path}")
    return inputs


def _resolve_scale(graph: HLILGraph, args) -> tuple[int, dict | None]:
    if args.sweep:
        calib = load_calibration(args.sweep, graph.input_shape)
        cfg = SweepConfig(s_min=args.s_min, s_max=args.s_max, calibration=calibrate(graph, calib))
        report = sweep_scale(graph, cfg)
        print(report.table(), file=sys.stderr)
        return report.chosen, report.to_dict()
    if args.scale is None:
        raise UsageError("give --scale N or --sweep DIR")
    return args.scale, None


def _to_program(model, args) -> LLILProgram:
    if isinstance(model, LLILProgram):
        return model
    scale, _ = _resolve_scale(model, args)
    return compile_to_llil(model, scale)


# -- subcommands ---------------------------------------------------------------

def cmd_compile(args) -> int:
    g = load_model(args.model)
    if not isinstance(g, HLILGraph):
        raise UsageError(f"{args.model} is already a fixed-point program")
    scale, sweep = _resolve_scale(g, args)
    program = compile_to_llil(g, scale)
    out = args.out or str(Path(args.model).with_suffix(".llil"))
    save_model(out, program)
    print(to_text(program), file=sys.stderr)
    _emit({"chosen_scale": scale, "program": out, "sweep": sweep})
    return EXIT_OK


def _run_plain(args) -> int:
    if not args.model or not args.input:
        raise UsageError(f"backend {args.backend} needs MODEL and INPUT")
    model = load_model(args.model)
    x = load_tensor(args.input)
    t0 = time.perf_counter()
    if args.backend == "float":
        if not isinstance(model, HLILGraph):
            raise UsageError("the float backend needs an HLIL model")
        out = eval_float(model, x.astype(np.float32))
        scale = None
    else:
        program = _to_program(model, args)
        scale = program.scale
        xq = quantize(x, scale) if x.dtype.kind == "f" else x
        monitor = OverflowMonitor()
        out = eval_fixed(program, xq, monitor=monitor)
        if monitor.overflowed:
            node, peak = monitor.events[0]
            raise QuantizationOverflow(f"value {peak:.3g} at node {node!r} exceeds the 2^62 guard band")
        if out.dtype == np.uint64:
            out = ring.signed(out)
    ms = (time.perf_counter() - t0) * 1e3
    print(f"{args.backend} backend: {ms:.2f} ms", file=sys.stderr)
    _emit({"backend": args.backend, "scale": scale, "output": _jsonable(out), "time_ms": ms}, args.out)
    return EXIT_OK


def _run_mpc(args) -> int:
    from .net.dealer import load_bundle
    from .net.party import PartyConfig, connect_mesh
    from .porthos.runner import run_llil_mpc

    if not args.config:
        raise UsageError("backend mpc needs --config PATH")
    accessed: list[str] = []
    accessed.append(str(Path(args.config)))
    cfg = PartyConfig.load(args.config)
    if args.party is not None and args.party != cfg.party:
        raise UsageError(f"--party {args.party} disagrees with config party {cfg.party}")
    if args.naive_conv:
        cfg.reshaped_conv = False
    if args.no_prf_opt:
        cfg.prf_opt = False
    if cfg.share_dir is None:
        raise UsageError("party config has no share_dir")
    program, shares = load_bundle(cfg.share_dir, accessed)
    t0 = time.perf_counter()
    try:
        ctx = connect_mesh(cfg)
    except OSError as exc:
        raise ProtocolError(f"party {cfg.party}: cannot open the mesh: {exc}") from exc
    with ctx:
        out = run_llil_mpc(ctx, program, shares if cfg.party != 2 else None,
                           exact_truncation=args.exact_truncation)
        for ch in ctx.channels.values():
            ch.flush()
        report = ctx.comm_report()
    ms = (time.perf_counter() - t0) * 1e3
    report_path = Path(args.out).with_suffix(".comm.json") if args.out else \
        Path(cfg.share_dir) / f"comm_p{cfg.party}.json"
    report_path.write_text(report.to_json() + "\n")
    if out is not None and out.dtype == np.uint64:
        out = ring.signed(out)
    print(f"party {cfg.party}: {ms:.2f} ms, report {report_path}", file=sys.stderr)
    if args.verbose:
        print("files read:\n  " + "\n  ".join(accessed), file=sys.stderr)
    _emit({"backend": "mpc", "party": cfg.party, "output": None if out is None else _jsonable(out),
           "time_ms": ms, "comm_report": str(report_path), "files_read": accessed}, args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.backend == "mpc":
        return _run_mpc(args)
    return _run_plain(args)


def cmd_deal(args) -> int:
    from .net.dealer import deal_shares, write_bundles

    model = load_model(args.model)
    program = _to_program(model, args)
    x = load_tensor(args.input)
    xq = quantize(x, program.scale) if x.dtype.kind == "f" else x
    bundles = deal_shares(program, xq, args.seed)
    recipients = tuple(int(r) for r in args.recipients.split(","))
    dirs = write_bundles(program, bundles, args.out, seed=args.seed, base_port=args.base_port,
                         recipients=recipients, reshaped_conv=not args.naive_conv,
                         prf_opt=not args.no_prf_opt)
    _emit({"scale": program.scale, "parties": [str(d / "config.json") for d in dirs]})
    return EXIT_OK


def bench_conv(m: int, f: int, seed: int = 0, modes=("naive", "reshaped")) -> dict:
    """Run conv2d_protocol once per mode on random shares; measured and analytic counts side by side."""
    from .net.counters import merge_reports
    from .net.local import run_local
    from .net.wire import REVEAL_PHASES
    from .porthos import costs
    from .porthos.arith import conv2d_protocol
    from .porthos.sharing import share

    if not 0 < f <= m:
        raise UsageError(f"need 0 < f <= m, got m={m}, f={f}")
    rng = np.random.default_rng(seed)
    img = share(ring.ring(rng.integers(-2 ** 20, 2 ** 20, (m, m))), rng)
    flt = share(ring.ring(rng.integers(-2 ** 20, 2 ** 20, (f, f))), rng)
    rows = {}
    for mode in modes:
        def body(ctx, mode=mode):
            if ctx.party == 2:
                return conv2d_protocol(ctx, np.zeros((m, m), np.uint64), np.zeros((f, f), np.uint64), mode=mode)
            return conv2d_protocol(ctx, img[ctx.party], flt[ctx.party], mode=mode)

        t0 = time.perf_counter()
        run = run_local(body, seed=seed)
        wall = time.perf_counter() - t0
        elements = sum(r.elements(phases=REVEAL_PHASES) for r in run.reports)
        nbytes = sum(r.bytes(phases=REVEAL_PHASES) for r in run.reports)
        formula = (costs.naive_conv_elements if mode == "naive" else costs.reshaped_conv_elements)(m, f)
        rows[mode] = {"elements": elements, "bytes": nbytes, "formula": formula, "wall_s": wall,
                      "total": merge_reports(run.reports)["total"]}
    out = {"m": m, "f": f, "modes": rows}
    if "naive" in rows and "reshaped" in rows:
        ratio = rows["naive"]["elements"] / rows["reshaped"]["elements"]
        out["ratio"] = ratio
        out["orders_of_magnitude"] = bool(ratio >= 10)
    return out


def cmd_bench_conv(args) -> int:
    res = bench_conv(args.m, args.f, args.seed)
    print(f"{'mode':>9} {'elements':>10} {'formula':>10} {'bytes':>10} {'wall s':>8}", file=sys.stderr)
    for mode, r in res["modes"].items():
        print(f"{mode:>9} {r['elements']:>10} {r['formula']:>10} {r['bytes']:>10} {r['wall_s']:>8.3f}",
              file=sys.stderr)
    if "ratio" in res:
        flag = "  order(s) of magnitude" if res["orders_of_magnitude"] else ""
        print(f"ratio naive/reshaped = {res['ratio']:.1f}{flag}", file=sys.stderr)
    _emit(res, args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    from .net.counters import CommReport, merge_reports

    reports = [CommReport.from_dict(json.loads(Path(p).read_text())) for p in args.reports]
    _emit(merge_reports(reports), args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def _scale_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scale", type=int, help="fixed-point scale s")
    g.add_argument("--sweep", metavar="DIR", help="choose s by sweeping over calibration tensors in DIR")
    p.add_argument("--s-min", type=int, default=8)
    p.add_argument("--s-max", type=int, default=24)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tmpc", description="Compile and run neural-network inference under 3-party MPC.")
    p.add_argument("--verbose", "-v", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("compile", help="float HLIL container -> fixed-point LLIL container")
    c.add_argument("model")
    _scale_flags(c)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("run", help="evaluate with the float, fixed or mpc backend")
    r.add_argument("model", nargs="?")
    r.add_argument("input", nargs="?")
    r.add_argument("--backend", choices=("float", "fixed", "mpc"), default="fixed")
    _scale_flags(r)
    r.add_argument("--party", type=int, choices=(0, 1, 2))
    r.add_argument("--config")
    r.add_argument("--naive-conv", action="store_true")
    r.add_argument("--no-prf-opt", action="store_true")
    r.add_argument("--exact-truncation", action="store_true",
                   help="interactive truncation, correct for every |x| < 2^62")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS,
                   help="also list every file this party read")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("deal", help="split a program and input into per-party share bundles (test mode)")
    d.add_argument("model")
    d.add_argument("input")
    _scale_flags(d)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True, help="output directory; one p{i}/ per party")
    d.add_argument("--base-port", type=int, default=47000)
    d.add_argument("--recipients", default="0", help="comma-separated output recipients")
    d.add_argument("--naive-conv", action="store_true")
    d.add_argument("--no-prf-opt", action="store_true")
    d.set_defaults(func=cmd_deal)

    b = sub.add_parser("bench-conv", help="communication of naive vs reshaped secure convolution")
    b.add_argument("--m", type=int, default=28)
    b.add_argument("--f", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench_conv)

    rep = sub.add_parser("report", help="merge per-party communication reports")
    rep.add_argument("reports", nargs="+")
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tmpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuantizationOverflow as exc:
        print(f"tmpc: overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except ProtocolError as exc:
        print(f"tmpc: protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (TmpcError, ValueError, OSError) as exc:
        print(f"tmpc: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
