"""Command-line driver: ``afpga <subcommand> [design] [options]``.

Exit status: 0 on success, 1 on diagnostics or a failing verdict, 2 on usage
errors.  With ``--json`` every subcommand prints one JSON object with the keys
``design, plbs_occupied, slots_used, filling_ratio, routed, hazards, verdict``
(``null`` where a value does not apply) plus a subcommand-specific ``detail``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bitstream
from .archmodel import FabricParams
from .errors import AfpgaError, UnknownBuiltinError
from .flow import implement
from .mapper import check_packing, pack, tech_map
from .netlist import BUILTINS, Netlist, builtin, check_netlist, parse_netlist
from .pnr import route_report

JSON_KEYS = ("design", "plbs_occupied", "slots_used", "filling_ratio", "routed", "hazards", "verdict")


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("netlist", nargs="?", help="path to a .anet netlist")
    common.add_argument("--builtin", metavar="NAME", help=f"built-in design: {', '.join(sorted(BUILTINS))}")
    common.add_argument("--pdel-k", type=_nonneg, metavar="K", help="PDEL delay for fa_micropipeline")
    common.add_argument("--rows", type=_positive, default=4)
    common.add_argument("--cols", type=_positive, default=4)
    common.add_argument("--width", type=_positive, default=8, help="channel width W")
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("-o", "--output", metavar="PATH", help="write the main artifact here")

    p = argparse.ArgumentParser(prog="afpga", description="Asynchronous FPGA model: flow, bitstreams, simulation.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="validate a netlist")
    sub.add_parser("pack", parents=[common], help="map and pack; report the filling ratio")
    sub.add_parser("pnr", parents=[common], help="place and route; report routes")
    sub.add_parser("bitstream", parents=[common], help="emit a .afpg configuration image")
    sub.add_parser("stats", parents=[common], help="fabric and packing summary")
    s = sub.add_parser("sim", parents=[common], help="simulate with a handshake testbench")
    s.add_argument("--mode", choices=("fabric", "netlist"), default="fabric")
    s.add_argument("--delays", choices=("nominal", "random"), default="nominal")
    s.add_argument("--trials", type=_positive, default=100)
    s.add_argument("--vcd", metavar="PATH", help="write a VCD of the (first) run")
    s.add_argument("--tmax", type=_positive, default=100_000)
    s.add_argument("--tokens", metavar="CH=V,...", action="append", default=[],
                   help="token script for an input channel; repeatable")
    return p


def _design(args) -> Netlist:
    if bool(args.netlist) == bool(args.builtin):
        raise UsageError("give exactly one of a netlist path or --builtin NAME")
    if args.builtin:
        params = {"k": args.pdel_k} if args.pdel_k is not None and args.builtin == "fa_micropipeline" else {}
        try:
            return builtin(args.builtin, **params)
        except UnknownBuiltinError as exc:
            raise UsageError(str(exc)) from exc
    path = Path(args.netlist)
    if not path.is_file():
        raise UsageError(f"no such netlist: {path}")
    return parse_netlist(path.read_text())


def _params(args) -> FabricParams:
    p = FabricParams(args.rows, args.cols, args.width)
    try:
        p.validate()
    except AfpgaError as exc:
        raise UsageError(str(exc)) from exc
    return p


def _tokens(specs: list[str]) -> dict[str, list[int]] | None:
    if not specs:
        return None
    out = {}
    for spec in specs:
        name, sep, values = spec.partition("=")
        if not sep or not name:
            raise UsageError(f"bad --tokens value {spec!r}, expected CH=V,...")
        try:
            out[name] = [int(v) for v in values.split(",") if v]
        except ValueError as exc:
            raise UsageError(f"bad token in {spec!r}") from exc
    return out


def _report(args, fields: dict, lines: list[str], out) -> None:
    if args.json:
        doc = {k: fields.get(k) for k in JSON_KEYS}
        doc["detail"] = fields.get("detail", {})
        out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        out.write("\n".join(lines) + "\n")


def _pack_fields(n, p) -> dict:
    s = p.stats
    return {
        "design": n.name,
        "plbs_occupied": s["plbs_occupied"],
        "slots_used": s["slots_used"],
        "filling_ratio": s["filling_ratio"],
    }


def _cmd_check(args, out) -> int:
    n = _design(args)
    diags = check_netlist(n)
    lines = [f"design: {n.name}", f"gates: {len(n.gates)}", f"channels: {len(n.channels)}"]
    lines += [f"{d.code}: {d.message}" for d in diags] or ["ok"]
    _report(args, {"design": n.name, "verdict": "fail" if diags else "pass",
                   "detail": {"diagnostics": [list(d) for d in diags]}}, lines, out)
    return 1 if diags else 0


def _packing_lines(n, p) -> list[str]:
    lines = [f"design: {n.name}"]
    for ci, cl in enumerate(p.clusters):
        for li, le in enumerate(cl.les):
            slots = " ".join(f"{slot}={fn.name}" for slot, fn in sorted(le.slots.items()))
            lines.append(f"cluster {ci} LE-{'AB'[li]}: {slots}")
        if cl.pde:
            lines.append(f"cluster {ci} PDE: {cl.pde.name} k={cl.pde.k}")
    s = p.stats
    lines += [
        f"slots used: {s['slots_used']}",
        f"LEs occupied: {s['les_occupied']}",
        f"PLBs occupied: {s['plbs_occupied']}",
        f"filling ratio: {100 * s['filling_ratio']:.1f}%",
    ]
    return lines


def _cmd_pack(args, out) -> int:
    n = _design(args)
    params = _params(args)
    diags = check_netlist(n)
    if diags:
        raise AfpgaError("; ".join(f"{d.code}: {d.message}" for d in diags))
    p = pack(tech_map(n), n, params.plb_inputs, params.plb_outputs)
    diags = check_packing(p, params.plb_inputs, params.plb_outputs)
    lines = _packing_lines(n, p) + [f"{d.code}: {d.message}" for d in diags]
    fields = _pack_fields(n, p)
    fields["verdict"] = "fail" if diags else "pass"
    _report(args, fields, lines, out)
    return 1 if diags else 0


def _cmd_pnr(args, out) -> int:
    n = _design(args)
    impl = implement(n, _params(args), args.seed)
    lines = [f"design: {n.name}"]
    for ci, (r, c) in enumerate(impl.placement.sites):
        lines.append(f"cluster {ci} -> plb({r},{c})")
    lines.append(f"wirelength (hpwl): {impl.placement.wirelength}")
    lines.append(f"router iterations: {impl.routes.iterations}")
    lines.append(route_report(impl.routes))
    fields = _pack_fields(n, impl.packing)
    fields.update(routed=True, verdict="pass", detail={"iterations": impl.routes.iterations,
                                                        "wirelength": impl.placement.wirelength})
    _report(args, fields, lines, out)
    if args.output:
        Path(args.output).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_bitstream(args, out) -> int:
    n = _design(args)
    impl = implement(n, _params(args), args.seed)
    image = bitstream.encode(impl.config)
    if args.output:
        Path(args.output).write_bytes(image)
        fields = _pack_fields(n, impl.packing)
        fields.update(routed=True, verdict="pass", detail={"bytes": len(image), "path": args.output})
        _report(args, fields, [f"wrote {len(image)} bytes to {args.output}"], out)
    else:
        sys.stdout.flush()
        sys.stdout.buffer.write(image)
        sys.stdout.buffer.flush()
    return 0


def _cmd_stats(args, out) -> int:
    from .archmodel import build_fabric

    n = _design(args)
    params = _params(args)
    f = build_fabric(params)
    p = pack(tech_map(n), n, params.plb_inputs, params.plb_outputs)
    lines = [
        f"fabric: {params.rows}x{params.cols} PLBs, W={params.channel_width}",
        f"switch boxes: {len(f.switch_boxes)}",
        f"connection boxes: {len(f.connection_boxes)}",
        f"wire segments: {len(f.wire_segments)}",
        f"routing switches: {f.n_switches}",
        f"image bytes: {bitstream.image_length(params)}",
    ] + _packing_lines(n, p)
    fields = _pack_fields(n, p)
    fields["detail"] = {"switches": f.n_switches, "image_bytes": bitstream.image_length(params)}
    _report(args, fields, lines, out)
    return 0


def _cmd_sim(args, out) -> int:
    from .sim import DelayModel, default_testbench, elaborate_fabric, elaborate_netlist, qdi_robustness, run, write_vcd

    n = _design(args)
    diags = check_netlist(n)
    if diags:
        raise AfpgaError("; ".join(f"{d.code}: {d.message}" for d in diags))
    tb = default_testbench(n, _tokens(args.tokens))
    ref_model = elaborate_netlist(n)
    fields = {"design": n.name}
    if args.mode == "fabric":
        impl = implement(n, _params(args), args.seed)
        model = elaborate_fabric(impl.fabric, impl.config, impl.routes, netlist=n)
        fields.update(_pack_fields(n, impl.packing), routed=True)
    else:
        model = ref_model

    lines = [f"design: {n.name}", f"mode: {args.mode}", f"delays: {args.delays}"]
    if args.delays == "nominal":
        trace = run(model, tb, DelayModel.nominal(), args.tmax)
        ok = trace.status == "complete"
        if args.mode == "fabric":
            ref = run(ref_model, tb, DelayModel.nominal(), args.tmax)
            ok = ok and ref.tokens == trace.tokens and ref.samples == trace.samples
        verdict = "pass" if ok else "fail"
        lines.append(f"status: {trace.status} at t={trace.end_time}")
    else:
        v = qdi_robustness(model, tb, args.trials, args.seed, t_max=args.tmax)
        trace = run(model, tb, DelayModel.randomized(args.seed, 0), args.tmax)
        verdict = "pass" if v.passed else "fail"
        lines.append(f"trials: {args.trials}")
        if not v.passed:
            lines.append(f"first failure: {v}")
        fields["detail"] = {"failed_trial": v.failed_trial, "channel": v.channel, "token_index": v.token_index}
    for ch, toks in sorted(trace.tokens.items()):
        lines.append(f"tokens {ch}: {' '.join(map(str, toks))}")
    for i, smp in enumerate(trace.samples):
        lines.append(f"step {i}: " + " ".join(f"{k}={v}" for k, v in smp.items()))
    lines.append(f"hazards: {len(trace.hazards)}")
    for h in trace.hazards:
        lines.append(f"  {h.kind} on {h.signal} at t={h.time}")
    lines.append(f"verdict: {verdict}")
    fields.update(hazards=len(trace.hazards), verdict=verdict)
    fields.setdefault("detail", {})["tokens"] = trace.tokens
    if args.vcd:
        Path(args.vcd).write_text(write_vcd(trace))
    _report(args, fields, lines, out)
    return 0 if verdict == "pass" else 1


COMMANDS = {
    "check": _cmd_check,
    "pack": _cmd_pack,
    "pnr": _cmd_pnr,
    "bitstream": _cmd_bitstream,
    "stats": _cmd_stats,
    "sim": _cmd_sim,
}


def run_command(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"afpga {args.command}: {exc}\n")
        return 2
    except AfpgaError as exc:
        err.write(f"afpga {args.command}: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run_command())
