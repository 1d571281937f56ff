"""Acceptance criteria 1-10.

Run with ``pytest tests/test_acceptance.py -v``; a summary section lists one
PASS/FAIL line per criterion.  Pinned tolerances: criterion 1 must finish in
under 10 s and criterion 3 in under 30 s (wall clock, single core); all other
checks are exact.
"""

import os
import shutil
import subprocess
import sys
import time
from itertools import product

import numpy as np
import pytest

from afpga.archmodel import FabricParams, build_fabric
from afpga.bitstream import decode, encode, image_length
from afpga.errors import UnroutableError
from afpga.flow import fabric_model, implement
from afpga.netlist import builtin, emit_netlist
from afpga.pnr import PlacedNet, Placement, check_routes, route
from afpga.sim import DelayModel, Simulator, Testbench, default_testbench, elaborate_netlist, max_path_delay
from afpga.sim import qdi_robustness, run
from conftest import ACCEPTANCE, BUILTIN_NAMES, implemented, random_config
from test_bitstream import length_oracle

C1_SECONDS = 10.0
C3_SECONDS = 30.0
C3_SEED = 2024
C3_TRIALS = 100


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return ok


def c_element_oracle(seq):
    y, out = 0, []
    for a, b in seq:
        if a == b:
            y = a
        out.append(y)
    return out


def test_c1_c_element_oracle():
    t0 = time.perf_counter()
    impl = implement(builtin("c_element"), FabricParams(1, 1, 8))
    m = fabric_model(impl)
    resolved = DelayModel.nominal().resolve(m)
    fanout = m.fanout()
    vectors = list(product((0, 1), repeat=2))
    checked = mismatches = 0
    for length in range(1, 7):
        for seq in product(vectors, repeat=length):
            sim = Simulator(m, resolved, fanout)
            tb = Testbench(steps=[{"a": a, "b": b} for a, b in seq], sample=("y",))
            sim.settle(10_000)
            tb.run(sim, 10_000)
            got = [s["y"] for s in sim.trace.samples]
            mismatches += got != c_element_oracle(seq)
            checked += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and checked == sum(4**k for k in range(1, 7)) and dt < C1_SECONDS
    record(1, ok, f"{checked} sequences (4096 of length 6), {mismatches} mismatches, {dt:.2f} s")
    assert mismatches == 0
    assert dt < C1_SECONDS


def test_c2_qdi_full_adder():
    impl = implemented("fa_qdi")
    m = fabric_model(impl)
    tr = run(m, default_testbench(impl.netlist))
    ops = list(zip(tr.tokens["a"], tr.tokens["b"], tr.tokens["c"]))
    ok = (
        tr.status == "complete"
        and sorted(ops) == list(product((0, 1), repeat=3))
        and tr.tokens["sum"] == [a ^ b ^ c for a, b, c in ops]
        and tr.tokens["cout"] == [int(a + b + c >= 2) for a, b, c in ops]
        and not tr.hazards
        and check_routes(impl.routes, impl.fabric) == []
    )
    record(2, ok, f"4x4/W=8, {len(ops)} tokens, sum={tr.tokens['sum']} cout={tr.tokens['cout']}, "
                  f"hazards={len(tr.hazards)}")
    assert ok


def test_c3_qdi_delay_robustness():
    impl = implemented("fa_qdi")
    m = fabric_model(impl)
    t0 = time.perf_counter()
    v = qdi_robustness(m, default_testbench(impl.netlist), trials=C3_TRIALS, seed=C3_SEED)
    dt = time.perf_counter() - t0
    ok = v.passed and v.max_hazards == 0 and dt < C3_SECONDS
    record(3, ok, f"{C3_TRIALS} trials seed {C3_SEED}: {v}, {dt:.2f} s")
    assert v.passed and v.max_hazards == 0
    assert dt < C3_SECONDS


def test_c4_micropipeline_timing_assumption():
    n8 = builtin("fa_micropipeline", k=8)
    depth = max_path_delay(fabric_model(implemented("fa_micropipeline", k=8)), ["a", "b", "cin"], ["sum", "cout"])
    want = [(i & 1) ^ ((i >> 1) & 1) ^ (i >> 2) | int((i & 1) + ((i >> 1) & 1) + (i >> 2) >= 2) << 1 for i in range(8)]
    correct = {}
    for k in range(depth, 16):
        impl = implemented("fa_micropipeline", k=k)
        tr = run(fabric_model(impl), default_testbench(n8))
        correct[k] = tr.status == "complete" and tr.tokens["out"] == want
    impl0 = implemented("fa_micropipeline", k=0)
    v0 = qdi_robustness(fabric_model(impl0), default_testbench(impl0.netlist), trials=100, seed=C3_SEED)
    ok = depth <= 15 and all(correct.values()) and not v0.passed
    record(4, ok, f"depth {depth}: PDEL(k) correct for k={depth}..15: {all(correct.values())}; "
                  f"PDEL(0) random: {v0}")
    assert depth <= 15
    assert all(correct.values()), correct
    assert not v0.passed


def test_c5_filling_ratio_ordering():
    qdi = implemented("fa_qdi").packing.stats["filling_ratio"]
    mp = implemented("fa_micropipeline").packing.stats["filling_ratio"]
    ok = 0 < mp < qdi <= 1
    record(5, ok, f"fa_qdi {100 * qdi:.1f}% > fa_micropipeline {100 * mp:.1f}%")
    assert ok


def test_c6_netlist_fabric_equivalence():
    bad = []
    for name in BUILTIN_NAMES:
        impl = implemented(name)
        tb = default_testbench(impl.netlist)
        ref = run(elaborate_netlist(impl.netlist), tb)
        got = run(fabric_model(impl), tb)
        if (ref.status, ref.tokens, ref.samples) != (got.status, got.tokens, got.samples):
            bad.append(name)
    record(6, not bad, f"{len(BUILTIN_NAMES)} builtins, mismatching: {bad or 'none'}")
    assert not bad


def test_c7_bitstream_round_trip():
    rng = np.random.default_rng(7)
    sizes = [FabricParams(1, 1, 8), FabricParams(2, 3, 8), FabricParams(4, 4, 8)]
    failures = 0
    for i in range(1000):
        p = sizes[i % 3]
        cfg = random_config(rng, p)
        img = encode(cfg)
        failures += decode(img) != cfg or len(img) != image_length(p) or len(img) != length_oracle(p)
    record(7, failures == 0, f"1000 random configs over 1x1, 2x3, 4x4: {failures} failures")
    assert failures == 0


def test_c8_router_legality():
    diags = {name: check_routes(implemented(name).routes, implemented(name).fabric) for name in BUILTIN_NAMES}
    f = build_fabric(FabricParams(1, 2, 2))
    pl = Placement(f, [(0, 0), (0, 1)])
    for k in range(3):  # W+1 nets into the west side of (0, 1)
        pl.nets[f"n{k}"] = PlacedNet(f"n{k}", f.pin("out", 0, 0, k), (f.pin("in", 0, 1, 3 + 4 * k),))
    try:
        route(pl, f)
        pigeonhole = False
    except UnroutableError:
        pigeonhole = True
    clean = all(not d for d in diags.values())
    record(8, clean and pigeonhole, f"check_routes clean for all builtins: {clean}; W=2/3 nets unroutable: {pigeonhole}")
    assert clean and pigeonhole


def test_c9_hazard_detection():
    g = builtin("glitch_demo")
    m = elaborate_netlist(g)
    tb = default_testbench(g)
    skewed = run(m, tb, DelayModel.nominal({"gx": 4}))
    equal = run(m, tb, DelayModel.nominal({"gx": 4, "s1": 5}))
    ok = len(skewed.hazards) >= 1 and len(equal.hazards) == 0
    record(9, ok, f"skewed: {len(skewed.hazards)} hazards on {sorted({h.signal for h in skewed.hazards})}; "
                  f"equalized: {len(equal.hazards)}")
    assert ok


def test_c10_cli_determinism(tmp_path):
    anet = tmp_path / "fa.anet"
    anet.write_text(emit_netlist(builtin("fa_qdi")))
    commands = [
        ["check", str(anet)],
        ["pack", str(anet)],
        ["pack", "--builtin", "fa_micropipeline", "--json"],
        ["pnr", "--builtin", "fa_qdi"],
        ["stats", "--builtin", "fa_qdi"],
        ["bitstream", "--builtin", "fa_qdi", "-o", "{dir}/fa.afpg"],
        ["bitstream", "--builtin", "fa_micropipeline"],
        ["sim", "--builtin", "fa_qdi", "--vcd", "{dir}/fa.vcd"],
        ["sim", "--builtin", "fa_qdi", "--delays", "random", "--trials", "20", "--seed", "3", "--vcd", "{dir}/r.vcd"],
        ["sim", "--builtin", "glitch_demo", "--mode", "netlist", "--json", "--vcd", "{dir}/g.vcd"],
    ]
    differing = []
    for argv in commands:
        outputs = []
        d = tmp_path / "out"
        for hashseed in ("1", "2"):
            # same output path both times: reports echo it
            shutil.rmtree(d, ignore_errors=True)
            d.mkdir()
            args = [a.format(dir=d) for a in argv]
            env = dict(os.environ, PYTHONHASHSEED=hashseed)
            proc = subprocess.run([sys.executable, "-m", "afpga", *args], env=env, capture_output=True)
            files = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
            outputs.append((proc.returncode, proc.stdout, files))
        if outputs[0] != outputs[1] or outputs[0][0] != 0:
            differing.append(" ".join(argv[:2]))
    record(10, not differing, f"{len(commands)} invocations run twice (different hash seeds): "
                              f"differing: {differing or 'none'}")
    assert not differing


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
