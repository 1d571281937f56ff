from itertools import product

import pytest
from hypothesis import HealthCheck, given, settings

from afpga.archmodel import FabricParams, build_fabric
from afpga.bitstream import FabricConfig
from afpga.errors import ZeroDelayCycleError
from afpga.flow import fabric_model, implement
from afpga.netlist import CellKind, Gate, Netlist, Port, builtin
from afpga.plb import ImConfig, ImLayout, PlbConfig
from afpga.sim import (
    DelayModel,
    Simulator,
    Testbench,
    Trace,
    default_testbench,
    elaborate_fabric,
    elaborate_netlist,
    max_path_delay,
    qdi_robustness,
    run,
    write_vcd,
)
from conftest import implemented, small_netlists

C_STEPS = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]


def c_testbench():
    return Testbench(steps=[{"a": a, "b": b} for a, b in C_STEPS], sample=("y",))


def test_c_element_netlist_model():
    m = elaborate_netlist(builtin("c_element"))
    assert len(m.luts) == 1
    lut = m.luts[0]
    y_arrival = m.signal_id("y@sink")
    assert y_arrival in lut.inputs
    assert any(f.input == lut.outputs[0] and f.branches[0][0] == y_arrival for f in m.forks)


def test_c_element_fabric_loop_through_im():
    impl = implement(builtin("c_element"), FabricParams(1, 1, 2))
    m = fabric_model(impl)
    (lut,) = m.luts
    out = next(o for o in lut.outputs if o is not None)
    fork = next(f for f in m.forks if f.input == out)
    looped = [b for b, hops in fork.branches if b in lut.inputs]
    assert looped, "LE output must feed back into its own inputs"
    hops = [hops for b, hops in fork.branches if b in lut.inputs][0]
    assert len(hops) == 1 and hops[0].startswith("im:0,0:")


def test_pde_self_loop_is_zero_delay_cycle():
    p = FabricParams(1, 1, 1)
    lay = ImLayout()
    plb = PlbConfig(im=ImConfig().with_links({lay.SINK_PDE: lay.src_pde}))
    cfg = FabricConfig(p, ((plb,),), FabricConfig.default(p).route_bits)
    with pytest.raises(ZeroDelayCycleError) as exc:
        elaborate_fabric(build_fabric(p), cfg, None)
    assert exc.value.kind == "zero-delay-cycle"


@pytest.mark.parametrize("mode", ["netlist", "fabric"])
def test_c_element_steps(mode):
    n = builtin("c_element")
    m = elaborate_netlist(n) if mode == "netlist" else fabric_model(implemented("c_element"))
    tr = run(m, c_testbench())
    assert [s["y"] for s in tr.samples] == [0, 0, 1, 1, 0]
    y = m.ports["y"]
    assert [v for _, _, s, v in tr.transitions if s == y] == [1, 0]


def test_inertial_pulse_absorbed():
    n = Netlist("b", (Port("x", "in"), Port("y", "out")), (Gate("g", CellKind("BUF"), ("x",), "y"),))
    m = elaborate_netlist(n)
    sim = Simulator(m, DelayModel.nominal().resolve(m))
    sim.settle(100)
    sim.poke("x", 1, 1)
    sim.poke("x", 0, 2)  # 1-unit pulse against a 2-unit inertial delay
    sim.settle(100)
    assert [h.kind for h in sim.trace.hazards] == ["absorbed-pulse"]
    assert sim.peek("y") == 0
    assert all(s != m.ports["y"] for _, _, s, _ in sim.trace.transitions)


GLITCH_SKEW = 3  # long path minus short path, nominal units


@pytest.mark.parametrize("gx_delay", [1, 2, 4, 5, 6])
def test_glitch_oracle(gx_delay):
    g = builtin("glitch_demo")
    m = elaborate_netlist(g)
    long_path = max_path_delay(m, ["x"], ["xl2@sink"])
    short_path = max_path_delay(m, ["x"], ["xs@sink"])
    assert long_path - short_path == GLITCH_SKEW
    tr = run(m, default_testbench(g), DelayModel.nominal({"gx": gx_delay}))
    y_changes = tr.changes("y")
    if gx_delay > GLITCH_SKEW:
        # pulse narrower than the gate delay: swallowed and recorded, once per input edge
        assert len(tr.hazards) == 2 and y_changes == []
    else:
        assert tr.hazards == []
        assert [v for _, v in y_changes] == [1, 0, 1, 0]
        assert y_changes[1][0] - y_changes[0][0] == GLITCH_SKEW


def test_glitch_equalized():
    g = builtin("glitch_demo")
    tr = run(elaborate_netlist(g), default_testbench(g), DelayModel.nominal({"gx": 4, "s1": 2 + GLITCH_SKEW}))
    assert tr.hazards == [] and tr.changes("y") == []


def test_fa_qdi_netlist_tokens():
    n = builtin("fa_qdi")
    tr = run(elaborate_netlist(n), default_testbench(n))
    assert tr.status == "complete"
    ops = list(zip(tr.tokens["a"], tr.tokens["b"], tr.tokens["c"]))
    assert sorted(ops) == list(product((0, 1), repeat=3))
    assert tr.tokens["sum"] == [a ^ b ^ c for a, b, c in ops]
    assert tr.tokens["cout"] == [int(a + b + c >= 2) for a, b, c in ops]
    assert tr.hazards == []


def test_four_phase_spacers():
    n = builtin("fa_qdi")
    m = elaborate_netlist(n)
    tr = run(m, default_testbench(n), DelayModel.randomized(3, 0))
    for ch in n.channels:
        t, f = m.ports[ch.t], m.ports[ch.f]
        rails = {t: 0, f: 0}
        valid_rises = spacers = 0
        for _, _, s, v in tr.transitions:
            if s in rails:
                before = rails[t] | rails[f]
                rails[s] = v
                after = rails[t] | rails[f]
                assert rails[t] + rails[f] <= 1
                valid_rises += after and not before
                spacers += before and not after
        assert valid_rises == spacers == 8


def test_trace_order_and_determinism():
    n = builtin("fa_qdi")
    m = fabric_model(implemented("fa_qdi"))
    a = run(m, default_testbench(n), DelayModel.randomized(11, 4))
    b = run(m, default_testbench(n), DelayModel.randomized(11, 4))
    assert a == b
    keys = [(t, seq) for t, seq, _, _ in a.transitions]
    assert keys == sorted(keys)


def test_timeout_and_deadlock():
    n = builtin("fa_qdi")
    m = elaborate_netlist(n)
    assert run(m, default_testbench(n), t_max=20).status == "timeout"
    tr = run(m, Testbench(tokens={"a": [1]}))
    assert tr.status == "deadlock"


def test_micropipeline_depth():
    m = elaborate_netlist(builtin("fa_micropipeline"))
    # wire + XOR + wire + XOR + wire
    assert max_path_delay(m, ["a", "b", "cin"], ["sum", "cout"]) == 7


def test_robustness_trivial_and_failure_report():
    n = builtin("fa_qdi")
    v = qdi_robustness(elaborate_netlist(n), default_testbench(n), trials=1, seed=0)
    assert v.passed and v.failed_trial is None

    n = builtin("fa_micropipeline", k=0)
    v = qdi_robustness(elaborate_netlist(n), default_testbench(n), trials=20, seed=5)
    assert not v.passed
    assert v.channel == "out" and v.token_index is not None and v.failed_trial is not None


def test_vcd_empty():
    text = write_vcd(Trace(["a", "b"], [0, 1]))
    assert "$timescale 1ns $end" in text
    assert text.splitlines()[-4:] == ["$dumpvars", "0!", '1"', "$end"]
    assert "#5" not in text


def test_vcd_one_transition():
    tr = Trace(["a"], [0], transitions=[(5, 1, 0, 1)], end_time=5)
    lines = write_vcd(tr).splitlines()
    i = lines.index("#5")
    assert lines[i + 1:] == ["1!"]


def test_vcd_counts_and_codes():
    n = builtin("fa_qdi")
    tr = run(elaborate_netlist(n), default_testbench(n))
    text = write_vcd(tr)
    body = text.split("$end\n")[-1]
    changes = [ln for ln in body.splitlines() if ln and ln[0] in "01"]
    assert len(changes) == len(tr.transitions)
    codes = [ln.split()[3] for ln in text.splitlines() if ln.startswith("$var")]
    assert len(set(codes)) == len(codes) == len(tr.signals)
    assert codes[:3] == ["!", '"', "#"]
    assert write_vcd(tr) == text


@settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(small_netlists(max_gates=6, stateful=False))
def test_random_combinational_equivalence(n):
    # settled values of stateless logic do not depend on delays
    tb = default_testbench(n)
    ref = run(elaborate_netlist(n), tb)
    got = run(fabric_model(implement(n, FabricParams(3, 3, 6))), tb)
    assert ref.samples == got.samples
    assert len(ref.samples) == 1 << len(n.inputs)
