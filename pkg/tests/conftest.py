import functools

import numpy as np
import pytest

from afpga.archmodel import FabricParams
from afpga.bitstream import FabricConfig, route_bit_count
from afpga.flow import implement
from afpga.netlist import builtin
from afpga.plb import ImConfig, ImLayout, LeConfig, Lut2Table, Lut7Table, PdeConfig, PlbConfig

BUILTIN_NAMES = ("c_element", "fa_qdi", "fa_micropipeline", "glitch_demo")
P44 = FabricParams(4, 4, 8)


@functools.lru_cache(maxsize=None)
def implemented(name, rows=4, cols=4, width=8, seed=1, **kw):
    return implement(builtin(name, **kw), FabricParams(rows, cols, width), seed)


def random_plb(rng, layout):
    les = [
        LeConfig(Lut7Table(int.from_bytes(rng.bytes(16), "little")), Lut2Table(int(rng.integers(0, 16))))
        for _ in range(2)
    ]
    sel = tuple(int(x) for x in rng.integers(0, layout.n_sources, size=layout.n_sinks))
    return PlbConfig(les[0], les[1], PdeConfig(int(rng.integers(0, 16))), ImConfig(sel, layout))


def random_config(rng, params):
    layout = ImLayout(params.plb_inputs, params.plb_outputs)
    plbs = tuple(tuple(random_plb(rng, layout) for _ in range(params.cols)) for _ in range(params.rows))
    bits = rng.random(route_bit_count(params)) < 0.5
    return FabricConfig(params, plbs, bits)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary lines, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


from hypothesis import strategies as st  # noqa: E402

from afpga.netlist import CellKind, Gate, Netlist, Port  # noqa: E402

STATELESS = ("BUF", "INV", "AND2", "AND3", "OR2", "OR3", "OR4", "XOR2", "MAJ3")
ARITY = {"BUF": 1, "INV": 1, "AND2": 2, "AND3": 3, "OR2": 2, "OR3": 3, "OR4": 4, "XOR2": 2, "MAJ3": 3, "C2": 2, "C3": 3}


@st.composite
def small_netlists(draw, max_gates=8, stateful=True):
    """Well-formed random netlists: gates read only earlier nets; C2/C3 optional."""
    n_in = draw(st.integers(1, 4))
    nets = [f"i{k}" for k in range(n_in)]
    gates = []
    for g in range(draw(st.integers(1, max_gates))):
        kind = draw(st.sampled_from(STATELESS + (("C2", "C3") if stateful else ())))
        ins = tuple(draw(st.sampled_from(nets)) for _ in range(ARITY[kind]))
        out = f"n{g}"
        gates.append(Gate(f"g{g}", CellKind(kind), ins, out))
        nets.append(out)
    read = {x for g in gates for x in g.inputs}
    outs = [g.output for g in gates if g.output not in read] or [gates[-1].output]
    ports = tuple(Port(f"i{k}", "in") for k in range(n_in)) + tuple(Port(o, "out") for o in outs)
    return Netlist("rand", ports, tuple(gates))
