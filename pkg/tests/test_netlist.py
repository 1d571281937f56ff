from itertools import product

import pytest
from hypothesis import given, settings

from afpga.errors import NetlistSyntaxError, UnknownBuiltinError
from afpga.netlist import CellKind, Gate, Netlist, Port, builtin, check_netlist, emit_netlist, parse_netlist
from conftest import BUILTIN_NAMES, small_netlists

INV_TEXT = """\
module m
port in a   # the input
port out y
cell g1 INV a -> y
end
"""


def test_parse_simple():
    n = parse_netlist(INV_TEXT)
    assert n.name == "m"
    assert n.inputs == ("a",) and n.outputs == ("y",)
    assert n.gates == (Gate("g1", CellKind("INV"), ("a",), "y"),)
    assert check_netlist(n) == []


@pytest.mark.parametrize(
    "text, line",
    [
        ("module m\nport in a\ncell g FOO a -> y\nend\n", 3),
        ("module m\nport sideways a\nend\n", 2),
        ("module m\ncell g INV a y\nend\n", 2),
        ("module m\nport in a\n", 2),
        ("module m\nend\nport in a\n", 3),
        ("port in a\n", 1),
    ],
)
def test_syntax_errors(text, line):
    with pytest.raises(NetlistSyntaxError) as exc:
        parse_netlist(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_parse_pdel_and_channels():
    n = parse_netlist(
        "module p\nport in r\nport in ack\nport in d\nport out q\n"
        "cell d1 PDEL(7) r -> q\nchannel bundled ch r ack d\nend\n"
    )
    assert n.gates[0].kind == CellKind("PDEL", 7)
    assert n.channels[0].data == ("d",)
    assert check_netlist(n) == []


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins_clean_and_round_trip(name):
    n = builtin(name)
    assert check_netlist(n) == []
    assert parse_netlist(emit_netlist(n)) == n


@settings(max_examples=60, deadline=None)
@given(small_netlists())
def test_round_trip_property(n):
    assert parse_netlist(emit_netlist(n)) == n
    assert check_netlist(n) == []


def test_diagnostics():
    two = Netlist(
        "x",
        (Port("a", "in"), Port("y", "out")),
        (Gate("g1", CellKind("INV"), ("a",), "y"), Gate("g2", CellKind("BUF"), ("a",), "y")),
    )
    assert "multiple-drivers" in [d.code for d in check_netlist(two)]

    loop = Netlist(
        "x",
        (Port("y", "out"),),
        (Gate("g1", CellKind("INV"), ("z",), "y"), Gate("g2", CellKind("INV"), ("y",), "z")),
    )
    assert "stateless-cycle" in [d.code for d in check_netlist(loop)]

    c_loop = Netlist(
        "x",
        (Port("a", "in"), Port("y", "out")),
        (Gate("c", CellKind("C2"), ("a", "y"), "y"),),
    )
    assert check_netlist(c_loop) == []

    dangling = Netlist("x", (Port("y", "out"),), (Gate("g", CellKind("AND2"), ("p", "q"), "y"),))
    assert "dangling-input" in [d.code for d in check_netlist(dangling)]

    arity = Netlist("x", (Port("a", "in"), Port("y", "out")), (Gate("g", CellKind("AND2"), ("a",), "y"),))
    assert "arity-mismatch" in [d.code for d in check_netlist(arity)]


def test_fa_qdi_structure():
    n = builtin("fa_qdi")
    kinds = [g.kind.name for g in n.gates]
    assert kinds.count("C3") == 8 and kinds.count("OR4") == 4 and len(kinds) == 12
    dirs = [n.channel_direction(ch) for ch in n.channels]
    assert dirs.count("in") == 3 and dirs.count("out") == 2


def evaluate(n, values):
    """Single combinational pass; C-elements start at 0 so they act as AND here."""
    vals = dict(values)
    fns = {
        "OR4": lambda xs: int(any(xs)),
        "C3": lambda xs: int(all(xs)),
        "XOR2": lambda xs: xs[0] ^ xs[1],
        "MAJ3": lambda xs: int(sum(xs) >= 2),
    }
    pending = list(n.gates)
    while pending:
        for g in list(pending):
            if all(x in vals for x in g.inputs):
                if g.kind.name == "PDEL":
                    vals[g.output] = vals[g.inputs[0]]
                else:
                    vals[g.output] = fns[g.kind.name]([vals[x] for x in g.inputs])
                pending.remove(g)
    return vals


def test_fa_qdi_function():
    n = builtin("fa_qdi")
    for a, b, c in product((0, 1), repeat=3):
        rails = {}
        for x, v in zip("abc", (a, b, c)):
            rails[f"{x}.t"], rails[f"{x}.f"] = v, 1 - v
        out = evaluate(n, rails)
        s, co = a ^ b ^ c, int(a + b + c >= 2)
        assert (out["sum.t"], out["sum.f"]) == (s, 1 - s)
        assert (out["cout.t"], out["cout.f"]) == (co, 1 - co)
        fired = [g.output for g in n.gates if g.kind.name == "C3" and out[g.output]]
        assert fired == [f"m{a}{b}{c}"]


def test_fa_micropipeline_structure():
    n = builtin("fa_micropipeline", k=8)
    logic = [g for g in n.gates if g.kind.name != "PDEL"]
    assert len(logic) == 3
    assert [g.kind for g in n.gates if g.kind.name == "PDEL"] == [CellKind("PDEL", 8)]
    assert [ch.kind for ch in n.channels] == ["bundled", "bundled"]
    assert n.channels[0].nets == ("req", "ack", "a", "b", "cin")
    for a, b, c in product((0, 1), repeat=3):
        out = evaluate(n, {"a": a, "b": b, "cin": c, "req": 1, "ack": 0})
        assert out["sum"] == a ^ b ^ c and out["cout"] == int(a + b + c >= 2)


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltinError) as exc:
        builtin("nope")
    assert exc.value.kind == "unknown-builtin"
