import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import is_topological, random_bench
from soctat.netlist import (
    BenchSyntaxError,
    CombinationalCycleError,
    MultipleDriverError,
    NetlistError,
    UndrivenNetError,
    UnknownGateError,
    count_gates,
    levelize,
    parse_bench,
    scan_view,
    write_bench,
)


def test_wire_only_circuit():
    c = parse_bench("INPUT(a)\nOUTPUT(a)")
    assert (c.n_pis, c.n_pos, c.n_ffs, len(c.gates)) == (1, 1, 0, 0)
    assert count_gates(c) == 0


def test_s27_structure(s27):
    assert (s27.n_pis, s27.n_pos, s27.n_ffs) == (4, 1, 3)
    assert count_gates(s27) == 8
    assert count_gates(s27, all_cells=True) == 13
    v = scan_view(s27)
    assert v.n_inputs == 7 and v.n_outputs == 4
    assert v.inputs[4:] == tuple(d.output for d in s27.dffs)
    assert v.outputs[1:] == tuple(d.inputs[0] for d in s27.dffs)


def test_dialect_aliases_and_case():
    c = parse_bench("# x\ninput(a)\nInput(b)\noutput(z)\nn = inv(a)\nm = buf(b)\nz = and(n, m)\n")
    assert [g.kind for g in c.gates] == ["NOT", "BUFF", "AND"]
    assert count_gates(c) == 1
    assert "NOT(a)" in write_bench(c) and "BUFF(b)" in write_bench(c)


@pytest.mark.parametrize("text, exc, line, column", [
    ("INPUT(a\n", BenchSyntaxError, 1, 8),
    ("INPUT(a)\nOUTPUT(b)\nb = FOO(a)\n", UnknownGateError, 3, 5),
    ("INPUT(a)\nOUTPUT(b)\n", UndrivenNetError, 2, None),
    ("INPUT(a)\nOUTPUT(b)\nb = AND(a, a)\nb = OR(a, a)\n", MultipleDriverError, 4, None),
    ("INPUT(a)\nINPUT(a)\nOUTPUT(a)\n", MultipleDriverError, 2, None),
    ("INPUT(a)\nOUTPUT(b)\nb = DFF(a, a)\n", NetlistError, 3, None),
    ("", BenchSyntaxError, 1, 1),
])
def test_parse_errors_report_position(text, exc, line, column):
    with pytest.raises(exc) as info:
        parse_bench(text)
    assert info.value.line == line
    assert info.value.column == column


def test_combinational_cycle_rejected():
    with pytest.raises(CombinationalCycleError):
        parse_bench("INPUT(a)\nOUTPUT(b)\nb = AND(a, c)\nc = OR(a, b)\n")


def test_cycle_through_dff_is_fine():
    c = parse_bench("INPUT(a)\nOUTPUT(b)\nq = DFF(b)\nb = AND(a, q)\n")
    v = scan_view(c)
    assert v.inputs == ("a", "q") and v.outputs == ("b", "b")


def test_no_dffs_identity_view(c17):
    v = scan_view(c17)
    assert v.inputs == c17.primary_inputs and v.outputs == c17.primary_outputs


def test_levelize_chain_and_single_gate():
    c = parse_bench("INPUT(a)\nOUTPUT(c)\nc = NOT(b)\nb = NOT(a)\n")
    assert [g.output for g in levelize(scan_view(c))] == ["b", "c"]
    one = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n")
    assert len(levelize(scan_view(one))) == 1


def test_levelize_ties_follow_declaration_order():
    c = parse_bench("INPUT(a)\nOUTPUT(y)\nOUTPUT(x)\ny = NOT(a)\nx = NOT(a)\n")
    assert [g.output for g in levelize(c)] == ["y", "x"]


def test_levelize_is_topological_permutation(small_corpus):
    for c in small_corpus:
        v = scan_view(c)
        sched = levelize(v)
        comb = [g for g in c.gates if g.kind != "DFF"]
        assert sorted(sched, key=str) == sorted(comb, key=str)
        assert is_topological(sched, v.inputs)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_round_trip(seed):
    c = parse_bench(random_bench(seed), name="rt")
    again = parse_bench(write_bench(c), name="rt")
    assert again == c
    assert write_bench(again) == write_bench(c)


def test_round_trip_bundled(s27, c17):
    for c in (s27, c17):
        assert parse_bench(write_bench(c), name=c.name) == c
