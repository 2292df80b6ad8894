import random

import pytest

from oracles import all_patterns, evaluate
from soctat.fault import collapsed_faults, enumerate_faults
from soctat.netlist import parse_bench, scan_view
from soctat.sim import WORD, fault_sim, good_sim, pack

AND2 = scan_view(parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n"))


def lanes(words, n):
    """Per-pattern output tuples from output words."""
    return [tuple(w >> i & 1 for w in words) for i in range(n)]


def run_good(v, patterns):
    out = []
    for block in pack(patterns, v.n_inputs):
        out += lanes(good_sim(v, block), block.lane_count)
    return out


def random_patterns(width, n, seed):
    rng = random.Random(seed)
    return ["".join(rng.choice("01") for _ in range(width)) for _ in range(n)]


def test_and_gate_values():
    assert run_good(AND2, ["11", "10", "01", "00"]) == [(1,), (0,), (0,), (0,)]


def test_xor_chain():
    v = scan_view(parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\nt = XOR(a, b)\ny = XOR(t, c)\n"))
    assert run_good(v, ["111", "110", "000"]) == [(1,), (0,), (0,)]


def test_width_mismatch():
    with pytest.raises(ValueError):
        pack(["1"], 2)
    with pytest.raises(ValueError):
        pack(["1x"], 2)
    with pytest.raises(ValueError):
        fault_sim(AND2, ["111"], collapsed_faults(AND2))


def test_and_fault_examples():
    y0 = next(f for f in enumerate_faults(AND2).faults if f.name == "y SA0")
    assert fault_sim(AND2, ["11"], [y0]).detected() == [0]
    assert fault_sim(AND2, ["01"], [y0]).detected() == []


def test_good_sim_matches_interpreter(small_corpus):
    for c in small_corpus:
        v = scan_view(c)
        pats = random_patterns(v.n_inputs, 100, 42)
        assert run_good(v, pats) == [evaluate(c, p) for p in pats], c.name


def test_lane_count_independence(s27):
    v = scan_view(s27)
    pats = random_patterns(v.n_inputs, 2 * WORD + 5, 1)
    whole = run_good(v, pats)
    assert [run_good(v, [p])[0] for p in pats] == whole


def test_detection_table_matches_mutation_oracle(small_corpus):
    for c in small_corpus:
        v = scan_view(c)
        pats = all_patterns(v.n_inputs)
        good = [evaluate(c, p) for p in pats]
        faults = enumerate_faults(v)
        table = fault_sim(v, pats, faults, drop=False)
        for i, f in enumerate(faults.faults):
            want = sum(1 << k for k, p in enumerate(pats) if evaluate(c, p, (f.label, f.stuck)) != good[k])
            assert table.masks[i] == want, (c.name, f.name)


def test_lane_permutation_invariance(s27):
    v = scan_view(s27)
    pats = random_patterns(v.n_inputs, 90, 3)
    perm = list(range(len(pats)))
    random.Random(5).shuffle(perm)
    faults = collapsed_faults(v)
    a = fault_sim(v, pats, faults, drop=False)
    b = fault_sim(v, [pats[j] for j in perm], faults, drop=False)
    for i in range(len(faults)):
        rows = [k for k in range(len(pats)) if b.detects(k, i)]
        assert sorted(perm[k] for k in rows) == [k for k in range(len(pats)) if a.detects(k, i)]


def test_dropping_keeps_detected_set(small_corpus):
    for c in small_corpus[:20]:
        v = scan_view(c)
        pats = random_patterns(v.n_inputs, 150, 11)
        faults = collapsed_faults(v)
        full = fault_sim(v, pats, faults, drop=False)
        dropped = fault_sim(v, pats, faults, drop=True)
        assert full.detected() == dropped.detected()
        for i in full.detected():
            assert dropped.first(i) == full.first(i)
            assert bin(dropped.masks[i]).count("1") == 1


def test_detection_csv(s27):
    v = scan_view(s27)
    faults = collapsed_faults(v)
    text = fault_sim(v, random_patterns(v.n_inputs, 10, 0), faults).to_csv(faults)
    lines = text.splitlines()
    assert lines[0] == "fault,first_pattern" and len(lines) == len(faults) + 1
