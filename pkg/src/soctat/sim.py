"""Bit-parallel two-valued simulation.

Patterns are ``'0'``/``'1'`` strings ordered as ``ScanView.inputs``.  Up to
``WORD`` patterns are packed into one :class:`PatternBlock` (lane ``i`` of
every net word belongs to pattern ``i``) and evaluated with a straight-line
function generated once per view.  Fault simulation injects one fault at a
time and re-evaluates, event-driven, only the part of the fault's fanout cone
where the faulty machine deviates.
"""

from __future__ import annotations

import heapq
import weakref
from dataclasses import dataclass
from typing import Sequence

from .fault import Fault, FaultList, line_table
from .netlist import AND, BUFF, NAND, NOR, NOT, OR, XNOR, XOR, ScanView

__all__ = [
    "WORD",
    "PatternBlock",
    "pack",
    "simulate",
    "good_sim",
    "DetectionTable",
    "fault_sim",
    "detect_mask",
]

WORD = 64


@dataclass(frozen=True)
class PatternBlock:
    words: tuple[int, ...]  # one word per view input
    lane_count: int

    @property
    def mask(self) -> int:
        return (1 << self.lane_count) - 1


def pack(patterns: Sequence[str], width: int) -> list[PatternBlock]:
    """Pack patterns into blocks of at most ``WORD`` lanes."""
    blocks = []
    for start in range(0, len(patterns), WORD):
        chunk = patterns[start:start + WORD]
        words = [0] * width
        for lane, p in enumerate(chunk):
            if len(p) != width:
                raise ValueError(f"pattern width {len(p)} does not match view width {width}")
            for i, ch in enumerate(p):
                if ch == "1":
                    words[i] |= 1 << lane
                elif ch != "0":
                    raise ValueError(f"pattern bit {ch!r} is not 0/1")
        blocks.append(PatternBlock(tuple(words), len(chunk)))
    return blocks


_OPS = {AND: " & ", NAND: " & ", OR: " | ", NOR: " | ", XOR: " ^ ", XNOR: " ^ "}
_INVERTING = (NAND, NOR, XNOR, NOT)
_programs: "weakref.WeakKeyDictionary[ScanView, object]" = weakref.WeakKeyDictionary()


def _program(v: ScanView):
    fn = _programs.get(v)
    if fn is not None:
        return fn
    body = ["def run(v, m):"]
    for kind, o, ins in zip(v.gate_kind, v.gate_out, v.gate_ins):
        if kind in (NOT, BUFF):
            expr = f"v[{ins[0]}]"
        else:
            expr = _OPS[kind].join(f"v[{i}]" for i in ins)
        if kind in _INVERTING:
            expr = f"m ^ ({expr})"
        body.append(f"    v[{o}] = {expr}")
    body.append("    return v")
    scope: dict = {}
    exec(compile("\n".join(body), f"<sim:{v.name}>", "exec"), scope)
    fn = scope["run"]
    _programs[v] = fn
    return fn


def simulate(v: ScanView, block: PatternBlock) -> list[int]:
    """Lane words of every net of ``v``."""
    if len(block.words) != v.n_inputs:
        raise ValueError(f"block width {len(block.words)} does not match view width {v.n_inputs}")
    values = list(block.words) + [0] * (v.n_nets - v.n_inputs)
    return _program(v)(values, block.mask)


def good_sim(v: ScanView, block: PatternBlock) -> list[int]:
    """Lane words of every view output, in ``v.outputs`` order."""
    values = simulate(v, block)
    return [values[n] for n in v.output_nets]


def _eval(kind: int, vals: list[int], m: int) -> int:
    if kind == AND or kind == NAND:
        r = m
        for x in vals:
            r &= x
    elif kind == OR or kind == NOR:
        r = 0
        for x in vals:
            r |= x
    elif kind == XOR or kind == XNOR:
        r = 0
        for x in vals:
            r ^= x
    else:
        r = vals[0]
    if kind in _INVERTING:
        r ^= m
    return r


def detect_mask(v: ScanView, good: list[int], m: int, fault: Fault, first_only: bool = False) -> int:
    """Lanes (bit mask) in which ``fault`` is observed at some output.

    ``good`` are the fault-free lane words of every net.  With
    ``first_only`` the search stops as soon as any lane detects.
    """
    lt = line_table(v)
    line = fault.line
    net = lt.net[line]
    forced = m if fault.stuck else 0
    diff = (good[net] ^ forced) & m
    if not diff:
        return 0
    if lt.observer[line] >= 0:
        return diff
    gate_ins, gate_kind, gate_out = v.gate_ins, v.gate_kind, v.gate_out
    fanout, observers = v.net_fanout, v.net_observers
    faulty: dict[int, int] = {}
    pin_gate, pin = lt.gate[line], lt.pin[line]
    detected = 0
    if pin_gate >= 0:
        heap = [pin_gate]
    else:
        faulty[net] = forced
        if observers[net]:
            detected = diff
            if first_only:
                return detected
        heap = sorted({g for g, _ in fanout[net]})
    queued = set(heap)
    while heap:
        g = heapq.heappop(heap)
        ins = gate_ins[g]
        vals = [faulty.get(i, good[i]) for i in ins]
        if g == pin_gate:
            vals[pin] = forced
        o = gate_out[g]
        new = _eval(gate_kind[g], vals, m)
        if new == good[o]:
            continue
        faulty[o] = new
        if observers[o]:
            detected |= new ^ good[o]
            if first_only:
                return detected
        for h, _ in fanout[o]:
            if h not in queued:
                queued.add(h)
                heapq.heappush(heap, h)
    return detected


@dataclass
class DetectionTable:
    """Per fault (in fault-list order): bit mask over pattern indices.

    With fault dropping only the first detecting pattern's bit is set.
    """

    n_patterns: int
    masks: list[int]

    def first(self, i: int) -> int | None:
        m = self.masks[i]
        return (m & -m).bit_length() - 1 if m else None

    def detected(self) -> list[int]:
        return [i for i, m in enumerate(self.masks) if m]

    def detects(self, pattern: int, fault: int) -> bool:
        return bool(self.masks[fault] >> pattern & 1)

    def to_csv(self, faults: FaultList) -> str:
        rows = ["fault,first_pattern"]
        for i, f in enumerate(faults.faults):
            first = self.first(i)
            rows.append(f"{f.name},{'' if first is None else first}")
        return "\n".join(rows) + "\n"


def fault_sim(v: ScanView, patterns: Sequence[str], faults: FaultList | Sequence[Fault],
              drop: bool = True) -> DetectionTable:
    """Simulate every fault against every pattern.

    A pattern detects a fault iff some output bit differs from the good
    machine.  With ``drop`` a fault is no longer simulated after the block
    containing its first detecting pattern, and only that first pattern is
    recorded.
    """
    flist = faults.faults if isinstance(faults, FaultList) else list(faults)
    masks = [0] * len(flist)
    live = list(range(len(flist)))
    for b, block in enumerate(pack(patterns, v.n_inputs)):
        good = simulate(v, block)
        shift = b * WORD
        still = []
        for i in live:
            lanes = detect_mask(v, good, block.mask, flist[i])
            if lanes:
                if drop:
                    masks[i] = (lanes & -lanes) << shift
                    continue
                masks[i] |= lanes << shift
            still.append(i)
        if drop:
            live = still
    return DetectionTable(len(patterns), masks)
