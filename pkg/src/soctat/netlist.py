"""ISCAS'89 ``.bench`` netlists, the full-scan combinational view and levelization.

A :class:`Circuit` mirrors the file: primary inputs, primary outputs and an
ordered gate list that may contain ``DFF`` cells.  :func:`scan_view` cuts the
circuit at every flip-flop, turning DFF outputs into pseudo primary inputs
and DFF data inputs into pseudo primary outputs, and compiles the remaining
combinational logic into integer-indexed arrays used by simulation and ATPG.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable

__all__ = [
    "LOGIC_KINDS",
    "GATE_KINDS",
    "NetlistError",
    "BenchSyntaxError",
    "UnknownGateError",
    "UndrivenNetError",
    "MultipleDriverError",
    "CombinationalCycleError",
    "Gate",
    "Circuit",
    "ScanView",
    "parse_bench",
    "read_bench",
    "write_bench",
    "count_gates",
    "scan_view",
    "levelize",
    "compile_view",
]

# gates counted by count_gates(); inverters, buffers and flip-flops are not
LOGIC_KINDS = ("AND", "NAND", "OR", "NOR", "XOR", "XNOR")
GATE_KINDS = LOGIC_KINDS + ("NOT", "BUFF", "DFF")
_ALIASES = {"INV": "NOT", "BUF": "BUFF"}
_SINGLE_INPUT = ("NOT", "BUFF", "DFF")

# compiled kind codes shared by sim and atpg
AND, NAND, OR, NOR, XOR, XNOR, NOT, BUFF = range(8)
KIND_CODE = {k: i for i, k in enumerate(("AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUFF"))}


class NetlistError(ValueError):
    """Structural problem in a netlist.  ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class BenchSyntaxError(NetlistError):
    pass


class UnknownGateError(NetlistError):
    pass


class UndrivenNetError(NetlistError):
    pass


class MultipleDriverError(NetlistError):
    pass


class CombinationalCycleError(NetlistError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    output: str
    inputs: tuple[str, ...]


@dataclass(frozen=True)
class Circuit:
    name: str
    gates: tuple[Gate, ...]
    primary_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "primary_inputs", tuple(self.primary_inputs))
        object.__setattr__(self, "primary_outputs", tuple(self.primary_outputs))
        _validate(self)

    @property
    def nets(self) -> tuple[str, ...]:
        return self.primary_inputs + tuple(g.output for g in self.gates)

    @property
    def dffs(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.kind == "DFF")

    @property
    def n_pis(self) -> int:
        return len(self.primary_inputs)

    @property
    def n_pos(self) -> int:
        return len(self.primary_outputs)

    @property
    def n_ffs(self) -> int:
        return sum(1 for g in self.gates if g.kind == "DFF")


def _validate(c: Circuit, lines: dict | None = None) -> None:
    """Check the single-driver rule, gate arities and combinational acyclicity.

    ``lines`` optionally maps gate index / net name to source line numbers so
    parse errors point back into the file.
    """
    lines = lines or {}
    driver: dict[str, int] = {}
    for name in c.primary_inputs:
        if name in driver:
            raise MultipleDriverError(f"input {name!r} declared twice", lines.get(("in", name)))
        driver[name] = -1
    for i, g in enumerate(c.gates):
        if g.kind not in GATE_KINDS:
            raise UnknownGateError(f"unknown gate kind {g.kind!r}", lines.get(i))
        if g.kind in _SINGLE_INPUT and len(g.inputs) != 1:
            raise NetlistError(f"{g.kind} {g.output!r} needs exactly 1 input, got {len(g.inputs)}",
                               lines.get(i))
        if not g.inputs:
            raise NetlistError(f"gate {g.output!r} has no inputs", lines.get(i))
        if g.output in driver:
            raise MultipleDriverError(f"net {g.output!r} is driven more than once", lines.get(i))
        driver[g.output] = i
    for i, g in enumerate(c.gates):
        for a in g.inputs:
            if a not in driver:
                raise UndrivenNetError(f"net {a!r} (input of {g.output!r}) is never driven",
                                       lines.get(i))
    seen = set()
    for name in c.primary_outputs:
        if name in seen:
            raise NetlistError(f"output {name!r} declared twice", lines.get(("out", name)))
        seen.add(name)
        if name not in driver:
            raise UndrivenNetError(f"output {name!r} is never driven", lines.get(("out", name)))
    comb = [g for g in c.gates if g.kind != "DFF"]
    sources = set(c.primary_inputs) | {g.output for g in c.gates if g.kind == "DFF"}
    _levels(comb, sources)


def _levels(gates: list[Gate], sources: Iterable[str]) -> list[int]:
    """Logic level of every gate (sources are level 0); raises on a cycle."""
    gate_of = {g.output: i for i, g in enumerate(gates)}
    level = {s: 0 for s in sources}
    result = [0] * len(gates)
    pending = [0] * len(gates)
    users: dict[str, list[int]] = {}
    ready = []
    for i, g in enumerate(gates):
        for a in g.inputs:
            if a in gate_of:
                pending[i] += 1
                users.setdefault(a, []).append(i)
        if pending[i] == 0:
            ready.append(i)
    done = 0
    while ready:
        i = ready.pop()
        g = gates[i]
        lv = 1 + max(level.get(a, 0) for a in g.inputs)
        level[g.output] = lv
        result[i] = lv
        done += 1
        for j in users.get(g.output, ()):
            pending[j] -= 1
            if pending[j] == 0:
                ready.append(j)
    if done != len(gates):
        stuck = next(g.output for i, g in enumerate(gates) if pending[i])
        raise CombinationalCycleError(f"combinational cycle through net {stuck!r}")
    return result


# ---------------------------------------------------------------- parsing

_PUNCT = "(),="


def _tokens(text: str):
    """Yield (kind, value, column) for one comment-stripped line."""
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in _PUNCT:
            yield ch, ch, i + 1
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in _PUNCT:
                j += 1
            yield "name", text[i:j], i + 1
            i = j


def parse_bench(text: str, name: str = "circuit") -> Circuit:
    """Parse ``.bench`` text into a validated :class:`Circuit`.

    Keywords and gate kinds are case-insensitive; ``INV`` and ``BUF`` are
    accepted as aliases of ``NOT`` and ``BUFF``.  Errors carry the 1-based
    line and column of the offending token.
    """
    inputs: list[str] = []
    outputs: list[str] = []
    gates: list[Gate] = []
    where: dict = {}
    repeated: set = set()
    statements = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = list(_tokens(line))
        if not toks:
            continue
        statements += 1
        end_col = len(line.rstrip()) + 1

        def expect(pos, kind):
            if pos >= len(toks):
                raise BenchSyntaxError(f"expected {kind!r}, found end of line", lineno, end_col)
            if toks[pos][0] != kind:
                raise BenchSyntaxError(f"expected {kind!r}, found {toks[pos][1]!r}",
                                       lineno, toks[pos][2])
            return toks[pos][1]

        head = expect(0, "name")
        if len(toks) > 1 and toks[1][0] == "(":
            kw = head.upper()
            if kw not in ("INPUT", "OUTPUT"):
                raise BenchSyntaxError(f"unknown declaration {head!r}", lineno, toks[0][2])
            net = expect(2, "name")
            expect(3, ")")
            if len(toks) > 4:
                raise BenchSyntaxError(f"unexpected {toks[4][1]!r}", lineno, toks[4][2])
            # duplicates are reported at their first repetition
            tag = ("in" if kw == "INPUT" else "out", net)
            bucket = inputs if kw == "INPUT" else outputs
            if tag not in where or (net in bucket and tag not in repeated):
                where[tag] = lineno
                if net in bucket:
                    repeated.add(tag)
            bucket.append(net)
            continue
        expect(1, "=")
        kind_tok = expect(2, "name")
        kind = _ALIASES.get(kind_tok.upper(), kind_tok.upper())
        if kind not in GATE_KINDS:
            raise UnknownGateError(f"unknown gate kind {kind_tok!r}", lineno, toks[2][2])
        expect(3, "(")
        args: list[str] = []
        pos = 4
        if pos < len(toks) and toks[pos][0] == ")":
            pos += 1
        else:
            while True:
                args.append(expect(pos, "name"))
                pos += 1
                if pos < len(toks) and toks[pos][0] == ",":
                    pos += 1
                    continue
                expect(pos, ")")
                pos += 1
                break
        if pos < len(toks):
            raise BenchSyntaxError(f"unexpected {toks[pos][1]!r}", lineno, toks[pos][2])
        where[len(gates)] = lineno
        gates.append(Gate(kind, head, tuple(args)))
    if statements == 0:
        raise BenchSyntaxError("empty netlist: no declarations found", 1, 1)
    c = object.__new__(Circuit)
    object.__setattr__(c, "name", name)
    object.__setattr__(c, "gates", tuple(gates))
    object.__setattr__(c, "primary_inputs", tuple(inputs))
    object.__setattr__(c, "primary_outputs", tuple(outputs))
    _validate(c, where)
    return c


def read_bench(path: str | os.PathLike) -> Circuit:
    """Read a ``.bench`` file; the circuit is named after the file stem."""
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    with open(path, encoding="utf-8") as fh:
        return parse_bench(fh.read(), name=name)


def write_bench(c: Circuit) -> str:
    """Canonical serialization: inputs, outputs, then gates in declaration order."""
    out = [f"# {c.name}"]
    out += [f"INPUT({n})" for n in c.primary_inputs]
    out += [f"OUTPUT({n})" for n in c.primary_outputs]
    out += [f"{g.output} = {g.kind}({', '.join(g.inputs)})" for g in c.gates]
    return "\n".join(out) + "\n"


def count_gates(c: Circuit, all_cells: bool = False) -> int:
    """Number of multi-input logic gates (AND/NAND/OR/NOR/XOR/XNOR).

    With ``all_cells=True`` every cell is counted, including inverters,
    buffers and flip-flops.
    """
    if all_cells:
        return len(c.gates)
    return sum(1 for g in c.gates if g.kind in LOGIC_KINDS)


# ---------------------------------------------------------------- scan view


@dataclass(frozen=True, eq=False)
class ScanView:
    """Combinational full-scan view of a circuit, compiled for simulation.

    Nets are numbered with the view inputs first (PIs then PPIs), followed by
    gate outputs in schedule order; compiled gate ``i`` is ``schedule[i]``.
    """

    base: Circuit
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    schedule: tuple[Gate, ...]
    net_names: tuple[str, ...] = field(repr=False)
    net_index: dict = field(repr=False)
    gate_kind: tuple[int, ...] = field(repr=False)
    gate_out: tuple[int, ...] = field(repr=False)
    gate_ins: tuple[tuple[int, ...], ...] = field(repr=False)
    gate_level: tuple[int, ...] = field(repr=False)
    net_driver: tuple[int, ...] = field(repr=False)
    # per net: ((gate, pin), ...) in (gate, pin) order
    net_fanout: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)
    output_nets: tuple[int, ...] = field(repr=False)
    # per net: output positions observing it
    net_observers: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    @property
    def n_nets(self) -> int:
        return len(self.net_names)

    def n_branches(self, net: int) -> int:
        """Fanout of a net counting gate pins and observation points."""
        return len(self.net_fanout[net]) + len(self.net_observers[net])


def levelize(v: ScanView | Circuit) -> list[Gate]:
    """Topological gate schedule, ties broken by declaration order.

    Gates are ordered by (logic level, declaration index), so each gate comes
    after every gate driving one of its inputs.
    """
    if isinstance(v, ScanView):
        return list(v.schedule)
    return _schedule(v)


def _schedule(c: Circuit) -> list[Gate]:
    comb = [g for g in c.gates if g.kind != "DFF"]
    sources = set(c.primary_inputs) | {g.output for g in c.gates if g.kind == "DFF"}
    lv = _levels(comb, sources)
    order = sorted(range(len(comb)), key=lambda i: (lv[i], i))
    return [comb[i] for i in order]


def scan_view(c: Circuit) -> ScanView:
    """Cut every DFF: its output becomes a PPI and its data input a PPO."""
    dffs = c.dffs
    inputs = c.primary_inputs + tuple(d.output for d in dffs)
    outputs = c.primary_outputs + tuple(d.inputs[0] for d in dffs)
    return compile_view(c, inputs, outputs, _schedule(c))


def compile_view(base: Circuit, inputs, outputs, schedule) -> ScanView:
    """Build a view from explicit input/output net lists and a gate schedule.

    ``outputs`` may name a net more than once (a PO that also feeds a DFF).
    """
    inputs, outputs = tuple(inputs), tuple(outputs)
    names = list(inputs) + [g.output for g in schedule]
    index = {n: i for i, n in enumerate(names)}
    kinds, outs, ins, levels = [], [], [], []
    level = [0] * len(names)
    driver = [-1] * len(names)
    fanout: list[list[tuple[int, int]]] = [[] for _ in names]
    for gi, g in enumerate(schedule):
        o = index[g.output]
        pins = tuple(index[a] for a in g.inputs)
        kinds.append(KIND_CODE[g.kind])
        outs.append(o)
        ins.append(pins)
        level[o] = 1 + max(level[p] for p in pins)
        levels.append(level[o])
        driver[o] = gi
        for pin, p in enumerate(pins):
            fanout[p].append((gi, pin))
    output_nets = tuple(index[n] for n in outputs)
    observers: list[list[int]] = [[] for _ in names]
    for k, n in enumerate(output_nets):
        observers[n].append(k)
    return ScanView(
        base=base,
        inputs=inputs,
        outputs=outputs,
        schedule=tuple(schedule),
        net_names=tuple(names),
        net_index=index,
        gate_kind=tuple(kinds),
        gate_out=tuple(outs),
        gate_ins=tuple(ins),
        gate_level=tuple(levels),
        net_driver=tuple(driver),
        net_fanout=tuple(tuple(f) for f in fanout),
        output_nets=output_nets,
        net_observers=tuple(tuple(o) for o in observers),
    )
