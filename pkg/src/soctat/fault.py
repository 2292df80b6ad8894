"""Single stuck-at fault universe and structural equivalence collapsing.

Fault sites are *lines*: every net has a stem line, and a net whose fanout is
larger than one (gate pins plus observation points) additionally gets one
branch line per consumer.  A branch feeding a gate pin is labelled
``NET/GATE.PIN`` (``GATE`` being the gate's output net); a branch feeding the
``k``-th view output is labelled ``NET/@o<k>``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

from .netlist import AND, BUFF, NAND, NOR, NOT, OR, ScanView

__all__ = [
    "UNDETECTED",
    "DETECTED",
    "UNTESTABLE",
    "ABORTED",
    "LineTable",
    "Fault",
    "FaultList",
    "line_table",
    "enumerate_faults",
    "collapse",
    "collapsed_faults",
]

UNDETECTED = "undetected"
DETECTED = "detected"
UNTESTABLE = "untestable"
ABORTED = "aborted"
STATUSES = (UNDETECTED, DETECTED, UNTESTABLE, ABORTED)


@dataclass(frozen=True)
class LineTable:
    net: tuple[int, ...]
    gate: tuple[int, ...]  # consumer gate of a pin branch, else -1
    pin: tuple[int, ...]
    observer: tuple[int, ...]  # output position of an observation branch, else -1
    label: tuple[str, ...]
    stem: tuple[int, ...]  # per net
    pin_line: tuple[tuple[int, ...], ...]  # per gate, per pin: line read by the pin
    obs_line: tuple[int, ...]  # per output: line read by the observation point

    def __len__(self):
        return len(self.net)

    def is_stem(self, line: int) -> bool:
        return self.gate[line] < 0 and self.observer[line] < 0


_tables: "weakref.WeakKeyDictionary[ScanView, LineTable]" = weakref.WeakKeyDictionary()


def line_table(v: ScanView) -> LineTable:
    """Lines of a view in enumeration order: per net, the stem then its branches."""
    cached = _tables.get(v)
    if cached is not None:
        return cached
    net, gate, pin, obs, label = [], [], [], [], []
    stem = [0] * v.n_nets
    pin_line = [[0] * len(ins) for ins in v.gate_ins]
    obs_line = [0] * v.n_outputs
    gate_name = [v.net_names[o] for o in v.gate_out]

    def add(n, g, p, k, text):
        net.append(n)
        gate.append(g)
        pin.append(p)
        obs.append(k)
        label.append(text)
        return len(net) - 1

    for n, name in enumerate(v.net_names):
        s = add(n, -1, -1, -1, name)
        stem[n] = s
        if v.n_branches(n) > 1:
            for g, p in v.net_fanout[n]:
                pin_line[g][p] = add(n, g, p, -1, f"{name}/{gate_name[g]}.{p}")
            for k in v.net_observers[n]:
                obs_line[k] = add(n, -1, -1, k, f"{name}/@o{k}")
        else:
            for g, p in v.net_fanout[n]:
                pin_line[g][p] = s
            for k in v.net_observers[n]:
                obs_line[k] = s
    table = LineTable(tuple(net), tuple(gate), tuple(pin), tuple(obs), tuple(label),
                      tuple(stem), tuple(tuple(p) for p in pin_line), tuple(obs_line))
    _tables[v] = table
    return table


@dataclass(frozen=True)
class Fault:
    line: int
    stuck: int
    label: str
    class_rep: str = field(default="", compare=False)

    @property
    def name(self) -> str:
        return f"{self.label} SA{self.stuck}"


@dataclass
class FaultList:
    faults: list[Fault]
    universe_size: int
    statuses: list[str] = field(default_factory=list)
    # representative name -> every member of its class (uncollapsed lists map to themselves)
    classes: dict[str, tuple[Fault, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.statuses:
            self.statuses = [UNDETECTED] * len(self.faults)
        if len(self.statuses) != len(self.faults):
            raise ValueError("statuses and faults differ in length")

    def __len__(self):
        return len(self.faults)

    def copy(self) -> "FaultList":
        return FaultList(list(self.faults), self.universe_size, list(self.statuses), self.classes)

    def count(self, status: str) -> int:
        return sum(1 for s in self.statuses if s == status)

    @property
    def coverage(self) -> float:
        """Fault coverage in percent over this list (aborted faults count as missed)."""
        if not self.faults:
            return 100.0
        return 100.0 * self.count(DETECTED) / len(self.faults)

    def export(self) -> str:
        """One fault per line: ``NET[/GATE.PIN] SA0|SA1 STATUS``."""
        return "".join(f"{f.name} {s.upper()}\n" for f, s in zip(self.faults, self.statuses))


def enumerate_faults(v: ScanView) -> FaultList:
    """Two faults (s-a-0, s-a-1) per line, in line order."""
    lt = line_table(v)
    faults = [Fault(l, s, lt.label[l], f"{lt.label[l]} SA{s}")
              for l in range(len(lt)) for s in (0, 1)]
    return FaultList(faults, len(faults), classes={f.name: (f,) for f in faults})


# (input stuck value, output stuck value) pairs made equivalent by each gate kind
_EQUIV = {
    AND: ((0, 0),),
    NAND: ((0, 1),),
    OR: ((1, 1),),
    NOR: ((1, 0),),
    NOT: ((0, 1), (1, 0)),
    BUFF: ((0, 0), (1, 1)),
}


def collapse(fl: FaultList, v: ScanView) -> FaultList:
    """Equivalence-collapse an uncollapsed list of ``v``.

    The representative of each class is its first member in enumeration
    order; the collapsed list keeps classes in representative order.
    """
    lt = line_table(v)
    ids = {(f.line, f.stuck): i for i, f in enumerate(fl.faults)}
    parent = list(range(len(fl.faults)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for g, kind in enumerate(v.gate_kind):
        out = lt.stem[v.gate_out[g]]
        for pin_l in lt.pin_line[g]:
            for s_in, s_out in _EQUIV.get(kind, ()):
                a, b = ids.get((pin_l, s_in)), ids.get((out, s_out))
                if a is None or b is None:
                    continue
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    members: dict[int, list[int]] = {}
    for i in range(len(fl.faults)):
        members.setdefault(find(i), []).append(i)
    reps, classes = [], {}
    for r in sorted(members):
        rep = fl.faults[r]
        rep_name = rep.name
        group = tuple(Fault(fl.faults[i].line, fl.faults[i].stuck, fl.faults[i].label, rep_name)
                      for i in members[r])
        reps.append(group[0])
        classes[rep_name] = group
    return FaultList(reps, fl.universe_size, classes=classes)


def collapsed_faults(v: ScanView) -> FaultList:
    return collapse(enumerate_faults(v), v)
