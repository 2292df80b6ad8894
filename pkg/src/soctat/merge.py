"""Virtual merged circuit of a cluster, for shared broadcast test generation.

Members are placed side by side.  Shared line ``ci<j>`` fans out, through one
buffer per member input, to every member input aligned with it; member nets
are prefixed ``m<k>_``.  The merged view's outputs are the members' view
outputs concatenated in member order, so every member keeps exactly its own
fault lines and shared vectors have width CI = max member input count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .atpg import AtpgConfig, TestSet, generate_test_set
from .fault import DETECTED, Fault, FaultList, collapsed_faults, line_table
from .netlist import Circuit, Gate, ScanView, compile_view, count_gates, levelize

__all__ = ["MergedCircuit", "index_alignment", "merge_cluster", "shared_test_set"]

Alignment = Callable[[int, ScanView, int], int]


def index_alignment(k: int, view: ScanView, i: int) -> int:
    """Member input ``i`` (PIs first, then PPIs) drives shared line ``i``."""
    return i


@dataclass(frozen=True, eq=False)
class MergedCircuit:
    members: tuple[ScanView, ...]
    shared_inputs: tuple[str, ...]
    input_maps: tuple[tuple[int, ...], ...]  # per member: shared line of each member input
    view: ScanView
    faults: FaultList  # union of the members' collapsed lists, on ``view``
    fault_origin: dict  # merged fault name -> (member index, member fault name)

    @property
    def ci(self) -> int:
        return len(self.shared_inputs)

    @property
    def n_gates(self) -> int:
        return count_gates(self.view.base)

    def restrict(self, pattern: str, k: int) -> str:
        """The member-``k`` pattern seen when ``pattern`` is broadcast."""
        return "".join(pattern[j] for j in self.input_maps[k])


def _resolve(alignment) -> Alignment:
    if alignment in (None, "index"):
        return index_alignment
    if callable(alignment):
        return alignment
    raise ValueError(f"unknown alignment policy {alignment!r}")


def _map_label(label: str, k: int, offset: int) -> str:
    pre = f"m{k}_"
    net, sep, branch = label.partition("/")
    if not sep:
        return pre + net
    if branch.startswith("@o"):
        return f"{pre}{net}/@o{offset + int(branch[2:])}"
    gate, _, pin = branch.rpartition(".")
    return f"{pre}{net}/{pre}{gate}.{pin}"


def merge_cluster(views: Sequence[ScanView], alignment: Union[str, Alignment, None] = "index",
                  name: str | None = None) -> MergedCircuit:
    """Place ``views`` side by side behind CI shared input lines.

    A single member is returned unchanged (identity maps), so a singleton
    cluster tests exactly like the core on its own.
    """
    views = tuple(views)
    if not views:
        raise ValueError("merge_cluster needs at least one view")
    align = _resolve(alignment)
    ci = max(v.n_inputs for v in views)
    maps = []
    for k, v in enumerate(views):
        m = tuple(align(k, v, i) for i in range(v.n_inputs))
        if len(set(m)) != len(m) or any(not 0 <= j < ci for j in m):
            raise ValueError(f"alignment is not injective into {ci} shared lines for member {k}")
        maps.append(m)

    if len(views) == 1:
        v = views[0]
        if maps[0] == tuple(range(v.n_inputs)):
            fl = collapsed_faults(v)
            return MergedCircuit(views, v.inputs, tuple(maps), v, fl,
                                 {f.name: (0, f.name) for f in fl.faults})

    shared = tuple(f"ci{j}" for j in range(ci))
    gates: list[Gate] = []
    outputs: list[str] = []
    observe: list[Gate] = []
    for k, v in enumerate(views):
        pre = f"m{k}_"
        for i, net in enumerate(v.inputs):
            gates.append(Gate("BUFF", pre + net, (shared[maps[k][i]],)))
        for g in v.schedule:
            gates.append(Gate(g.kind, pre + g.output, tuple(pre + a for a in g.inputs)))
        outputs += [pre + o for o in v.outputs]
    # a net observed twice becomes one PO plus buffered copies in the .bench form only
    pos, seen = [], set()
    for i, o in enumerate(outputs):
        if o in seen:
            observe.append(Gate("BUFF", f"{o}_obs{i}", (o,)))
            pos.append(f"{o}_obs{i}")
        else:
            seen.add(o)
            pos.append(o)
    label = name or "+".join(v.name for v in views)
    base = Circuit(label, tuple(gates + observe), shared, tuple(pos))
    extra = {g.output for g in observe}
    schedule = [g for g in levelize(base) if g.output not in extra]
    view = compile_view(base, shared, outputs, schedule)

    lt = line_table(view)
    line_of = {lab: l for l, lab in enumerate(lt.label)}
    faults: list[Fault] = []
    classes: dict[str, tuple[Fault, ...]] = {}
    origin: dict[str, tuple[int, str]] = {}
    universe = 0
    offset = 0
    for k, v in enumerate(views):
        fl = collapsed_faults(v)
        universe += fl.universe_size

        def mapped(f: Fault, rep: str) -> Fault:
            lab = _map_label(f.label, k, offset)
            return Fault(line_of[lab], f.stuck, lab, rep)

        for f in fl.faults:
            rep = mapped(f, "").name
            g = mapped(f, rep)
            faults.append(g)
            classes[rep] = tuple(mapped(x, rep) for x in fl.classes[f.name])
            origin[rep] = (k, f.name)
        offset += v.n_outputs
    return MergedCircuit(views, shared, tuple(maps), view,
                         FaultList(faults, universe, classes=classes), origin)


def shared_test_set(m: MergedCircuit, cfg: AtpgConfig | None = None) -> tuple[TestSet, list[float]]:
    """Broadcast test set for the whole cluster plus per-member coverage (percent)."""
    ts = generate_test_set(m.view, m.faults, cfg)
    hit = [0] * len(m.members)
    total = [0] * len(m.members)
    for f, s in zip(ts.faults.faults, ts.faults.statuses):
        k, _ = m.fault_origin[f.name]
        total[k] += 1
        hit[k] += s == DETECTED
    cov = [100.0 * h / t if t else 100.0 for h, t in zip(hit, total)]
    return ts, cov
