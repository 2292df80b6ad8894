"""PODEM test generation, random fill and reverse-order compaction.

PODEM runs two three-valued machines side by side (fault-free and faulty,
values 0/1/X).  Decisions are made on view inputs only; each decision is
implied forward event-driven and recorded on a trail so that backtracking
restores the previous state exactly.
"""

from __future__ import annotations

import heapq
import os
import random
import weakref
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fill_policy, check_positive_int, check_seed
from .fault import (ABORTED, DETECTED, UNDETECTED, UNTESTABLE, Fault, FaultList,
                    collapsed_faults, line_table)
from .netlist import AND, BUFF, NAND, NOR, NOT, OR, XNOR, XOR, ScanView
from .sim import detect_mask, fault_sim, pack, simulate

__all__ = [
    "AtpgConfig",
    "AtpgResult",
    "TestSet",
    "generate_test",
    "generate_test_set",
    "fill_cube",
    "read_test_set",
    "TestGenerator",
]

X = 2
_INV3 = (1, 0, X)
_NONCONTROLLING = {AND: 1, NAND: 1, OR: 0, NOR: 0, XOR: 0, XNOR: 0}
_CONTROLLING = {AND: 0, NAND: 0, OR: 1, NOR: 1}
_INVERTING = (NAND, NOR, NOT, XNOR)


@dataclass(frozen=True)
class AtpgConfig:
    backtrack_limit: int = 1000
    rng_seed: int = 0
    compaction: bool = True
    fill_policy: str = "random"

    def __post_init__(self):
        check_positive_int(self.backtrack_limit, "backtrack_limit")
        check_seed(self.rng_seed)
        check_fill_policy(self.fill_policy)


@dataclass(frozen=True)
class AtpgResult:
    status: str  # DETECTED, UNTESTABLE or ABORTED
    cube: str | None = None  # '0'/'1'/'X' per view input when detected
    backtracks: int = 0


def _eval3(kind: int, vals) -> int:
    if kind == AND or kind == NAND:
        r = 1
        for x in vals:
            if x == 0:
                r = 0
                break
            if x == X:
                r = X
    elif kind == OR or kind == NOR:
        r = 0
        for x in vals:
            if x == 1:
                r = 1
                break
            if x == X:
                r = X
    elif kind == XOR or kind == XNOR:
        r = 0
        for x in vals:
            if x == X:
                r = X
                break
            r ^= x
    else:
        r = vals[0]
    return _INV3[r] if kind in _INVERTING else r


class _Static:
    """Per-view search heuristics: net depth and gate distance to an output."""

    def __init__(self, v: ScanView):
        depth = [0] * v.n_nets
        for g, o in enumerate(v.gate_out):
            depth[o] = v.gate_level[g]
        self.depth = depth
        far = 1 << 30
        dist_net = [0 if v.net_observers[n] else far for n in range(v.n_nets)]
        dist_gate = [far] * len(v.gate_out)
        for g in range(len(v.gate_out) - 1, -1, -1):
            o = v.gate_out[g]
            d = dist_net[o]
            for h, _ in v.net_fanout[o]:
                d = min(d, dist_gate[h] + 1)
            dist_net[o] = d
            dist_gate[g] = d
        self.dist_gate = dist_gate


_statics: "weakref.WeakKeyDictionary[ScanView, _Static]" = weakref.WeakKeyDictionary()


def _static(v: ScanView) -> _Static:
    s = _statics.get(v)
    if s is None:
        s = _statics[v] = _Static(v)
    return s


class _Podem:
    def __init__(self, v: ScanView, fault: Fault):
        lt = line_table(v)
        self.v = v
        self.st = _static(v)
        self.sv = fault.stuck
        self.site = lt.net[fault.line]
        self.pin_gate = lt.gate[fault.line]
        self.pin = lt.pin[fault.line]
        self.observed_branch = lt.observer[fault.line] >= 0
        self.stem = lt.is_stem(fault.line)
        n = v.n_nets
        self.good = [X] * n
        self.bad = [X] * n
        self.trail: list[tuple[int, int, int]] = []
        self.dnets: set[int] = set()
        if self.stem:
            self._set(self.site, X, self.sv)
            self._propagate(g for g, _ in v.net_fanout[self.site])
        elif self.pin_gate >= 0:
            self._propagate([self.pin_gate])

    # -- state -----------------------------------------------------------

    def _set(self, n: int, g: int, b: int) -> None:
        self.trail.append((n, self.good[n], self.bad[n]))
        self.good[n] = g
        self.bad[n] = b
        if g != X and b != X and g != b:
            self.dnets.add(n)
        else:
            self.dnets.discard(n)

    def _undo(self, mark: int) -> None:
        trail, good, bad, dnets = self.trail, self.good, self.bad, self.dnets
        while len(trail) > mark:
            n, g, b = trail.pop()
            good[n] = g
            bad[n] = b
            if g != X and b != X and g != b:
                dnets.add(n)
            else:
                dnets.discard(n)

    def _bad_inputs(self, g: int) -> list[int]:
        vals = [self.bad[i] for i in self.v.gate_ins[g]]
        if g == self.pin_gate:
            vals[self.pin] = self.sv
        return vals

    def _propagate(self, gates) -> None:
        v, good = self.v, self.good
        heap = list(set(gates))
        heapq.heapify(heap)
        queued = set(heap)
        while heap:
            g = heapq.heappop(heap)
            queued.discard(g)
            kind = v.gate_kind[g]
            o = v.gate_out[g]
            gv = _eval3(kind, [good[i] for i in v.gate_ins[g]])
            bv = self.sv if (self.stem and o == self.site) else _eval3(kind, self._bad_inputs(g))
            if gv == good[o] and bv == self.bad[o]:
                continue
            self._set(o, gv, bv)
            for h, _ in v.net_fanout[o]:
                if h not in queued:
                    queued.add(h)
                    heapq.heappush(heap, h)

    def assign(self, i: int, value: int) -> None:
        bv = self.sv if (self.stem and i == self.site) else value
        self._set(i, value, bv)
        self._propagate(g for g, _ in self.v.net_fanout[i])

    # -- search ----------------------------------------------------------

    def _x(self, n: int) -> bool:
        g, b = self.good[n], self.bad[n]
        return g == X or b == X

    def _x_path(self, gates) -> bool:
        """Is there a path of undetermined nets from some gate to an output?"""
        v = self.v
        stack = [o for o in {v.gate_out[g] for g in gates} if self._x(o) or o in self.dnets]
        seen = set(stack)
        while stack:
            n = stack.pop()
            if v.net_observers[n]:
                return True
            for h, _ in v.net_fanout[n]:
                o = v.gate_out[h]
                if o not in seen and (self._x(o) or o in self.dnets):
                    seen.add(o)
                    stack.append(o)
        return False

    def status(self):
        """``True`` on detection, ``None`` on conflict, else an objective."""
        v, good = self.v, self.good
        site_good = good[self.site]
        if site_good == self.sv:
            return None
        if self.observed_branch:
            return True if site_good != X else (self.site, 1 - self.sv)
        for n in self.dnets:
            if v.net_observers[n]:
                return True
        if site_good == X:
            if self.stem:
                if v.net_observers[self.site]:
                    return (self.site, 1 - self.sv)
                ok = self._x_path([g for g, _ in v.net_fanout[self.site]])
            else:
                ok = self._x_path([self.pin_gate])
            return (self.site, 1 - self.sv) if ok else None
        frontier = set()
        for n in self.dnets:
            for h, _ in v.net_fanout[n]:
                if self._x(v.gate_out[h]):
                    frontier.add(h)
        if self.pin_gate >= 0 and self._x(v.gate_out[self.pin_gate]):
            frontier.add(self.pin_gate)
        if not frontier or not self._x_path(frontier):
            return None
        dist = self.st.dist_gate
        g = min(frontier, key=lambda h: (dist[h], h))
        ncv = _NONCONTROLLING.get(v.gate_kind[g], 0)
        ins = v.gate_ins[g]
        bad_in = self._bad_inputs(g)
        for p, i in enumerate(ins):
            if good[i] == X:
                return (i, ncv)
        for p, i in enumerate(ins):
            if bad_in[p] == X:
                return (i, ncv)
        return None

    def backtrace(self, n: int, value: int) -> tuple[int, int]:
        """Walk an objective back to an unassigned view input."""
        v, depth = self.v, self.st.depth
        machine = self.good if self.good[n] == X else self.bad
        use_bad = machine is self.bad
        while v.net_driver[n] >= 0:
            g = v.net_driver[n]
            kind = v.gate_kind[g]
            ins = v.gate_ins[g]
            vals = self._bad_inputs(g) if use_bad else [machine[i] for i in ins]
            xs = [p for p, x in enumerate(vals) if x == X]
            need = value ^ (kind in _INVERTING)
            if kind in _CONTROLLING:
                if need == _CONTROLLING[kind]:
                    p = min(xs, key=lambda q: (depth[ins[q]], q))
                else:
                    p = min(xs, key=lambda q: (-depth[ins[q]], q))
            else:
                p = xs[0]
                if kind in (XOR, XNOR) and len(xs) == 1:
                    for q, x in enumerate(vals):
                        if q != p:
                            need ^= x
            n, value = ins[p], need
        return n, value


def generate_test(v: ScanView, f: Fault, cfg: AtpgConfig | None = None) -> AtpgResult:
    """PODEM for one fault.

    Returns a cube (``'X'`` where the input is unconstrained) on success,
    ``UNTESTABLE`` when the input space is exhausted and ``ABORTED`` when more
    than ``cfg.backtrack_limit`` backtracks were needed.
    """
    cfg = cfg or AtpgConfig()
    search = _Podem(v, f)
    stack: list[list[int]] = []  # [input, value, flipped, trail mark]
    backtracks = 0
    while True:
        st = search.status()
        if st is True:
            cube = "".join("X" if b == X else str(b) for b in search.good[:v.n_inputs])
            return AtpgResult(DETECTED, cube, backtracks)
        if st is not None:
            i, val = search.backtrace(*st)
            stack.append([i, val, 0, len(search.trail)])
            search.assign(i, val)
            continue
        while stack and stack[-1][2]:
            search._undo(stack.pop()[3])
        if not stack:
            return AtpgResult(UNTESTABLE, None, backtracks)
        backtracks += 1
        if backtracks > cfg.backtrack_limit:
            return AtpgResult(ABORTED, None, backtracks)
        top = stack[-1]
        search._undo(top[3])
        top[1] ^= 1
        top[2] = 1
        search.assign(top[0], top[1])


def fill_cube(cube: str, policy: str, rng: random.Random) -> str:
    """Replace every ``X`` of a cube; random fill consumes one bit per X."""
    if policy == "zeros":
        return cube.replace("X", "0")
    if policy == "ones":
        return cube.replace("X", "1")
    return "".join(str(rng.getrandbits(1)) if ch == "X" else ch for ch in cube)


@dataclass
class TestSet:
    circuit: str
    inputs: tuple[str, ...]
    patterns: list[str]
    detected: list[list[str]]  # names of the faults credited to each pattern
    faults: FaultList
    seed: int
    config: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def __len__(self):
        return len(self.patterns)

    @property
    def coverage(self) -> float:
        return self.faults.coverage

    @property
    def n_untestable(self) -> int:
        return self.faults.count(UNTESTABLE)

    @property
    def n_aborted(self) -> int:
        return self.faults.count(ABORTED)

    def to_text(self) -> str:
        head = [f"# circuit {self.circuit}", f"# inputs {' '.join(self.inputs)}", f"# seed {self.seed}"]
        return "\n".join(head + self.patterns) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())


def read_test_set(text: str) -> tuple[str, tuple[str, ...], int, list[str]]:
    """Parse the pattern file format back into (circuit, inputs, seed, patterns)."""
    circuit, inputs, seed, patterns = "", (), 0, []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, rest = line[1:].strip().partition(" ")
            if key == "circuit":
                circuit = rest
            elif key == "inputs":
                inputs = tuple(rest.split())
            elif key == "seed":
                seed = int(rest)
            continue
        if set(line) - {"0", "1"} or (inputs and len(line) != len(inputs)):
            raise ValueError(f"malformed pattern line {line!r}")
        patterns.append(line)
    return circuit, inputs, seed, patterns


def generate_test_set(v: ScanView, faults: FaultList | None = None,
                      cfg: AtpgConfig | None = None) -> TestSet:
    """Deterministic test set for a collapsed fault list.

    Faults are targeted in list order; every generated pattern is filled and
    fault-simulated to drop all faults it detects.  With compaction enabled a
    final reverse-order pass keeps only patterns that detect a fault not yet
    covered by later patterns.
    """
    cfg = cfg or AtpgConfig()
    fl = (faults if faults is not None else collapsed_faults(v)).copy()
    rng = random.Random(cfg.rng_seed)
    status = fl.statuses
    patterns: list[str] = []
    credits: list[list[int]] = []
    for i, f in enumerate(fl.faults):
        if status[i] != UNDETECTED:
            continue
        res = generate_test(v, f, cfg)
        if res.status != DETECTED:
            status[i] = res.status
            continue
        p = fill_cube(res.cube, cfg.fill_policy, rng)
        block = pack([p], v.n_inputs)[0]
        good = simulate(v, block)
        hits = [j for j, s in enumerate(status)
                if s in (UNDETECTED, ABORTED) and detect_mask(v, good, 1, fl.faults[j], True)]
        if i not in hits:
            raise RuntimeError(f"generated pattern does not detect its target {f.name}")
        for j in hits:
            status[j] = DETECTED
        patterns.append(p)
        credits.append(hits)

    if cfg.compaction and patterns:
        target = [j for j, s in enumerate(status) if s == DETECTED]
        table = fault_sim(v, patterns, [fl.faults[j] for j in target], drop=False)
        covered = [False] * len(target)
        kept = []
        for k in range(len(patterns) - 1, -1, -1):
            mine = [t for t in range(len(target))
                    if not covered[t] and table.masks[t] >> k & 1]
            if mine:
                for t in mine:
                    covered[t] = True
                kept.append((patterns[k], [target[t] for t in mine]))
        kept.reverse()
        patterns = [p for p, _ in kept]
        credits = [c for _, c in kept]

    return TestSet(
        circuit=v.name,
        inputs=v.inputs,
        patterns=patterns,
        detected=[[fl.faults[j].name for j in c] for c in credits],
        faults=fl,
        seed=cfg.rng_seed,
        config=asdict(cfg),
    )


class TestGenerator(BaseEstimator):
    """Estimator-style front end to :func:`generate_test_set`.

    ``fit`` takes a :class:`~soctat.netlist.ScanView` (and optionally a
    collapsed fault list); the fitted test set is exposed as ``test_set_``
    and, as a ``(n_patterns, n_inputs)`` 0/1 array, as ``patterns_``.

    >>> from soctat.netlist import parse_bench, scan_view
    >>> v = scan_view(parse_bench("INPUT(a)\\nINPUT(b)\\nOUTPUT(y)\\ny = AND(a, b)"))
    >>> TestGenerator(rng_seed=1).fit(v).coverage_
    100.0
    """

    __test__ = False

    def __init__(self, backtrack_limit=1000, rng_seed=0, compaction=True, fill_policy="random"):
        self.backtrack_limit = backtrack_limit
        self.rng_seed = rng_seed
        self.compaction = compaction
        self.fill_policy = fill_policy

    def _config(self) -> AtpgConfig:
        return AtpgConfig(self.backtrack_limit, self.rng_seed, self.compaction, self.fill_policy)

    def fit(self, view: ScanView, faults: FaultList | None = None):
        if not isinstance(view, ScanView):
            raise TypeError(f"expected a ScanView, got {type(view).__name__}")
        self.test_set_ = generate_test_set(view, faults, self._config())
        self.n_inputs_ = view.n_inputs
        self.patterns_ = (np.array([[int(b) for b in p] for p in self.test_set_.patterns],
                                   dtype=np.uint8).reshape(-1, view.n_inputs))
        self.coverage_ = self.test_set_.coverage
        return self

    def transform(self, view: ScanView | None = None) -> np.ndarray:
        check_is_fitted(self, "test_set_")
        return self.patterns_.copy()

    def score(self, view: ScanView, faults: FaultList | None = None) -> float:
        """Coverage (percent) of the fitted patterns on ``view``'s collapsed faults."""
        check_is_fitted(self, "test_set_")
        if view.n_inputs != self.n_inputs_:
            raise ValueError(f"view has {view.n_inputs} inputs, fitted on {self.n_inputs_}")
        fl = faults if faults is not None else collapsed_faults(view)
        table = fault_sim(view, self.test_set_.patterns, fl)
        return 100.0 * len(table.detected()) / len(fl) if len(fl) else 100.0
