"""Test application time in scan-in clock cycles, and the improvement metric.

Every input of a core (PI or scan cell) takes one shift cycle per pattern, so
a core costs ``n_inputs * tests`` cycles and a cluster ``CI * shared_tests``.
Capture and scan-out cycles are not modelled.  Percentages are reported with
two decimals, truncated toward zero.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal
from typing import Sequence

from .cluster import CoreProfile

__all__ = [
    "CoreRow",
    "ClusterRow",
    "TatReport",
    "core_clk_cycle",
    "cluster_clk_cycle",
    "improvement",
    "total_improvement",
    "round_pct",
]


def round_pct(x: float) -> float:
    """Two-decimal percentage, truncated toward zero (54.444 -> 54.44, 65.068 -> 65.06)."""
    # settle float noise (28.999999999999996) before truncating
    settled = Decimal(repr(x)).quantize(Decimal("1e-9"), rounding=ROUND_HALF_UP)
    return float(settled.quantize(Decimal("0.01"), rounding=ROUND_DOWN))


def core_clk_cycle(p: CoreProfile) -> int:
    if p.det_tests is None:
        raise ValueError(f"core {p.core_id} has no test count")
    return p.n_inputs * p.det_tests


def cluster_clk_cycle(ci: int, tests: int) -> int:
    if ci < 1:
        raise ValueError(f"cluster input width must be >= 1, got {ci}")
    if tests < 0:
        raise ValueError(f"test count must be >= 0, got {tests}")
    return ci * tests


def improvement(core_cycles: Sequence[int], cluster_cycle: int) -> float:
    """``100 * (sum(core_cycles) - cluster_cycle) / sum(core_cycles)``; negative when clustering hurts."""
    total = sum(core_cycles)
    if not core_cycles or total <= 0:
        raise ValueError("improvement needs a positive total of core cycles")
    return 100.0 * (total - cluster_cycle) / total


@dataclass(frozen=True)
class CoreRow:
    core_id: str
    n_inputs: int
    det_tests: int

    @property
    def clk_cycle(self) -> int:
        return self.n_inputs * self.det_tests


@dataclass(frozen=True)
class ClusterRow:
    members: tuple[str, ...]
    ci: int
    det_tests: int
    core_cycles: tuple[int, ...]

    @property
    def clk_cycle(self) -> int:
        return cluster_clk_cycle(self.ci, self.det_tests)

    @property
    def imp_percent(self) -> float:
        return improvement(self.core_cycles, self.clk_cycle)

    @property
    def counterproductive(self) -> bool:
        return self.clk_cycle > sum(self.core_cycles)


@dataclass
class TatReport:
    per_core: list[CoreRow] = field(default_factory=list)
    per_cluster: list[ClusterRow] = field(default_factory=list)

    @classmethod
    def build(cls, cores: Sequence[CoreRow], clusters: Sequence[tuple[Sequence[str], int]]) -> "TatReport":
        """``clusters`` holds ``(member ids, shared test count)``; CI is the widest member."""
        by_id = {c.core_id: c for c in cores}
        rows = []
        for members, tests in clusters:
            missing = [m for m in members if m not in by_id]
            if missing:
                raise KeyError(f"cluster member(s) {missing} have no core row")
            ci = max(by_id[m].n_inputs for m in members)
            rows.append(ClusterRow(tuple(members), ci, tests,
                                   tuple(by_id[m].clk_cycle for m in members)))
        return cls(list(cores), rows)

    @property
    def total_imp(self) -> float:
        return total_improvement(self)

    def to_csv(self) -> tuple[str, str]:
        """(cores CSV, clusters CSV) with the machine-readable column contract."""
        a = io.StringIO()
        a.write("core_id,inputs,tests,clk_cycle\n")
        for r in self.per_core:
            a.write(f"{r.core_id},{r.n_inputs},{r.det_tests},{r.clk_cycle}\n")
        b = io.StringIO()
        b.write("cluster,members,ci,tests,clk_cycle,imp\n")
        for k, r in enumerate(self.per_cluster, start=1):
            b.write(f"{k},{'+'.join(r.members)},{r.ci},{r.det_tests},{r.clk_cycle},"
                    f"{round_pct(r.imp_percent):.2f}\n")
        return a.getvalue(), b.getvalue()

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"{'core':<12}{'inputs':>8}{'tests':>8}{'clk_cycle':>12}\n")
        for r in self.per_core:
            out.write(f"{r.core_id:<12}{r.n_inputs:>8}{r.det_tests:>8}{r.clk_cycle:>12}\n")
        out.write("\n")
        out.write(f"{'cluster':<8}{'members':<28}{'CI':>6}{'tests':>8}{'clk_cycle':>12}{'imp%':>9}\n")
        for k, r in enumerate(self.per_cluster, start=1):
            note = "  counterproductive" if r.counterproductive else ""
            out.write(f"{k:<8}{','.join(r.members):<28}{r.ci:>6}{r.det_tests:>8}"
                      f"{r.clk_cycle:>12}{round_pct(r.imp_percent):>9.2f}{note}\n")
        out.write(f"\ntotal improvement: {round_pct(self.total_imp):.2f}%\n")
        out.write("(cycles = scan-in shifts only; capture and scan-out excluded)\n")
        return out.getvalue()


def total_improvement(report: TatReport) -> float:
    """Improvement over the whole SoC: every core must sit in exactly one cluster."""
    core_ids = [r.core_id for r in report.per_core]
    placed = [m for c in report.per_cluster for m in c.members]
    if sorted(placed) != sorted(core_ids):
        missing = set(core_ids) - set(placed)
        raise ValueError(f"clusters do not partition the cores (missing: {sorted(missing)})"
                         if missing else "a core appears in more than one cluster")
    before = sum(r.clk_cycle for r in report.per_core)
    after = sum(c.clk_cycle for c in report.per_cluster)
    return improvement([before], after)
