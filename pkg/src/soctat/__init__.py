"""Deterministic stuck-at testing for scan cores and shared broadcast testing of core clusters."""

from .atpg import AtpgConfig, TestGenerator, TestSet, generate_test, generate_test_set
from .cluster import ClusterConfig, CoreClusterer, CoreProfile, cluster_cores
from .fault import FaultList, collapse, collapsed_faults, enumerate_faults
from .merge import MergedCircuit, merge_cluster, shared_test_set
from .netlist import Circuit, ScanView, count_gates, levelize, parse_bench, read_bench, scan_view, write_bench
from .sim import fault_sim, good_sim, pack
from .tat import TatReport, cluster_clk_cycle, core_clk_cycle, improvement, total_improvement

__version__ = "0.1.0"
