import csv
import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from soctat.netlist import read_bench, scan_view  # noqa: E402

DATA = Path(__file__).parent / "data"
REPO = Path(__file__).resolve().parents[1]
BENCH_ENV = "SOCTAT_BENCH_DIR"


def bench_dir() -> Path:
    return Path(os.environ.get(BENCH_ENV, REPO / "benchmarks"))


def bench_file(circuit: str) -> Path:
    """Path of an ISCAS'89 netlist; fails (never skips) when it is not installed."""
    p = bench_dir() / f"{circuit.lower()}.bench"
    if not p.is_file():
        pytest.fail(f"benchmark netlist {p} not found; place the ISCAS'89 .bench files in "
                    f"{bench_dir()} or point {BENCH_ENV} at them", pytrace=False)
    return p


def read_table(name: str):
    with open(DATA / name, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


@pytest.fixture(scope="session")
def reference_cores():
    return read_table("reference_cores.csv")


@pytest.fixture(scope="session")
def reference_clusters():
    return read_table("reference_clusters.csv")


@pytest.fixture(scope="session")
def s27():
    return read_bench(DATA / "s27.bench")


@pytest.fixture(scope="session")
def c17():
    return read_bench(DATA / "c17.bench")


@pytest.fixture(scope="session")
def redundant():
    return read_bench(DATA / "redundant.bench")


@pytest.fixture(scope="session")
def small_corpus(s27, c17, redundant):
    """Named circuits with at most 12 scan inputs, for exhaustive oracles."""
    from oracles import random_circuits

    base = [s27, c17, redundant, read_bench(DATA / "s27v.bench")]
    return base + random_circuits(40) + random_circuits(10, first_seed=1000, n_inputs=(6, 10),
                                                        n_gates=(15, 30), n_dffs=(0, 2))


@pytest.fixture(scope="session")
def s27_view(s27):
    return scan_view(s27)


# ---------------------------------------------------------------- acceptance log

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the outcome is printed in the summary."""
    state = {}

    def record(label: str):
        state["label"] = label

    yield record
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    msg = ""
    if rep is not None and not passed:
        crash = getattr(rep.longrepr, "reprcrash", None)
        msg = crash.message if crash is not None else str(rep.longrepr).strip().splitlines()[-1]
        msg = msg.splitlines()[0][:200]
    _ACCEPTANCE.append((state.get("label", request.node.name), passed, msg))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, msg in _ACCEPTANCE:
        line = f"{'PASS' if ok else 'FAIL'}  {label}"
        if msg:
            line += f"  -- {msg}"
        terminalreporter.write_line(line)
