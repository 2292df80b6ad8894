"""Command-line front end: ``soctat profile | atpg | run``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .atpg import AtpgConfig, generate_test_set
from .cluster import ClusterConfig, CoreProfile, cluster_cores
from .fault import collapsed_faults
from .merge import merge_cluster, shared_test_set
from .netlist import NetlistError, count_gates, parse_bench, scan_view, write_bench
from .sim import fault_sim
from .tat import CoreRow, TatReport, round_pct

log = logging.getLogger("soctat")

THREADS_ENV = "SOCTAT_THREADS"


class StageError(Exception):
    def __init__(self, stage: str, subject: str, message: str):
        self.stage, self.subject = stage, subject
        super().__init__(f"[{stage}] {subject}: {message}")


# ---------------------------------------------------------------- inputs


@dataclass
class ManifestEntry:
    core_id: str
    path: str | None  # None: profile comes from --tests-from


@dataclass
class SocManifest:
    entries: list[ManifestEntry] = field(default_factory=list)


def parse_manifest(text: str, base_dir: str = ".") -> SocManifest:
    """``core_id <whitespace> path`` per line; ``#`` comments; ``-`` as path means no netlist."""
    entries, seen = [], set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise StageError("manifest", f"line {lineno}", "expected '<core_id> <path>'")
        core_id, path = parts[0], parts[1].strip()
        if core_id in seen:
            raise StageError("manifest", f"line {lineno}", f"duplicate core id {core_id!r}")
        seen.add(core_id)
        entries.append(ManifestEntry(core_id, None if path == "-" else os.path.join(base_dir, path)))
    if not entries:
        raise StageError("manifest", "manifest", "no cores listed")
    return SocManifest(entries)


@dataclass
class SuppliedCounts:
    tests: dict  # frozenset of ids -> test count
    profiles: dict  # core id -> (inputs, gates)


def parse_tests_csv(text: str) -> SuppliedCounts:
    """Rows ``unit,tests[,inputs,gates]``; a cluster unit joins member ids with ``+``."""
    rows = csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#"))
    tests, profiles = {}, {}
    for row in rows:
        unit = row["unit"].strip()
        members = frozenset(unit.split("+"))
        tests[members] = int(row["tests"])
        if len(members) == 1 and (row.get("inputs") or "").strip():
            profiles[unit] = (int(row["inputs"]), int(row.get("gates") or 0))
    return SuppliedCounts(tests, profiles)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise StageError("config", THREADS_ENV, f"not an integer: {raw!r}") from None
    return max(1, n)


# ---------------------------------------------------------------- jobs


def _load(path: str, core_id: str | None = None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise StageError("parse", core_id or path, str(exc)) from None
    name = os.path.splitext(os.path.basename(path))[0]
    try:
        return parse_bench(text, name=name)
    except NetlistError as exc:
        raise StageError("parse", f"{path}", str(exc)) from None


def _profile_row(c) -> dict:
    v = scan_view(c)
    return {"core": c.name, "pis": c.n_pis, "pos": c.n_pos, "ffs": c.n_ffs,
            "inputs": v.n_inputs, "gates": count_gates(c), "faults": len(collapsed_faults(v))}


def _atpg_job(benches: list[tuple[str, str]], cfg: AtpgConfig) -> dict:
    """ATPG for one core or one merged cluster; picklable in and out."""
    views = [scan_view(parse_bench(text, name=name)) for name, text in benches]
    if len(views) == 1:
        v = views[0]
        ts = generate_test_set(v, collapsed_faults(v), cfg)
        member_fc = [ts.coverage]
        bench = None
    else:
        m = merge_cluster(views)
        ts, member_fc = shared_test_set(m, cfg)
        bench = write_bench(m.view.base)
    return {"tests": len(ts), "text": ts.to_text(), "fc": ts.coverage,
            "untestable": ts.n_untestable, "aborted": ts.n_aborted,
            "member_fc": member_fc, "bench": bench}


def _run_jobs(jobs: list, workers: int) -> list[dict]:
    if workers <= 1 or len(jobs) <= 1:
        return [_atpg_job(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_atpg_job, *zip(*jobs)))


# ---------------------------------------------------------------- commands


def _atpg_config(args) -> AtpgConfig:
    return AtpgConfig(backtrack_limit=args.backtrack_limit, rng_seed=args.seed,
                      compaction=not args.no_compaction, fill_policy=args.fill)


def cmd_profile(args) -> int:
    rows = [_profile_row(_load(p)) for p in args.bench]
    cols = ["core", "pis", "pos", "ffs", "inputs", "gates", "faults"]
    if args.format == "csv":
        out = io.StringIO()
        w = csv.DictWriter(out, cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        sys.stdout.write(out.getvalue())
    else:
        sys.stdout.write(f"{'core':<12}" + "".join(f"{c:>8}" for c in cols[1:]) + "\n")
        for r in rows:
            sys.stdout.write(f"{r['core']:<12}" + "".join(f"{r[c]:>8}" for c in cols[1:]) + "\n")
    return 0


def cmd_atpg(args) -> int:
    c = _load(args.bench)
    v = scan_view(c)
    cfg = _atpg_config(args)
    ts = generate_test_set(v, collapsed_faults(v), cfg)
    out = args.out or f"{c.name}.tests"
    try:
        ts.write(out)
        if args.dump_faults:
            with open(args.dump_faults, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(ts.faults.export())
        if args.detections:
            table = fault_sim(v, ts.patterns, ts.faults)
            with open(args.detections, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(f"# seed {cfg.rng_seed}\n" + table.to_csv(ts.faults))
    except OSError as exc:
        raise StageError("write", out, str(exc)) from None
    print(f"{c.name}: tests {len(ts)}  FC {ts.coverage:.2f}%  untestable {ts.n_untestable}  "
          f"aborted {ts.n_aborted}  clk_cycle {v.n_inputs * len(ts)}  seed {cfg.rng_seed}")
    return 0


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_run(args) -> int:
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = parse_manifest(fh.read(), os.path.dirname(os.path.abspath(args.manifest)))
    except OSError as exc:
        raise StageError("manifest", args.manifest, str(exc)) from None
    supplied = None
    if args.tests_from:
        try:
            with open(args.tests_from, encoding="utf-8") as fh:
                supplied = parse_tests_csv(fh.read())
        except (OSError, KeyError, ValueError) as exc:
            raise StageError("tests-from", args.tests_from, str(exc)) from None
    seed = args.seed
    head = f"# seed {seed}\n"
    ccfg = ClusterConfig(args.eps_inputs, args.eps_gates_rel, args.max_cluster_gates)
    acfg = _atpg_config(args)

    texts: dict[str, str] = {}
    profiles, prof_rows = [], []
    for e in manifest.entries:
        if e.path is None:
            if supplied is None or e.core_id not in supplied.profiles:
                raise StageError("profile", e.core_id, "no netlist and no inputs/gates in --tests-from")
            n_in, n_g = supplied.profiles[e.core_id]
            profiles.append(CoreProfile(e.core_id, n_in, n_g))
            prof_rows.append(f"{e.core_id},,,,{n_in},{n_g},")
            continue
        c = _load(e.path, e.core_id)
        with open(e.path, encoding="utf-8") as fh:
            texts[e.core_id] = fh.read()
        r = _profile_row(c)
        profiles.append(CoreProfile(e.core_id, r["inputs"], r["gates"], r["pos"], r["ffs"]))
        prof_rows.append(f"{e.core_id},{r['pis']},{r['pos']},{r['ffs']},{r['inputs']},"
                         f"{r['gates']},{r['faults']}")
    clustering = cluster_cores(profiles, ccfg)
    ids = [p.core_id for p in profiles]
    n_inputs = {p.core_id: p.n_inputs for p in profiles}

    out = args.out
    cov_rows = []
    if supplied is not None:
        core_tests = {}
        for cid in ids:
            if frozenset([cid]) not in supplied.tests:
                raise StageError("tests-from", cid, "no test count supplied")
            core_tests[cid] = supplied.tests[frozenset([cid])]
        cluster_tests = []
        for cl in clustering:
            key = frozenset(cl.members)
            if key not in supplied.tests:
                raise StageError("tests-from", "+".join(cl.members), "no shared test count supplied")
            cluster_tests.append(supplied.tests[key])
    else:
        missing = [cid for cid in ids if cid not in texts]
        if missing:
            raise StageError("atpg", ",".join(missing), "no netlist to run ATPG on")
        jobs = [([(cid, texts[cid])], acfg) for cid in ids]
        multi = [k for k, cl in enumerate(clustering) if len(cl.members) > 1]
        jobs += [([(m, texts[m]) for m in clustering.clusters[k].members], acfg) for k in multi]
        try:
            results = _run_jobs(jobs, _threads())
        except NetlistError as exc:
            raise StageError("atpg", "core", str(exc)) from None
        core_res = dict(zip(ids, results[:len(ids)]))
        cl_res = dict(zip(multi, results[len(ids):]))
        core_tests = {cid: r["tests"] for cid, r in core_res.items()}
        cluster_tests = []
        for cid, r in core_res.items():
            _write(os.path.join(out, "cores", f"{cid}.tests"), r["text"])
            cov_rows.append(f"{cid},{r['tests']},{r['fc']:.2f},{r['untestable']},{r['aborted']},")
        for k, cl in enumerate(clustering, start=1):
            r = cl_res.get(k - 1) or core_res[cl.members[0]]
            cluster_tests.append(r["tests"])
            _write(os.path.join(out, "clusters", f"cluster{k}.tests"), r["text"])
            if r["bench"] is not None:
                _write(os.path.join(out, "clusters", f"cluster{k}.bench"), head + r["bench"])
            per = " ".join(f"{m}={fc:.2f}" for m, fc in zip(cl.members, r["member_fc"]))
            cov_rows.append(f"cluster{k},{r['tests']},{r['fc']:.2f},{r['untestable']},"
                            f"{r['aborted']},{per}")
            if len(cl.members) > 1 and r["tests"] > sum(core_tests[m] for m in cl.members):
                log.warning("cluster %d (%s) needs more shared tests than its members combined",
                            k, ",".join(cl.members))

    report = TatReport.build([CoreRow(cid, n_inputs[cid], core_tests[cid]) for cid in ids],
                             [(cl.members, t) for cl, t in zip(clustering, cluster_tests)])
    cores_csv, clusters_csv = report.to_csv()
    _write(os.path.join(out, "profiles.csv"), head + "core_id,pis,pos,ffs,inputs,gates,faults\n"
           + "\n".join(prof_rows) + "\n")
    _write(os.path.join(out, "clustering.txt"), head + clustering.export())
    _write(os.path.join(out, "tat_cores.csv"), head + cores_csv)
    _write(os.path.join(out, "tat_clusters.csv"), head + clusters_csv)
    _write(os.path.join(out, "report.txt"), head + report.to_text())
    if cov_rows:
        _write(os.path.join(out, "coverage.csv"),
               head + "unit,tests,fc,untestable,aborted,member_fc\n" + "\n".join(cov_rows) + "\n")
    if args.format == "csv":
        sys.stdout.write(cores_csv + "\n" + clusters_csv)
        sys.stdout.write(f"total_imp,{round_pct(report.total_imp):.2f}\n")
    else:
        sys.stdout.write(clustering.export() + "\n" + report.to_text())
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soctat", description="Shared broadcast testing for scan cores.")
    sub = p.add_subparsers(dest="command", required=True)

    def atpg_flags(sp):
        sp.add_argument("--seed", type=int, default=0, help="RNG seed for X-fill (u64)")
        sp.add_argument("--backtrack-limit", type=int, default=1000)
        sp.add_argument("--no-compaction", action="store_true")
        sp.add_argument("--fill", choices=("random", "zeros", "ones"), default="random")

    sp = sub.add_parser("profile", help="structural profile of .bench files")
    sp.add_argument("bench", nargs="+")
    sp.add_argument("--format", choices=("text", "csv"), default="text")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("atpg", help="generate a test set for one core")
    sp.add_argument("bench")
    atpg_flags(sp)
    sp.add_argument("--out", help="test set file (default: <circuit>.tests)")
    sp.add_argument("--dump-faults", metavar="FILE", help="write the collapsed fault list with statuses")
    sp.add_argument("--detections", metavar="FILE", help="write the detection table as CSV")
    sp.set_defaults(func=cmd_atpg)

    sp = sub.add_parser("run", help="profile, cluster, test and report a whole SoC")
    sp.add_argument("manifest")
    atpg_flags(sp)
    sp.add_argument("--eps-inputs", type=int, default=0)
    sp.add_argument("--eps-gates-rel", type=float, default=0.20)
    sp.add_argument("--max-cluster-gates", type=int, default=None)
    sp.add_argument("--tests-from", metavar="CSV", help="externally supplied test counts; skips ATPG")
    sp.add_argument("--out", default="soctat_out", help="artifact directory")
    sp.add_argument("--format", choices=("text", "csv"), default="text")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NetlistError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
