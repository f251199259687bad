"""Command-line harness: generate, run, benchmark, and container-check.

Exit codes: 0 success, 1 usage, 2 I/O or parse error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from random import Random

import numpy as np

from .adaptive import adaptive_test
from .containers import mismatch_container, verify_container
from .instances import (
    LabeledInstance,
    gen_bernoulli_family,
    gen_hybrid_family,
    gen_large_alphabet,
    gen_planted_noisy,
)
from .nonadaptive import TesterReport, folklore_test, tolerant_decide, tolerant_report
from .strings import Instance, QueryOracle, read_instance, write_instance

__all__ = ["BenchRow", "main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VERIFY = 3

BENCH_COLUMNS = [
    "tester",
    "n",
    "m",
    "k",
    "kprime",
    "seed",
    "profile",
    "queries_pattern",
    "queries_text",
    "time_ns",
    "answer",
    "truth_exact",
    "truth_kfar",
    "correct",
    "deviations",
]


@dataclass
class BenchRow:
    tester: str
    n: int
    m: int
    k: int
    kprime: int
    seed: int
    profile: str
    queries_pattern: int
    queries_text: int
    time_ns: int
    answer: str
    truth_exact: str
    truth_kfar: str
    correct: int
    deviations: str

    def as_list(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _flag_str(v: bool | None) -> str:
    return "?" if v is None else str(int(v))


def _is_correct(answer: str, li: LabeledInstance) -> bool:
    """Promise semantics: yes required on exact occurrences, no on verified
    k-far instances, anything otherwise."""
    if li.truth_exact is True and answer == "no":
        return False
    if li.kfar_verified and li.truth_kfar is True and answer == "yes":
        return False
    return True


def _generate(dist: str, n: int, m: int, k: int, kprime: int, seed: int) -> LabeledInstance:
    if dist in ("random", "planted", "mixed"):
        return gen_bernoulli_family(dist, n, m, k, seed)
    if dist == "hybrid-equal":
        return gen_hybrid_family("equal", n, m, k, seed)
    if dist == "hybrid-indep":
        return gen_hybrid_family("independent", n, m, k, seed)
    if dist == "hybrid":
        return gen_hybrid_family("hybrid", n, m, k, seed)
    if dist == "large-alpha":
        return gen_large_alphabet("mixed", n, m, seed)
    if dist == "planted-noisy":
        return gen_planted_noisy(n, m, k, kprime, seed)
    raise ValueError(f"unknown distribution {dist!r}")


def _run_tester(
    tester: str, inst: Instance, seed: int, profile: str, report: bool, trace: bool = False
) -> TesterReport:
    rng = Random(f"run:{tester}:{seed}")
    if tester == "folklore":
        return folklore_test(QueryOracle(inst), rng)
    if tester == "nonadaptive":
        fn = tolerant_report if report else tolerant_decide
        return fn(inst, profile=profile, rng=rng)
    if tester == "adaptive":
        return adaptive_test(inst, rng=rng, trace=trace, trace_potential_trials=3 if trace else 0)
    raise ValueError(f"unknown tester {tester!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    try:
        li = _generate(args.dist, args.n, args.m, args.k, args.kprime, args.seed)
    except ValueError as exc:
        print(f"gen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        write_instance(args.output, li.instance, header=li.header())
    except OSError as exc:
        print(f"gen: cannot write {args.output}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.output}: {li.dist_name} n={li.instance.n} m={li.instance.m} "
          f"k={li.instance.k} kprime={li.instance.kprime} plant={li.plant}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        inst, header = read_instance(args.input)
    except (OSError, ValueError) as exc:
        print(f"run: cannot load {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    rep = _run_tester(args.tester, inst, args.seed, args.profile, args.report, args.trace)
    if args.trace and "trace" in rep.extra:
        for row in rep.extra["trace"]:
            pot = row["potential_estimate"]
            print(
                f"trace: iter={row['iter']} block_string={row['block_string']} "
                f"block_index={row['block_index']} a0={row['a0']} k0={row['k0']} "
                f"bot_seen={int(row['bot_seen'])} "
                f"potential_estimate={'-' if pot is None else f'{pot:.4f}'}"
            )
    print(f"answer: {rep.answer}")
    print(f"queries: pattern={rep.queries_pattern} text={rep.queries_text}")
    print(f"time_s: {rep.wall_time_s:.6f}")
    if rep.executions_aborted:
        print(f"executions_aborted: {rep.executions_aborted}")
    for dev in rep.deviations:
        print(f"deviation: {dev}")
    if args.report:
        out = rep.reported_set if rep.reported_set is not None else []
        print("reported: " + " ".join(str(i) for i in out))
    return EXIT_OK


def _bench_trial(spec: tuple) -> tuple[int, BenchRow]:
    (index, tester, dist, n, m, k, kprime, trial_seed, profile) = spec
    li = _generate(dist, n, m, k, kprime, trial_seed)
    t0 = time.perf_counter_ns()
    rep = _run_tester(tester, li.instance, trial_seed, profile, report=False)
    elapsed = time.perf_counter_ns() - t0
    row = BenchRow(
        tester=tester,
        n=n,
        m=m,
        k=k,
        kprime=kprime,
        seed=trial_seed,
        profile=profile,
        queries_pattern=rep.queries_pattern,
        queries_text=rep.queries_text,
        time_ns=elapsed,
        answer=rep.answer,
        truth_exact=_flag_str(li.truth_exact),
        truth_kfar=_flag_str(li.truth_kfar),
        correct=int(_is_correct(rep.answer, li)),
        deviations=";".join(rep.deviations),
    )
    return index, row


def cmd_bench(args) -> int:
    try:
        key, _, vals = args.sweep.partition("=")
        if key.strip() != "k" or not vals:
            raise ValueError
        ks = [int(v) for v in vals.split(",")]
    except ValueError:
        print("bench: --sweep must look like k=16,32,64", file=sys.stderr)
        return EXIT_USAGE
    specs = []
    index = 0
    for k in ks:
        for _trial in range(args.trials):
            specs.append(
                (index, args.tester, args.dist, args.n, args.m, k, args.kprime,
                 args.seed + index, args.profile)
            )
            index += 1
    if args.jobs > 1 and specs:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = [row for _idx, row in sorted(pool.map(_bench_trial, specs))]
    else:
        rows = [_bench_trial(spec)[1] for spec in specs]
    try:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(BENCH_COLUMNS)
            for row in rows:
                writer.writerow(row.as_list())
    except OSError as exc:
        print(f"bench: cannot write {args.csv}: {exc}", file=sys.stderr)
        return EXIT_IO
    # summary: per-k mean queries and the fitted log-log slope
    if rows:
        means = []
        for k in ks:
            qs = [r.queries_pattern + r.queries_text for r in rows if r.k == k]
            means.append(sum(qs) / len(qs))
            print(f"k={k}: mean_queries={means[-1]:.1f}")
        if len(ks) >= 2 and all(mu > 0 for mu in means):
            slope = float(np.polyfit(np.log(ks), np.log(means), 1)[0])
            print(f"loglog_slope={slope:.4f}")
    return EXIT_OK


def cmd_container(args) -> int:
    try:
        inst, _header = read_instance(args.input)
    except (OSError, ValueError) as exc:
        print(f"container: cannot load {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    k = args.k if args.k is not None else inst.k
    rng = Random(f"container:{args.seed}")
    cset = mismatch_container(inst.pattern, inst.text, k, rng)
    n, m = inst.n, inst.m
    ratio = len(cset) * m / (n * k * math.log2(max(n, 2)) ** 4)
    print(f"|M|={len(cset)} ratio={ratio:.4f}")
    if args.check:
        cert = verify_container(inst, cset, k)
        if not cert.passed:
            print("verification FAILED; violations (alignment, covered, required):",
                  file=sys.stderr)
            for v in cert.violations:
                print(f"  {v}", file=sys.stderr)
            return EXIT_VERIFY
        print("verification passed")
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(f"# n={n} m={m} k={k} seed={args.seed}\n")
                fh.write(" ".join(str(int(v)) for v in cset.positions) + "\n")
        except OSError as exc:
            print(f"container: cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="hamtest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a labeled instance file")
    p_gen.add_argument("--dist", required=True,
                       choices=["random", "planted", "mixed", "hybrid-equal",
                                "hybrid-indep", "hybrid", "large-alpha", "planted-noisy"])
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--m", type=int, required=True)
    p_gen.add_argument("--k", type=int, required=True)
    p_gen.add_argument("--kprime", type=int, default=0)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("-o", "--output", required=True)
    p_gen.set_defaults(func=cmd_gen)

    p_run = sub.add_parser("run", help="run a tester on an instance file")
    p_run.add_argument("--tester", required=True, choices=["folklore", "nonadaptive", "adaptive"])
    p_run.add_argument("--in", dest="input", required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--profile", choices=["paper", "desk"], default="desk")
    p_run.add_argument("--report", action="store_true", help="print the reported set A_out")
    p_run.add_argument("--trace", action="store_true",
                       help="adaptive only: one line per iteration with a potential estimate")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="k-sweep benchmark to CSV")
    p_bench.add_argument("--tester", required=True, choices=["folklore", "nonadaptive", "adaptive"])
    p_bench.add_argument("--sweep", required=True, help="k=16,32,64,...")
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--m", type=int, required=True)
    p_bench.add_argument("--kprime", type=int, default=0)
    p_bench.add_argument("--trials", type=int, required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--dist", default="random")
    p_bench.add_argument("--profile", choices=["paper", "desk"], default="desk")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--csv", required=True)
    p_bench.set_defaults(func=cmd_bench)

    p_cont = sub.add_parser("container", help="build (and optionally verify) a mismatch container")
    p_cont.add_argument("--in", dest="input", required=True)
    p_cont.add_argument("--k", type=int, default=None)
    p_cont.add_argument("--seed", type=int, default=0)
    p_cont.add_argument("--check", action="store_true")
    p_cont.add_argument("-o", "--output", default=None)
    p_cont.set_defaults(func=cmd_container)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
