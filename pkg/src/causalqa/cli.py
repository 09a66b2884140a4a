"""Command-line surface wiring the full ask -> estimate -> narrate flow plus
the reproduction commands (datagen, bench, eval).

Exit codes: 0 success, 2 interpretation or parameter errors, 3 estimation or
IO errors. Every command is reproducible from (argv, seed); output files are
written atomically (temp file + rename) and contain no timestamps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import datagen, engine, evaluate, narrate
from .intent import InvalidQuery, IntentError, Task, query_to_dict, result_to_dict
from .llm import LlmBackend
from .parsing import InterpretationFailed, ParseContext, interpret
from .tabular import CsvFormatError, read_csv, write_csv_text

EXIT_OK = 0
EXIT_INTERPRET = 2
EXIT_ESTIMATE = 3


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fail(stage: str, message: str, code: int) -> int:
    print(f"error ({stage}): {message}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# ask
# ---------------------------------------------------------------------------

def cmd_ask(args: argparse.Namespace) -> int:
    try:
        dataset = read_csv(args.data)
    except FileNotFoundError:
        return _fail("data loading", f"cannot read {args.data}", EXIT_ESTIMATE)
    except CsvFormatError as exc:
        return _fail("data loading", f"{args.data}: {exc}", EXIT_ESTIMATE)

    backend = LlmBackend(args.llm_endpoint) if args.llm_endpoint else None
    try:
        if backend is not None:
            query = backend.interpret(args.question)
        else:
            query = interpret(args.question, ParseContext(known_columns=dataset.columns))
    except (InterpretationFailed, IntentError) as exc:
        return _fail("interpretation", str(exc), EXIT_INTERPRET)
    except narrate.BackendUnreachable as exc:
        return _fail("interpretation backend", str(exc), EXIT_ESTIMATE)

    try:
        result = engine.dispatch(query, dataset, engine.EngineOptions(alpha=args.alpha))
    except (engine.EngineError, datagen.UnknownConditionVariable, InvalidQuery) as exc:
        return _fail("estimation", str(exc), EXIT_ESTIMATE)

    try:
        interpretation = narrate.narrate(args.question, query, result, backend=backend)
    except narrate.BackendUnreachable as exc:
        return _fail("narration backend", str(exc), EXIT_ESTIMATE)

    if args.json:
        envelope = {
            "intent": query_to_dict(query),
            "result": result_to_dict(result),
            "interpretation": interpretation.text,
        }
        print(json.dumps(envelope, indent=2))
        return EXIT_OK
    if args.trace:
        print("step 1 intent:   " + json.dumps(query_to_dict(query)))
        print("step 2 result:   " + json.dumps(result_to_dict(result)))
        print("step 3 narration:")
    print(interpretation.text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# datagen
# ---------------------------------------------------------------------------

def cmd_datagen(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    task = Task(args.task)
    try:
        if task is Task.CGL:
            data, truth, params = datagen.gen_cgl(args.j, args.n, args.p_mask, rng)
            golden: datagen.GoldenLabel = truth
            edges = sum(sum(row) for row in truth.mask)
            summary = f"graph truth: {edges} directed edges over {args.j} nodes"
        elif task is Task.MA:
            params_m = None
            if args.beta_m is not None:
                sampled = datagen.sample_mediation_params(rng)
                params_m = datagen.MediationParams(beta1=sampled.beta1, beta2=sampled.beta2,
                                                   beta_m=args.beta_m, noise_y=sampled.noise_y,
                                                   noise_m=sampled.noise_m)
            data, _, golden = datagen.gen_mediation(args.n, rng, params=params_m)
            summary = (f"mediation truth: direct={golden.direct:.4f} "
                       f"indirect={golden.indirect:.4f} total={golden.total:.4f}")
        elif task is Task.OPO:
            mdp = datagen.sample_mdp_params(args.j, args.stages, rng)
            data, _ = datagen.gen_opo(args.j, args.n, args.stages, rng, params=mdp)
            golden = datagen.PolicyTruth(params=mdp.reward, mdp=mdp if args.stages > 1 else None)
            summary = f"policy truth: stages={args.stages}, reward model on {args.j} covariates"
        else:
            params_e = datagen.sample_effect_params(args.j, rng)
            data, _ = datagen.gen_effect(args.j, args.n, rng, params=params_e)
            if task is Task.ATE:
                golden = datagen.AteTruth(value=datagen.true_ate(params_e))
                summary = f"ate truth: {golden.value:.4f}"
            else:
                golden = datagen.HteTruth(params=params_e)
                summary = f"hte truth: effect model on {args.j} covariates (see sidecar)"
    except datagen.BadDims as exc:
        return _fail("datagen parameters", str(exc), EXIT_INTERPRET)

    out_dir = Path(args.out)
    name = args.name or f"{task.value.lower()}_synth"
    _atomic_write(out_dir / f"{name}.csv", write_csv_text(data))
    _atomic_write(out_dir / f"{name}.golden.json",
                  json.dumps(datagen.golden_to_dict(golden), indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir / (name + '.csv')} ({data.n_rows} rows)")
    print(summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def cmd_bench(args: argparse.Namespace) -> int:
    try:
        hierarchy = bench_mod.load_hierarchy(args.hierarchy)
    except bench_mod.MalformedHierarchy as exc:
        return _fail("hierarchy", str(exc), EXIT_INTERPRET)
    records = bench_mod.generate_retrieval_bench(args.n_per_task, hierarchy, args.seed)
    out_dir = Path(args.out)
    lines = "".join(bench_mod.retrieval_record_to_json(r) + "\n" for r in records)
    _atomic_write(out_dir / "retrieval_bench.jsonl", lines)
    print(f"wrote {out_dir / 'retrieval_bench.jsonl'} ({len(records)} records)")

    if args.interpret_n > 0:
        subset = bench_mod.interleave_by_task(records)[: args.interpret_n]
        interpret_rng = np.random.default_rng([args.seed, 1000])
        interpret_records = bench_mod.generate_interpret_bench(subset, hierarchy, interpret_rng)
        lines = "".join(bench_mod.interpret_record_to_json(r) + "\n" for r in interpret_records)
        _atomic_write(out_dir / "interpret_bench.jsonl", lines)
        print(f"wrote {out_dir / 'interpret_bench.jsonl'} ({len(interpret_records)} records)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _load_bench(path: Path) -> list[bench_mod.QueryBenchRecord]:
    records = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(bench_mod.retrieval_record_from_json(line))
    return records


def cmd_eval(args: argparse.Namespace) -> int:
    bench_path = Path(args.bench)
    if not bench_path.exists():
        return _fail("eval", f"bench file {bench_path} does not exist", EXIT_ESTIMATE)
    records = _load_bench(bench_path)
    wanted = {Task(t.strip()) for t in args.tasks.split(",")} if args.tasks else set(Task)
    hierarchy = bench_mod.load_hierarchy(args.hierarchy)

    selected: list[bench_mod.QueryBenchRecord] = []
    per_task: dict[Task, int] = {}
    for record in records:
        task = record.golden.task
        if task not in wanted or per_task.get(task, 0) >= args.cases_per_task:
            continue
        per_task[task] = per_task.get(task, 0) + 1
        selected.append(record)

    cases = []
    for index, record in enumerate(selected):
        case_rng = np.random.default_rng([args.seed, 2000 + index])
        cases.append(evaluate.make_eval_case(record, args.n, case_rng, hierarchy))

    options = engine.EngineOptions(alpha=args.alpha)

    def run_case(case: evaluate.EvalCase):
        query = interpret(case.record.question,
                          ParseContext(known_columns=case.dataset.columns))
        result = engine.dispatch(query, case.dataset, options)
        interpretation = narrate.narrate(case.record.question, query, result)
        return query, result, interpretation

    report = evaluate.end_to_end(cases, run_case)
    out_dir = Path(args.out)
    _atomic_write(out_dir / "report.json", evaluate.report_to_json(report))
    table = evaluate.format_report_table(report)
    _atomic_write(out_dir / "report.txt", table)
    print(table, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalqa",
        description="Causal question answering over CSV tables: interpret the "
                    "question, run the matching estimator, narrate the result.")
    sub = parser.add_subparsers(dest="command", required=True)

    ask = sub.add_parser("ask", help="answer one causal question against a CSV file")
    ask.add_argument("question", help="natural-language causal question")
    ask.add_argument("--data", required=True, help="path to the CSV table")
    ask.add_argument("--alpha", type=float, default=0.01, help="graph-learning test level")
    ask.add_argument("--trace", action="store_true", help="print the intent JSON and raw result")
    ask.add_argument("--json", action="store_true", help="machine-readable output envelope")
    ask.add_argument("--llm-endpoint", default=None,
                     help="optional HTTP backend for parsing and narration")
    ask.set_defaults(fn=cmd_ask)

    gen = sub.add_parser("datagen", help="generate a synthetic dataset with golden labels")
    gen.add_argument("--task", required=True, choices=[t.value for t in Task])
    gen.add_argument("--n", type=int, default=2000, help="number of rows")
    gen.add_argument("--j", type=int, default=5, help="covariate/node count")
    gen.add_argument("--stages", type=int, default=1, help="decision stages (OPO only)")
    gen.add_argument("--p-mask", type=float, default=0.5, help="edge mask probability (CGL)")
    gen.add_argument("--beta-m", type=float, default=None, help="mediation path override (MA)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=".", help="output directory")
    gen.add_argument("--name", default=None, help="output file stem")
    gen.set_defaults(fn=cmd_datagen)

    bench_p = sub.add_parser("bench", help="generate the question/JSON benchmark corpora")
    bench_p.add_argument("--n-per-task", type=int, default=300)
    bench_p.add_argument("--interpret-n", type=int, default=400,
                         help="interpretation records to derive (0 to skip)")
    bench_p.add_argument("--seed", type=int, default=0)
    bench_p.add_argument("--out", default=".", help="output directory")
    bench_p.add_argument("--hierarchy", default=None, help="topic hierarchy JSON (default: shipped)")
    bench_p.set_defaults(fn=cmd_bench)

    ev = sub.add_parser("eval", help="run the end-to-end evaluation over a bench file")
    ev.add_argument("--bench", required=True, help="retrieval bench JSONL path")
    ev.add_argument("--out", default=".", help="output directory for report files")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--n", type=int, default=10000, help="rows per generated dataset")
    ev.add_argument("--alpha", type=float, default=0.01)
    ev.add_argument("--cases-per-task", type=int, default=30)
    ev.add_argument("--tasks", default=None, help="comma-separated task subset, e.g. ATE,HTE")
    ev.add_argument("--hierarchy", default=None, help="topic hierarchy JSON (default: shipped)")
    ev.set_defaults(fn=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
