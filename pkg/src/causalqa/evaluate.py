"""Evaluation protocols: key-level extraction accuracy and end-to-end rates.

Key accuracy compares parsed queries against golden queries: the causal task
and dataset need exact matches, every other key is judged by soft match
(token-boundary substring containment in either direction after lowercasing
and underscore-to-space normalization), and conditions additionally need the
value to agree.

The end-to-end run scores each case three ways: pass (the pipeline produced
an interpretation), relevance (pass and the parsed task class matches the
golden one; judged on the pipeline's internal task record, not the prose),
and win (relevance and the numeric result matches the analytic golden label:
effects within max(0.1, 5% of truth), mediation on all three values, the
recommended action equal to the golden rule's action, and CGL skeleton
F1 >= 0.8). win <= relevance <= pass holds per task by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bench import TASK_ORDER, QueryBenchRecord, TopicHierarchy
from .datagen import (AteTruth, GoldenLabel, GraphTruth, HteTruth, MediationTruth,
                      PolicyTruth, gen_cgl, gen_effect, gen_mediation,
                      optimal_first_action, optimal_single_stage_action,
                      sample_effect_params, true_ate, true_hte)
from .intent import (ALL_VARIABLES, CausalGraph, CausalQuery, EffectEstimate,
                     MediationEstimate, RecommendedAction, Task, ToolResult)
from .narrate import Interpretation
from .tabular import TabularDataset


class LengthMismatch(Exception):
    pass


EFFECT_KEYS = ("causal_task", "dataset", "nodes", "treatment", "response", "mediator", "condition")


def _normalize(identifier: str) -> list[str]:
    return identifier.lower().replace("_", " ").strip().split()


def soft_match(predicted: str, gold: str) -> bool:
    """Token-boundary substring containment in either direction."""
    a, b = _normalize(predicted), _normalize(gold)
    if not a or not b:
        return False

    def contains(longer: list[str], shorter: list[str]) -> bool:
        k = len(shorter)
        return any(longer[i:i + k] == shorter for i in range(len(longer) - k + 1))

    return contains(a, b) or contains(b, a)


def _condition_match(predicted: CausalQuery, gold: CausalQuery) -> bool:
    for gold_clause in gold.conditions:
        hit = False
        for pred_clause in predicted.conditions:
            if not soft_match(pred_clause.variable, gold_clause.variable):
                continue
            gv, pv = gold_clause.value, pred_clause.value
            if isinstance(gv, (int, float)) and isinstance(pv, (int, float)):
                hit = abs(float(gv) - float(pv)) <= 1e-9
            else:
                hit = str(gv) == str(pv)
            if hit:
                break
        if not hit:
            return False
    return True


def _key_correct(key: str, predicted: CausalQuery | None, gold: CausalQuery) -> bool:
    if predicted is None:
        return False
    if key == "causal_task":
        return predicted.task == gold.task
    if key == "dataset":
        return predicted.dataset == gold.dataset
    if key == "nodes":
        return all(any(soft_match(p, g) for p in predicted.nodes) for g in gold.nodes)
    if key == "condition":
        return _condition_match(predicted, gold)
    pred_value = getattr(predicted, key)
    gold_value = getattr(gold, key)
    return pred_value is not None and soft_match(pred_value, gold_value)


def _gold_has_key(key: str, gold: CausalQuery) -> bool:
    if key in ("causal_task", "dataset"):
        return True
    if key == "nodes":
        return bool(gold.nodes)
    if key == "condition":
        return bool(gold.conditions)
    return getattr(gold, key) is not None


def key_accuracy(predictions: list[CausalQuery | None],
                 golds: list[CausalQuery]) -> dict[str, float]:
    """Per-key accuracies over the cases whose golden query defines the key."""
    if len(predictions) != len(golds):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(golds)} golds")
    out: dict[str, float] = {}
    for key in EFFECT_KEYS:
        correct = total = 0
        for predicted, gold in zip(predictions, golds):
            if not _gold_has_key(key, gold):
                continue
            total += 1
            correct += _key_correct(key, predicted, gold)
        if total:
            out[key] = correct / total
    return out


# ---------------------------------------------------------------------------
# End-to-end harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalCase:
    """One bench record with its generated dataset and analytic truth."""

    record: QueryBenchRecord
    dataset: TabularDataset
    truth: GoldenLabel
    dataset_path: str = ""


@dataclass(frozen=True)
class CaseTrace:
    task: str
    question: str
    passed: bool
    relevant: bool
    won: bool
    detail: str


@dataclass
class TaskRates:
    n: int = 0
    passed: int = 0
    relevant: int = 0
    won: int = 0

    @property
    def pass_rate(self) -> float:
        return self.passed / self.n if self.n else 0.0

    @property
    def relevance_rate(self) -> float:
        return self.relevant / self.n if self.n else 0.0

    @property
    def win_rate(self) -> float:
        return self.won / self.n if self.n else 0.0


@dataclass
class EvalReport:
    rates: dict[Task, TaskRates] = field(default_factory=dict)
    key_accuracies: dict[str, float] = field(default_factory=dict)
    traces: list[CaseTrace] = field(default_factory=list)


def _effect_tolerance(truth: float) -> float:
    return max(0.1, 0.05 * abs(truth))


def skeleton_f1(predicted: CausalGraph, truth: GraphTruth) -> float:
    """F1 over unordered edge pairs, matched by node name; 1.0 when both empty."""
    pred_pairs = {frozenset((predicted.nodes[i], predicted.nodes[j]))
                  for i, j in predicted.edge_pairs()}
    true_pairs = set()
    n = len(truth.nodes)
    for i in range(n):
        for j in range(i + 1, n):
            if truth.mask[i][j] or truth.mask[j][i]:
                true_pairs.add(frozenset((truth.nodes[i], truth.nodes[j])))
    if not pred_pairs and not true_pairs:
        return 1.0
    tp = len(pred_pairs & true_pairs)
    if tp == 0:
        return 0.0
    precision = tp / len(pred_pairs)
    recall = tp / len(true_pairs)
    return 2 * precision * recall / (precision + recall)


def _result_wins(result: ToolResult, case: EvalCase) -> tuple[bool, str]:
    truth = case.truth
    golden = case.record.golden
    if isinstance(truth, AteTruth):
        if not isinstance(result, EffectEstimate):
            return False, "wrong result kind"
        err = abs(result.value - truth.value)
        return err <= _effect_tolerance(truth.value), f"ate err={err:.4f} truth={truth.value:.4f}"
    if isinstance(truth, HteTruth):
        if not isinstance(result, EffectEstimate):
            return False, "wrong result kind"
        target = true_hte(truth.params, {c.variable: c.value for c in golden.conditions})
        err = abs(result.value - target)
        return err <= _effect_tolerance(target), f"hte err={err:.4f} truth={target:.4f}"
    if isinstance(truth, MediationTruth):
        if not isinstance(result, MediationEstimate):
            return False, "wrong result kind"
        checks = [(result.direct, truth.direct), (result.indirect, truth.indirect),
                  (result.total, truth.total)]
        ok = all(abs(est - tru) <= _effect_tolerance(tru) for est, tru in checks)
        return ok, "mediation triple " + ("within" if ok else "outside") + " tolerance"
    if isinstance(truth, PolicyTruth):
        if not isinstance(result, RecommendedAction):
            return False, "wrong result kind"
        conditions = {c.variable: c.value for c in golden.conditions}
        if truth.mdp is not None and truth.mdp.t_stages > 1:
            point = np.array(truth.params.mu, dtype=float)
            index = {n: i for i, n in enumerate(truth.params.feature_names)}
            for name, value in conditions.items():
                point[index[name]] = float(value)
            best = optimal_first_action(truth.mdp, point)
        else:
            best = optimal_single_stage_action(truth.params, conditions)
        return result.level == best, f"action={result.level} best={best}"
    if isinstance(truth, GraphTruth):
        if not isinstance(result, CausalGraph):
            return False, "wrong result kind"
        f1 = skeleton_f1(result, truth)
        return f1 >= 0.8, f"skeleton f1={f1:.3f}"
    return False, "unknown truth kind"


def _fill_names(record: QueryBenchRecord, hierarchy: TopicHierarchy | None,
                used: set[str], count: int) -> list[str]:
    """Unused variable names from the record's topic, padded with x1, x2, ..."""
    pool: list[str] = []
    if hierarchy is not None:
        topic = hierarchy.topic_named(record.golden.dataset.removesuffix(".csv"))
        if topic is not None:
            pool = [v.name for v in topic.variables]
    names = [n for n in pool if n not in used]
    k = 1
    while len(names) < count:
        candidate = f"x{k}"
        if candidate not in used and candidate not in names:
            names.append(candidate)
        k += 1
    return names[:count]


def make_eval_case(record: QueryBenchRecord, n_rows: int, rng: np.random.Generator,
                   hierarchy: TopicHierarchy | None = None) -> EvalCase:
    """Generate the record's dataset and analytic truth for an end-to-end run."""
    golden = record.golden
    task = golden.task
    if task is Task.CGL:
        if list(golden.nodes) == [ALL_VARIABLES]:
            names = tuple(_fill_names(record, hierarchy, set(), 5))
        else:
            names = tuple(golden.nodes)
        data, truth, _ = gen_cgl(len(names), n_rows, 0.5, rng, names=names)
        return EvalCase(record=record, dataset=data, truth=truth)
    if task is Task.MA:
        data, _, truth = gen_mediation(n_rows, rng, treatment_name=golden.treatment,
                                       mediator_name=golden.mediator,
                                       response_name=golden.response)
        return EvalCase(record=record, dataset=data, truth=truth)

    used = {golden.treatment, golden.response}
    cond_names = [c.variable for c in golden.conditions]
    used.update(cond_names)
    extras = _fill_names(record, hierarchy, used, max(0, 3 - len(cond_names)))
    feature_names = tuple(cond_names + extras) if cond_names else tuple(extras)
    params = sample_effect_params(len(feature_names), rng, feature_names)
    data, _ = gen_effect(len(feature_names), n_rows, rng, params=params,
                         treatment_name=golden.treatment, response_name=golden.response)
    if task is Task.ATE:
        truth: GoldenLabel = AteTruth(value=true_ate(params))
    elif task is Task.HTE:
        truth = HteTruth(params=params)
    else:
        truth = PolicyTruth(params=params)
    return EvalCase(record=record, dataset=data, truth=truth)


RunCase = Callable[[EvalCase], tuple[CausalQuery, ToolResult, Interpretation]]


def end_to_end(cases: list[EvalCase], run_case: RunCase) -> EvalReport:
    """Run the pipeline over every case and aggregate pass/relevance/win rates.

    Failures are counted, never raised.
    """
    report = EvalReport(rates={task: TaskRates() for task in TASK_ORDER})
    predictions: list[CausalQuery | None] = []
    golds: list[CausalQuery] = []
    for case in cases:
        golden = case.record.golden
        rates = report.rates[golden.task]
        rates.n += 1
        golds.append(golden)
        try:
            predicted, result, interpretation = run_case(case)
        except Exception as exc:   # noqa: BLE001 - failures become counted outcomes
            predictions.append(None)
            report.traces.append(CaseTrace(golden.task.value, case.record.question,
                                           False, False, False, f"{type(exc).__name__}: {exc}"))
            continue
        predictions.append(predicted)
        rates.passed += 1
        relevant = predicted.task == golden.task
        won = False
        detail = "irrelevant task"
        if relevant:
            rates.relevant += 1
            won, detail = _result_wins(result, case)
            if won:
                rates.won += 1
        report.traces.append(CaseTrace(golden.task.value, case.record.question,
                                       True, relevant, won, detail))
    report.key_accuracies = key_accuracy(predictions, golds)
    return report


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------

def report_to_dict(report: EvalReport) -> dict:
    return {
        "rates": {
            task.value: {
                "n": r.n,
                "pass_rate": round(r.pass_rate, 4),
                "relevance_rate": round(r.relevance_rate, 4),
                "win_rate": round(r.win_rate, 4),
            }
            for task, r in report.rates.items() if r.n
        },
        "key_accuracy": {k: round(v, 4) for k, v in report.key_accuracies.items()},
        "traces": [
            {"task": t.task, "question": t.question, "pass": t.passed,
             "relevance": t.relevant, "win": t.won, "detail": t.detail}
            for t in report.traces
        ],
    }


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def format_report_table(report: EvalReport) -> str:
    """Fixed-width table with one column per task, mirroring the usual layout."""
    tasks = [task for task in TASK_ORDER if report.rates.get(task) and report.rates[task].n]
    header = f"{'':<16}" + "".join(f"{task.value:>8}" for task in tasks)
    lines = [header]
    for label, attr in (("Pass Rate", "pass_rate"), ("Relevance Rate", "relevance_rate"),
                        ("Win Rate", "win_rate")):
        row = f"{label:<16}" + "".join(
            f"{getattr(report.rates[task], attr):>8.2f}" for task in tasks)
        lines.append(row)
    lines.append("")
    lines.append("Key accuracy:")
    for key, value in report.key_accuracies.items():
        lines.append(f"  {key:<12} {value:.3f}")
    return "\n".join(lines) + "\n"
