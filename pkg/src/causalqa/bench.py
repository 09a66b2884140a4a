"""Benchmark forges: question/JSON pairs and interpretation records.

Construction is output-first: sample a golden query from the topic hierarchy
(variables always drawn within one topic), then render it into a question by
one of the hand-written templates with light synonym jitter. Rendered text
always embeds every slot value verbatim and never uses the words
"correlation" or "association", so the corpus round-trips through the parser.

Per-task randomness is split from the root seed as ``default_rng([seed,
task_index])`` with tasks ordered CGL, ATE, HTE, MA, OPO; generation is a
pure function of (seed, hierarchy, n_per_task).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .engine import TASK_METHODS, MethodId
from .intent import (ALL_VARIABLES, CausalGraph, CausalQuery, ConditionClause,
                     EffectEstimate, MediationEstimate, RecommendedAction, Task,
                     ToolResult, is_identifier, parse_query_json, query_to_dict,
                     result_to_dict, validate_query)
from .narrate import template_summary

TASK_ORDER = (Task.CGL, Task.ATE, Task.HTE, Task.MA, Task.OPO)


class MalformedHierarchy(Exception):
    pass


class UnknownTemplate(Exception):
    def __init__(self, task: Task, template_id: int):
        super().__init__(f"task {task.value} has no template {template_id}")


@dataclass(frozen=True)
class TopicVariable:
    name: str
    vtype: str   # "discrete" or "continuous"


@dataclass(frozen=True)
class TopicNode:
    name: str
    variables: tuple[TopicVariable, ...]


@dataclass(frozen=True)
class TopicHierarchy:
    topics: tuple[TopicNode, ...]

    def topic_named(self, name: str) -> TopicNode | None:
        for topic in self.topics:
            if topic.name == name:
                return topic
        return None


@dataclass(frozen=True)
class QueryBenchRecord:
    question: str
    golden: CausalQuery
    template_id: int
    seed: int


@dataclass(frozen=True)
class InterpretBenchRecord:
    question: str
    task: Task
    method: MethodId
    function_output: ToolResult
    template_summary: str


# ---------------------------------------------------------------------------
# Hierarchy loading
# ---------------------------------------------------------------------------

def _validate_hierarchy(raw: dict) -> TopicHierarchy:
    topics_raw = raw.get("topics")
    if not isinstance(topics_raw, list) or not topics_raw:
        raise MalformedHierarchy("hierarchy needs a non-empty 'topics' list")
    names: set[str] = set()
    topics: list[TopicNode] = []
    for entry in topics_raw:
        name = entry.get("name")
        if not isinstance(name, str) or not is_identifier(name):
            raise MalformedHierarchy(f"bad topic name {name!r}")
        if name in names:
            raise MalformedHierarchy(f"duplicate topic {name!r}")
        names.add(name)
        variables_raw = entry.get("variables", [])
        if len(variables_raw) < 4:
            raise MalformedHierarchy(f"topic {name!r} needs at least 4 variables")
        var_names: set[str] = set()
        variables: list[TopicVariable] = []
        for var in variables_raw:
            vname, vtype = var.get("name"), var.get("vtype")
            if not isinstance(vname, str) or not is_identifier(vname):
                raise MalformedHierarchy(f"bad variable name {vname!r} in topic {name!r}")
            if vname in var_names:
                raise MalformedHierarchy(f"duplicate variable {vname!r} in topic {name!r}")
            if vtype not in ("discrete", "continuous"):
                raise MalformedHierarchy(f"bad vtype {vtype!r} for {vname!r}")
            var_names.add(vname)
            variables.append(TopicVariable(vname, vtype))
        topics.append(TopicNode(name, tuple(variables)))
    return TopicHierarchy(tuple(topics))


def load_hierarchy(source: str | Path | None = None) -> TopicHierarchy:
    """Load a topic hierarchy file; None loads the curated one shipped here."""
    if source is None:
        text = resources.files("causalqa").joinpath("data/topics.json").read_text("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedHierarchy(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedHierarchy("hierarchy must be a JSON object")
    return _validate_hierarchy(raw)


# ---------------------------------------------------------------------------
# Golden-query sampling
# ---------------------------------------------------------------------------

def _sample_value(variable: TopicVariable, rng: np.random.Generator):
    if variable.vtype == "discrete":
        return int(rng.integers(0, 5))
    return round(float(rng.uniform(0.0, 1.0)), 2)


def sample_query(task: Task, hierarchy: TopicHierarchy, rng: np.random.Generator) -> CausalQuery:
    """Draw one golden query; all variables come from a single topic."""
    topic = hierarchy.topics[int(rng.integers(0, len(hierarchy.topics)))]
    dataset = topic.name + ".csv"
    variables = topic.variables

    if task is Task.CGL:
        if rng.random() < 0.3:
            return CausalQuery(task=task, dataset=dataset, nodes=(ALL_VARIABLES,))
        k = int(rng.integers(2, min(5, len(variables)) + 1))
        picks = rng.choice(len(variables), size=k, replace=False)
        return CausalQuery(task=task, dataset=dataset,
                           nodes=tuple(variables[i].name for i in picks))

    need = 3 if task in (Task.HTE, Task.MA, Task.OPO) else 2
    picks = rng.choice(len(variables), size=need, replace=False)
    chosen = [variables[i] for i in picks]
    if task is Task.ATE:
        return CausalQuery(task=task, dataset=dataset,
                           treatment=chosen[0].name, response=chosen[1].name)
    if task is Task.MA:
        return CausalQuery(task=task, dataset=dataset, treatment=chosen[0].name,
                           response=chosen[1].name, mediator=chosen[2].name)
    condition = ConditionClause(chosen[2].name, _sample_value(chosen[2], rng))
    return CausalQuery(task=task, dataset=dataset, treatment=chosen[0].name,
                       response=chosen[1].name, conditions=(condition,))


# ---------------------------------------------------------------------------
# Question templates
# ---------------------------------------------------------------------------

def _fmt_value(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _join(names: tuple[str, ...]) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


Pick = Callable[[tuple[str, ...]], str]


def _cgl_0(q: CausalQuery, pick: Pick) -> str:
    if list(q.nodes) == [ALL_VARIABLES]:
        return f"Is there a method to discover every direct influence present in the {q.dataset} dataset?"
    if len(q.nodes) == 2:
        return (f"Does the {q.dataset} dataset provide evidence of a direct link between "
                f"{q.nodes[0]} and {q.nodes[1]}?")
    return f"Does the {q.dataset} dataset provide evidence of causal links among {_join(q.nodes)}?"


def _cgl_1(q: CausalQuery, pick: Pick) -> str:
    if list(q.nodes) == [ALL_VARIABLES]:
        return f"How many causal connections can be {pick(('identified', 'found'))} in the {q.dataset} dataset?"
    return f"What are the causal links among {_join(q.nodes)} in dataset {q.dataset}?"


def _cgl_2(q: CausalQuery, pick: Pick) -> str:
    if list(q.nodes) == [ALL_VARIABLES]:
        return f"Learn all causal relationships in {q.dataset}."
    if len(q.nodes) == 2:
        return (f"Are there discernible causal links between {q.nodes[0]} and {q.nodes[1]} "
                f"in the {q.dataset} dataset?")
    return f"Are there discernible causal links among {_join(q.nodes)} in the {q.dataset} dataset?"


def _cgl_3(q: CausalQuery, pick: Pick) -> str:
    if list(q.nodes) == [ALL_VARIABLES]:
        return (f"Within the {q.dataset} dataset, how many instances of one factor directly "
                f"causing another can be observed?")
    if len(q.nodes) == 2:
        return f"Does the {q.dataset} data reveal any direct relationships between {q.nodes[0]} and {q.nodes[1]}?"
    return f"Does the {q.dataset} data reveal any direct relationships among {_join(q.nodes)}?"


def _cgl_4(q: CausalQuery, pick: Pick) -> str:
    if list(q.nodes) == [ALL_VARIABLES]:
        return f"Map out the causal graph for all variables in {q.dataset}."
    return f"In the {q.dataset} dataset, what causal connections can be identified among {_join(q.nodes)}?"


def _ate_0(q: CausalQuery, pick: Pick) -> str:
    return f"What is the {pick(('effect', 'impact'))} of {q.treatment} on {q.response} in {q.dataset}?"


def _ate_1(q: CausalQuery, pick: Pick) -> str:
    return f"How does {q.treatment} in {q.dataset} contribute to changes in {q.response}?"


def _ate_2(q: CausalQuery, pick: Pick) -> str:
    return (f"Using the {q.dataset} dataset, quantify the {pick(('impact', 'effect'))} of "
            f"{q.treatment} on {q.response}.")


def _ate_3(q: CausalQuery, pick: Pick) -> str:
    return f"Does {q.treatment} {pick(('influence', 'affect', 'drive'))} {q.response} in the {q.dataset} dataset?"


def _ate_4(q: CausalQuery, pick: Pick) -> str:
    return f"On average, what change in {q.response} results from {q.treatment}, according to {q.dataset}?"


def _hte_cond(q: CausalQuery) -> tuple[str, str]:
    clause = q.conditions[0]
    return clause.variable, _fmt_value(clause.value)


def _hte_0(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"What {pick(('impact', 'effect'))} does {q.treatment} have on {q.response} "
            f"for those having {c} = {v}, according to {q.dataset}?")


def _hte_1(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"Based on the {q.dataset} dataset, what is the effect of {q.treatment} on "
            f"{q.response} under a group condition where {c} = {v}?")


def _hte_2(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"For the subgroup with {c} = {v}, how does {q.treatment} "
            f"{pick(('affect', 'influence'))} {q.response} in {q.dataset}?")


def _hte_3(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return f"Given that {c} is set at {v}, estimate the effect of {q.treatment} on {q.response} in {q.dataset}."


def _hte_4(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"In {q.dataset}, what is the treatment effect of {q.treatment} on {q.response} "
            f"for those having {c} = {v}?")


def _ma_0(q: CausalQuery, pick: Pick) -> str:
    return (f"Is there evidence in {q.dataset} that the pathway from {q.treatment} to "
            f"{q.response} is mediated by {q.mediator}?")


def _ma_1(q: CausalQuery, pick: Pick) -> str:
    return (f"Does {q.mediator} mediate the {pick(('effect', 'impact'))} of {q.treatment} "
            f"on {q.response} in the {q.dataset} dataset?")


def _ma_2(q: CausalQuery, pick: Pick) -> str:
    return (f"In {q.dataset}, how much of the effect of {q.treatment} on {q.response} is "
            f"{pick(('transmitted', 'channeled'))} through {q.mediator}?")


def _ma_3(q: CausalQuery, pick: Pick) -> str:
    return (f"Assess the direct and indirect effects of {q.treatment} on {q.response}, "
            f"with {q.mediator} as the mediator, using {q.dataset}.")


def _ma_4(q: CausalQuery, pick: Pick) -> str:
    return (f"Using {q.dataset}, determine whether the influence of {q.treatment} on "
            f"{q.response} {pick(('runs', 'flows'))} through {q.mediator}.")


def _opo_0(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"If {c} stands at {v}, what recommendations can be derived from {q.dataset} on "
            f"adjusting {q.treatment} to positively impact {q.response}?")


def _opo_1(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"Given {c} = {v}, what is the best action for {q.treatment} to "
            f"{pick(('maximize', 'optimize'))} {q.response} in {q.dataset}?")


def _opo_2(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"With {c} = {v}, how should {q.treatment} be set to "
            f"{pick(('optimize', 'improve'))} {q.response}, based on {q.dataset}?")


def _opo_3(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"What level of {q.treatment} do you recommend to {pick(('maximize', 'boost'))} "
            f"{q.response} in {q.dataset}, given {c} = {v}?")


def _opo_4(q: CausalQuery, pick: Pick) -> str:
    c, v = _hte_cond(q)
    return (f"When {c} is set at {v}, recommend the optimal level of {q.treatment} to "
            f"improve {q.response} using {q.dataset}.")


TEMPLATES: dict[Task, tuple[Callable[[CausalQuery, Pick], str], ...]] = {
    Task.CGL: (_cgl_0, _cgl_1, _cgl_2, _cgl_3, _cgl_4),
    Task.ATE: (_ate_0, _ate_1, _ate_2, _ate_3, _ate_4),
    Task.HTE: (_hte_0, _hte_1, _hte_2, _hte_3, _hte_4),
    Task.MA: (_ma_0, _ma_1, _ma_2, _ma_3, _ma_4),
    Task.OPO: (_opo_0, _opo_1, _opo_2, _opo_3, _opo_4),
}


def template_count(task: Task) -> int:
    return len(TEMPLATES[task])


def render_question(q: CausalQuery, template_id: int, rng: np.random.Generator) -> str:
    """Instantiate a template; every slot value appears verbatim in the text."""
    if validate_query(q):
        raise ValueError("query does not satisfy its task's slot rules")
    templates = TEMPLATES[q.task]
    if not 0 <= template_id < len(templates):
        raise UnknownTemplate(q.task, template_id)

    def pick(options: tuple[str, ...]) -> str:
        return options[int(rng.integers(0, len(options)))]

    return templates[template_id](q, pick)


# ---------------------------------------------------------------------------
# Corpus generation
# ---------------------------------------------------------------------------

def generate_retrieval_bench(n_per_task: int, hierarchy: TopicHierarchy,
                             seed: int) -> list[QueryBenchRecord]:
    """n_per_task records per task; deterministic in (seed, hierarchy)."""
    if n_per_task < 1:
        raise ValueError("n_per_task must be at least 1")
    records: list[QueryBenchRecord] = []
    for task_index, task in enumerate(TASK_ORDER):
        rng = np.random.default_rng([seed, task_index])
        seen: set[str] = set()
        kept: list[QueryBenchRecord] = []
        attempts = 0
        while len(kept) < n_per_task:
            attempts += 1
            if attempts > n_per_task * 200:
                raise RuntimeError(f"cannot produce {n_per_task} unique {task.value} questions")
            q = sample_query(task, hierarchy, rng)
            template_id = int(rng.integers(0, template_count(task)))
            question = render_question(q, template_id, rng)
            if question in seen:
                continue
            seen.add(question)
            kept.append(QueryBenchRecord(question=question, golden=q,
                                         template_id=template_id, seed=seed))
        records.extend(kept)
    return records


def interleave_by_task(records: list[QueryBenchRecord]) -> list[QueryBenchRecord]:
    """Round-robin across tasks so prefixes of the list stay task-balanced."""
    by_task: dict[Task, list[QueryBenchRecord]] = {}
    for record in records:
        by_task.setdefault(record.golden.task, []).append(record)
    out: list[QueryBenchRecord] = []
    queues = [by_task[t] for t in TASK_ORDER if t in by_task]
    index = 0
    while any(index < len(queue) for queue in queues):
        for queue in queues:
            if index < len(queue):
                out.append(queue[index])
        index += 1
    return out


_FALLBACK_NODES = ("alpha_factor", "beta_factor", "gamma_factor", "delta_factor")


def _sample_result(record: QueryBenchRecord, hierarchy: TopicHierarchy,
                   rng: np.random.Generator) -> ToolResult:
    task = record.golden.task
    if task in (Task.ATE, Task.HTE):
        return EffectEstimate(value=round(float(rng.uniform(-2.0, 2.0)), 2))
    if task is Task.MA:
        direct = round(float(rng.uniform(-2.0, 2.0)), 2)
        indirect = round(float(rng.uniform(-2.0, 2.0)), 2)
        return MediationEstimate(total=direct + indirect, direct=direct, indirect=indirect)
    if task is Task.OPO:
        if rng.random() < 0.8:
            return RecommendedAction(level=int(rng.integers(0, 2)))
        return RecommendedAction(level=str(rng.choice(list("ABCDE"))))
    nodes = record.golden.nodes
    if list(nodes) == [ALL_VARIABLES]:
        topic = hierarchy.topic_named(record.golden.dataset.removesuffix(".csv"))
        pool = tuple(v.name for v in topic.variables) if topic else _FALLBACK_NODES
        k = int(rng.integers(3, min(5, len(pool)) + 1))
        nodes = tuple(pool[i] for i in rng.choice(len(pool), size=k, replace=False))
    pairs = [(i, j) for i in range(len(nodes)) for j in range(i + 1, len(nodes))]
    n_edges = int(rng.integers(1, min(3, len(pairs)) + 1))
    chosen = rng.choice(len(pairs), size=n_edges, replace=False)
    adjacency = [[0] * len(nodes) for _ in range(len(nodes))]
    for index in chosen:
        i, j = pairs[index]
        if int(rng.integers(0, 2)):
            i, j = j, i
        adjacency[i][j] = 1
    return CausalGraph(nodes=nodes, adjacency=tuple(tuple(row) for row in adjacency))


def generate_interpret_bench(records: list[QueryBenchRecord], hierarchy: TopicHierarchy,
                             rng: np.random.Generator) -> list[InterpretBenchRecord]:
    """Pair each record with a sampled method and result, plus its summary.

    The hierarchy supplies node names for CGL records whose golden query uses
    the all_variables sentinel.
    """
    out: list[InterpretBenchRecord] = []
    for record in records:
        task = record.golden.task
        methods = TASK_METHODS[task]
        method = methods[int(rng.integers(0, len(methods)))]
        result = _sample_result(record, hierarchy, rng)
        summary = template_summary(task, result, record.golden)
        out.append(InterpretBenchRecord(question=record.question, task=task, method=method,
                                        function_output=result, template_summary=summary))
    return out


# ---------------------------------------------------------------------------
# JSONL wire format
# ---------------------------------------------------------------------------

def retrieval_record_to_json(record: QueryBenchRecord) -> str:
    return json.dumps({
        "question": record.question,
        "golden": query_to_dict(record.golden),
        "template_id": record.template_id,
        "seed": record.seed,
    })


def retrieval_record_from_json(line: str) -> QueryBenchRecord:
    raw = json.loads(line)
    return QueryBenchRecord(
        question=raw["question"],
        golden=parse_query_json(json.dumps(raw["golden"])),
        template_id=int(raw["template_id"]),
        seed=int(raw["seed"]),
    )


def interpret_record_to_json(record: InterpretBenchRecord) -> str:
    return json.dumps({
        "question": record.question,
        "task": record.task.value,
        "method": record.method.value,
        "function_output": result_to_dict(record.function_output),
        "template_summary": record.template_summary,
    })
