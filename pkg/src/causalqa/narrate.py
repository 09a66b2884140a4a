"""Plain-language narration of estimator outputs.

The one-sentence summaries instantiate fixed templates per task (effect
values formatted to two decimals). ``narrate`` appends a completeness
sentence naming the dataset and method, and an optional LLM backend can
rewrite the text; LLM replies are linted against the rubric and fall back to
the template text when any flag fires.

Rubric coverage note: the lint checks hallucination (correlation wording or
numbers absent from the result), incompleteness (missing dataset, method,
result values, or query variables), and non-fluency (repeated sentences,
more than six sentences). Flagging unexplained variable-name soup is not
automatable without a lexicon and is intentionally out of scope.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .engine import METHOD_DISPLAY_NAMES, MethodId
from .intent import (ALL_VARIABLES, CausalGraph, CausalQuery, EffectEstimate,
                     MediationEstimate, RecommendedAction, Task, ToolResult,
                     result_matches_task)


class FormatMismatch(Exception):
    def __init__(self, task: Task, result: ToolResult):
        super().__init__(f"result {type(result).__name__} does not fit task {task.value}")


class BackendUnreachable(Exception):
    pass


@dataclass(frozen=True)
class NarrationContext:
    question: str
    query: CausalQuery
    method: MethodId
    result: ToolResult


@dataclass(frozen=True)
class RubricReport:
    hallucination_flags: tuple[str, ...] = ()
    incompleteness_flags: tuple[str, ...] = ()
    fluency_flags: tuple[str, ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.hallucination_flags or self.incompleteness_flags or self.fluency_flags)


@dataclass(frozen=True)
class Interpretation:
    text: str
    source: str                      # "template" or "llm"
    context: NarrationContext
    fallback_flags: RubricReport | None = None


def _fmt_effect(value: float) -> str:
    return f"{value:.2f}"


def _fmt_condition_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def _fmt_level(level) -> str:
    if isinstance(level, float):
        return str(int(level)) if level.is_integer() else f"{level:.2f}"
    return str(level)


def _conditions_text(query: CausalQuery) -> str:
    return " and ".join(f"{c.variable} = {_fmt_condition_value(c.value)}" for c in query.conditions)


def _ranked_pairs(graph: CausalGraph) -> list[tuple[int, int]]:
    pairs = graph.edge_pairs()
    if graph.edge_stats is None:
        return pairs
    strength = {p: max(graph.edge_stats[p[0]][p[1]], graph.edge_stats[p[1]][p[0]]) for p in pairs}
    return sorted(pairs, key=lambda p: (-strength[p], p))


def _pair_direction(graph: CausalGraph, i: int, j: int) -> tuple[str, str]:
    forward = graph.adjacency[i][j]
    backward = graph.adjacency[j][i]
    if forward and not backward:
        return graph.nodes[i], graph.nodes[j]
    if backward and not forward:
        return graph.nodes[j], graph.nodes[i]
    return graph.nodes[i], graph.nodes[j]   # undirected: narrate low index -> high


def template_summary(task: Task, result: ToolResult, query: CausalQuery) -> str:
    """The task's fixed one-sentence summary of the result."""
    if not result_matches_task(task, result):
        raise FormatMismatch(task, result)
    if task is Task.ATE:
        assert isinstance(result, EffectEstimate)
        return (f"The average treatment effect of setting {query.treatment} as 1 on the "
                f"{query.response} is {_fmt_effect(result.value)}.")
    if task is Task.HTE:
        assert isinstance(result, EffectEstimate)
        return (f"The heterogeneous treatment effect of setting {query.treatment} as 1 on the "
                f"{query.response} is {_fmt_effect(result.value)} for those having "
                f"{_conditions_text(query)}.")
    if task is Task.MA:
        assert isinstance(result, MediationEstimate)
        return (f"The overall impact of the {query.treatment} on the {query.response} is "
                f"{_fmt_effect(result.total)}. This comprises a direct effect of "
                f"{_fmt_effect(result.direct)} from the {query.treatment} to the "
                f"{query.response}, and an indirect effect of {_fmt_effect(result.indirect)}, "
                f"mediated by the {query.mediator}.")
    if task is Task.OPO:
        assert isinstance(result, RecommendedAction)
        return (f"The best action of the {query.treatment} is {query.treatment} = "
                f"{_fmt_level(result.level)}.")
    assert isinstance(result, CausalGraph)
    ranked = _ranked_pairs(result)
    top = ranked[: min(len(ranked), 3)]
    text = f"There are {len(top)} pairs of significant causal relationships."
    for i, j in top:
        src, dst = _pair_direction(result, i, j)
        text += f" The {src} would causally influence the {dst}."
    return text


# ---------------------------------------------------------------------------
# Rubric lint
# ---------------------------------------------------------------------------

_BANNED_RE = re.compile(r"correlat|associat", re.IGNORECASE)
_NUMBER_RE = re.compile(r"(?<![A-Za-z0-9_.])[-+]?\d+(?:\.\d+)?(?![A-Za-z0-9_])")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")

METHOD_KEYPHRASES: dict[MethodId, str] = {
    MethodId.PC: "pc algorithm",
    MethodId.DoublyRobust: "doubly robust",
    MethodId.SLearner: "s-learner",
    MethodId.MediationPoC: "mediation",
    MethodId.QLearning: "q-learning",
}


def _result_numbers(result: ToolResult) -> list[float]:
    if isinstance(result, EffectEstimate):
        return [result.value]
    if isinstance(result, MediationEstimate):
        return [result.total, result.direct, result.indirect]
    if isinstance(result, RecommendedAction):
        try:
            return [float(result.level)]
        except (TypeError, ValueError):
            return []
    if isinstance(result, CausalGraph):
        detected = len(result.edge_pairs())
        return [float(detected), float(min(detected, 3))]
    return []


def _result_value_strings(result: ToolResult) -> list[str]:
    if isinstance(result, EffectEstimate):
        return [_fmt_effect(result.value)]
    if isinstance(result, MediationEstimate):
        return [_fmt_effect(result.total), _fmt_effect(result.direct), _fmt_effect(result.indirect)]
    if isinstance(result, RecommendedAction):
        return [_fmt_level(result.level)]
    if isinstance(result, CausalGraph):
        return [str(min(len(result.edge_pairs()), 3))]
    return []


def _query_variables(query: CausalQuery) -> list[str]:
    names = [n for n in query.nodes if n != ALL_VARIABLES]
    for slot in (query.treatment, query.response, query.mediator):
        if slot:
            names.append(slot)
    names.extend(c.variable for c in query.conditions)
    return names


def lint(text: str, context: NarrationContext) -> RubricReport:
    """Automated rubric check; an empty report means all checks pass."""
    hallucination: list[str] = []
    incompleteness: list[str] = []
    fluency: list[str] = []
    lowered = text.lower()

    banned = _BANNED_RE.search(text)
    if banned:
        hallucination.append(f"uses non-causal wording: {banned.group(0)!r}")

    allowed = set(_result_numbers(context.result)) | {1.0}
    for clause in context.query.conditions:
        if isinstance(clause.value, (int, float)):
            allowed.add(float(clause.value))
    for match in _NUMBER_RE.finditer(text):
        value = float(match.group(0))
        if not any(abs(value - a) <= 0.0051 for a in allowed):
            hallucination.append(f"number {match.group(0)} is not part of the result")

    if context.query.dataset.lower() not in lowered:
        incompleteness.append("dataset name missing")
    if METHOD_KEYPHRASES[context.method] not in lowered:
        incompleteness.append("method name missing")
    for value_text in _result_value_strings(context.result):
        if value_text.lower() not in lowered:
            incompleteness.append(f"result value {value_text} missing")
    for name in _query_variables(context.query):
        if name.lower() not in lowered:
            incompleteness.append(f"variable {name} missing")

    sentences = [s.strip().lower() for s in _SENTENCE_SPLIT_RE.split(text.strip()) if s.strip()]
    normalized = [re.sub(r"\s+", " ", s) for s in sentences]
    if len(normalized) != len(set(normalized)):
        fluency.append("a sentence is repeated verbatim")
    if len(normalized) > 6:
        fluency.append(f"too long: {len(normalized)} sentences")

    return RubricReport(tuple(hallucination), tuple(incompleteness), tuple(fluency))


# ---------------------------------------------------------------------------
# LLM prompt and narration entry point
# ---------------------------------------------------------------------------

_PROMPT = """\
(A) is a list of information that includes i) the original causal problem, ii) the class identification of the causal problem, iii) the used method, and iv) the outcomes.
Interpret the results in (A) in response to the original causal problem, using neutral language to paraphrase it more fluently and engagingly.
The output summary is (I)
Guidelines:
1: (I) must concentrate on interpreting the result provided in (A) in response to the problem.
2: (I) must include all the results, methods, and dataset name in (A).
3: (I) may include jargon from (A), but it should not include any other technical terms not mentioned in (A).
4: The problem in (A) is a causal problem, thus (I) should not interpret the results as correlation or association.
5: (I) should use a diversified sentence structure that is also reader-friendly and concise, rather than listing information one by one.
6: Instead of including the problems, (I) should use the original problem to develop a more informative interpretation of the result.
7: (I) has to avoid using strong qualifiers such as 'significant'.
8: (I) has to be {n_sentences} sentences or less long, with no repetition of contents.
9: (I) must not comment on the results.
(A):
i) original causal problem: {query}
ii) class identification of the causal problem: {problem}
iii) used method: {method}
iv) outcomes: {function_out}
(I):
"""


def build_interpretation_prompt(question: str, query: CausalQuery, method: MethodId,
                                result: ToolResult, n_sentences: int = 4) -> str:
    """The rewriting prompt with the four context slots filled."""
    problem = f"['{query.task.category.value}', '{query.task.value}']"
    return _PROMPT.format(
        n_sentences=n_sentences,
        query=question,
        problem=problem,
        method=METHOD_DISPLAY_NAMES[method],
        function_out=template_summary(query.task, result, query),
    )


def _join_names(names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def _completeness_sentence(query: CausalQuery, method: MethodId) -> str:
    display = METHOD_DISPLAY_NAMES[method]
    if query.task is Task.CGL and list(query.nodes) != [ALL_VARIABLES]:
        return (f"This result was obtained by applying {display} to {query.dataset}, "
                f"examining {_join_names(list(query.nodes))}.")
    if query.task is Task.OPO:
        return (f"This recommendation for the {query.response} given {_conditions_text(query)} "
                f"was obtained by applying {display} to {query.dataset}.")
    return f"This result was obtained by applying {display} to {query.dataset}."


def template_narration(question: str, query: CausalQuery, result: ToolResult,
                       method: MethodId | None = None) -> Interpretation:
    from .engine import method_for_task
    method = method or method_for_task(query.task)
    text = template_summary(query.task, result, query) + " " + _completeness_sentence(query, method)
    context = NarrationContext(question=question, query=query, method=method, result=result)
    return Interpretation(text=text, source="template", context=context)


def narrate(question: str, query: CausalQuery, result: ToolResult,
            backend=None, method: MethodId | None = None) -> Interpretation:
    """Final-stage narration.

    With no backend this is the deterministic template path. With an LLM
    backend, the reply is linted and any rubric flag triggers a fall back to
    the template text, recording the flags.
    """
    template = template_narration(question, query, result, method)
    if backend is None:
        return template
    prompt = build_interpretation_prompt(question, query, template.context.method, result)
    reply = backend.generate(prompt)
    report = lint(reply, template.context)
    if report.empty:
        return Interpretation(text=reply, source="llm", context=template.context)
    return Interpretation(text=template.text, source="template",
                          context=template.context, fallback_flags=report)
