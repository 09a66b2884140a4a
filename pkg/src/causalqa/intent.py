"""Structured causal-intent records and their canonical JSON form.

Every stage of the pipeline communicates through the types in this module:
a :class:`CausalQuery` captures what the user asked for (task class plus the
task's attribute slots), and a :class:`ToolResult` captures what an estimator
produced. Both are immutable value records, safe to share across threads.

The canonical JSON layout is fixed: ``causal_problem`` always comes first as
the two-element ``[category, task]`` list, then ``dataset``, then the task's
remaining keys. Scalar slots are single-element lists and condition entries
are two-element ``[name, value]`` arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any

ALL_VARIABLES = "all_variables"
"""Sentinel node name for CGL queries that cover every column of the dataset."""

_IDENTIFIER_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-")


class Category(str, Enum):
    """Top-level causal problem class."""

    CSL = "CSL"
    CEL = "CEL"
    CPL = "CPL"


class Task(str, Enum):
    """The five supported causal tasks. The category is derived, never stored."""

    CGL = "CGL"
    ATE = "ATE"
    HTE = "HTE"
    MA = "MA"
    OPO = "OPO"

    @property
    def category(self) -> Category:
        return _TASK_CATEGORY[self]


_TASK_CATEGORY = {
    Task.CGL: Category.CSL,
    Task.ATE: Category.CEL,
    Task.HTE: Category.CEL,
    Task.MA: Category.CEL,
    Task.OPO: Category.CPL,
}

# Slot requirements per task: (needs_nodes, needs_treatment, needs_response,
# needs_mediator, needs_conditions).
_TASK_SLOTS: dict[Task, tuple[bool, bool, bool, bool, bool]] = {
    Task.CGL: (True, False, False, False, False),
    Task.ATE: (False, True, True, False, False),
    Task.HTE: (False, True, True, False, True),
    Task.MA: (False, True, True, True, False),
    Task.OPO: (False, True, True, False, True),
}


class IntentError(Exception):
    """Base class for intent-schema failures."""


class InvalidQuery(IntentError):
    """Raised when serializing a query that violates its task's slot rules."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class MalformedJson(IntentError):
    """Raised on structurally bad query JSON (including unknown keys)."""


class UnknownTask(IntentError):
    """Raised when causal_problem names an unsupported task or category."""


class MissingRequiredKey(IntentError):
    """Raised when a task-required key is absent from query JSON."""

    def __init__(self, task: Task, key: str):
        self.task = task
        self.key = key
        super().__init__(f"task {task.value} requires key '{key}'")


@dataclass(frozen=True)
class Violation:
    """One validation failure: which slot broke which rule."""

    code: str
    slot: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}({self.slot}): {self.message}"


@dataclass(frozen=True)
class ConditionClause:
    """A subpopulation restriction: one variable pinned to one value.

    The value is numeric when it parses as a number, otherwise the verbatim
    string from the source text.
    """

    variable: str
    value: float | int | str

    def as_pair(self) -> list[Any]:
        return [self.variable, self.value]


@dataclass(frozen=True)
class CausalQuery:
    """The structured intent extracted from one natural-language question."""

    task: Task
    dataset: str
    nodes: tuple[str, ...] = ()
    treatment: str | None = None
    response: str | None = None
    mediator: str | None = None
    conditions: tuple[ConditionClause, ...] = ()


def is_identifier(name: str) -> bool:
    """True for non-empty strings of letters, digits, underscores, hyphens."""
    return bool(name) and all(ch in _IDENTIFIER_CHARS for ch in name)


def coerce_value(raw: Any) -> float | int | str:
    """Normalize a condition value: numeric when parseable, else verbatim."""
    if isinstance(raw, bool):
        return str(raw)
    if isinstance(raw, (int, float)):
        return raw
    text = str(raw).strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def validate_query(q: CausalQuery) -> list[Violation]:
    """Check a query against its task's slot table.

    Returns an empty list iff the query is serializable. Total: never raises.
    """
    violations: list[Violation] = []
    needs_nodes, needs_t, needs_r, needs_m, needs_c = _TASK_SLOTS[q.task]

    if not q.dataset or not q.dataset.endswith(".csv"):
        violations.append(Violation("MissingRequiredKey", "dataset",
                                    f"task {q.task.value} needs a .csv dataset name"))

    def check_scalar(slot: str, value: str | None, required: bool) -> None:
        if required:
            if value is None:
                violations.append(Violation("MissingRequiredKey", slot,
                                            f"task {q.task.value} requires {slot}"))
            elif not is_identifier(value):
                violations.append(Violation("BadIdentifier", slot, f"{value!r} is not an identifier"))
        elif value is not None:
            violations.append(Violation("UnexpectedSlot", slot,
                                        f"task {q.task.value} does not take {slot}"))

    check_scalar("treatment", q.treatment, needs_t)
    check_scalar("response", q.response, needs_r)
    check_scalar("mediator", q.mediator, needs_m)

    if needs_nodes:
        if not q.nodes:
            violations.append(Violation("EmptyNodes", "nodes",
                                        "CGL needs named nodes or the all_variables sentinel"))
        else:
            for node in q.nodes:
                if not is_identifier(node):
                    violations.append(Violation("BadIdentifier", "nodes", f"{node!r} is not an identifier"))
    elif q.nodes:
        violations.append(Violation("UnexpectedSlot", "nodes",
                                    f"task {q.task.value} does not take nodes"))

    if needs_c:
        if not q.conditions:
            violations.append(Violation("MissingRequiredKey", "condition",
                                        f"task {q.task.value} requires at least one condition"))
    elif q.conditions:
        violations.append(Violation("UnexpectedSlot", "condition",
                                    f"task {q.task.value} does not take conditions"))
    for clause in q.conditions:
        if not is_identifier(clause.variable):
            violations.append(Violation("BadIdentifier", "condition",
                                        f"{clause.variable!r} is not an identifier"))
    return violations


def query_to_dict(q: CausalQuery) -> dict[str, Any]:
    """Canonical ordered mapping for a valid query (causal_problem first)."""
    violations = validate_query(q)
    if violations:
        raise InvalidQuery(violations)
    out: dict[str, Any] = {
        "causal_problem": [q.task.category.value, q.task.value],
        "dataset": [q.dataset],
    }
    if q.task is Task.CGL:
        out["nodes"] = list(q.nodes)
        return out
    out["treatment"] = [q.treatment]
    out["response"] = [q.response]
    if q.task is Task.MA:
        out["mediator"] = [q.mediator]
    if q.task in (Task.HTE, Task.OPO):
        out["condition"] = [clause.as_pair() for clause in q.conditions]
    return out


def serialize_query(q: CausalQuery) -> str:
    """Canonical JSON text for a valid query."""
    return json.dumps(query_to_dict(q))


_KNOWN_KEYS = {"causal_problem", "dataset", "nodes", "treatment", "response", "mediator", "condition"}


def parse_query_json(text: str) -> CausalQuery:
    """Parse query JSON back into a :class:`CausalQuery`.

    Unknown keys are rejected; numeric-looking condition values are
    normalized to numbers so that parse(serialize(q)) == q on valid queries.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedJson("query JSON must be an object")

    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise MalformedJson(f"unknown keys: {sorted(unknown)}")

    problem = raw.get("causal_problem")
    if not isinstance(problem, list) or len(problem) != 2:
        raise UnknownTask("causal_problem must be a [category, task] pair")
    category_name, task_name = problem
    try:
        task = Task(task_name)
    except ValueError:
        raise UnknownTask(f"unsupported task {task_name!r}") from None
    if category_name != task.category.value:
        raise UnknownTask(f"task {task.value} belongs to {task.category.value}, not {category_name!r}")

    def scalar(key: str) -> str | None:
        value = raw.get(key)
        if value is None:
            return None
        if isinstance(value, str):
            return value
        if isinstance(value, list) and len(value) == 1 and isinstance(value[0], str):
            return value[0]
        raise MalformedJson(f"key '{key}' must be a single-element list of one name")

    needs_nodes, needs_t, needs_r, needs_m, needs_c = _TASK_SLOTS[task]
    dataset = scalar("dataset")
    if dataset is None:
        raise MissingRequiredKey(task, "dataset")

    for key, needed in (("treatment", needs_t), ("response", needs_r), ("mediator", needs_m)):
        if needed and key not in raw:
            raise MissingRequiredKey(task, key)
        if not needed and key in raw:
            raise MalformedJson(f"task {task.value} does not take key '{key}'")
    if needs_nodes and "nodes" not in raw:
        raise MissingRequiredKey(task, "nodes")
    if not needs_nodes and "nodes" in raw:
        raise MalformedJson(f"task {task.value} does not take key 'nodes'")
    if needs_c and "condition" not in raw:
        raise MissingRequiredKey(task, "condition")
    if not needs_c and "condition" in raw:
        raise MalformedJson(f"task {task.value} does not take key 'condition'")

    nodes: tuple[str, ...] = ()
    if needs_nodes:
        raw_nodes = raw["nodes"]
        if not isinstance(raw_nodes, list) or not all(isinstance(n, str) for n in raw_nodes):
            raise MalformedJson("'nodes' must be a list of names")
        nodes = tuple(raw_nodes)

    conditions: tuple[ConditionClause, ...] = ()
    if needs_c:
        raw_cond = raw["condition"]
        if not isinstance(raw_cond, list):
            raise MalformedJson("'condition' must be a list of [name, value] pairs")
        clauses = []
        for entry in raw_cond:
            if not isinstance(entry, (list, tuple)) or len(entry) != 2 or not isinstance(entry[0], str):
                raise MalformedJson(f"bad condition entry {entry!r}")
            clauses.append(ConditionClause(entry[0], coerce_value(entry[1])))
        conditions = tuple(clauses)

    query = CausalQuery(
        task=task,
        dataset=dataset,
        nodes=nodes,
        treatment=scalar("treatment"),
        response=scalar("response"),
        mediator=scalar("mediator"),
        conditions=conditions,
    )
    violations = validate_query(query)
    if violations:
        first = violations[0]
        if first.code == "MissingRequiredKey":
            raise MissingRequiredKey(task, first.slot)
        raise MalformedJson(str(first))
    return query


# ---------------------------------------------------------------------------
# Estimator outputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CausalGraph:
    """Directed/CPDAG adjacency over named nodes.

    ``adjacency[i][j] == 1`` means an edge i -> j; a symmetric pair of 1s is
    an undirected CPDAG edge. The diagonal is always zero. ``edge_stats``
    optionally carries the independence-test statistic per edge so that
    narration can rank edges by significance.
    """

    nodes: tuple[str, ...]
    adjacency: tuple[tuple[int, ...], ...]
    edge_stats: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if len(self.adjacency) != n or any(len(row) != n for row in self.adjacency):
            raise ValueError("adjacency must be square over the node list")
        if any(self.adjacency[i][i] != 0 for i in range(n)):
            raise ValueError("adjacency has a self-loop")

    def edge_pairs(self) -> list[tuple[int, int]]:
        """Unordered significant pairs (i < j), in row-major order."""
        n = len(self.nodes)
        return [(i, j) for i in range(n) for j in range(i + 1, n)
                if self.adjacency[i][j] or self.adjacency[j][i]]


@dataclass(frozen=True)
class EffectEstimate:
    """A single numeric treatment-effect value (ATE or HTE)."""

    value: float


@dataclass(frozen=True)
class MediationEstimate:
    """Total/direct/indirect decomposition; total == direct + indirect."""

    total: float
    direct: float
    indirect: float

    def __post_init__(self) -> None:
        if abs(self.total - (self.direct + self.indirect)) > 1e-9:
            raise ValueError("mediation triple is not additive")


@dataclass(frozen=True)
class RecommendedAction:
    """The treatment level a policy learner recommends."""

    level: float | int | str


ToolResult = CausalGraph | EffectEstimate | MediationEstimate | RecommendedAction

_RESULT_TYPES: dict[Task, type] = {
    Task.CGL: CausalGraph,
    Task.ATE: EffectEstimate,
    Task.HTE: EffectEstimate,
    Task.MA: MediationEstimate,
    Task.OPO: RecommendedAction,
}


def result_matches_task(task: Task, result: ToolResult) -> bool:
    """True when the result payload is the task's output format."""
    return isinstance(result, _RESULT_TYPES[task])


def result_to_dict(result: ToolResult) -> dict[str, Any]:
    """JSON-friendly view of a ToolResult, tagged by kind."""
    if isinstance(result, CausalGraph):
        return {"kind": "graph", "nodes": list(result.nodes),
                "adjacency": [list(row) for row in result.adjacency]}
    if isinstance(result, EffectEstimate):
        return {"kind": "effect", "value": result.value}
    if isinstance(result, MediationEstimate):
        return {"kind": "mediation", "total": result.total,
                "direct": result.direct, "indirect": result.indirect}
    if isinstance(result, RecommendedAction):
        return {"kind": "action", "level": result.level}
    raise TypeError(f"not a ToolResult: {result!r}")
