"""Deterministic interpreter for natural-language causal questions.

Stands in for a fine-tuned seq2seq model with three rule layers:

1. a weighted cue table classifies the question into one of the five tasks
   (score = matched weight / (matched weight + 2), ties broken by the fixed
   priority MA > OPO > HTE > CGL > ATE),
2. surface extractors find the dataset token, conditions (``name = value``,
   ``name is set at value``, ``name stands at value``, parenthesized forms),
   and variable mentions (parenthesized snake_case aliases, bare snake_case
   tokens, frame-captured noun phrases, known-column matches),
3. task-specific syntactic frames bind mentions to slots ("effect of _ on _",
   "adjusting _", "mediated by _", ...), falling back to order of appearance.

Everything is pure given (question, context): the same input always produces
the same :class:`~causalqa.intent.CausalQuery`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .intent import (ALL_VARIABLES, CausalQuery, ConditionClause, Task, coerce_value,
                     validate_query)
from .textmatch import fuzzy_match


class InterpretationFailed(Exception):
    """The question could not be turned into a valid query."""


class EmptyQuestion(InterpretationFailed):
    pass


class DatasetNotFound(InterpretationFailed):
    pass


class RoleAmbiguity(Exception):
    """A required slot could not be bound to any mention."""

    def __init__(self, slot: str):
        self.slot = slot
        super().__init__(f"could not bind the '{slot}' slot")


@dataclass(frozen=True)
class ParserConfig:
    fuzzy_threshold: float = 0.25
    score_squash: float = 2.0


@dataclass(frozen=True)
class ParseContext:
    """Optional dataset header plus tuning knobs for the rule layers."""

    known_columns: tuple[str, ...] | None = None
    config: ParserConfig = field(default_factory=ParserConfig)


@dataclass(frozen=True)
class Mention:
    identifier: str
    start: int


# ---------------------------------------------------------------------------
# Cue table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cue:
    pattern: str
    weight: float = 1.0


# Task-specific cues carry weight 2; the generic effect vocabulary of the
# default task (ATE) carries weight 1 so that one specific marker beats any
# pile-up of generic ones.
CUE_TABLE: dict[Task, tuple[Cue, ...]] = {
    Task.MA: (
        Cue(r"mediat", 2.0),
        Cue(r"\bpathway\b", 2.0),
        Cue(r"\bindirect\b", 2.0),
        Cue(r"(?:runs|goes|passes|flows|transmitted|channeled|carried) through", 2.0),
    ),
    Task.OPO: (
        Cue(r"\brecommend", 2.0),
        Cue(r"best (?:action|option|choice|setting)", 2.0),
        Cue(r"\badjust", 2.0),
        Cue(r"\boptimi[sz]e", 2.0),
        Cue(r"\bmaximi[sz]e", 2.0),
        Cue(r"\bminimi[sz]e", 2.0),
        Cue(r"\boptimal\b", 2.0),
        Cue(r"positively impact", 2.0),
        Cue(r"how should .{0,60}? be set", 2.0),
    ),
    Task.HTE: (
        Cue(r"under a group condition", 2.0),
        Cue(r"\bfor those\b", 2.0),
        Cue(r"\bsubgroup\b", 2.0),
        Cue(r"\bsubpopulation\b", 2.0),
        Cue(r"\bheterogeneous\b", 2.0),
    ),
    Task.CGL: (
        Cue(r"causal (?:link|relation|relationship|connection|graph|structure|path)s?", 2.0),
        Cue(r"direct (?:link|influence|relationship)s?", 2.0),
        Cue(r"directly caus", 2.0),
        Cue(r"causally connected", 2.0),
        Cue(r"connections? among", 2.0),
        Cue(r"every direct influence", 2.0),
    ),
    Task.ATE: (
        Cue(r"effects? of"),
        Cue(r"impacts? of"),
        Cue(r"contribute to"),
        Cue(r"influence on"),
        Cue(r"\bimpact\b"),
        Cue(r"\baffects?\b"),
        Cue(r"\binfluences?\b"),
        Cue(r"\bdrives?\b"),
        Cue(r"results? from"),
        Cue(r"\bon average\b"),
        Cue(r"average (?:treatment )?effect"),
        Cue(r"changes? in"),
    ),
}

# Effect vocabulary for the HTE conjunction rule: a condition pattern plus an
# effect cue reads as a subgroup-effect question unless stronger cues disagree.
_EFFECT_WORDS = re.compile(r"effects? |impacts?\b|influenc|affects?\b|treatment effect", re.IGNORECASE)

_TASK_PRIORITY = (Task.MA, Task.OPO, Task.HTE, Task.CGL, Task.ATE)


def classify_task(question: str, ctx: ParseContext | None = None) -> tuple[Task, float]:
    """Argmax task under the cue table; deterministic priority on ties."""
    if not question or not question.strip():
        raise EmptyQuestion("cannot classify an empty question")
    ctx = ctx or ParseContext()
    weights = {task: 0.0 for task in _TASK_PRIORITY}
    for task, cues in CUE_TABLE.items():
        for cue in cues:
            if re.search(cue.pattern, question, re.IGNORECASE):
                weights[task] += cue.weight
    if _find_conditions(question)[0] and _EFFECT_WORDS.search(question):
        weights[Task.HTE] += 2.0
    squash = ctx.config.score_squash
    scores = {task: w / (w + squash) if w > 0 else 0.0 for task, w in weights.items()}
    best = max(scores.values())
    for task in _TASK_PRIORITY:
        if scores[task] >= best - 1e-12:
            return task, scores[task]
    raise AssertionError("unreachable: priority covers every task")


# ---------------------------------------------------------------------------
# Surface extraction
# ---------------------------------------------------------------------------

_DATASET_RE = re.compile(r"\b([A-Za-z0-9][A-Za-z0-9_-]*\.csv)\b")

_PAREN_COND_RE = re.compile(r"\(\s*([A-Za-z][A-Za-z0-9_-]*)\s*=\s*([^()]+?)\s*\)")
_INLINE_COND_RE = re.compile(
    r"\b([A-Za-z][A-Za-z0-9_-]*)\s*=\s*(-?\d+(?:\.\d+)?|[A-Za-z][A-Za-z0-9_.-]*)")
_PHRASE_COND_RE = re.compile(
    r"\b([A-Za-z][A-Za-z0-9_' -]{0,60}?)\s+(?:is set at|is set to|stands at|is at|is fixed at)\s+"
    r"(-?\d+(?:\.\d+)?)", re.IGNORECASE)

_ALIAS_RE = re.compile(r"\(\s*([A-Za-z][A-Za-z0-9-]*(?:_[A-Za-z0-9-]+)+)\s*\)")
_SNAKE_RE = re.compile(r"\b[A-Za-z][A-Za-z0-9-]*(?:_[A-Za-z0-9-]+)+\b")

_ARTICLES = {"the", "a", "an"}
_FILLER_HEADS = {"presence", "effectiveness", "existence", "level", "levels",
                 "amount", "degree", "extent"}
_TRAILING_JUNK = {"dataset", "data", "file", "files", "in", "of", "on", "at",
                  "for", "to", "from", "with", "by"}
_JUNK_WORDS = {"it", "this", "that", "them", "they", "one", "another", "factor",
               "factors", "variable", "value", "values", "evidence", "method",
               "methods", "way", "ways", "analysis", "dataset", "data", "results",
               "result", "all", "everything", "you", "we"}


def extract_dataset(question: str) -> str:
    """First ``identifier.csv`` token in the question."""
    match = _DATASET_RE.search(question)
    if match is None:
        raise DatasetNotFound("no .csv dataset is mentioned")
    return match.group(1)


def _phrase_to_condition_name(raw: str) -> str | None:
    text = raw.lower()
    for marker in (" that ", " where ", " when ", " while ", " if ", ",", ";"):
        if marker in text:
            text = text.rsplit(marker, 1)[1]
    if text.startswith(("that ", "where ", "when ", "if ")):
        text = text.split(" ", 1)[1]
    tokens = [t for t in text.split() if t]
    while len(tokens) > 1 and tokens[0] in _ARTICLES:
        tokens = tokens[1:]
    if not tokens or len(tokens) > 6:
        return None
    name = "_".join(tokens)
    return name if re.fullmatch(r"[A-Za-z][A-Za-z0-9_-]*", name) else None


def _find_conditions(question: str) -> tuple[list[ConditionClause], list[tuple[int, int]]]:
    """All condition matches plus their spans; parenthesized forms win."""
    spans: list[tuple[int, int]] = []
    paren: list[ConditionClause] = []
    for m in _PAREN_COND_RE.finditer(question):
        paren.append(ConditionClause(m.group(1), coerce_value(m.group(2))))
        spans.append(m.span())
    others: list[ConditionClause] = []
    for m in _PHRASE_COND_RE.finditer(question):
        name = _phrase_to_condition_name(m.group(1))
        if name:
            others.append(ConditionClause(name, coerce_value(m.group(2))))
            spans.append(m.span())
    for m in _INLINE_COND_RE.finditer(question):
        if any(start <= m.start() < end for start, end in spans):
            continue
        others.append(ConditionClause(m.group(1), coerce_value(m.group(2))))
        spans.append(m.span())
    chosen = paren if paren else others
    seen: set[str] = set()
    unique = []
    for clause in chosen:
        if clause.variable not in seen:
            seen.add(clause.variable)
            unique.append(clause)
    return unique, spans


def extract_conditions(question: str) -> list[ConditionClause]:
    """Subpopulation clauses in order of appearance, numeric-parsed values."""
    return _find_conditions(question)[0]


def _blank(text: str, spans: list[tuple[int, int]]) -> str:
    chars = list(text)
    for start, end in spans:
        for i in range(start, end):
            chars[i] = " "
    return "".join(chars)


def _masked_text(question: str) -> str:
    spans = [m.span() for m in _DATASET_RE.finditer(question)]
    spans.extend(_find_conditions(question)[1])
    return _blank(question, spans)


def _snap_to_columns(name: str, ctx: ParseContext) -> str:
    if not ctx.known_columns:
        return name
    hits = fuzzy_match(name, list(ctx.known_columns), ctx.config.fuzzy_threshold)
    return hits[0] if len(hits) == 1 else name


def _normalize_phrase(raw: str, ctx: ParseContext) -> str | None:
    """Noun phrase -> snake_case identifier; alias parentheses win outright."""
    alias = _ALIAS_RE.search(raw)
    if alias:
        return alias.group(1)
    text = re.sub(r"[()]", " ", raw).strip().lower()
    text = re.sub(r"[^a-z0-9' _-]", " ", text)
    tokens = [t for t in text.split() if t]
    while len(tokens) > 1 and tokens[0] in _ARTICLES:
        tokens = tokens[1:]
    if len(tokens) > 2 and tokens[0] in _FILLER_HEADS and tokens[1] == "of":
        tokens = tokens[2:]
        while len(tokens) > 1 and tokens[0] in _ARTICLES:
            tokens = tokens[1:]
    while len(tokens) > 1 and tokens[-1] in _TRAILING_JUNK:
        tokens = tokens[:-1]
    if not tokens or len(tokens) > 6:
        return None
    if len(tokens) == 1 and tokens[0] in _JUNK_WORDS:
        return None
    name = "_".join(t.replace("'", "") for t in tokens)
    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_-]*", name):
        return None
    return _snap_to_columns(name, ctx)


# ---------------------------------------------------------------------------
# Syntactic frames
# ---------------------------------------------------------------------------

_P = r"[A-Za-z][A-Za-z0-9 '()_-]{0,90}?"
_TERM = (r"(?=[,.?;:!]|\s+and\b|\s+is\b|\s+in\b|\s+within\b|\s+under\b|\s+given\b"
         r"|\s+when\b|\s+where\b|\s+for\b|\s+based\b|\s+according\b|\s+using\b"
         r"|\s+per\b|\s+across\b|\s+as\b|\s+have\b|\s+would\b|\s+will\b|\s+can\b"
         r"|\s+could\b|\s+do\b|\s+does\b|\s+mediated\b|\s+via\b|\s+over\b|\s+to\b"
         r"|\s+runs\b|\s+flows\b|\s+goes\b|\s+passes\b|\s+through\b|\s+channeled\b"
         r"|\s+transmitted\b|$)")


@dataclass(frozen=True)
class Frame:
    """One syntactic pattern with named groups t, r, m, or nodes."""

    pattern: re.Pattern
    tasks: tuple[Task, ...]


def _frame(regex: str, *tasks: Task) -> Frame:
    return Frame(re.compile(regex, re.IGNORECASE), tasks)


_EFFECT_TASKS = (Task.ATE, Task.HTE, Task.MA, Task.OPO)

FRAMES: tuple[Frame, ...] = (
    # mediator bindings
    _frame(rf"mediated (?:by|through) (?P<m>{_P}){_TERM}", Task.MA),
    _frame(rf"(?:does|do|can|could|whether|if) (?P<m>{_P}) (?:really )?mediates?\b", Task.MA),
    _frame(rf"(?:transmitted|runs|goes|passes|flows) through (?P<m>{_P}){_TERM}", Task.MA),
    _frame(rf"with (?P<m>{_P}) as (?:the |a )?mediator", Task.MA),
    # treatment/response bindings
    _frame(rf"(?:effects?|impacts?|influence) of (?P<t>{_P}) (?:on|upon) (?P<r>{_P}){_TERM}",
           *_EFFECT_TASKS),
    _frame(rf"(?:impact|effect|influence) (?:does|would|will|can|could) (?P<t>{_P}) "
           rf"(?:really )?have (?:on|upon) (?P<r>{_P}){_TERM}", *_EFFECT_TASKS),
    _frame(rf"(?:how )?(?:does|do|did|can|will|would) (?P<t>{_P}) contribute to "
           rf"(?:changes in |shifts in |growth in |movements in )?(?P<r>{_P}){_TERM}",
           *_EFFECT_TASKS),
    _frame(rf"(?:path|pathway|effects?|influence) from (?P<t>{_P}) to (?P<r>{_P}){_TERM}",
           Task.MA, Task.ATE),
    _frame(rf"(?:adjusting|tuning|setting|changing) (?P<t>{_P}) to "
           rf"(?:positively |negatively )?(?:impact|influence|affect|improve|boost|change) "
           rf"(?P<r>{_P}){_TERM}", Task.OPO),
    _frame(rf"(?:does|do|can|could|will|would) (?P<t>{_P}) (?:directly )?"
           rf"(?:influences?|affects?|drives?|causes?|shapes?|alters?|changes?|impacts?) "
           rf"(?P<r>{_P}){_TERM}", *_EFFECT_TASKS),
    _frame(rf"changes? in (?P<r>{_P}) results? from (?P<t>{_P}){_TERM}", Task.ATE, Task.HTE),
    _frame(rf"(?:best|optimal|recommended) (?:action|option|choice|level|value|setting) "
           rf"(?:of|for) (?P<t>{_P}){_TERM}", Task.OPO),
    _frame(rf"(?:what |which )?(?:value|level|setting) of (?P<t>{_P}){_TERM}", Task.OPO),
    _frame(rf"how should (?P<t>{_P}) be (?:set|adjusted|tuned)", Task.OPO),
    _frame(rf"to (?:positively |negatively )?(?:maximi[sz]e|minimi[sz]e|optimi[sz]e|improve"
           rf"|boost|raise|increase|lift|impact) (?P<r>{_P}){_TERM}", Task.OPO),
    _frame(rf"influence on (?P<r>{_P}){_TERM}", Task.ATE, Task.HTE),
    # node bindings
    _frame(rf"between (?P<node_a>{_P}) and (?P<node_b>{_P}){_TERM}", Task.CGL),
    _frame(r"among (?P<nodes>[A-Za-z][A-Za-z0-9_,'() -]{0,160}?)"
           r"(?=[.?;:!]|\s+in\b|\s+within\b|\s+based\b|\s+according\b|\s+using\b|\s+from\b|$)",
           Task.CGL),
)


def _frame_matches(masked: str, ctx: ParseContext,
                   tasks: tuple[Task, ...] | None = None) -> list[tuple[str, str, int]]:
    """(role, identifier, position) triples from every matching frame."""
    out: list[tuple[str, str, int]] = []
    for frame in FRAMES:
        if tasks is not None and not set(frame.tasks) & set(tasks):
            continue
        for m in frame.pattern.finditer(masked):
            for group, raw in m.groupdict().items():
                if raw is None:
                    continue
                if group == "nodes":
                    parts = re.split(r",|\band\b", raw)
                    for part in parts:
                        name = _normalize_phrase(part, ctx)
                        if name:
                            out.append(("node", name, m.start(group)))
                    continue
                role = {"t": "treatment", "r": "response", "m": "mediator",
                        "node_a": "node", "node_b": "node"}[group]
                name = _normalize_phrase(raw, ctx)
                if name:
                    out.append((role, name, m.start(group)))
    return out


def extract_variables(question: str, ctx: ParseContext | None = None) -> list[Mention]:
    """Candidate variable mentions in order of appearance.

    Sources: parenthesized snake_case aliases, bare snake_case tokens,
    frame-captured noun phrases (normalized to snake_case, fuzzy-snapped to
    known columns), and direct known-column scans. Duplicates keep the first
    occurrence.
    """
    ctx = ctx or ParseContext()
    masked = _masked_text(question)
    found: list[Mention] = []
    for m in _ALIAS_RE.finditer(masked):
        found.append(Mention(m.group(1), m.start()))
    for m in _SNAKE_RE.finditer(masked):
        found.append(Mention(m.group(0), m.start()))
    for _, name, pos in _frame_matches(masked, ctx):
        found.append(Mention(name, pos))
    if ctx.known_columns:
        for column in ctx.known_columns:
            spaced = re.escape(column.replace("_", " "))
            hit = re.search(rf"\b{spaced}\b", masked, re.IGNORECASE)
            if hit:
                found.append(Mention(column, hit.start()))
    found.sort(key=lambda mention: mention.start)
    seen: set[str] = set()
    unique: list[Mention] = []
    for mention in found:
        if mention.identifier.lower() in seen:
            continue
        seen.add(mention.identifier.lower())
        unique.append(mention)
    return unique


# ---------------------------------------------------------------------------
# Role assignment
# ---------------------------------------------------------------------------

def assign_roles(task: Task, variables: list[Mention], question: str,
                 ctx: ParseContext | None = None) -> CausalQuery:
    """Bind ordered mentions to the task's slots.

    Frame bindings win; anything left unbound is filled in order of
    appearance, skipping condition variables.
    """
    ctx = ctx or ParseContext()
    conditions = tuple(extract_conditions(question))
    cond_names = {c.variable.lower() for c in conditions}
    masked = _masked_text(question)
    dataset = extract_dataset(question)

    if task is Task.CGL:
        nodes = [v.identifier for v in variables if v.identifier.lower() not in cond_names]
        if not nodes or nodes == [ALL_VARIABLES]:
            nodes = [ALL_VARIABLES]
        return CausalQuery(task=task, dataset=dataset, nodes=tuple(nodes))

    bindings: dict[str, str] = {}
    for role, name, _ in _frame_matches(masked, ctx, tasks=(task,)):
        if name.lower() in cond_names:
            continue
        bindings.setdefault(role, name)

    used = {n.lower() for n in bindings.values()} | cond_names
    pool = [v.identifier for v in variables if v.identifier.lower() not in used]

    def take(slot: str) -> str:
        if slot in bindings:
            return bindings[slot]
        if not pool:
            raise RoleAmbiguity(slot)
        return pool.pop(0)

    treatment = take("treatment")
    response = take("response")
    mediator = take("mediator") if task is Task.MA else None
    query_conditions = conditions if task in (Task.HTE, Task.OPO) else ()
    return CausalQuery(task=task, dataset=dataset, treatment=treatment,
                       response=response, mediator=mediator, conditions=query_conditions)


def interpret(question: str, ctx: ParseContext | None = None) -> CausalQuery:
    """Full Step-1 analog: classify, extract, and bind into a valid query."""
    if not question or not question.strip():
        raise EmptyQuestion("empty question")
    ctx = ctx or ParseContext()
    task, _ = classify_task(question, ctx)
    variables = extract_variables(question, ctx)
    try:
        query = assign_roles(task, variables, question, ctx)
    except RoleAmbiguity as exc:
        raise InterpretationFailed(f"cannot interpret the question: {exc}") from exc
    violations = validate_query(query)
    if violations:
        raise InterpretationFailed("; ".join(str(v) for v in violations))
    return query
