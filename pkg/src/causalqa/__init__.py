"""Causal question answering over tabular data.

Pipeline: interpret a natural-language causal question into a structured
query, run the matching estimator on the CSV table, and narrate the numeric
result; plus benchmark generators and an evaluation harness that verify
every stage against analytic ground truth.
"""

from .intent import (ALL_VARIABLES, CausalGraph, CausalQuery, ConditionClause,
                     EffectEstimate, MediationEstimate, RecommendedAction, Task,
                     ToolResult, parse_query_json, serialize_query, validate_query)
from .parsing import ParseContext, interpret

__all__ = [
    "ALL_VARIABLES",
    "CausalGraph",
    "CausalQuery",
    "ConditionClause",
    "EffectEstimate",
    "MediationEstimate",
    "ParseContext",
    "RecommendedAction",
    "Task",
    "ToolResult",
    "interpret",
    "parse_query_json",
    "serialize_query",
    "validate_query",
]

__version__ = "0.1.0"
