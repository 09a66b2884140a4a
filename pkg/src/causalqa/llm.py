"""Optional HTTP backend for parsing and narration.

The deterministic pipeline never needs the network; this module only backs
the ``--llm-endpoint`` flag. Two calls are supported:

* ``interpret``: POSTs the question together with the function-call schemas
  (one per causal task, ``causal_graph_learning`` style) and feeds the
  returned JSON object to :func:`causalqa.intent.parse_query_json`;
* ``generate``: POSTs a narration prompt and returns the reply text.

The bearer token is read from an environment variable (never from argv), and
any transport failure surfaces as :class:`~causalqa.narrate.BackendUnreachable`.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import requests

from .intent import CausalQuery, parse_query_json
from .narrate import BackendUnreachable

DEFAULT_TOKEN_ENV = "CAUSALQA_LLM_TOKEN"

FUNCTION_SCHEMAS: list[dict] = [
    {
        "type": "function",
        "function": {
            "name": "causal_graph_learning",
            "description": "Return the causal structure from a dataset with variables of interest",
            "parameters": {
                "type": "object",
                "properties": {
                    "dataset": {"type": "string", "description": "The name of the input dataset"},
                    "nodes": {
                        "type": "string",
                        "description": "Comma-separated variables of interest; use all_variables "
                                       "when the question names none",
                    },
                },
                "required": ["dataset", "nodes"],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "average_treatment_effect_estimation",
            "description": "Estimate the average effect of a binary treatment on a response",
            "parameters": {
                "type": "object",
                "properties": {
                    "dataset": {"type": "string", "description": "The name of the input dataset"},
                    "treatment": {"type": "string", "description": "Treatment variable name"},
                    "response": {"type": "string", "description": "Response variable name"},
                },
                "required": ["dataset", "treatment", "response"],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "heterogeneous_treatment_effect_estimation",
            "description": "Estimate a treatment effect for a subgroup pinned by conditions",
            "parameters": {
                "type": "object",
                "properties": {
                    "dataset": {"type": "string", "description": "The name of the input dataset"},
                    "treatment": {"type": "string", "description": "Treatment variable name"},
                    "response": {"type": "string", "description": "Response variable name"},
                    "condition": {
                        "type": "string",
                        "description": "Comma-separated name=value pairs defining the subgroup",
                    },
                },
                "required": ["dataset", "treatment", "response", "condition"],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "mediation_analysis",
            "description": "Split a treatment's effect into direct and mediated parts",
            "parameters": {
                "type": "object",
                "properties": {
                    "dataset": {"type": "string", "description": "The name of the input dataset"},
                    "treatment": {"type": "string", "description": "Treatment variable name"},
                    "response": {"type": "string", "description": "Response variable name"},
                    "mediator": {"type": "string", "description": "Mediator variable name"},
                },
                "required": ["dataset", "treatment", "response", "mediator"],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "off_policy_optimization",
            "description": "Recommend the treatment level that maximizes the response",
            "parameters": {
                "type": "object",
                "properties": {
                    "dataset": {"type": "string", "description": "The name of the input dataset"},
                    "treatment": {"type": "string", "description": "Action variable name"},
                    "response": {"type": "string", "description": "Response variable name"},
                    "condition": {
                        "type": "string",
                        "description": "Comma-separated name=value pairs describing the situation",
                    },
                },
                "required": ["dataset", "treatment", "response", "condition"],
            },
        },
    },
]


@dataclass(frozen=True)
class LlmBackend:
    """Thin client for a single JSON-over-HTTP endpoint."""

    endpoint: str
    token_env: str = DEFAULT_TOKEN_ENV
    timeout: float = 30.0

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, payload: dict) -> dict:
        try:
            response = requests.post(self.endpoint, json=payload,
                                     headers=self._headers(), timeout=self.timeout)
            response.raise_for_status()
            return response.json()
        except (requests.RequestException, ValueError) as exc:
            raise BackendUnreachable(f"LLM endpoint failed: {exc}") from exc

    def generate(self, prompt: str) -> str:
        """Narration rewrite: {"prompt": ...} -> {"text": ...}."""
        reply = self._post({"prompt": prompt})
        text = reply.get("text")
        if not isinstance(text, str) or not text.strip():
            raise BackendUnreachable("LLM endpoint returned no text")
        return text

    def interpret(self, question: str) -> CausalQuery:
        """Intent extraction: {"question", "functions"} -> {"output": {...}}."""
        reply = self._post({"question": question, "functions": FUNCTION_SCHEMAS})
        output = reply.get("output")
        if output is None:
            raise BackendUnreachable("LLM endpoint returned no output object")
        return parse_query_json(json.dumps(output))
