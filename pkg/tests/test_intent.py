import json

import pytest
from hypothesis import given, strategies as st

from causalqa.intent import (ALL_VARIABLES, CausalGraph, CausalQuery, ConditionClause,
                             InvalidQuery, MalformedJson, MediationEstimate,
                             MissingRequiredKey, Task, UnknownTask, coerce_value,
                             parse_query_json, serialize_query, validate_query)

ATE_QUERY = CausalQuery(task=Task.ATE, dataset="employment.csv",
                        treatment="labor_participation_rate", response="wage_increase")
CGL_QUERY = CausalQuery(task=Task.CGL, dataset="disaster_risk_reduction.csv",
                        nodes=("building_code_compliance_rate", "disaster_preparedness_campaigns"))
MA_QUERY = CausalQuery(task=Task.MA, dataset="retail.csv", treatment="retail_employment",
                       response="e-commerce_penetration_rate", mediator="consumer_confidence_index")


def test_category_follows_task():
    assert Task.CGL.category.value == "CSL"
    assert Task.ATE.category.value == Task.HTE.category.value == Task.MA.category.value == "CEL"
    assert Task.OPO.category.value == "CPL"


def test_serialize_ate_matches_reference_row():
    assert serialize_query(ATE_QUERY) == (
        '{"causal_problem": ["CEL", "ATE"], "dataset": ["employment.csv"], '
        '"treatment": ["labor_participation_rate"], "response": ["wage_increase"]}')


def test_serialize_cgl_matches_reference_row():
    text = serialize_query(CGL_QUERY)
    assert text.startswith('{"causal_problem": ["CSL", "CGL"]')
    assert json.loads(text)["nodes"] == ["building_code_compliance_rate",
                                         "disaster_preparedness_campaigns"]


def test_causal_problem_is_always_first_key():
    for q in (ATE_QUERY, CGL_QUERY, MA_QUERY):
        assert serialize_query(q).startswith('{"causal_problem": ')


def test_serialize_rejects_invalid_query():
    with pytest.raises(InvalidQuery):
        serialize_query(CausalQuery(task=Task.MA, dataset="a.csv", treatment="t", response="r"))


def test_parse_hte_reference_row_condition():
    text = ('{"causal_problem": ["CEL", "HTE"], "dataset": ["cybersecurity.csv"], '
            '"treatment": ["data_breach_incidents"], "response": ["cybersecurity_investment"], '
            '"condition": [["readiness_index", 0.5]]}')
    q = parse_query_json(text)
    assert q.conditions == (ConditionClause("readiness_index", 0.5),)


def test_parse_normalizes_string_condition_value():
    text = ('{"causal_problem": ["CPL", "OPO"], "dataset": ["poverty.csv"], '
            '"treatment": ["social_assistance_coverage"], "response": ["gini_coefficient"], '
            '"condition": [["poverty_ratio", "0.32"]]}')
    q = parse_query_json(text)
    assert q.conditions[0].value == 0.32


def test_parse_missing_required_key():
    with pytest.raises(MissingRequiredKey) as err:
        parse_query_json('{"causal_problem": ["CEL", "ATE"]}')
    assert err.value.task is Task.ATE
    assert err.value.key == "dataset"


def test_parse_rejects_unknown_keys():
    with pytest.raises(MalformedJson):
        parse_query_json('{"causal_problem": ["CEL", "ATE"], "dataset": ["a.csv"], '
                         '"treatment": ["t"], "response": ["r"], "bogus": 1}')


def test_parse_rejects_unknown_task_and_bad_category():
    with pytest.raises(UnknownTask):
        parse_query_json('{"causal_problem": ["CEL", "XYZ"], "dataset": ["a.csv"]}')
    with pytest.raises(UnknownTask):
        parse_query_json('{"causal_problem": ["CSL", "ATE"], "dataset": ["a.csv"], '
                         '"treatment": ["t"], "response": ["r"]}')


def test_parse_rejects_non_json():
    with pytest.raises(MalformedJson):
        parse_query_json("not json at all")


def test_validate_valid_ma_query_is_clean():
    assert validate_query(MA_QUERY) == []


def test_validate_missing_mediator():
    q = CausalQuery(task=Task.MA, dataset="retail.csv", treatment="a", response="b")
    codes = [(v.code, v.slot) for v in validate_query(q)]
    assert ("MissingRequiredKey", "mediator") in codes


def test_validate_empty_nodes_distinct_from_sentinel():
    empty = CausalQuery(task=Task.CGL, dataset="a.csv", nodes=())
    assert [v.code for v in validate_query(empty)] == ["EmptyNodes"]
    sentinel = CausalQuery(task=Task.CGL, dataset="a.csv", nodes=(ALL_VARIABLES,))
    assert validate_query(sentinel) == []


def test_validate_flags_unexpected_slots():
    q = CausalQuery(task=Task.ATE, dataset="a.csv", treatment="t", response="r", mediator="m")
    assert any(v.code == "UnexpectedSlot" for v in validate_query(q))


def test_validate_empty_iff_serializable():
    good = ATE_QUERY
    bad = CausalQuery(task=Task.HTE, dataset="a.csv", treatment="t", response="r")
    assert validate_query(good) == [] and serialize_query(good)
    assert validate_query(bad) != []
    with pytest.raises(InvalidQuery):
        serialize_query(bad)


def test_coerce_value():
    assert coerce_value("0.32") == 0.32
    assert coerce_value("3") == 3
    assert coerce_value("B") == "B"


# -- round-trip property ----------------------------------------------------

_ident = st.from_regex(r"[a-z][a-z0-9_]{0,14}", fullmatch=True)
_value = st.one_of(st.integers(min_value=-99, max_value=99),
                   st.floats(min_value=-10, max_value=10, allow_nan=False,
                             allow_infinity=False).map(lambda x: round(x, 2)),
                   st.sampled_from(["low", "B", "high_tier"]))


@st.composite
def queries(draw):
    task = draw(st.sampled_from(list(Task)))
    dataset = draw(_ident) + ".csv"
    names = draw(st.lists(_ident, min_size=4, max_size=6, unique=True))
    if task is Task.CGL:
        if draw(st.booleans()):
            return CausalQuery(task=task, dataset=dataset, nodes=(ALL_VARIABLES,))
        return CausalQuery(task=task, dataset=dataset, nodes=tuple(names[:3]))
    conditions = ()
    mediator = None
    if task in (Task.HTE, Task.OPO):
        conditions = (ConditionClause(names[2], draw(_value)),)
    if task is Task.MA:
        mediator = names[2]
    return CausalQuery(task=task, dataset=dataset, treatment=names[0], response=names[1],
                       mediator=mediator, conditions=conditions)


@given(queries())
def test_round_trip_identity(q):
    assert parse_query_json(serialize_query(q)) == q


def test_mediation_result_enforces_additivity():
    with pytest.raises(ValueError):
        MediationEstimate(total=5.0, direct=1.0, indirect=1.0)
    ok = MediationEstimate(total=3.0, direct=1.0, indirect=2.0)
    assert ok.total == ok.direct + ok.indirect


def test_graph_rejects_self_loops():
    with pytest.raises(ValueError):
        CausalGraph(nodes=("a", "b"), adjacency=((1, 0), (0, 0)))
