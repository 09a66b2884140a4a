import pytest

from causalqa.intent import ConditionClause, Task, serialize_query
from causalqa.parsing import (CUE_TABLE, DatasetNotFound, EmptyQuestion,
                              InterpretationFailed, ParseContext, RoleAmbiguity,
                              assign_roles, classify_task, extract_conditions,
                              extract_dataset, extract_variables, interpret)
from conftest import PAPER_EXAMPLES

MA_QUESTION = PAPER_EXAMPLES[3][0]
OPO_QUESTION = PAPER_EXAMPLES[4][0]
HTE_QUESTION = PAPER_EXAMPLES[2][0]
ATE_QUESTION = PAPER_EXAMPLES[1][0]
CGL_QUESTION = PAPER_EXAMPLES[0][0]


@pytest.mark.parametrize("question,expected", PAPER_EXAMPLES,
                         ids=["CGL", "ATE", "HTE", "MA", "OPO"])
def test_reference_questions_interpret_exactly(question, expected):
    assert serialize_query(interpret(question)) == expected


def test_cue_table_shape():
    for task, cues in CUE_TABLE.items():
        assert len(cues) >= 3, task


def test_classify_reference_rows():
    assert classify_task(MA_QUESTION)[0] is Task.MA
    assert classify_task(OPO_QUESTION)[0] is Task.OPO
    assert classify_task(HTE_QUESTION)[0] is Task.HTE
    assert classify_task(ATE_QUESTION)[0] is Task.ATE
    assert classify_task(CGL_QUESTION)[0] is Task.CGL


def test_classify_direct_cue_hit():
    task, score = classify_task("Learn all causal relationships in a.csv.")
    assert task is Task.CGL
    assert 0.0 <= score <= 1.0


def test_classify_empty_question():
    with pytest.raises(EmptyQuestion):
        classify_task("   ")


def test_classify_is_total_on_cueless_text():
    task, score = classify_task("tell me something")
    assert task in set(Task)
    assert score == 0.0


def test_extract_dataset_reference_row():
    assert extract_dataset(CGL_QUESTION) == "disaster_risk_reduction.csv"


def test_extract_dataset_first_match():
    assert extract_dataset("compare a.csv and b.csv") == "a.csv"


def test_extract_dataset_not_found():
    with pytest.raises(DatasetNotFound):
        extract_dataset("what drives sales?")


def test_extract_variables_aliases_win_over_long_forms():
    names = [m.identifier for m in extract_variables(ATE_QUESTION)]
    assert names == ["labor_participation_rate", "wage_increase"]


def test_extract_variables_known_column_hits():
    names = [m.identifier for m in extract_variables(
        "effect of X on Y", ParseContext(known_columns=("x", "y")))]
    assert names == ["x", "y"]


def test_extract_variables_phrase_normalization_with_columns():
    ctx = ParseContext(known_columns=("building_code_compliance_rate",))
    names = [m.identifier for m in extract_variables(
        "is there a link between building code compliance rate and safety in z.csv?", ctx)]
    assert "building_code_compliance_rate" in names


@pytest.mark.parametrize("question,expected", PAPER_EXAMPLES,
                         ids=["CGL", "ATE", "HTE", "MA", "OPO"])
def test_normalization_recovers_reference_labels(question, expected):
    # every slot value in the expected JSON must be recovered from raw text
    query = interpret(question)
    assert serialize_query(query) == expected


def test_extract_conditions_reference_rows():
    assert extract_conditions(HTE_QUESTION) == [ConditionClause("readiness_index", 0.5)]
    assert extract_conditions(OPO_QUESTION) == [ConditionClause("poverty_ratio", 0.32)]


def test_extract_conditions_absent():
    assert extract_conditions("no condition here") == []


def test_extract_conditions_inline_and_phrase_forms():
    assert extract_conditions("for those having score_index = 3, what happens?") == [
        ConditionClause("score_index", 3)]
    assert extract_conditions("when the poverty rate stands at 0.32, act") == [
        ConditionClause("poverty_rate", 0.32)]


def test_assign_roles_ma_reference_row():
    q = assign_roles(Task.MA, extract_variables(MA_QUESTION), MA_QUESTION)
    assert q.treatment == "retail_employment"
    assert q.response == "e-commerce_penetration_rate"
    assert q.mediator == "consumer_confidence_index"


def test_assign_roles_opo_reference_row():
    q = assign_roles(Task.OPO, extract_variables(OPO_QUESTION), OPO_QUESTION)
    assert q.treatment == "social_assistance_coverage"
    assert q.response == "gini_coefficient"
    assert q.conditions == (ConditionClause("poverty_ratio", 0.32),)


def test_assign_roles_frame_rule():
    question = "effect of a on b in d.csv"
    q = assign_roles(Task.ATE, extract_variables(question), question)
    assert (q.treatment, q.response) == ("a", "b")


def test_assign_roles_ambiguity():
    question = "what is the effect in d.csv?"
    with pytest.raises(RoleAmbiguity):
        assign_roles(Task.ATE, extract_variables(question), question)


def test_interpret_rejects_nonsense():
    with pytest.raises(InterpretationFailed):
        interpret("hello")


def test_interpret_rejects_empty():
    with pytest.raises(EmptyQuestion):
        interpret("")


def test_interpret_is_deterministic():
    runs = {serialize_query(interpret(OPO_QUESTION)) for _ in range(5)}
    assert len(runs) == 1


def test_interpret_output_validates():
    from causalqa.intent import validate_query
    for question, _ in PAPER_EXAMPLES:
        assert validate_query(interpret(question)) == []
