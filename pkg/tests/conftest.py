import pytest

from causalqa.bench import load_hierarchy


@pytest.fixture(scope="session")
def hierarchy():
    return load_hierarchy()


# The five reference question/JSON pairs every parser change must preserve.
PAPER_EXAMPLES = [
    (
        "Does the disaster_risk_reduction.csv dataset provide evidence of a direct link "
        "between building code compliance rate and the effectiveness of disaster "
        "preparedness campaigns?",
        '{"causal_problem": ["CSL", "CGL"], "dataset": ["disaster_risk_reduction.csv"], '
        '"nodes": ["building_code_compliance_rate", "disaster_preparedness_campaigns"]}',
    ),
    (
        "How does the labor force participation rate (labor_participation_rate) in "
        "employment.csv contribute to changes in wage growth (wage_increase)?",
        '{"causal_problem": ["CEL", "ATE"], "dataset": ["employment.csv"], '
        '"treatment": ["labor_participation_rate"], "response": ["wage_increase"]}',
    ),
    (
        "Based on the findings in the cybersecurity.csv dataset, what impact does the "
        "presence of data breach incidents have on cybersecurity investment under a group "
        "condition where the cybersecurity readiness index is set at 0.5 (readiness_index=0.5)?",
        '{"causal_problem": ["CEL", "HTE"], "dataset": ["cybersecurity.csv"], '
        '"treatment": ["data_breach_incidents"], "response": ["cybersecurity_investment"], '
        '"condition": [["readiness_index", 0.5]]}',
    ),
    (
        "Is there substantial evidence in retail.csv indicating that the pathway from "
        "retail employment to the e-commerce penetration rate is mediated by the consumer "
        "confidence index?",
        '{"causal_problem": ["CEL", "MA"], "dataset": ["retail.csv"], '
        '"treatment": ["retail_employment"], "response": ["e-commerce_penetration_rate"], '
        '"mediator": ["consumer_confidence_index"]}',
    ),
    (
        "If the poverty rate stands at 0.32 (poverty_ratio = 0.32), what recommendations "
        "can be derived from the poverty.csv dataset on adjusting social assistance "
        "coverage to positively impact the gini coefficient?",
        '{"causal_problem": ["CPL", "OPO"], "dataset": ["poverty.csv"], '
        '"treatment": ["social_assistance_coverage"], "response": ["gini_coefficient"], '
        '"condition": [["poverty_ratio", 0.32]]}',
    ),
]
