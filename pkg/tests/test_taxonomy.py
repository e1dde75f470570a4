import json

import pytest
from hypothesis import given, settings

from wealthdyn.errors import ConfigError, ConfigValidationError
from wealthdyn.taxonomy import (
    EconomyConfig,
    RateParams,
    interaction_pairs,
    parse_economy_config,
    serialize_economy_config,
    validate_economy,
)

from conftest import REFERENCE_ECONOMY, economies


def _doc(**overrides):
    doc = json.loads(REFERENCE_ECONOMY.read_text())
    doc.update(overrides)
    return doc


def test_reference_document_parses_in_declaration_order(ref_config):
    assert ref_config.names == ["Producer", "Consumer", "ControlMechanism"]
    assert ref_config.max_supply == 100000
    assert len(ref_config.interactions) == 4
    assert ref_config.control_mechanism == "ControlMechanism"
    assert list(ref_config.initial_wealth) == [500, 1500, 98000]
    assert list(ref_config.desired_vector) == [40000, 50000, 10000]


def test_minimal_document_is_valid():
    text = json.dumps(
        {
            "max_supply": 10,
            "delta_t": 1,
            "steps": 5,
            "categories": [{"name": "Only", "initial_wealth": 10, "is_control_mechanism": True}],
        }
    )
    config = parse_economy_config(text)
    assert config.names == ["Only"]
    assert config.interactions == ()


def test_wealth_shortfall_is_a_conservation_error():
    doc = _doc()
    doc["categories"][0]["initial_wealth"] = 499
    with pytest.raises(ConfigValidationError, match="conservation"):
        parse_economy_config(json.dumps(doc))


def test_syntax_error_reports_position():
    with pytest.raises(ConfigError, match=r"line 2 column \d+"):
        parse_economy_config('{"max_supply": 1,\n "delta_t": }')


def test_unknown_and_missing_fields():
    with pytest.raises(ConfigError, match="unknown field 'colour'"):
        parse_economy_config(json.dumps(_doc(colour="red")))
    doc = _doc()
    del doc["steps"]
    with pytest.raises(ConfigError, match="missing required field 'steps'"):
        parse_economy_config(json.dumps(doc))
    doc = _doc()
    del doc["interactions"][0]["payer"]
    with pytest.raises(ConfigError, match="missing required field 'payer'"):
        parse_economy_config(json.dumps(doc))


def test_bad_rate_key_is_rejected():
    doc = _doc()
    doc["rates"]["beta"] = {"Consumer=>Producer": 0.1}
    with pytest.raises(ConfigError, match="From->To"):
        parse_economy_config(json.dumps(doc))


def test_ref_config_validates_clean(ref_config):
    report = validate_economy(ref_config)
    assert report.ok and len(report) == 0


def test_two_control_mechanisms_flagged():
    doc = _doc()
    doc["categories"][0]["is_control_mechanism"] = True
    doc["categories"][0]["rotates_to"] = []
    doc["categories"][1]["rotates_to"] = []
    doc["rates"]["gamma"] = {}
    report = validate_economy(parse_economy_config(json.dumps(doc), validate=False))
    assert any("multiple control mechanisms" in v for v in report)


def test_rotation_rate_above_one_flagged():
    doc = _doc()
    doc["rates"]["gamma"]["Producer->Consumer"] = 1.2
    report = validate_economy(parse_economy_config(json.dumps(doc), validate=False))
    assert any("rotation rate" in v and "outside [0,1]" in v for v in report)


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d["categories"][1]["rotates_to"].append("ControlMechanism"), "inbound rotation"),
        (lambda d: d["categories"][2]["rotates_to"].append("Producer"), "must not rotate"),
        (lambda d: d["categories"].__setitem__(1, {**d["categories"][1], "name": "Producer"}), "duplicate category"),
        (lambda d: d["interactions"].append({"name": "GoodA", "payer": "Producer", "receiver": "Consumer"}), "duplicate interaction"),
        (lambda d: d["interactions"].append({"name": "Self", "payer": "Producer", "receiver": "Producer"}), "identical payer"),
        (lambda d: d["interactions"].append({"name": "X", "payer": "Nobody", "receiver": "Producer"}), "not a declared category"),
        (lambda d: d["rates"]["gamma"].__setitem__("Producer->ControlMechanism", 0.1), "no matching rotates_to"),
        (lambda d: d["rates"]["beta"].__setitem__("Producer->Consumer", 0.3), "conflict"),
        (lambda d: d["desired_wealth"].__setitem__("Producer", 40005), "desired wealths sum"),
        (lambda d: d["categories"][0].__setitem__("initial_wealth", -1), "negative initial wealth"),
    ],
)
def test_validation_catches(mutate, fragment):
    doc = _doc()
    mutate(doc)
    report = validate_economy(parse_economy_config(json.dumps(doc), validate=False))
    assert any(fragment in v for v in report), report.violations


def test_beta_without_interaction_flagged():
    doc = _doc()
    doc["interactions"] = [i for i in doc["interactions"] if i["name"] != "Incentive"]
    report = validate_economy(parse_economy_config(json.dumps(doc), validate=False))
    assert [v for v in report if "no interaction in the taxonomy" in v] == [
        "interaction rate ControlMechanism->Consumer has no interaction in the taxonomy"
    ]


def test_reverse_direction_beta_is_allowed(ref_config):
    rates = RateParams(beta={("Producer", "Consumer"): -0.2})
    assert validate_economy(ref_config.with_rates(rates)).ok


def test_validation_is_pure(ref_config):
    bad = ref_config.with_rates(RateParams(gamma={("Producer", "Consumer"): 3.0}))
    assert validate_economy(bad) == validate_economy(bad)


def test_interaction_pairs_reference(ref_config):
    assert interaction_pairs(ref_config) == [
        ("Consumer", "Producer", ["GoodA", "GoodB"]),
        ("Producer", "ControlMechanism", ["MaintenanceFee"]),
        ("ControlMechanism", "Consumer", ["Incentive"]),
    ]


def test_interaction_pairs_empty_and_grouped(ref_config):
    assert interaction_pairs(EconomyConfig(1.0, 1.0, 1, ref_config.categories)) == []
    doc = _doc()
    doc["interactions"] = [
        {"name": "x", "payer": "Producer", "receiver": "Consumer"},
        {"name": "y", "payer": "Producer", "receiver": "Consumer"},
    ]
    doc["rates"]["beta"] = {}
    cfg = parse_economy_config(json.dumps(doc))
    assert interaction_pairs(cfg) == [("Producer", "Consumer", ["x", "y"])]


def test_round_trip_reference(ref_config):
    again = parse_economy_config(serialize_economy_config(ref_config))
    assert again == ref_config


@settings(max_examples=50, deadline=None)
@given(economies())
def test_round_trip_random(config):
    text = serialize_economy_config(config)
    again = parse_economy_config(text)
    assert again == config
    assert serialize_economy_config(again) == text
    assert again.names == config.names
