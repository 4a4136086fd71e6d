import copy

import pytest
import yaml

from flakysim.scenario import (ScenarioError, bundled_scenarios, liveness_bound, load_scenario,
                               parse_scenario)


def fig1a_data():
    sc = load_scenario("fig1a")
    return sc.model_dump(mode="json")


@pytest.mark.parametrize("name,core", [("fig1a", {1, 2, 3}), ("fig1b", {1, 3}), ("fig1c", {1, 3})])
def test_bundled_patterns_have_expected_cores(name, core):
    sc = load_scenario(name)
    assert sc.n == 3
    assert sc.core() == frozenset(core)


def test_all_bundled_scenarios_load():
    names = bundled_scenarios()
    assert {"fig1a", "fig1b", "fig1c", "attack_flaky_leader", "stable_view_timing",
            "register_mixed", "rfc_basic", "startup_all"} <= set(names)
    for name in names:
        load_scenario(name)


def test_round_trip_through_yaml():
    data = fig1a_data()
    again = parse_scenario(yaml.safe_load(yaml.safe_dump(data)))
    assert again.model_dump(mode="json") == data


def test_unknown_field_reports_its_path():
    data = fig1a_data()
    data["synchrony"]["speed"] = 3
    with pytest.raises(ScenarioError, match="synchrony.speed"):
        parse_scenario(data)


def test_faulty_channel_touching_crashed_process_rejected():
    data = fig1a_data()
    data["failure_pattern"]["crashed"] = [3]
    with pytest.raises(ScenarioError):
        parse_scenario(data)


def test_horizon_below_liveness_bound_rejected_with_bound():
    data = fig1a_data()
    data["checks"] = ["liveness"]
    bound = liveness_bound(parse_scenario(data))
    data["horizon"] = bound - 1
    with pytest.raises(ScenarioError, match=str(bound)):
        parse_scenario(data)
    assert parse_scenario(data, check_horizon=False).horizon == bound - 1


def test_fig1a_liveness_bound():
    assert liveness_bound(load_scenario("fig1a")) == 4460


def test_non_mapping_rejected():
    with pytest.raises(ScenarioError):
        parse_scenario([1, 2])


def test_missing_file_is_a_scenario_error(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "nope.yaml")


def test_invalid_yaml_is_a_scenario_error(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("n: [1, 2\n")
    with pytest.raises(ScenarioError):
        load_scenario(p)


def test_copy_is_independent():
    data = fig1a_data()
    other = copy.deepcopy(data)
    other["seed"] = 99
    assert parse_scenario(data).seed != parse_scenario(other).seed
