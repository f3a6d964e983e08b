from fractions import Fraction

import pytest

from services.errors import DomainExplosion, PreconditionViolated
from services.fixtures import graph_fixture, materiality_fixtures
from services.materiality_builder import (
    build_materiality_paths,
    build_materiality_scm,
    chance_parent,
    compliant_policy,
    compute_params,
    info_path,
    synthesize,
)
from services.policy_search import meu, voi
from services.scm_engine import DecisionRule, Policy, expected_utility


class TestMaterialityPaths:
    """Control, info and auxiliary paths for one context edge"""

    def test_yes_voi(self, yes_voi_graph):
        paths = build_materiality_paths(yes_voi_graph, "X", "Z")
        assert paths.a == "Z"
        assert paths.d.vertices == ("Z", "X", "Y")
        assert (paths.i_min, paths.i_max) == (0, 0)
        assert paths.info[0].vertices == ("Z", "Y")
        assert paths.intersections[0] == "Z"
        assert paths.forks[0] == paths.colliders[0] == []

    def test_decision_context_starts_at_chance_parent(self):
        g = graph_fixture("remember-decision").graph
        paths = build_materiality_paths(g, "X0", "Z0")
        assert paths.a == "U"
        assert paths.d.vertices == ("U", "Z0", "X0", "Y")
        assert [(x.index, x.decision, x.context) for x in paths.decisions] == [(-1, "Z0", "U"), (0, "X0", "Z0")]

    def test_collider_gets_auxiliary_path(self):
        g = graph_fixture("xor-collider").graph
        paths = build_materiality_paths(g, "X", "Z")
        assert paths.colliders[0] == ["W1"]
        assert paths.forks[0] == ["U1"]
        assert paths.auxiliary[(0, 1)].vertices[0] == "W1"
        assert paths.auxiliary[(0, 1)].end == "Y"

    def test_describe_lists_every_info_path(self):
        g = graph_fixture("remember-decision").graph
        described = build_materiality_paths(g, "X0", "Z0").describe()
        assert described["target"] == {"decision": "X0", "context": "Z0"}
        assert sorted(described["info_paths"]) == ["-1", "0"]

    def test_conditions_must_hold(self):
        g = graph_fixture("linear-no-voi").graph
        with pytest.raises(PreconditionViolated):
            build_materiality_paths(g, "X", "Z")

    def test_unknown_context(self, yes_voi_graph):
        with pytest.raises(PreconditionViolated):
            build_materiality_paths(yes_voi_graph, "X", "Y")


class TestInfoPaths:
    """Chance parents and info paths of single contexts"""

    def test_chance_parent(self):
        g = graph_fixture("remember-decision").graph
        assert chance_parent(g, "Z0") == "U"

    def test_chance_parent_needs_a_decision(self, yes_voi_graph):
        with pytest.raises(PreconditionViolated):
            chance_parent(yes_voi_graph, "Z")

    def test_decision_info_path_goes_up_first(self):
        g = graph_fixture("remember-decision").graph
        path = info_path(g, "Z0")
        assert path.vertices == ("Z0", "U", "Y")
        assert path.forward == (False, True)


class TestParameters:
    """Choice of k"""

    def test_guaranteed_k(self, yes_voi_graph):
        paths = build_materiality_paths(yes_voi_graph, "X", "Z")
        params = compute_params(yes_voi_graph, paths)
        # b = 1 context per decision, c = 2 paths through Z: 2^4 > (4 + 2) * 2
        assert (params.b, params.c, params.k) == (1, 2, 4)
        assert not params.overridden
        assert params.warning is None

    def test_override_warns(self, yes_voi_graph, caplog):
        paths = build_materiality_paths(yes_voi_graph, "X", "Z")
        params = compute_params(yes_voi_graph, paths, k_override=1)
        assert params.k == 1
        assert params.overridden
        assert "k overridden" in params.warning
        assert "instead of the guaranteed k=4" in caplog.text

    def test_override_must_be_positive(self, yes_voi_graph):
        paths = build_materiality_paths(yes_voi_graph, "X", "Z")
        with pytest.raises(PreconditionViolated):
            compute_params(yes_voi_graph, paths, k_override=0)

    def test_params_must_match_paths(self, yes_voi_graph):
        g = graph_fixture("xor-collider").graph
        params = compute_params(g, build_materiality_paths(g, "X", "Z"))
        other = build_materiality_paths(yes_voi_graph, "X", "Z")
        with pytest.raises(PreconditionViolated):
            build_materiality_scm(yes_voi_graph, other, params)


class TestSynthesis:
    """Models in which the context edge is material"""

    def test_yes_voi_model(self, yes_voi_graph):
        _, _, scm = synthesize(yes_voi_graph, "X", "Z", k_override=1)
        assert scm.width("Z") == 1
        assert scm.width("X") == 1
        assert meu(scm).value == 1
        assert voi(scm, None, "X", "Z") == Fraction(1, 2)

    def test_notes(self, yes_voi_graph):
        _, _, scm = synthesize(yes_voi_graph, "X", "Z", k_override=1)
        assert scm.notes["target_decision"] == "X"
        assert scm.notes["k"] == "1"
        assert scm.notes["compliant_utility"] == "1"
        assert "warning" in scm.notes

    def test_graph_is_preserved(self):
        g = graph_fixture("xor-collider").graph
        _, _, scm = synthesize(g, "X", "Z", k_override=1)
        assert sorted(scm.scoped_graph().digraph.edges()) == sorted(g.digraph.edges())

    def test_variable_width_cap(self, yes_voi_graph, settings_env):
        settings_env(max_variable_bits=1)
        with pytest.raises(DomainExplosion):
            synthesize(yes_voi_graph, "X", "Z")

    @pytest.mark.parametrize("fixture", materiality_fixtures(), ids=lambda f: f.name)
    def test_compliant_policy_and_value_of_information(self, fixture):
        decision, context = fixture.target
        paths, _, scm = synthesize(fixture.graph, decision, context, k_override=1)
        compliant = expected_utility(scm, compliant_policy(scm))
        assert compliant == paths.i_max - paths.i_min + 1
        assert meu(scm).value == compliant
        assert voi(scm, None, decision, context) > 0

    def test_lapsing_policy_loses_utility(self, yes_voi_graph):
        """Breaking the compliant rule on one context value costs utility"""
        _, _, scm = synthesize(yes_voi_graph, "X", "Z", k_override=1)
        compliant = compliant_policy(scm)
        rule = compliant.rules["X"]
        table = dict(rule.table)
        table[("1",)] = "0" if table[("1",)] == "1" else "1"
        lapsed = Policy({"X": DecisionRule(rule.contexts, table)})
        assert expected_utility(scm, lapsed) < expected_utility(scm, compliant)
