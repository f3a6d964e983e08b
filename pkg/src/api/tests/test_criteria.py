import pytest

from services.criteria import (
    EdgeVerdict,
    SingleDecisionVerdict,
    build_ordering_graph,
    check_graph,
    descendant_in_h_path,
    extract_paths_from_nonfactorizability,
    fix_point,
    immaterial_by_lb2,
    lb_factorizable,
    minimal_context_separator_check,
    single_decision_criterion,
    solubility,
    thm1_conditions,
)
from services.errors import GraphError, NotAContext, PreconditionViolated, SearchBudgetExceeded
from services.fixtures import GRAPH_FIXTURES, graph_fixture, materiality_fixtures
from services.graph_core import ScopedGraph
from services.policy_search import voi
from services.scm_engine import random_scm
from services.separation import is_active


class TestSingleDecision:
    """Single-decision immateriality test"""

    def test_yes_voi(self, yes_voi_graph):
        assert single_decision_criterion(yes_voi_graph, "X", "Z") == SingleDecisionVerdict.possibly_material

    def test_linear_no_voi(self):
        g = graph_fixture("linear-no-voi").graph
        assert single_decision_criterion(g, "X", "Z") == SingleDecisionVerdict.immaterial

    def test_decision_cannot_reach_utility(self):
        g = ScopedGraph.build(chance=["Z"], decisions={"X": ["Z"]}, edges=[("Z", "Y")])
        assert single_decision_criterion(g, "X", "Z") == SingleDecisionVerdict.immaterial

    def test_not_a_context(self, yes_voi_graph):
        with pytest.raises(NotAContext):
            single_decision_criterion(yes_voi_graph, "X", "Y")
        with pytest.raises(GraphError):
            single_decision_criterion(yes_voi_graph, "Z", "X")


class TestSolubility:
    """Orderings under which no relevant information is lost"""

    def test_single_decision_is_soluble(self, yes_voi_graph):
        assert solubility(yes_voi_graph) == ("X",)

    def test_forgotten_context(self):
        assert solubility(graph_fixture("yes-voi-no-sr").graph) is None

    def test_ordering_budget(self, settings_env):
        settings_env(ordering_limit=1)
        g = ScopedGraph.build(
            chance=["Z"], decisions={"X": ["Z"], "X'": ["X"]}, edges=[("X'", "Y"), ("Z", "Y")])
        with pytest.raises(SearchBudgetExceeded):
            solubility(g)


class TestMainTheoremConditions:
    """Conditions A, B and C"""

    def test_all_hold_for_yes_voi(self, yes_voi_graph):
        report = thm1_conditions(yes_voi_graph)
        assert report.all_hold
        assert report.a == {"X": True}
        assert report.b == {("X", "Z"): True}
        assert report.c == {("X", "Z"): True}

    def test_condition_b_fails_without_information(self):
        report = thm1_conditions(graph_fixture("linear-no-voi").graph)
        assert report.a == {"X": True}
        assert report.b == {("X", "Z"): False}
        assert not report.all_hold

    def test_condition_a_fails_for_irrelevant_decision(self):
        g = ScopedGraph.build(chance=["Z"], decisions={"X": ["Z"]}, edges=[("Z", "Y")])
        assert thm1_conditions(g).a == {"X": False}

    @pytest.mark.parametrize("fixture", materiality_fixtures(), ids=lambda f: f.name)
    def test_materiality_fixtures_meet_every_condition(self, fixture):
        assert thm1_conditions(fixture.graph).all_hold


class TestFactorizability:
    """Ordering graphs and LB-factorizability witnesses"""

    def test_triangle_witness(self, triangle_graph):
        witness = lb_factorizable(triangle_graph, {"X"}, {"Z"})
        assert witness is not None
        assert witness.ordering == ("Z", "X")
        assert witness.c_prime == frozenset()
        assert fix_point(triangle_graph, witness, set()) >= triangle_graph.contexts("X")

    def test_ordering_graph_edges(self):
        g = graph_fixture("fixpoint-gap").graph
        h = build_ordering_graph(g, {"X", "X''"}, {"Z"})
        assert h.c_prime == frozenset({"C"})
        assert ("Z", "X") in h.edges
        assert ("C", "X''") in h.edges
        assert h.is_acyclic()

    def test_refined_graph_only_adds_edges(self):
        g = graph_fixture("fixpoint-gap").graph
        base = set(build_ordering_graph(g, {"X", "X''"}, {"Z"}).edges)
        refined = set(build_ordering_graph(g, {"X", "X''"}, {"Z"}, refine=True).edges)
        assert base <= refined

    def test_condition_one_fails_without_soluble_recall(self):
        g = graph_fixture("yes-voi-no-sr").graph
        assert lb_factorizable(g, {"X'"}, {"X"}) is None

    def test_overlapping_sets_rejected(self, triangle_graph):
        with pytest.raises(PreconditionViolated):
            lb_factorizable(triangle_graph, {"X"}, {"X"})

    def test_non_decision_in_x_prime(self, yes_voi_graph):
        with pytest.raises(GraphError):
            lb_factorizable(yes_voi_graph, {"Z"}, set())


class TestLB2:
    """Fix-point immateriality certificates"""

    def test_triangle(self, triangle_graph):
        witness = immaterial_by_lb2(triangle_graph, "X", "Z")
        assert witness is not None
        assert witness.ordering == ("Z", "X")

    def test_fixpoint_gap_is_not_certified(self):
        g = graph_fixture("fixpoint-gap").graph
        assert immaterial_by_lb2(g, "X", "Z") is None

    def test_yes_voi_is_not_certified(self, yes_voi_graph):
        assert immaterial_by_lb2(yes_voi_graph, "X", "Z") is None

    def test_separator_check_on_a_chain(self):
        g = ScopedGraph.build(chance=["A", "B", "C"], edges=[("A", "B"), ("B", "C"), ("C", "Y")])
        assert not minimal_context_separator_check(g, "A", {"C"}, [])
        assert minimal_context_separator_check(g, "A", {"C"}, [], u_prime={"B"})
        # nothing left outside the implied set
        assert minimal_context_separator_check(g, "A", {"C"}, ["C"])

    @pytest.mark.parametrize("start, expected", [
        (set(), set()),
        ({"X''"}, {"X''"}),
        ({"C"}, {"C", "Z", "X", "X''"}),
    ])
    def test_fix_point(self, start, expected):
        g = graph_fixture("fixpoint-gap").graph
        witness = lb_factorizable(g, {"X", "X''"}, {"Z"})
        assert witness.ordering == ("C", "Z", "X", "X''")
        assert fix_point(g, witness, start) == expected

    def test_fix_point_starts_from_the_closure(self, triangle_graph):
        witness = lb_factorizable(triangle_graph, {"X"}, {"Z"})
        assert fix_point(triangle_graph, witness, set()) == {"X", "Z"}


class TestPathExtraction:
    """Paths recovered from a failed factorization"""

    def test_yes_voi_paths(self, yes_voi_graph):
        m, d, target = extract_paths_from_nonfactorizability(yes_voi_graph, "Z", {"X"})
        assert target == "Y"
        assert m.start == "Z" and m.end == "Y"
        assert d.vertices == ("X", "Y")
        assert is_active(yes_voi_graph, m, {"X"})

    @pytest.mark.parametrize("z0, x_prime, info, control", [
        ("Z", {"X", "X'"}, ("Z", "Y"), ("X", "Z'", "X'", "Y")),
        ("Z'", {"X'"}, ("Z'", "W'", "U'", "Y"), ("X'", "Y")),
    ])
    def test_two_info_paths(self, z0, x_prime, info, control):
        g = graph_fixture("two-info-paths").graph
        assert lb_factorizable(g, x_prime, {z0}) is None
        m, d, target = extract_paths_from_nonfactorizability(g, z0, x_prime)
        assert target == "Y"
        assert m.vertices == info
        assert d.vertices == control
        assert d.is_directed()

    def test_missing_decision_child_rejected(self):
        g = graph_fixture("two-info-paths").graph
        with pytest.raises(PreconditionViolated):
            extract_paths_from_nonfactorizability(g, "Z", {"X'"})

    def test_factorizable_input_rejected(self, triangle_graph):
        with pytest.raises(PreconditionViolated):
            extract_paths_from_nonfactorizability(triangle_graph, "Z", {"X"})

    def test_descendant_in_h_path(self):
        g = graph_fixture("mediated-control").graph
        path = descendant_in_h_path(g, "Z", "M", {"X"})
        assert path.vertices == ("Z", "X", "M")
        assert path.is_directed()


class TestCheckGraph:
    """Per-edge verdicts over whole graphs"""

    @pytest.mark.parametrize("name", sorted(GRAPH_FIXTURES))
    def test_fixture_verdicts(self, name):
        fixture = graph_fixture(name)
        report = check_graph(fixture.graph)
        for (decision, context), verdict in fixture.verdicts.items():
            assert report.edge(decision, context).verdict == verdict
        if fixture.soluble is not None:
            assert report.soluble == fixture.soluble

    def test_material_edges_carry_paths(self, yes_voi_graph):
        edge = check_graph(yes_voi_graph).edge("X", "Z")
        assert edge.verdict == EdgeVerdict.material_by_thm1
        assert edge.paths.target_decision == "X"
        assert check_graph(yes_voi_graph, with_paths=False).edge("X", "Z").paths is None

    def test_lb2_edges_carry_witness(self, triangle_graph):
        edge = check_graph(triangle_graph).edge("X", "Z")
        assert edge.verdict == EdgeVerdict.immaterial_lb2
        assert edge.witness.describe()["ordering"] == ["Z", "X"]

    def test_solubility_left_open_past_the_ordering_limit(self, settings_env):
        settings_env(ordering_limit=1)
        g = ScopedGraph.build(
            chance=["Z"], decisions={"X": ["Z"], "X'": ["X"]}, edges=[("X'", "Y"), ("Z", "Y")])

        report = check_graph(g, with_paths=False)

        assert not report.solubility_decided
        assert report.soluble is None
        assert report.soluble_ordering is None
        assert report.warnings

    def test_solubility_decided(self, yes_voi_graph):
        report = check_graph(yes_voi_graph)
        assert report.solubility_decided
        assert report.soluble is True

    def test_disconnected_decision(self):
        g = ScopedGraph.build(chance=["Z"], decisions={"X": ["Z"]}, edges=[("Z", "Y")])
        report = check_graph(g)
        assert report.edge("X", "Z").verdict == EdgeVerdict.immaterial_single_decision

    def test_unknown_edge(self, yes_voi_graph):
        with pytest.raises(NotAContext):
            check_graph(yes_voi_graph).edge("X", "Y")


class TestImmaterialityOnRandomModels:
    """Edges certified immaterial carry no value of information in compatible models"""

    @pytest.mark.parametrize("name,edge,seeds", [
        ("linear-no-voi", ("X", "Z"), range(20)),
        ("triangle", ("X", "Z"), range(10)),
    ])
    def test_zero_value_of_information(self, name, edge, seeds):
        g = graph_fixture(name).graph
        assert check_graph(g).edge(*edge).verdict != EdgeVerdict.material_by_thm1
        for seed in seeds:
            assert voi(random_scm(g, seed), None, *edge) == 0
