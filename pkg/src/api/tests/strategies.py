"""Hypothesis strategies for random scoped graphs, shared by the property tests."""
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from services.graph_core import NodeKind, ScopedGraph

PROPERTY_SETTINGS = settings(
    max_examples=200, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)


@st.composite
def chance_dags(draw, max_nodes: int = 7):
    """Random DAG over V0..Vn (edges only point forward) plus a utility Y."""
    n = draw(st.integers(3, max_nodes))
    names = [f"V{i}" for i in range(n)]
    edges = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n) if draw(st.booleans())]
    edges += [(v, "Y") for v in names if draw(st.booleans())]
    return ScopedGraph.build(chance=names, edges=edges)


@st.composite
def decision_dags(draw, max_nodes: int = 6):
    """Random DAG where some nodes are decisions observing all of their parents."""
    g = draw(chance_dags(max_nodes))
    chance = [v for v in g.nodes if v != "Y"]
    decisions = {v for v in chance if draw(st.booleans())}
    kinds = {v: NodeKind.decision if v in decisions else NodeKind.chance for v in chance}
    kinds["Y"] = NodeKind.utility
    contexts = {d: sorted(g.parents(d)) for d in decisions}
    return ScopedGraph(kinds, list(g.digraph.edges()), contexts, "Y")


@st.composite
def queries(draw, graphs=chance_dags()):
    g = draw(graphs)
    nodes = sorted(g.nodes)
    a, b = draw(st.lists(st.sampled_from(nodes), min_size=2, max_size=2, unique=True))
    rest = [v for v in nodes if v not in (a, b)]
    conditioning = draw(st.lists(st.sampled_from(rest), unique=True)) if rest else []
    return g, a, b, frozenset(conditioning)
