from .criteria import EdgeVerdict, check_graph, immaterial_by_lb2, lb_factorizable, single_decision_criterion, solubility
from .graph_core import ScopedGraph, parse_scoped_graph
from .materiality_builder import build_materiality_paths, build_materiality_scm, compute_params, synthesize
from .policy_search import meu, voi
from .scm_engine import FiniteSCM, expected_utility, load_scm, reference_policy
from .separation import closure, d_separated, observation_closure
