"""Semi-bandit gradient descent with Caratheodory exploration for network congestion games."""
from .dynamics import AdversarySpec, RoundRecord, fit_rate, run_adversarial, run_dynamics
from .game import (
    CongestionGame,
    agent_cost,
    best_response_value,
    brute_force_pure_ne,
    expected_agent_cost,
    exploitability,
    grad_potential,
    load_distribution,
    potential,
    pure_loads,
    stationarity_gap,
)
from .graph import (
    Dag,
    Path,
    active_edges,
    build_dag,
    enumerate_paths,
    find_positive_path,
    shortest_path,
)
from .learner import Learner, Schedule, init_learner
from .polytope import (
    BoundedAwayView,
    PathMix,
    PathPolytope,
    caratheodory_decompose,
    feasible_bounded_point,
    project,
    project_simplex_lb,
    sample_path,
)

__version__ = "0.1.0"
