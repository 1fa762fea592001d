"""Innovation diffusion under an epistemically weighted linear threshold model."""

from .cascade import (
    CascadeState,
    Trajectory,
    final_adopters,
    influence_ratio,
    influence_ratios,
    is_cohesive,
    is_fixed_point,
    largest_cohesive_subset,
    simulate,
    step,
    transient_condition,
)
from .control import (
    ControlledTrajectory,
    PolicyParams,
    control_input,
    individual_target,
    input_decomposition,
    lemma2_condition,
    receding_horizon_run,
    riccati_gain,
    riccati_schedule,
)
from .epistemics import (
    Agent,
    CredibilityMatrix,
    build_credibility_matrix,
    credibility_delta,
    discrimination_factor,
    is_epistemically_fair,
    relational_credibility,
    relational_factor,
)
from .network import Graph, build_graph, generate_er_graph, neighbors
from .scenario import (
    Metrics,
    Scenario,
    compute_metrics,
    export_results,
    generate_comparative,
    generate_data_driven,
    load_scenario,
    run_batch,
    run_scenario,
    write_scenario,
)

__version__ = "0.1.0"
