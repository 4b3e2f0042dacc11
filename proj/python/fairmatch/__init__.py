"""Online bipartite matching under max-min group fairness.

Thin Python surface over the C++ core: instance builders, the two benchmark
LPs, Monte-Carlo fairness estimators, closed-form bounds, and the experiment
sweep runner.
"""

from ._core import (  # noqa: F401
    BoundReport,
    FairnessEstimate,
    Group,
    Instance,
    LpSolution,
    OfflineAgent,
    OnlineType,
    central_star,
    competitive_ratio,
    dependent_round_vector,
    estimate_fair_a,
    estimate_fair_b,
    fcfs_fair_a,
    fcfs_fair_b_ratio,
    g,
    g_tail_bound,
    h,
    ingest_trips_csv,
    instance_from_json,
    load_instance,
    nadap_bound,
    ode_fair_b_upper_bound,
    offline_fair_b_single_agent,
    opt_upper_bound,
    pool_supply,
    prob_reject_bounds,
    run_sweep_file,
    sample_stream,
    save_instance,
    scale_to_target_s,
    single_agent,
    solve_grouped,
    solve_homogeneous,
    truncated_poisson_mean,
    validate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
