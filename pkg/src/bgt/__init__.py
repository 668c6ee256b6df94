"""Perpetual trimming of ever-growing bamboos, with exact-rational certificates.

Discrete side: n bamboos grow at rates h_1 >= ... >= h_n, one cut per round;
the goal is to keep the tallest bamboo low forever.  Continuous side: a
unit-speed robot patrols n points of a metric space.  Every simulator,
scheduler, and bound here works in `fractions.Fraction`, so approximation
guarantees are checked as hard inequalities, never with tolerances.
"""

from .continuous import (
    ClassTour,
    MetricInstance,
    TourState,
    algorithm1,
    algorithm2,
    algorithm2_classes,
    algorithm3,
    algorithm3_classes,
    certificate_bound,
    discrete_as_continuous,
    euler_tour,
    gen_random_metric,
    gen_spiral,
    gen_two_cluster,
    lower_bound_diameter,
    lower_bound_mst,
    mst,
    spiral_arc_spacing,
    two_cluster_sweep,
)
from .core import (
    CyclicSchedule,
    InstanceFormatError,
    ListSchedule,
    RateVector,
    ResidueSchedule,
    ScheduleError,
    SimulationReport,
    cap_refutation_horizon,
    evaluate_cyclic,
    frac,
    gen_planted_head,
    instance_to_dict,
    load_instance,
    load_schedule,
    lower_bound_H,
    save_instance,
    save_schedule,
    schedule_to_dict,
    simulate_discrete,
    simulate_walk,
    validate_list,
    validate_residue,
)
from .offline import (
    default_group_count,
    eight_fifths,
    merge_schedules,
    rebalance,
    split,
)
from .online import (
    diverging_bamboo,
    gen_reduce_fastest_lb,
    gen_reduce_max_12_7_family,
    reduce_fastest,
    reduce_max,
)
from .oracle import (
    DEFAULT_STATE_BUDGET,
    BudgetExceededError,
    feasible_under_cap,
    opt_candidates,
    optimal_height,
    pinwheel_feasible,
    pinwheel_witness,
)
from .pinwheel import (
    MainDiagnostics,
    density,
    density_34_frequencies,
    gen_integer_frequencies,
    main_algorithm,
    next_cuts_stream,
    schedule_powers_of_two,
    sqrt_upper,
    two_approx,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "ClassTour",
    "CyclicSchedule",
    "DEFAULT_STATE_BUDGET",
    "InstanceFormatError",
    "ListSchedule",
    "MainDiagnostics",
    "MetricInstance",
    "RateVector",
    "ResidueSchedule",
    "ScheduleError",
    "SimulationReport",
    "TourState",
    "algorithm1",
    "algorithm2",
    "algorithm2_classes",
    "algorithm3",
    "algorithm3_classes",
    "cap_refutation_horizon",
    "certificate_bound",
    "default_group_count",
    "density",
    "density_34_frequencies",
    "discrete_as_continuous",
    "diverging_bamboo",
    "eight_fifths",
    "euler_tour",
    "evaluate_cyclic",
    "feasible_under_cap",
    "frac",
    "gen_integer_frequencies",
    "gen_planted_head",
    "gen_random_metric",
    "gen_reduce_fastest_lb",
    "gen_reduce_max_12_7_family",
    "gen_spiral",
    "gen_two_cluster",
    "instance_to_dict",
    "load_instance",
    "load_schedule",
    "lower_bound_H",
    "lower_bound_diameter",
    "lower_bound_mst",
    "main_algorithm",
    "merge_schedules",
    "mst",
    "next_cuts_stream",
    "opt_candidates",
    "optimal_height",
    "pinwheel_feasible",
    "pinwheel_witness",
    "rebalance",
    "reduce_fastest",
    "reduce_max",
    "save_instance",
    "save_schedule",
    "schedule_powers_of_two",
    "schedule_to_dict",
    "simulate_discrete",
    "simulate_walk",
    "spiral_arc_spacing",
    "split",
    "sqrt_upper",
    "two_approx",
    "two_cluster_sweep",
    "validate_list",
    "validate_residue",
]
