"""Genetic search for the multi-vehicle pickup and delivery problem with soft time windows."""

from .bounds import BoundsReport, compute_bounds
from .dynamic_planner import (DynamicEvent, FrozenPlan, InsertionError, freeze_prefix, insert_method1, read_events,
                              run_dynamic, run_method2, write_events)
from .evolution import Chromosome, GaConfig, run_static
from .exact_oracle import exact_front
from .instance_model import Couple, Fleet, Instance, Node, generate_lrc_like, generate_synthetic, load_lilim, parse_lilim
from .kernels import BACKEND
from .pareto import ParetoArchive, dominates, extract_front
from .schedule_eval import ObjectiveVector, Solution, Weights, feasibility_report, objectives

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundsReport", "Chromosome", "Couple", "DynamicEvent", "Fleet", "FrozenPlan", "GaConfig",
    "InsertionError", "Instance", "Node", "ObjectiveVector", "ParetoArchive", "Solution", "Weights",
    "compute_bounds", "dominates", "exact_front", "extract_front", "feasibility_report", "freeze_prefix",
    "generate_lrc_like", "generate_synthetic", "insert_method1", "load_lilim", "objectives", "parse_lilim",
    "read_events", "run_dynamic", "run_method2", "run_static", "write_events",
]
