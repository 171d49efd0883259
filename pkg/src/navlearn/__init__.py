"""Grid traversal behavior workbench: learn rewards from demonstrations,
plan from the learned rewards, and score behavior fidelity against ground
truth."""

from .envfile import Environment, Zod
from .grids import (BinaryLayer, FeatureSchema, FeatureStack, GridGeometry,
                    OpacityLayer, blur_layer, build_stack, schema_by_name,
                    STANDARD_SCHEMA, EDGE_OF_ROAD_SCHEMA, COVERT_SCHEMA)
from .learning import (BehaviorModel, Demonstration, RewardMap, TrainBudget,
                       TrainingMeta, feature_counts, likelihood_gradient,
                       load_model, path_reward, reward_map, save_model, train)
from .mdp import GridMdp, SoftPolicy, VisitationField, expected_visitation, soft_backward
from .metrics import MhdResult, format_table, mhd, summarize
from .planning import (BaselineParams, Trajectory, densify, plan_baseline,
                       plan_ioc, load_trajectory, save_trajectory)
from .presets import mini_world, road_world, village_world, zod_world
from .scenarios import (ScenarioSpec, TrialReport, collect_oracle_demos,
                        generate_environment, load_scenario, oracle_demonstrate,
                        run_trials, save_report, save_scenario)
from .workspace import JobManager, TrainingJob, Workspace

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
