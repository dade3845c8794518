"""Permutation tests for differences in the shape of grouped point clouds.

Point clouds become Vietoris-Rips persistence diagrams, diagrams are
compared with a matching distance, and a joint-loss permutation test decides
whether the groups differ.
"""

from .errors import ConsistencyError, InputError, PersistTestError, ResourceError
from .filtration import FilteredComplex, Simplex, build_filtration, complex_at, pairwise_distances
from .metric import cost_matrix, diagram_distance, diagonal_projection, optimal_assignment, pairwise_diagram_distances
from .permutation import (
    DistanceCache,
    GroupedDiagrams,
    PostHocResult,
    TestResult,
    assignment_count,
    enumerate_assignments,
    joint_loss,
    omnibus_test,
    post_hoc,
    two_group_test,
)
from .persistence import (
    BoundaryMatrix,
    PersistenceDiagram,
    PersistencePoint,
    betti_at,
    boundary_matrix,
    diagrams,
    persistent_betti,
    reduce,
)
from .samplers import SpaceSpec, TrialPlan, sample_chorded_circle, sample_circle, sample_trial, sample_wedge
from .simulation import ScenarioConfig, ScenarioReport, load_config, preset, run_scenario, run_trial
from .estimators import DiagramDistance, PermutationTest, VietorisRipsPersistence

__version__ = "0.1.0"

__all__ = [
    "BoundaryMatrix",
    "ConsistencyError",
    "DiagramDistance",
    "DistanceCache",
    "FilteredComplex",
    "GroupedDiagrams",
    "InputError",
    "PermutationTest",
    "PersistTestError",
    "PersistenceDiagram",
    "PersistencePoint",
    "PostHocResult",
    "ResourceError",
    "ScenarioConfig",
    "ScenarioReport",
    "Simplex",
    "SpaceSpec",
    "TestResult",
    "TrialPlan",
    "VietorisRipsPersistence",
    "assignment_count",
    "betti_at",
    "boundary_matrix",
    "build_filtration",
    "complex_at",
    "cost_matrix",
    "diagonal_projection",
    "diagram_distance",
    "diagrams",
    "enumerate_assignments",
    "joint_loss",
    "load_config",
    "omnibus_test",
    "optimal_assignment",
    "pairwise_diagram_distances",
    "pairwise_distances",
    "persistent_betti",
    "post_hoc",
    "preset",
    "reduce",
    "run_scenario",
    "run_trial",
    "sample_chorded_circle",
    "sample_circle",
    "sample_trial",
    "sample_wedge",
    "two_group_test",
]
