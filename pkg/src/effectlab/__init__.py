"""effectlab: a causal-effect-estimation workbench.

Procedurally generates production-line-shaped structural causal models and
paired observational/interventional data, pretrains a small in-context
transformer to predict interventional treatment effects, benchmarks it
against an S-learner baseline with PEHE, and serves ranked what-if and
root-cause queries over HTTP.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigurationError,
    ContractError,
    DegenerateTreatmentError,
    EffectLabError,
    EpisodeGenerationError,
    InvalidInterventionError,
    NotFittedError,
    PositivityError,
    TrainingDivergenceError,
)
from .graphs import CausalProcessGraph, GraphConfig, edge_probability, sample_cpg
from .mechanisms import (
    ConstantMechanism,
    LinearMechanism,
    Mechanism,
    MechanismPrior,
    NoiseSpec,
    TanhNetworkMechanism,
)
from .scm import (
    CategoricalEquation,
    CateGroundTruth,
    ContinuousEquation,
    FixedEquation,
    InterventionSpec,
    NodeSpec,
    Scm,
    apply_do,
    ground_truth_cate,
    instantiate_scm,
    paired_potential_outcomes,
    sample_interventional,
    sample_observational,
    scm_from_json,
    scm_to_json,
)
from .table import CATEGORICAL, CONTINUOUS, Column, SampleTable, infer_column_kind
