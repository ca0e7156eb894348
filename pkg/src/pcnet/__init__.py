"""Probabilistic conceptual networks: concept hierarchies with per-concept
influence diagrams, categorization models built at a chosen abstraction
level, and a cost-aware cover refinement loop."""

from .abstraction import (
    ConceptualCover,
    count_covers,
    derive_superconcept_diagram,
    enumerate_covers,
    generalize,
    is_cover,
    leaf_cover,
    make_cover,
    parse_cover,
    propagate_all,
    root_cover,
    specialize,
)
from .builder import (
    CategorizationDecisionModel,
    CategorizationPid,
    attach_preference,
    build_categorization_pid,
    build_model,
    derive_cover_utility,
)
from .core import (
    Concept,
    FeatureDecl,
    PcDiagram,
    PcNet,
    PreferenceModel,
    ValidationReport,
    concept_prior,
    load_pcnet,
    load_pcnet_file,
    most_general_subsumees,
    most_specific_subsumer,
    serialize,
    subsumes,
    subsumption_probability,
    validate,
)
from .errors import *  # noqa: F401,F403
from .inference import (
    SolveResult,
    check_soundness,
    expected_utility,
    joint_oracle,
    posterior,
    solve,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .refine import CostParams, RefinementTrace, model_cost, net_value, refine

__version__ = "0.1.0"
