"""Information-flow modeling and bias path analysis.

Build a network of information sites and transformation channels, declare
how feature tags move across each channel, then trace where potential bias
propagates, which mitigations stand in the way, and which stakeholder
impact queries are structurally OPEN, CONDITIONAL or CLOSED.
"""

from .analysis import (
    AssessmentDelta,
    AssessmentMatrix,
    Edit,
    EditError,
    FeatureMap,
    ImpactPath,
    Mode,
    OutcomeAssessment,
    OutcomeSpec,
    TagInstance,
    TraceResult,
    Verdict,
    apply_edits,
    assess_all,
    assess_outcome,
    downstream_of,
    parse_edit,
    propagate_features,
    summarize_as_channel,
    trace_paths,
    upstream_of,
    what_if,
)
from .model import (
    AlternativeSet,
    CarryRule,
    Channel,
    Configuration,
    FlowSpec,
    FlowSummary,
    InferenceRule,
    Introduce,
    Mitigation,
    Network,
    Proxy,
    Site,
    SiteClasses,
    Toggle,
    TypeSystem,
    ValidationReport,
    Variant,
    Violation,
    check_type_system,
    classify_sites,
    expand_configurations,
    infer_types,
    validate,
)
from .nesting import CollapseError, collapse, expand

__version__ = "0.1.0"
