"""liftsim: a desk-scale harness for randomized query-to-communication lifting.

Build composed two-party functions from an index gadget, transform protocols
into their density-restoring refined form, run the randomized decision-tree
simulator against exact brute-force transcript distributions, and verify the
partition / structure / uniformity invariants in exact rational arithmetic.
"""

from .analysis import (
    GadgetMatrix,
    MarginalsReport,
    NormBound,
    dt_error,
    fourier_pointwise_check,
    marginals_report,
    norm_bound_check,
    parity_bias,
    support_check,
    true_transcript_dist,
    tv_distance,
)
from .core import (
    BOT,
    BobCube,
    ComposedInstance,
    GadgetSpec,
    OuterFunction,
    PartialAssignment,
    Rect,
    asymptotic_gadget_size,
    bits_str,
    compose_eval,
    full_rect,
    gadget_eval,
    is_structured,
    slice_count,
    slice_enumerate,
)
from .entropy import (
    Bits,
    DensityPart,
    SetVar,
    deficiency,
    density_restoring_partition,
    is_blockwise_dense,
    marginal_min_entropy,
    verify_partition_lemma,
)
from .errors import DomainError, ResourceError
from .protocol import (
    BitFn,
    DecisionTree,
    DLeaf,
    DQuery,
    PLeaf,
    PNode,
    ProtocolTree,
    RandomizedDecisionTree,
    RandomizedProtocol,
    RefinedProtocol,
    TableFn,
    dt_eval,
    dt_to_protocol,
    leaf_rectangles,
    load_fixture,
    project_transcript,
    refine,
    run_protocol,
    run_refined,
)
from .simulate import (
    ExactDist,
    SimConfig,
    SimOutcome,
    ledger_check,
    protocol_to_dt,
    simulate_exact,
    simulate_sample,
)

__version__ = "0.1.0"
