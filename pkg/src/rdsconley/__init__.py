"""Set-oriented bifurcation detection for random dynamical systems.

The toolkit realizes random systems as cocycles over shifted noise windows,
computes box-level random isolated invariant sets with their Conley-index
fingerprints, decomposes them into prime families, and flags parameter values
where the prime count M or a fingerprint class changes.
"""

from ._kernels import BACKEND
from .boxes import (
    BoxGrid,
    FiberedTransitionGraph,
    RandomBoxSet,
    build_grid,
    build_transition_graph,
    combinatorial_interior,
    enclose_image,
    subdivide,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    FiltrationError,
    NoPreimageError,
    RdsConleyError,
    RefinementError,
    UsageError,
    WindowExhaustedError,
)
from .index import (
    IndexFingerprint,
    PointedSystem,
    ShiftWitness,
    compare_fingerprints,
    fingerprint,
    identity_witness,
    pointed_map,
    trivial_fingerprint,
    verify_shift_witness,
)
from .noise import NoiseModel, NoisePath, sample_path, shift, symbol_at
from .primes import (
    BifurcationCertificate,
    DecompSettings,
    DecompositionResult,
    PrimeFamily,
    SweepReport,
    bisect_refine,
    check_pairwise_disjoint,
    count_M,
    evaluate_run,
    prime_decomposition,
    sweep,
    union_isolated_check,
)
from .systems import (
    ConjugacyDef,
    SystemDef,
    TabulatedMap,
    check_cocycle_property,
    check_conjugacy,
    cocycle_eval,
    conjugate_system,
    make_system,
    time_one_map,
)
from .topology import (
    FiltrationPair,
    InvariantFamily,
    build_filtration_pair,
    compute_inv,
    exit_set,
    is_isolating_block,
    is_isolating_neighborhood,
    verify_filtration_pair,
)

__version__ = "0.1.0"
