"""Exact-rational construction and verification of invariant asymmetric
unions of polytopes for coupled expanding torus maps, with a floating-point
simulation subsystem for the empirical evidence that seeds the exact runs."""

from .chopper import ChopKind, ChopResult, try_chop
from .dynamics import (
    Atom,
    AtomTable,
    DiscontinuityError,
    MapParams,
    apply_coupled,
    apply_named_symmetry,
    apply_reduced,
    atom_table,
    build_cylinder,
    constant_vector,
    enumerate_atoms,
    g,
    gamma,
    gamma_inverse,
    h,
    params,
    project_to_fundamental,
    reduce_coordinates,
    signature_of_point,
    symmetry_names,
)
from .engine import (
    Certificate,
    CertificateError,
    ConstructionReport,
    Outcome,
    build_inasup,
    seed_words,
    verify_certificate,
)
from .optimizer import (
    ConstraintSystem,
    MultiplierFamily,
    MultiplierVector,
    enumerate_multipliers,
    facet_is_active,
    intersect,
    is_empty,
    optimize,
    semi_optimize,
    standard_family,
    standard_system,
)
from .polytope import (
    BoundsError,
    ConstraintVector,
    box,
    contains_point,
    deserialize,
    dilate,
    from_pairs,
    includes,
    index_pairs,
    serialize,
    sign_flip,
    translate,
)
from .rationals import rational
from .simulate import (
    OPEstimate,
    OrbitRecord,
    detect_onset,
    op_scan,
    order_parameter,
    semiconjugacy_residual,
    semiconjugacy_residual_exact,
    simulate_orbit,
)

__version__ = "0.1.0"
