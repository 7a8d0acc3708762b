"""Zero-dimensional flat chains with group coefficients, and grid-based
detection of the topological singular sets of sphere-valued lattice maps."""

from .chains import (
    BoxDomain,
    Chain,
    DipolarDecomposition,
    assemble,
    augmentation,
    canonicalize,
    decomposition_cost_flat,
    decomposition_cost_flatsize,
    intersection_index,
    load_chain,
    mass,
    restrict,
    save_chain,
    zero_chain,
)
from .errors import (
    BoundaryContact,
    DefectTooClose,
    DegenerateBoundary,
    DomainMismatch,
    FlatChainError,
    GroupMismatch,
    InsufficientResolution,
    NonIntegral,
    OffsetTooLong,
    OnSkeleton,
    TooLarge,
    TubeOutsideDomain,
    TubeTooThin,
    WrongGroup,
)
from .fields import (
    Field,
    SingularChain,
    admissible_offset,
    default_group,
    default_pad,
    dirichlet_energy,
    energy_bound_test,
    extract_sgrid,
    load_field,
    save_field,
    sgrid_consistency,
    sphere_degree,
    stability_test,
    winding_number,
)
from .flatnorm import (
    NormResult,
    SolveLimits,
    flat_norm,
    flat_norm_flow,
    flat_norm_greedy,
    flat_norm_oracle,
)
from .grids import (
    Grid,
    deform,
    deformation_flatsize_test,
    deformation_scaling_test,
    sample_offset,
    skeleton_average_test,
    skeleton_integral,
)
from .groups import (
    GroupSpec,
    check_group_axioms,
    group_from_dict,
    make_cyclic_group,
    make_free_group,
    make_int_group,
)
from .homotopy import homotopy_norm_curve, homotopy_norm_estimate
from .synth import (
    DefectSpec,
    dipole_cylinder_field,
    hedgehog_field,
    homogeneous_extension,
    perturb,
    vortex_field,
)

__version__ = "0.1.0"
