"""rodtopo: exact-arithmetic analysis of rod diagrams of toric black holes.

The package splits into:

- ``intlin``     exact integer matrix algorithms (Hermite/Smith forms,
  determinant divisors, primitivity tests)
- ``roddiagram`` the rod-diagram data model, JSON serialization,
  validation, corner/horizon/end classification
- ``plumbing``   disk-bundle extraction, plumbing vectors, and the
  decomposition of the domain of outer communication
- ``topology``   fundamental groups, fill-in chains, compactification,
  and the low-dimensional classification chart
- ``modelmap``   region-wise model maps on the half plane and the
  numerical tension verifier
- ``cli``        the ``rodtopo`` command-line front end
"""

from .intlin import (
    IntMatrix,
    HermiteResult,
    SmithResult,
    determinant_divisor,
    hermite_normal_form,
    is_primitive_set,
    is_primitive_vector,
    smith_normal_form,
)
from .roddiagram import (
    CrossSectionTopology,
    Rod,
    RodDiagram,
    RodStructure,
    asymptotic_end,
    classify_corner,
    cross_section_topology,
    diagram_equivalent,
    normalize_compatibility,
    parse,
    serialize,
)
from .plumbing import (
    Bundle,
    DocDecomposition,
    ToricPlumbing,
    decompose_component,
    doc_decomposition,
    plumbing_to_rods,
    plumbing_vector,
    triple_to_bundle,
    verify_plumbing_relations,
)
from .topology import (
    AbelianGroup,
    FillinPlan,
    betti2,
    classify,
    compactify,
    end_pi1,
    fillin_path,
    fundamental_group,
    is_simply_connected,
)
from .modelmap import (
    GridSpec,
    ModelMap,
    TensionReport,
    build_model_map,
    potentials,
    tension_norm,
    verify_tension,
)

__version__ = "0.1.0"
