"""Tree enumeration, series coefficients and order conditions."""

from .series import (
    CoefficientMap,
    OrderReport,
    Series,
    check_order,
    exact_coefficient,
    scheme_phi,
    scheme_phi_composed,
    stage_weights,
)
from .tree import (
    Tree,
    TreeKind,
    brute_force_trees,
    enumerate_trees,
    from_word,
    parse_tree,
    tree_gamma,
    tree_sigma,
    trees_up_to,
)
