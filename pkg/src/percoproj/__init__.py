"""percoproj: planar fractal percolation and its projected densities.

Generate coupled realizations of the random nested cell construction,
compute exact projected densities of the level measures, evaluate the
closed-form constants of the supporting theory, and verify the martingale,
concentration, convergence, and Hoelder-regularity claims by Monte Carlo.
"""

from .addressing import (
    CellAddress,
    KadicInterval,
    cell_square,
    format_address,
    locate,
    parse_address,
    rho_metric,
)
from .bounds import (
    concentration_base,
    constants_report,
    depth_relation,
    envelope_factor,
    envelope_probability,
    grid_mesh,
    hoeffding_bound,
    increment_thresholds,
    taming_depth,
    tail_failure_sum,
)
from .density import (
    IncrementSample,
    PiecewiseDensity,
    density,
    density_at,
    density_axial,
    density_for,
    denormalize_from_delta,
    evaluate,
    holder_modulus,
    increment,
    load_density,
    mass,
    normalize_to_delta,
    save_density,
    sup_distance,
    variation,
)
from .errors import (
    AxialModeError,
    ExtinctTreeError,
    FeasibilityError,
    InvalidAddressError,
    KadicPointError,
    PercoprojError,
    RegimeError,
)
from .experiments import ExperimentConfig, ExperimentReport, run_suite, write_report
from .geometry import (
    Direction,
    ProjectionRange,
    Square,
    cell_trapezoid,
    chord_length,
    chord_length_axial,
    project,
    projection_range,
)
from .params import PercolationParams
from .percolation import (
    PercolationTree,
    count_cells,
    dim_estimate,
    dim_theory,
    extinction_probability,
    full_tree,
    generate,
    is_prefix,
    load_tree,
    parse_tree,
    refine,
    resample_children,
    save_tree,
    serialize_tree,
    survives_to_depth,
    tree_from_levels,
    trees_equal,
    verify_structure,
    z_estimate,
)

__version__ = "0.1.0"
