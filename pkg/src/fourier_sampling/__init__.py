"""Recovery of periodic functions from sampled Fourier coefficients.

Submodules
----------
core            trigonometric polynomials, de la Vallee Poussin sums, grids, norms
phantoms        piecewise-constant test images with exact coefficients
designs         frequency sampling designs and design files
reconstruction  partial sums, smoothed sums and TV minimization by ADMM
metrics         edge-recovery and error measures
witness         group characters, greedy sets and Riesz products
experiments     pipeline runs, manifests and comparisons
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AliasingError,
    GridField,
    ParameterError,
    TrigPolynomial,
    band_decompose,
    evaluate_on_grid,
    vdp_multiplier,
    vdp_sum,
)
from .designs import SamplingDesign, hierarchical, lowest_block, uniform_random  # noqa: E402
from .phantoms import Phantom, standard_phantom  # noqa: E402
from .reconstruction import AdmmParams, Measurements, bv_min_admm, partial_sum_recon, vdp_recon  # noqa: E402
