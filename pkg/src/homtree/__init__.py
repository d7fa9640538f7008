"""Spherical analysis and Schroedinger flows on homogeneous trees."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError,
    ConfigError,
    DivergenceError,
    DomainError,
    FitError,
    HomTreeError,
    NonAdmissibleError,
    ResolutionError,
    SingularityError,
    TreeSizeError,
    TruncationError,
)
from .tree import RadialFunction, TreeParams, laplacian_apply, lp_norm, mean_apply, radial_convolve  # noqa: E402
from .spectral import (  # noqa: E402
    SpectralFunction,
    SpectralGrid,
    abel_transform,
    c_function,
    fourier_Z,
    gamma_eig,
    inverse_abel,
    inverse_fourier_Z,
    inverse_spherical,
    spherical_phi,
    spherical_transform,
)
from .kernel import SchrodingerKernel, kernel_lq_norm, oscillatory_J, schrodinger_kernel  # noqa: E402
from .propagator import PropagatorPlan, propagate_convolution, propagate_spectral  # noqa: E402
from .nls import EvolutionConfig, NonlinearitySpec, energy, l2_mass, nls_evolve, picard_solve  # noqa: E402
from .analysis import AdmissiblePair, fit_decay, scattering_probe, strichartz_norm  # noqa: E402
