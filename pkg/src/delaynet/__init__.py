"""Stochastic delayed neuronal networks on random graphs.

Simulation of the finite network with distance-correlated Bernoulli
connectivity and delays, its Gaussian mean-field moment reduction, the
dispersion-relation stability analysis with Hopf-curve tracing, and the
coupling experiments that measure the 1/N convergence to the limit.
"""

from .disorder import (
    DiscreteLaw,
    DisorderRealization,
    ProductLaw,
    SmallWorldExp,
    kernel_transform,
    kernel_transform_dc,
    load_edges_csv,
    sample_positions,
    sample_realization,
    save_edges_csv,
)
from .dispersion import (
    DispersionParams,
    HopfCurve,
    HopfPoint,
    classify_regime,
    curve_to_csv,
    dispersion_residual,
    hopf_curve_fixed_a,
    hopf_curve_fixed_beta,
    residual_at_point,
    rightmost_root,
    z_function,
)
from .grid import HistoryBuffer, InitialCondition, SimConfig
from .harness import (
    ChaosReport,
    ConvergenceReport,
    annealed_convergence,
    chaos_pairs,
    fit_loglog_slope,
    quenched_convergence,
    stepsize_ratio,
)
from .meanfield import (
    LawQuadrature,
    MomentTrajectory,
    PicardResult,
    build_quadrature,
    interaction_drive,
    moments_to_csv,
    picard_meanfield,
    simulate_moments,
    stationary_point,
)
from .model import (
    ConfigurationError,
    FiringRateModel,
    PiecewiseConstantInput,
    PopulationParams,
    SimulationDiverged,
    gaussian_expectation_s,
    sigmoid_s,
    single_population_model,
)
from .netsim import (
    NetworkTrajectory,
    OscillationReport,
    detect_oscillation,
    noise_matrix,
    simulate_coupled,
    simulate_network,
    trajectory_to_csv,
)

__version__ = "0.1.0"
