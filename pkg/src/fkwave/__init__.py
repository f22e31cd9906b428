"""fkwave: travelling dislocation waves of a Frenkel-Kontorova chain.

Pipeline: dispersion analysis -> Green-kernel inversion -> piecewise-quadratic
baseline -> anharmonic wave trains -> approximate family w_beta -> fixed-point
corrector -> verified heteroclinic wave.
"""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .errors import ConfigError, FkwaveError, InvariantError, NumericalError
from .exact_core import HeteroclinicProfile, asymptotic_up, compute_up
from .family import FamilyCaches, FamilyConfig, amplitude_of_beta, build_uo, dw_dbeta, w_beta
from .grid import GridProfile, Tail, make_grid
from .model import K0, ModelParams, apply_L, discrete_laplacian, dispersion_D, dispersion_Dprime, real_roots, spectral_gap_p0
from .modes import OscMode
from .corrector import Gamma, K0_estimate, SolveState, beta_of_r, residual_full, solve_corrector
from .potential import PotentialSpec, add_anharmonic_tail, certify_bounds, make_mollified_sign
from .spectral_green import GreenKernel, apply_Linv, build_kernel, moment_cos, moment_sin, project_sin, solve_L0
from .verify import WeightedNormSpec, evolve_lattice, propagation_error, verify_solution, weighted_norm
from .wavetrain import H1_eval, TrainCache, WaveTrain, build_train_cache, compute_wavetrain, period_map
