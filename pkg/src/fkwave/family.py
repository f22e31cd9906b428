"""The one-parameter family of approximate heteroclinic profiles.

w_{0,beta} = u_p + B beta u_o tilts the baseline's asymptotic oscillation
amplitude to a(beta) = |B beta - lambda*| without touching a neighbourhood of
the origin (u_o vanishes there).  Feeding the rescaled pair
(w_{0,beta}(xt), w_{0,beta}'(xt)), xt = 2 pi x / (P(beta) k0), through the
train map produces w_beta: odd, exactly equal to a periodic train as
x -> +-infinity, equal to u_p(xt) near the origin, and C^1 in beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .exact_core import HeteroclinicProfile
from .grid import GridProfile, Tail, make_grid
from .model import K0, ModelParams
from .modes import OscMode
from .potential import PotentialSpec
from .spectral_green import GreenKernel
from .wavetrain import H1_eval, TrainCache

__all__ = [
    "FamilyConfig", "FamilyCaches", "build_uo", "orthogonality_constant",
    "amplitude_of_beta", "w_beta_values", "w_beta", "dw_dbeta_values", "dw_dbeta",
]


@dataclass(frozen=True)
class FamilyConfig:
    """Cutoff radii of u_o and the amplitude window of the train family."""

    x_a: float = 0.25
    x_b: float = 0.75
    a1: float = 0.1
    a2: float = 0.65

    def validate(self, p: ModelParams) -> None:
        if not (0.0 < self.x_a < self.x_b < 1.0):
            raise ConfigError("support must keep L u_o compact in [-2,2]: need 0 < x_a < x_b < 1")
        lam = p.lambda_star
        if not (self.a1 < lam - p.B and lam + p.B < self.a2):
            raise ConfigError(
                f"amplitude window ({self.a1}, {self.a2}) does not bracket lambda*={lam:.4f} +- B={p.B}"
            )

    def mode(self) -> OscMode:
        return OscMode(self.x_a, self.x_b)


@dataclass
class FamilyCaches:
    """Everything the family and the corrector evaluate against."""

    params: ModelParams
    potential: PotentialSpec
    kernel: GreenKernel
    up: HeteroclinicProfile
    trains: TrainCache
    cfg: FamilyConfig

    @property
    def mode(self) -> OscMode:
        return self.up.mode


def build_uo(cfg: FamilyConfig, x_max: float, inv_h: int) -> GridProfile:
    """The cutoff oscillatory mode on the grid (odd, C^4, sgn(x) cos(k0 x) outside)."""
    return cfg.mode().as_profile(x_max, inv_h)


def orthogonality_constant(mode_or_cfg, p: ModelParams) -> float:
    """integral sin(k0 x) (L u_o) dx, computed by piecewise-analytic quadrature.

    The value is D'(k0) = -2 c^2 k0 + 2 independently of the cutoff; a
    deviation beyond 1e-6 indicates a defective cutoff.
    """
    mode = mode_or_cfg.mode() if isinstance(mode_or_cfg, FamilyConfig) else mode_or_cfg
    val = mode.sin_moment_of_L(p)
    if abs(val - p.dprime_k0) > 1e-6:
        raise NumericalError(f"cutoff or grid defect: sin moment {val!r} vs {p.dprime_k0!r}")
    return val


def amplitude_of_beta(beta: float, caches: FamilyCaches) -> float:
    """a(beta) = |B beta - lambda*|, the asymptotic first-harmonic amplitude.

    A small slack beyond [-1, 1] is tolerated so derivative stencils can probe
    across the endpoints.
    """
    if abs(beta) > 1.02:
        raise ConfigError("|beta| must be <= 1")
    p = caches.params
    # the baseline's constructed tail amplitude (lambda* up to the discrete
    # solvability correction mu) keeps the family amplitude exactly consistent
    a = abs(p.B * beta - caches.up.tail_amplitude)
    tr = caches.trains
    if not (tr.a1 + tr.a_margin <= a <= tr.a2 - tr.a_margin):
        raise NumericalError(f"enlarge (a1,a2) or shrink B: amplitude {a:.4f} leaves the validated window")
    return a


def _scale(beta: float, caches: FamilyCaches) -> tuple[float, float]:
    """Amplitude and argument rescale factor 2 pi / (P(beta) k0) = omega(a)/k0."""
    a = amplitude_of_beta(beta, caches)
    return a, float(caches.trains.omega(a)) / K0


def w_beta_values(beta: float, caches: FamilyCaches, pts: np.ndarray) -> np.ndarray:
    """w_beta evaluated at arbitrary points (analytic beyond the stored grid)."""
    a, s = _scale(beta, caches)
    xt = s * np.asarray(pts, dtype=float)
    bb = caches.params.B * beta
    mode = caches.mode
    w0 = caches.up.eval(xt) + bb * mode.value(xt)
    w0p = caches.up.eval_d1(xt) + bb * mode.d1(xt)
    return H1_eval(w0, w0p, caches.trains)


def w_beta_tail(beta: float, caches: FamilyCaches) -> Tail:
    """+infinity tail of w_beta: the cached train of amplitude a(beta), phase-locked.

    In the family's asymptotics u - 1 = -a cos(k0 xt), so the train phase is
    k0 xt + pi and the n-th harmonic acquires a factor (-1)^n.
    """
    a, _ = _scale(beta, caches)
    tr = caches.trains.train_at(a)
    signs = (-1.0) ** np.arange(1, len(tr.coeffs))
    return Tail(mean=1.0 + tr.coeffs[0], freq=tr.omega, cos_amps=tuple(signs * tr.coeffs[1:]))


def w_beta(beta: float, caches: FamilyCaches, x_max: float, inv_h: int) -> GridProfile:
    """The approximate profile on the grid, with its exact train tails attached."""
    xs = make_grid(x_max, inv_h)
    vals = w_beta_values(beta, caches, xs)
    vals = 0.5 * (vals - vals[::-1])  # enforce the structural oddness to roundoff
    if not (np.all(vals[xs > 0] > 0.0) and np.all(vals[xs < 0] < 0.0)):
        raise NumericalError(f"sign property failed for w_beta at beta={beta}")
    tail = w_beta_tail(beta, caches)
    return GridProfile(x_max, inv_h, vals, tail_plus=tail, tail_minus=tail.mirror_odd(), odd=True)


def dw_dbeta_values(
    beta: float,
    caches: FamilyCaches,
    pts: np.ndarray,
    step: float = 1e-4,
    noise_bound: float = 1e-5,
) -> np.ndarray:
    """d w_beta / d beta by central differences, Richardson-extrapolated once."""

    def central(hh):
        return (w_beta_values(beta + hh, caches, pts) - w_beta_values(beta - hh, caches, pts)) / (2.0 * hh)

    d1 = central(step)
    d2 = central(0.5 * step)
    out = (4.0 * d2 - d1) / 3.0
    noise = float(np.max(np.abs(d2 - d1))) / 3.0
    if noise > noise_bound:
        raise NumericalError(f"tighten caches: beta-derivative noise estimate {noise:.3e}")
    return out


def dw_dbeta(beta: float, caches: FamilyCaches, x_max: float, inv_h: int, step: float = 1e-4) -> GridProfile:
    xs = make_grid(x_max, inv_h)
    vals = dw_dbeta_values(beta, caches, xs, step=step)
    vals = 0.5 * (vals + vals[::-1] * -1.0)
    zero = Tail(0.0, K0)
    # the derivative stays bounded and oscillatory; tails only used for diagnostics
    return GridProfile(x_max, inv_h, vals, tail_plus=zero, tail_minus=zero, odd=False)
