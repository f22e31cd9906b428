"""Model parameters, the advance-delay operator L, and its dispersion function.

The wave profile solves  c^2 u'' - Delta_D u + alpha u = alpha psi'(u)  with
Delta_D the unit-shift discrete Laplacian.  The on-site stiffness is tied to
the speed by  alpha = c^2 (pi/2)^2 - 2, which places the only real zeros of
the dispersion function

    D(k) = -c^2 k^2 + 2(1 - cos k) + alpha

exactly at k = +-k0 = +-pi/2 for speeds c <= 1 close to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, NumericalError
from .grid import GridProfile, make_grid

K0 = np.pi / 2.0

# admissible speed window; outside it D acquires extra real zeros or alpha <= 0
C_MIN, C_MAX = 0.95, 1.0


@dataclass(frozen=True)
class ModelParams:
    """Wave speed and derived constants.

    nu is the (negative) exponential-weight rate used for decay bookkeeping;
    B the coupling of the tunable oscillatory mode in the approximate family.
    """

    c: float = 1.0
    epsilon: float = 0.0
    B: float = 0.05
    nu: float = -0.25

    def __post_init__(self):
        if not (C_MIN <= self.c <= C_MAX):
            raise ConfigError(f"speed outside admissible range: c={self.c} not in [{C_MIN}, {C_MAX}]")
        if not (0.0 <= self.epsilon < 0.5):
            raise ConfigError(f"epsilon out of range: {self.epsilon} not in [0, 1/2)")
        if self.B <= 0:
            raise ConfigError("family coupling B must be positive")
        if self.nu >= 0:
            raise ConfigError("weight rate nu must be negative")

    @property
    def k0(self) -> float:
        return K0

    @property
    def alpha(self) -> float:
        return self.c**2 * K0**2 - 2.0

    @property
    def dprime_k0(self) -> float:
        """D'(k0) = -2 c^2 k0 + 2; equals the resonant-projection denominator."""
        return -2.0 * self.c**2 * K0 + 2.0

    @cached_property
    def lambda_star(self) -> float:
        """Asymptotic cosine amplitude of the piecewise-quadratic baseline."""
        ck = self.c**2 * K0**2
        return (ck - 2.0) / (ck - K0)


def dispersion_D(k, p: ModelParams):
    """D(k) = -c^2 k^2 + 2(1-cos k) + alpha, entire in k."""
    k = np.asarray(k)
    return -p.c**2 * k**2 + 2.0 * (1.0 - np.cos(k)) + p.alpha


def dispersion_Dprime(k, p: ModelParams):
    """D'(k) = -2 c^2 k + 2 sin k."""
    k = np.asarray(k)
    return -2.0 * p.c**2 * k + 2.0 * np.sin(k)


def discrete_laplacian(u: GridProfile) -> GridProfile:
    """(Delta_D u)(x) = u(x+1) - 2u(x) + u(x-1), exact index shifts.

    Margins of one lattice unit are filled from the tail descriptors.
    """
    s = u.inv_h
    _, v = u.extended(s)
    core = v[s:-s]
    lap = v[2 * s:] - 2.0 * core + v[:-2 * s]
    return u.with_values(lap, tail_plus=None, tail_minus=None, odd=False)


def second_derivative(u: GridProfile) -> GridProfile:
    """5-point central second derivative (O(h^4)), tails extended."""
    _, v = u.extended(2)
    h2 = u.h * u.h
    d2 = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]) / (12.0 * h2)
    return u.with_values(d2, tail_plus=None, tail_minus=None, odd=False)


def apply_L(u: GridProfile, p: ModelParams, refine: int = 1) -> GridProfile | np.ndarray:
    """L u = c^2 u'' - Delta_D u + alpha u on the grid.

    The shift term is exact; u'' uses the 5-point stencil.  With ``refine>1``
    the profile's band-limited interpolant is sampled on an refine-times finer
    grid first and the stencil applied there, which shrinks the local error
    near curvature kinks by refine^2; the returned array then lives on the
    fine grid (length (n-1)*refine + 1).
    """
    s = u.inv_h * refine
    _, v = u.extended(s + 2, refine=refine)
    hf = u.h / refine
    core = v[s + 2:-(s + 2)]
    d2 = (-v[s:-s - 4] + 16.0 * v[s + 1:-s - 3] - 30.0 * core + 16.0 * v[s + 3:-s - 1] - v[s + 4:-s]) / (12.0 * hf * hf)
    lap = v[2 * s + 2:-2] - 2.0 * core + v[2:-(2 * s + 2)]
    out = p.c**2 * d2 - lap + p.alpha * core
    if refine == 1:
        return u.with_values(out, tail_plus=None, tail_minus=None, odd=False)
    return out


def real_roots(p: ModelParams, k_max: float = 3.0 * np.pi) -> list[float]:
    """All real zeros of D on [-k_max, k_max]; exactly {-k0, k0} for admissible c.

    Sign-change bisection on a fine scan grid followed by Newton polish.
    """
    if k_max < 3 * K0:
        raise ConfigError("k_max must cover at least [-3 k0, 3 k0]")
    ks = np.linspace(-k_max, k_max, int(4000 * k_max))
    dv = dispersion_D(ks, p)
    roots: list[float] = []
    sign_change = np.where(np.sign(dv[:-1]) * np.sign(dv[1:]) < 0)[0]
    cand = [0.5 * (ks[i] + ks[i + 1]) for i in sign_change]
    cand += [ks[i] for i in np.where(dv == 0.0)[0]]
    for r in cand:
        for _ in range(60):
            step = dispersion_D(r, p) / dispersion_Dprime(r, p)
            r -= step
            if abs(step) < 1e-14:
                break
        if abs(dispersion_D(r, p)) < 1e-11 and not any(abs(r - q) < 1e-6 for q in roots):
            roots.append(float(r))
    roots.sort()
    if len(roots) != 2:
        raise NumericalError(f"speed outside admissible range: found {len(roots)} real dispersion roots")
    return roots


def spectral_gap_p0(p: ModelParams, re_max: float = 30.0, im_max: float = 5.0) -> float:
    """p0 = inf |Im k| over non-real zeros of D.

    Complex Newton started from a rectangle of seeds, deduplicated; the gap
    caps the admissible exponential weight |nu|.
    """
    re = np.linspace(0.0, re_max, 2 * int(re_max) + 1)
    im = np.linspace(0.25, im_max, 20)
    seeds = (re[:, None] + 1j * im[None, :]).ravel()
    z = seeds.copy()
    with np.errstate(all="ignore"):
        for _ in range(80):
            f = dispersion_D(z, p)
            fp = dispersion_Dprime(z, p)
            ok = np.isfinite(f) & np.isfinite(fp) & (np.abs(fp) > 1e-14) & (np.abs(z.imag) < 60)
            step = np.where(ok, f / np.where(ok, fp, 1.0), 0.0)
            z = z - step
        f = np.abs(dispersion_D(z, p))
        f = np.where(np.isfinite(f), f, np.inf)
    ok = (f < 1e-10) & (np.abs(z.imag) > 1e-8) & (np.abs(z.real) <= re_max + 1) & (np.abs(z.imag) <= im_max + 1)
    roots: list[complex] = []
    for r in z[ok]:
        if not any(abs(r - q) < 1e-6 for q in roots):
            roots.append(complex(r))
    if not roots:
        raise NumericalError("widen search window: no non-real dispersion zero located")
    return float(min(abs(r.imag) for r in roots))
