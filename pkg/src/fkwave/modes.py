"""The cutoff oscillatory mode: odd, zero near the origin, sgn(x) cos(k0 x) outside.

This single mode spans the kernel direction that the solvability projection
removes; its image under L is compactly supported and carries the universal
sin-moment D'(k0) = -2 c^2 k0 + 2 regardless of the cutoff details.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError
from .grid import GridProfile, Tail, make_grid
from .model import K0, ModelParams
from .steps import step9, step9_d1, step9_d2

_GX, _GW = leggauss(60)


@dataclass(frozen=True)
class OscMode:
    """u_o(x) = sgn(x) chi(|x|) cos(k0 x) with a C^4 gate chi on [x_a, x_b]."""

    x_a: float = 0.25
    x_b: float = 0.75

    def __post_init__(self):
        if not (0.0 < self.x_a < self.x_b < 1.0):
            raise ConfigError("support must keep L u_o compact in [-2,2]: need 0 < x_a < x_b < 1")

    def _gate(self, t, order: int = 0):
        w = self.x_b - self.x_a
        s = (t - self.x_a) / w
        if order == 0:
            return step9(s)
        if order == 1:
            return step9_d1(s) / w
        return step9_d2(s) / w**2

    def value(self, x):
        x = np.asarray(x, dtype=float)
        xa = np.abs(x)
        return np.sign(x) * self._gate(xa) * np.cos(K0 * xa)

    def d1(self, x):
        """First derivative; even since u_o is odd."""
        x = np.asarray(x, dtype=float)
        xa = np.abs(x)
        return self._gate(xa, 1) * np.cos(K0 * xa) - self._gate(xa) * K0 * np.sin(K0 * xa)

    def d2(self, x):
        x = np.asarray(x, dtype=float)
        xa = np.abs(x)
        cs, sn = np.cos(K0 * xa), np.sin(K0 * xa)
        val = self._gate(xa, 2) * cs - 2.0 * self._gate(xa, 1) * K0 * sn - self._gate(xa) * K0**2 * cs
        return np.sign(x) * val

    def L_values(self, x, p: ModelParams) -> np.ndarray:
        """(L u_o)(x) from the analytic second derivative and exact unit shifts."""
        x = np.asarray(x, dtype=float)
        return p.c**2 * self.d2(x) - (self.value(x + 1.0) - 2.0 * self.value(x) + self.value(x - 1.0)) + p.alpha * self.value(x)

    def as_profile(self, x_max: float, inv_h: int) -> GridProfile:
        xs = make_grid(x_max, inv_h)
        tail = Tail(mean=0.0, freq=K0, cos_amps=(1.0,))
        return GridProfile(x_max, inv_h, self.value(xs), tail_plus=tail, tail_minus=tail.mirror_odd(), odd=True)

    def L_profile(self, x_max: float, inv_h: int, p: ModelParams) -> GridProfile:
        xs = make_grid(x_max, inv_h)
        zero = Tail(0.0, K0)
        return GridProfile(x_max, inv_h, self.L_values(xs, p), tail_plus=zero, tail_minus=zero, odd=True)

    def sin_moment_of_L(self, p: ModelParams) -> float:
        """integral of sin(k0 x) (L u_o)(x) dx by piecewise Gauss quadrature.

        The integrand is even and supported in |x| <= x_b + 1; it is integrated
        analytically piece by piece between the gate seams and their unit
        shifts, which makes the quadrature exact to machine precision.
        """
        seams = sorted({0.0, self.x_a, self.x_b, 1.0 - self.x_b, 1.0 - self.x_a, 1.0, self.x_a + 1.0, self.x_b + 1.0})
        total = 0.0
        for a, b in zip(seams[:-1], seams[1:]):
            if b <= a:
                continue
            mid, rad = 0.5 * (a + b), 0.5 * (b - a)
            xx = mid + rad * _GX
            total += rad * float(np.dot(_GW, np.sin(K0 * xx) * self.L_values(xx, p)))
        return 2.0 * total
