"""Smoothed two-well on-site potentials.

The force of the on-site potential is  alpha (u - psi'(u))  with psi' an odd
smoothing of the sign function: psi' = sgn outside [-eps, eps], a monotone
mollified transition inside.  The smoothing is a convolution of sgn with a
plateau bump eta of unit mass supported in [-1, 1], rescaled to width eps, so
that all derivatives of psi' vanish identically outside the core and

    |psi''| = 2 sup(eta) / eps < 2 / eps.

An optional "anharmonic tail" perturbs psi' away from sgn outside the core
(gain * eps * q(u), q odd and gated away from the core), making the wells
genuinely anharmonic while keeping every bound eps-proportional.

For eps = 0 the exact sign function is returned (psi'(0) = 0; the value at
the jump never enters the solver).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, NumericalError
from .steps import step5, step5_d1, step5_d2, step5_d3, step9, step9_d1, step9_d2, step9_d3, step9_d4

# plateau bump: eta(s) = step5((1-|s|)/RAMP)/Z on [-1,1]; flat for |s| <= 1-RAMP
RAMP = 0.3
Z_ETA = 2.0 * (1.0 - RAMP + 0.5 * RAMP)  # integral of the unnormalised bump = 1.7
SUP_ETA = 1.0 / Z_ETA  # ~0.588 < 0.9

# anharmonic tail gate: q vanishes on [-Q_LO, Q_LO], fully on beyond Q_HI.
# Q_HI sits below the lowest point of the wave-train orbits actually used by
# the solver (v >= 1 - a2 = 0.35), so on those orbits q is the pure
# sine and the train mean shift stays O(eps^2).
Q_LO, Q_HI = 0.05, 0.32


def _eta(s):
    return step5((1.0 - np.abs(s)) / RAMP) / Z_ETA


def _eta_d1(s):
    return -np.sign(s) * step5_d1((1.0 - np.abs(s)) / RAMP) / (RAMP * Z_ETA)


def _eta_d2(s):
    return step5_d2((1.0 - np.abs(s)) / RAMP) / (RAMP**2 * Z_ETA)


def _eta_d3(s):
    return -np.sign(s) * step5_d3((1.0 - np.abs(s)) / RAMP) / (RAMP**3 * Z_ETA)


def _eta_cdf(t):
    """N(t) = integral of eta over (-inf, t]; piecewise polynomial."""
    t = np.asarray(t, dtype=float)
    u_lo = np.clip((1.0 + t) / RAMP, 0.0, 1.0)
    u_hi = np.clip((1.0 - t) / RAMP, 0.0, 1.0)

    def _istep5(u):
        return u**4 * (2.5 + u * (-3.0 + u))

    low = RAMP * _istep5(u_lo)                      # ramp-in part
    mid = np.clip(t + 1.0 - RAMP, 0.0, 2.0 * (1.0 - RAMP))  # plateau part
    high = RAMP * (0.5 - _istep5(u_hi))             # ramp-out part, active for t > 1-RAMP
    high = np.where(t > 1.0 - RAMP, high, 0.0)
    return (low + mid + high) / Z_ETA


# mean of (2N-1) over the core, used by the analytic antiderivative of psi'
_GX, _GW = leggauss(48)
_PSI_CORE = float(np.dot(_GW, 2.0 * _eta_cdf(0.5 * (_GX + 1.0)) - 1.0) * 0.5)


def _tail_q(u, order: int = 0):
    """Odd perturbation profile q and derivatives; zero on [-Q_LO, Q_LO]."""
    u = np.asarray(u, dtype=float)
    ua, sg = np.abs(u), np.sign(u)
    w = Q_HI - Q_LO
    t = (ua - Q_LO) / w
    g = [step9(t), step9_d1(t) / w, step9_d2(t) / w**2, step9_d3(t) / w**3, step9_d4(t) / w**4]
    pi = np.pi
    s, cS = np.sin(pi * (ua - 1.0)), np.cos(pi * (ua - 1.0))
    if order == 0:
        val = g[0] * s
    elif order == 1:
        val = g[1] * s + g[0] * pi * cS
    elif order == 2:
        val = g[2] * s + 2 * g[1] * pi * cS - g[0] * pi**2 * s
    elif order == 3:
        val = g[3] * s + 3 * g[2] * pi * cS - 3 * g[1] * pi**2 * s - g[0] * pi**3 * cS
    elif order == 4:
        val = g[4] * s + 4 * g[3] * pi * cS - 6 * g[2] * pi**2 * s - 4 * g[1] * pi**3 * cS + g[0] * pi**4 * s
    else:  # pragma: no cover
        raise ValueError(order)
    # q is odd, so its even-order derivatives are odd in u
    return val * sg if order % 2 == 0 else val


@dataclass(frozen=True)
class PotentialSpec:
    """Pointwise evaluators for psi', ..., psi^(5) with certified bounds."""

    epsilon: float
    gain: float = 0.0
    certified_C: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 0.5):
            raise ConfigError("epsilon out of range")
        if self.gain != 0.0 and self.epsilon > Q_LO:
            raise ConfigError(f"anharmonic tail requires epsilon <= {Q_LO}")

    @property
    def core_halfwidth(self) -> float:
        return self.epsilon

    def dpsi(self, u):
        u = np.asarray(u, dtype=float)
        if self.epsilon == 0.0:
            out = np.sign(u)
        else:
            inside = np.abs(u) < self.epsilon
            out = np.where(inside, 2.0 * _eta_cdf(u / self.epsilon) - 1.0, np.sign(u))
        if self.gain:
            out = out + self.gain * self.epsilon * _tail_q(u, 0)
        return out

    def d2psi(self, u):
        u = np.asarray(u, dtype=float)
        if self.epsilon == 0.0:
            return np.zeros_like(u)
        out = 2.0 * _eta(u / self.epsilon) / self.epsilon
        if self.gain:
            out = out + self.gain * self.epsilon * _tail_q(u, 1)
        return out

    def d3psi(self, u):
        u = np.asarray(u, dtype=float)
        if self.epsilon == 0.0:
            return np.zeros_like(u)
        out = 2.0 * _eta_d1(u / self.epsilon) / self.epsilon**2
        if self.gain:
            out = out + self.gain * self.epsilon * _tail_q(u, 2)
        return out

    def d4psi(self, u):
        u = np.asarray(u, dtype=float)
        if self.epsilon == 0.0:
            return np.zeros_like(u)
        out = 2.0 * _eta_d2(u / self.epsilon) / self.epsilon**3
        if self.gain:
            out = out + self.gain * self.epsilon * _tail_q(u, 3)
        return out

    def d5psi(self, u):
        u = np.asarray(u, dtype=float)
        if self.epsilon == 0.0:
            return np.zeros_like(u)
        out = 2.0 * _eta_d3(u / self.epsilon) / self.epsilon**4
        if self.gain:
            out = out + self.gain * self.epsilon * _tail_q(u, 4)
        return out

    def psi(self, u):
        """Antiderivative with psi(0) = 0 (even double-well shape).

        Needed only by energy diagnostics; the solver itself uses psi' alone.
        """
        u = np.asarray(u, dtype=float)
        ua = np.abs(u)
        eps = self.epsilon
        if eps == 0.0:
            out = ua.copy()
        else:
            out = np.where(ua >= eps, eps * _PSI_CORE + (ua - eps), 0.0)
            inside = ua < eps
            if np.any(inside):
                t = ua[inside]
                # Gauss quadrature of psi'_core on [0, t] per point
                nodes = 0.5 * t[:, None] * (_GX[None, :] + 1.0)
                vals = 2.0 * _eta_cdf(nodes / eps) - 1.0
                out[inside] = 0.5 * t * (vals @ _GW)
        if self.gain:
            span = np.clip(ua - Q_LO, 0.0, None)
            nodes = Q_LO + 0.5 * span[..., None] * (_GX + 1.0)
            out = out + self.gain * eps * 0.5 * span * (_tail_q(nodes, 0) @ _GW)
        return out


def make_mollified_sign(epsilon: float) -> PotentialSpec:
    """Smoothed sign force profile of core width ``epsilon`` (0 gives exact sgn)."""
    if not (0.0 <= epsilon < 0.5):
        raise ConfigError("epsilon out of range")
    spec = PotentialSpec(epsilon=epsilon)
    report = certify_bounds(spec, C=1.0)
    if not report["passed"]:
        raise NumericalError(f"mollified sign failed certification: {report}")
    return replace(spec, certified_C=report["smallest_C"])


def add_anharmonic_tail(spec: PotentialSpec, gain: float, C_recert: float = 1.0e5) -> PotentialSpec:
    """Perturb psi' by gain * eps * q(u) and re-certify the bounds.

    |gain| <= 1.  The perturbation is odd, vanishes with four derivatives on
    the core, and keeps every outside bound proportional to eps with an
    eps-independent constant (re-certified; the constant ~6e4 is dominated by
    the fourth derivative of the gate over its 0.3-wide ramp).
    """
    if abs(gain) > 1.0:
        raise ConfigError("|gain| must be <= 1")
    out = replace(spec, gain=gain)
    if gain == 0.0:
        return out
    report = certify_bounds(out, C=C_recert)
    if not report["passed"]:
        raise NumericalError("perturbation violates certified potential bounds: " + str(report))
    return replace(out, certified_C=report["smallest_C"])


def certify_bounds(spec: PotentialSpec, C: float = 1.0, grid_n: int = 20001) -> dict:
    """Sample the defining bounds of the potential on [-3, 3].

    Checks, for eps > 0:
      * |psi''(u)| <= 2/eps on |u| < eps,
      * |psi'(u) - sgn(u)| < C eps on |u| >= eps,
      * |psi^(j)(u)| < C eps on |u| >= eps for j = 2..5,
    and reports the worst point of each along with the smallest C that would
    pass all the outside conditions.
    """
    if grid_n < 10**4:
        raise ConfigError("grid_n must be at least 1e4")
    eps = spec.epsilon
    u = np.linspace(-3.0, 3.0, grid_n)
    conditions: dict[str, dict] = {}

    def record(name, uu, vals, bound):
        if len(uu) == 0:
            conditions[name] = {"passed": True, "worst_value": 0.0, "worst_point": None, "bound": bound}
            return 0.0
        i = int(np.argmax(vals))
        conditions[name] = {
            "passed": bool(vals[i] <= bound),
            "worst_value": float(vals[i]),
            "worst_point": float(uu[i]),
            "bound": float(bound),
        }
        return float(vals[i])

    if eps > 0.0:
        core = u[np.abs(u) < eps]
        # always include the centre where the bump peaks
        core = np.unique(np.concatenate([core, np.linspace(-eps, eps, 501)[1:-1]]))
        record("second_derivative_core", core, np.abs(spec.d2psi(core)), 2.0 / eps)
    else:
        conditions["second_derivative_core"] = {"passed": True, "worst_value": 0.0, "worst_point": None, "bound": np.inf}

    outside = u[np.abs(u) >= max(eps, 1e-300)]
    sup_scaled = []
    vals = np.abs(spec.dpsi(outside) - np.sign(outside))
    sup_scaled.append(record("force_gap_outside", outside, vals, C * eps))
    for j, f in ((2, spec.d2psi), (3, spec.d3psi), (4, spec.d4psi), (5, spec.d5psi)):
        sup_scaled.append(record(f"derivative_{j}_outside", outside, np.abs(f(outside)), C * eps))

    smallest = max(sup_scaled) / eps if eps > 0 else 0.0
    return {
        "passed": all(c["passed"] for c in conditions.values()),
        "conditions": conditions,
        "smallest_C": float(smallest),
        "C": float(C),
        "epsilon": float(eps),
        "gain": float(spec.gain),
    }
