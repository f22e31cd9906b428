"""Polynomial smooth steps and their derivatives.

Two families are used throughout:

* ``step5`` -- the classic quintic step (C^2 at the junctions).  Used only
  inside the mollifier bump of the on-site potential, where no quadrature
  crosses its seams at high order.
* ``step9`` -- the 9th-order step with four vanishing derivatives at both
  ends (C^4).  Used for every structural cutoff (oscillatory mode u_o,
  amplitude/identity gates of the wave-train map), where C^4 regularity is
  required.
"""

from __future__ import annotations

import numpy as np


def step5(t):
    """Quintic smooth step: 0 for t<=0, 1 for t>=1, C^2 at the ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t**3 * (10.0 + t * (-15.0 + 6.0 * t))


def step5_d1(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    return np.where((t > 0) & (t < 1), 30.0 * tc**2 * (tc - 1.0) ** 2, 0.0)


def step5_d2(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    return np.where((t > 0) & (t < 1), 60.0 * tc * (tc - 1.0) * (2.0 * tc - 1.0), 0.0)


def step5_d3(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    return np.where((t > 0) & (t < 1), 60.0 * (6.0 * tc**2 - 6.0 * tc + 1.0), 0.0)


def step9(t):
    """9th-order smooth step: four derivatives vanish at t=0 and t=1 (C^4)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t**5 * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + 70.0 * t))))


def step9_d1(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    return np.where((t > 0) & (t < 1), 630.0 * tc**4 * (1.0 - tc) ** 4, 0.0)


def step9_d2(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    v = 2520.0 * tc**3 * (1.0 - tc) ** 3 * (1.0 - 2.0 * tc)
    return np.where((t > 0) & (t < 1), v, 0.0)


def step9_d3(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    v = tc**2 * (7560.0 + tc * (-50400.0 + tc * (113400.0 + tc * (-105840.0 + 35280.0 * tc))))
    return np.where((t > 0) & (t < 1), v, 0.0)


def step9_d4(t):
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    v = tc * (15120.0 + tc * (-151200.0 + tc * (453600.0 + tc * (-529200.0 + 211680.0 * tc))))
    return np.where((t > 0) & (t < 1), v, 0.0)


def gate9(t, lo: float, hi: float):
    """step9 rescaled to rise from 0 at ``lo`` to 1 at ``hi``."""
    return step9((np.asarray(t, dtype=float) - lo) / (hi - lo))


def step13(t):
    """13th-order smooth step: six derivatives vanish at both ends (C^6).

    Used for the gates of the pointwise train map, whose seams otherwise show
    up as localised stencil spikes in refined residuals.
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t**7 * (1716.0 + t * (-9009.0 + t * (20020.0 + t * (-24024.0 + t * (16380.0 + t * (-6006.0 + 924.0 * t))))))


def gate13(t, lo: float, hi: float):
    """step13 rescaled to rise from 0 at ``lo`` to 1 at ``hi``."""
    return step13((np.asarray(t, dtype=float) - lo) / (hi - lo))
