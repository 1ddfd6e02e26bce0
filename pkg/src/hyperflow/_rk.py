"""Dormand-Prince 5(4) embedded Runge-Kutta step with PI step-size control."""

from __future__ import annotations

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B5 = np.array(A[6] + (0.0,))
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

ORDER = 5
PI_ALPHA = 0.7 / ORDER
PI_BETA = 0.4 / ORDER


class LeftDomain(Exception):
    """A stage left the region where the right-hand side is defined."""


def dopri_step(rhs, y, f0, h, floor):
    """One step from ``y`` with derivative ``f0``.

    ``rhs(y)`` returns ``(dy/dt, extra)``; ``extra`` at the new point is handed
    back so callers can reuse whatever the right-hand side computed.  Raises
    :class:`LeftDomain` if any stage or the result has a component ``<= floor``.
    """
    k = [f0]
    extra = None
    for s in range(1, 7):
        ys = y + h * sum(a * ki for a, ki in zip(A[s], k) if a != 0.0)
        if np.min(ys) <= floor or not np.all(np.isfinite(ys)):
            raise LeftDomain
        ks, extra = rhs(ys)
        k.append(ks)
    # the 7th stage sits at the 5th-order solution (FSAL)
    y_new = ys
    err = h * sum(e * ki for e, ki in zip(E, k) if e != 0.0)
    return y_new, k[6], extra, err


def error_norm(err, y, y_new, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.max(np.abs(err) / scale))


def next_step(h, err, err_prev, safety, accepted: bool) -> float:
    if err == 0.0:
        return 5.0 * h
    if accepted:
        factor = safety * err ** (-PI_ALPHA) * err_prev ** PI_BETA
    else:
        factor = safety * err ** (-1.0 / ORDER)
    return h * min(5.0, max(0.2, factor))
