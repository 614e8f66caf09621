"""Eighth-order central finite differences of evaluable sources."""

import numpy as np

FIRST = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
SECOND = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_OFFSETS = np.arange(-4, 5)


def fine_step(spacing):
    """Auxiliary step: a quarter of the grid spacing, capped at 1/256."""
    return min(spacing, 1.0 / 64) / 4.0


def d_dx(source, t, x, step, order=1):
    """``order``-th x-derivative of ``source`` at broadcastable ``(t, x)``."""
    weights = FIRST if order == 1 else SECOND
    t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
    out = np.zeros(t.shape)
    for w, off in zip(weights, _OFFSETS):
        if w:
            out += w * source.evaluate(t, x + off * step)
    return out / step**order


def d_dt(source, t, x, step):
    t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
    out = np.zeros(t.shape)
    for w, off in zip(FIRST, _OFFSETS):
        if w:
            out += w * source.evaluate(t + off * step, x)
    return out / step
