"""Vectorized numpy path: the same per-site arithmetic applied to whole rows."""
import numpy as np

from ._math import (adjoint_body, adjoint_forward_body, step_body, tangent_body,
                    tangent_inverse_body)


def rk_step(y0, y1, y2, y3, pr, pi, qr, qi, g, h):
    r = step_body(y0, y1, y2, y3, pr, pi, qr, qi, g, h)
    y0[:], y1[:], y2[:], y3[:] = r[0], r[1], r[2], r[3]


def rk_step_rec(y0, y1, y2, y3, o0, o1, o2, o3, pr, pi, qr, qi, g, h):
    o0[:], o1[:], o2[:], o3[:] = y0, y1, y2, y3
    rk_step(y0, y1, y2, y3, pr, pi, qr, qi, g, h)


def rk_tangent(d0, d1, d2, d3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    r = tangent_body(d0, d1, d2, d3, x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    d0[:], d1[:], d2[:], d3[:] = r


def rk_adjoint(w0, w1, w2, w3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    r = adjoint_body(w0, w1, w2, w3, x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    w0[:], w1[:], w2[:], w3[:] = r


def rk_tangent_inverse(d0, d1, d2, d3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    r = tangent_inverse_body(d0, d1, d2, d3, x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    d0[:], d1[:], d2[:], d3[:] = r


def rk_adjoint_forward(w0, w1, w2, w3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    r = adjoint_forward_body(w0, w1, w2, w3, x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    w0[:], w1[:], w2[:], w3[:] = r


def intensity_stats(y0, y1, y2, y3):
    v = y0 * y0 + y1 * y1 + y2 * y2 + y3 * y3
    # cumulative sum is sequential, matching the loop in the numba path
    total = float(np.cumsum(v)[-1]) if v.size else 0.0
    where = int(np.argmax(v)) if v.size else 0
    if not (total < 1e300):
        return np.nan, where, np.nan
    return (float(v[where]) if v.size else 0.0), where, total
