"""numba loops over sites; each site calls the shared arithmetic in ``_math``.

Loops run from zero over pre-sliced views so numba can drop negative-index
handling and LLVM vectorizes the body.
"""
import numba as nb
import numpy as np

from . import _math

_jit = nb.njit(inline="always", error_model="numpy")
_helpers = {name: _jit(getattr(_math, name)) for name in ("mix", "kerr", "kerr_jvp", "kerr_vjp")}


def _rebind(fn, extra):
    # the bodies look helpers up as module globals; point them at the jitted versions
    return _jit(type(fn)(fn.__code__, {**vars(_math), **extra}))


step_body = _rebind(_math.step_body, _helpers)
tangent_core = _rebind(_math.tangent_core, _helpers)
_bodies = {**_helpers, "step_body": step_body, "tangent_core": tangent_core}
tangent_body = _rebind(_math.tangent_body, _bodies)
adjoint_body = _rebind(_math.adjoint_body, _bodies)
tangent_matrix = _rebind(_math.tangent_matrix, _bodies)
solve4 = _jit(_math.solve4)
_bodies.update(tangent_matrix=tangent_matrix, solve4=solve4)
tangent_inverse_body = _rebind(_math.tangent_inverse_body, _bodies)
adjoint_forward_body = _rebind(_math.adjoint_forward_body, _bodies)


@nb.njit(boundscheck=False, cache=True, error_model="numpy")
def rk_step(y0, y1, y2, y3, pr, pi, qr, qi, g, h):
    for j in range(y0.shape[0]):
        r = step_body(y0[j], y1[j], y2[j], y3[j], pr[j], pi[j], qr[j], qi[j], g[j], h)
        y0[j] = r[0]
        y1[j] = r[1]
        y2[j] = r[2]
        y3[j] = r[3]


@nb.njit(boundscheck=False, cache=True, error_model="numpy")
def rk_step_rec(y0, y1, y2, y3, o0, o1, o2, o3, pr, pi, qr, qi, g, h):
    """``rk_step`` that first copies the incoming state into ``o0..o3``."""
    for j in range(y0.shape[0]):
        a0 = y0[j]
        a1 = y1[j]
        a2 = y2[j]
        a3 = y3[j]
        o0[j] = a0
        o1[j] = a1
        o2[j] = a2
        o3[j] = a3
        r = step_body(a0, a1, a2, a3, pr[j], pi[j], qr[j], qi[j], g[j], h)
        y0[j] = r[0]
        y1[j] = r[1]
        y2[j] = r[2]
        y3[j] = r[3]


@nb.njit(boundscheck=False, cache=True, error_model="numpy")
def rk_tangent(d0, d1, d2, d3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    for j in range(d0.shape[0]):
        r = tangent_body(d0[j], d1[j], d2[j], d3[j], x0[j], x1[j], x2[j], x3[j],
                         pr[j], pi[j], qr[j], qi[j], g[j], h)
        d0[j] = r[0]
        d1[j] = r[1]
        d2[j] = r[2]
        d3[j] = r[3]


@nb.njit(boundscheck=False, cache=True, error_model="numpy")
def rk_adjoint(w0, w1, w2, w3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    for j in range(w0.shape[0]):
        r = adjoint_body(w0[j], w1[j], w2[j], w3[j], x0[j], x1[j], x2[j], x3[j],
                         pr[j], pi[j], qr[j], qi[j], g[j], h)
        w0[j] = r[0]
        w1[j] = r[1]
        w2[j] = r[2]
        w3[j] = r[3]


def _site_loop(body):
    @nb.njit(boundscheck=False, cache=True, error_model="numpy")
    def loop(u0, u1, u2, u3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
        for j in range(u0.shape[0]):
            r = body(u0[j], u1[j], u2[j], u3[j], x0[j], x1[j], x2[j], x3[j],
                     pr[j], pi[j], qr[j], qi[j], g[j], h)
            u0[j] = r[0]
            u1[j] = r[1]
            u2[j] = r[2]
            u3[j] = r[3]
    return loop


rk_tangent_inverse = _site_loop(tangent_inverse_body)
rk_adjoint_forward = _site_loop(adjoint_forward_body)


@nb.njit(boundscheck=False, cache=True, error_model="numpy")
def intensity_stats(y0, y1, y2, y3):
    """Peak, its index and sum of |a|^2 + |b|^2; a non-finite entry makes the sum NaN."""
    peak = 0.0
    where = 0
    total = 0.0
    for j in range(y0.shape[0]):
        v = y0[j] * y0[j] + y1[j] * y1[j] + y2[j] * y2[j] + y3[j] * y3[j]
        if v > peak:
            peak = v
            where = j
        total += v
    if not (total < 1e300):
        return np.nan, where, np.nan
    return peak, where, total
