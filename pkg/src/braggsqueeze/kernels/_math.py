"""Per-site arithmetic shared by both kernel backends.

Every function here works equally on Python floats (called per site from the
numba loops) and on numpy arrays (called once per half-step by the numpy
path).  Complex quantities are carried as explicit real/imaginary parts:
``(a_re, a_im, b_re, b_im)``.

The local problem at one site is

    d/dtau (a, b) = i [[delta, kappa], [kappa, delta]] (a, b) + N(a, b)
    N(a, b)       = i gamma ((|a|^2 + 2|b|^2) a, (|b|^2 + 2|a|^2) b)

integrated over ``h`` by the fourth-order Runge-Kutta method in the
interaction picture of the linear part.  ``p`` and ``q`` are the entries of
the linear propagator over ``h/2``:  E = [[p, q], [q, p]].
"""


def mix(pr, pi, qr, qi, a0, a1, b0, b1):
    """E @ (a, b)."""
    return (pr * a0 - pi * a1 + qr * b0 - qi * b1,
            pr * a1 + pi * a0 + qr * b1 + qi * b0,
            qr * a0 - qi * a1 + pr * b0 - pi * b1,
            qr * a1 + qi * a0 + pr * b1 + pi * b0)


def kerr(g, a0, a1, b0, b1):
    ia = a0 * a0 + a1 * a1
    ib = b0 * b0 + b1 * b1
    fa = g * (ia + 2.0 * ib)
    fb = g * (ib + 2.0 * ia)
    return -fa * a1, fa * a0, -fb * b1, fb * b0


def kerr_jvp(g, x0, x1, x2, x3, d0, d1, d2, d3):
    """Jacobian of ``kerr`` at x applied to d (real-linear, not complex-linear)."""
    ia = x0 * x0 + x1 * x1
    ib = x2 * x2 + x3 * x3
    fa = g * (ia + 2.0 * ib)
    fb = g * (ib + 2.0 * ia)
    ra = x0 * d0 + x1 * d1
    rb = x2 * d2 + x3 * d3
    dfa = g * (2.0 * ra + 4.0 * rb)
    dfb = g * (2.0 * rb + 4.0 * ra)
    return (-(fa * d1 + x1 * dfa), fa * d0 + x0 * dfa,
            -(fb * d3 + x3 * dfb), fb * d2 + x2 * dfb)


def kerr_vjp(g, x0, x1, x2, x3, w0, w1, w2, w3):
    """Transpose of ``kerr_jvp`` with respect to Re<u, v>."""
    ia = x0 * x0 + x1 * x1
    ib = x2 * x2 + x3 * x3
    fa = g * (ia + 2.0 * ib)
    fb = g * (ib + 2.0 * ia)
    ta = g * (w1 * x0 - w0 * x1)
    tb = g * (w3 * x2 - w2 * x3)
    sa = 2.0 * ta + 4.0 * tb
    sb = 2.0 * tb + 4.0 * ta
    return (fa * w1 + x0 * sa, -fa * w0 + x1 * sa,
            fb * w3 + x2 * sb, -fb * w2 + x3 * sb)


def step_body(x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    """One RK4IP step of length h.

    Returns the new state followed by the three later stage points at which
    the nonlinearity is evaluated (the first is the input itself).
    """
    h2 = 0.5 * h
    h6 = h / 6.0
    u0, u1, u2, u3 = mix(pr, pi, qr, qi, x0, x1, x2, x3)
    n0, n1, n2, n3 = kerr(g, x0, x1, x2, x3)
    a0, a1, a2, a3 = mix(pr, pi, qr, qi, n0, n1, n2, n3)
    s0, s1, s2, s3 = u0 + h2 * a0, u1 + h2 * a1, u2 + h2 * a2, u3 + h2 * a3
    b0, b1, b2, b3 = kerr(g, s0, s1, s2, s3)
    t0, t1, t2, t3 = u0 + h2 * b0, u1 + h2 * b1, u2 + h2 * b2, u3 + h2 * b3
    c0, c1, c2, c3 = kerr(g, t0, t1, t2, t3)
    v0, v1, v2, v3 = mix(pr, pi, qr, qi, u0 + h * c0, u1 + h * c1, u2 + h * c2, u3 + h * c3)
    d0, d1, d2, d3 = kerr(g, v0, v1, v2, v3)
    o0, o1, o2, o3 = mix(pr, pi, qr, qi,
                         u0 + h6 * (a0 + 2.0 * b0 + 2.0 * c0),
                         u1 + h6 * (a1 + 2.0 * b1 + 2.0 * c1),
                         u2 + h6 * (a2 + 2.0 * b2 + 2.0 * c2),
                         u3 + h6 * (a3 + 2.0 * b3 + 2.0 * c3))
    return (o0 + h6 * d0, o1 + h6 * d1, o2 + h6 * d2, o3 + h6 * d3,
            s0, s1, s2, s3, t0, t1, t2, t3, v0, v1, v2, v3)


def tangent_body(d0, d1, d2, d3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    """Derivative of ``step_body`` at background x, applied to d.

    Stage points are recomputed from x; this is cheaper than storing them.
    """
    st = step_body(x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    return tangent_core(d0, d1, d2, d3, x0, x1, x2, x3, st[4], st[5], st[6], st[7],
                        st[8], st[9], st[10], st[11], st[12], st[13], st[14], st[15],
                        pr, pi, qr, qi, g, h)


def tangent_core(d0, d1, d2, d3, x0, x1, x2, x3, s0, s1, s2, s3, t0, t1, t2, t3,
                 v0, v1, v2, v3, pr, pi, qr, qi, g, h):
    h2 = 0.5 * h
    h6 = h / 6.0
    u0, u1, u2, u3 = mix(pr, pi, qr, qi, d0, d1, d2, d3)
    j0, j1, j2, j3 = kerr_jvp(g, x0, x1, x2, x3, d0, d1, d2, d3)
    a0, a1, a2, a3 = mix(pr, pi, qr, qi, j0, j1, j2, j3)
    b0, b1, b2, b3 = kerr_jvp(g, s0, s1, s2, s3,
                              u0 + h2 * a0, u1 + h2 * a1, u2 + h2 * a2, u3 + h2 * a3)
    c0, c1, c2, c3 = kerr_jvp(g, t0, t1, t2, t3,
                              u0 + h2 * b0, u1 + h2 * b1, u2 + h2 * b2, u3 + h2 * b3)
    m0, m1, m2, m3 = mix(pr, pi, qr, qi, u0 + h * c0, u1 + h * c1, u2 + h * c2, u3 + h * c3)
    k0, k1, k2, k3 = kerr_jvp(g, v0, v1, v2, v3, m0, m1, m2, m3)
    o0, o1, o2, o3 = mix(pr, pi, qr, qi,
                         u0 + h6 * (a0 + 2.0 * b0 + 2.0 * c0),
                         u1 + h6 * (a1 + 2.0 * b1 + 2.0 * c1),
                         u2 + h6 * (a2 + 2.0 * b2 + 2.0 * c2),
                         u3 + h6 * (a3 + 2.0 * b3 + 2.0 * c3))
    return o0 + h6 * k0, o1 + h6 * k1, o2 + h6 * k2, o3 + h6 * k3


def adjoint_body(w0, w1, w2, w3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    """Transpose of ``tangent_body`` with respect to Re<u, v>."""
    st = step_body(x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    s0, s1, s2, s3, t0, t1, t2, t3, v0, v1, v2, v3 = st[4:]
    h2 = 0.5 * h
    h3 = h / 3.0
    h6 = h / 6.0
    # E^H is E with conjugated entries
    e0, e1, e2, e3 = mix(pr, -pi, qr, -qi, w0, w1, w2, w3)
    k0, k1, k2, k3 = kerr_vjp(g, v0, v1, v2, v3, h6 * w0, h6 * w1, h6 * w2, h6 * w3)
    m0, m1, m2, m3 = mix(pr, -pi, qr, -qi, k0, k1, k2, k3)
    u0, u1, u2, u3 = e0 + m0, e1 + m1, e2 + m2, e3 + m3
    c0, c1, c2, c3 = kerr_vjp(g, t0, t1, t2, t3,
                              h3 * e0 + h * m0, h3 * e1 + h * m1,
                              h3 * e2 + h * m2, h3 * e3 + h * m3)
    u0, u1, u2, u3 = u0 + c0, u1 + c1, u2 + c2, u3 + c3
    b0, b1, b2, b3 = kerr_vjp(g, s0, s1, s2, s3,
                              h3 * e0 + h2 * c0, h3 * e1 + h2 * c1,
                              h3 * e2 + h2 * c2, h3 * e3 + h2 * c3)
    u0, u1, u2, u3 = u0 + b0, u1 + b1, u2 + b2, u3 + b3
    a0, a1, a2, a3 = mix(pr, -pi, qr, -qi,
                         h6 * e0 + h2 * b0, h6 * e1 + h2 * b1,
                         h6 * e2 + h2 * b2, h6 * e3 + h2 * b3)
    j0, j1, j2, j3 = kerr_vjp(g, x0, x1, x2, x3, a0, a1, a2, a3)
    o0, o1, o2, o3 = mix(pr, -pi, qr, -qi, u0, u1, u2, u3)
    return o0 + j0, o1 + j1, o2 + j2, o3 + j3


def tangent_matrix(x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    """The 4x4 real tangent map of one step, row-major: m[4*i + j] = d out_i / d in_j."""
    st = step_body(x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    s0, s1, s2, s3, t0, t1, t2, t3, v0, v1, v2, v3 = st[4:]
    c0 = tangent_core(1.0, 0.0, 0.0, 0.0, x0, x1, x2, x3, s0, s1, s2, s3, t0, t1, t2, t3,
                      v0, v1, v2, v3, pr, pi, qr, qi, g, h)
    c1 = tangent_core(0.0, 1.0, 0.0, 0.0, x0, x1, x2, x3, s0, s1, s2, s3, t0, t1, t2, t3,
                      v0, v1, v2, v3, pr, pi, qr, qi, g, h)
    c2 = tangent_core(0.0, 0.0, 1.0, 0.0, x0, x1, x2, x3, s0, s1, s2, s3, t0, t1, t2, t3,
                      v0, v1, v2, v3, pr, pi, qr, qi, g, h)
    c3 = tangent_core(0.0, 0.0, 0.0, 1.0, x0, x1, x2, x3, s0, s1, s2, s3, t0, t1, t2, t3,
                      v0, v1, v2, v3, pr, pi, qr, qi, g, h)
    return (c0[0], c1[0], c2[0], c3[0],
            c0[1], c1[1], c2[1], c3[1],
            c0[2], c1[2], c2[2], c3[2],
            c0[3], c1[3], c2[3], c3[3])


def solve4(a00, a01, a02, a03, a10, a11, a12, a13, a20, a21, a22, a23, a30, a31, a32, a33,
           b0, b1, b2, b3):
    """Solve A x = b by elimination without pivoting.

    A step's tangent map is a small perturbation of a block rotation, so the
    leading pivots stay close to one for any resolved grid.
    """
    f = a10 / a00
    a11, a12, a13, b1 = a11 - f * a01, a12 - f * a02, a13 - f * a03, b1 - f * b0
    f = a20 / a00
    a21, a22, a23, b2 = a21 - f * a01, a22 - f * a02, a23 - f * a03, b2 - f * b0
    f = a30 / a00
    a31, a32, a33, b3 = a31 - f * a01, a32 - f * a02, a33 - f * a03, b3 - f * b0
    f = a21 / a11
    a22, a23, b2 = a22 - f * a12, a23 - f * a13, b2 - f * b1
    f = a31 / a11
    a32, a33, b3 = a32 - f * a12, a33 - f * a13, b3 - f * b1
    f = a32 / a22
    a33, b3 = a33 - f * a23, b3 - f * b2
    x3 = b3 / a33
    x2 = (b2 - a23 * x3) / a22
    x1 = (b1 - a12 * x2 - a13 * x3) / a11
    x0 = (b0 - a01 * x1 - a02 * x2 - a03 * x3) / a00
    return x0, x1, x2, x3


def tangent_inverse_body(d0, d1, d2, d3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    """Inverse of ``tangent_body``: undo one linearized step."""
    m = tangent_matrix(x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    return solve4(m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7],
                  m[8], m[9], m[10], m[11], m[12], m[13], m[14], m[15], d0, d1, d2, d3)


def adjoint_forward_body(w0, w1, w2, w3, x0, x1, x2, x3, pr, pi, qr, qi, g, h):
    """Inverse of ``adjoint_body``: one forward-in-time step of the adjoint system."""
    m = tangent_matrix(x0, x1, x2, x3, pr, pi, qr, qi, g, h)
    return solve4(m[0], m[4], m[8], m[12], m[1], m[5], m[9], m[13],
                  m[2], m[6], m[10], m[14], m[3], m[7], m[11], m[15], w0, w1, w2, w3)
