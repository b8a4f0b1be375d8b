"""Independent reference computations used by the test suite.

Nothing here reuses the package's quadrature: nested integrals are done
by brute-force Gauss-Legendre sums, inverses by ODE integration or plain
bisection, and the classical Laplacian solution by shooting.
"""
from __future__ import annotations

from math import factorial

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import PchipInterpolator

GL_POINTS = 4


def sinh_over_r(r, terms=60):
    """sinh(r)/r by its power series sum r^(2k) / (2k+1)!."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for k in range(terms):
        out += r ** (2 * k) / factorial(2 * k + 1)
    return out


def _gl_panels(breaks, q=GL_POINTS):
    """GL points and weights on each panel [breaks[j], breaks[j+1]]."""
    x, w = np.polynomial.legendre.leggauss(q)
    a, b = breaks[:-1, None], breaks[1:, None]
    pts = 0.5 * (b - a) * x + 0.5 * (a + b)
    wts = 0.5 * (b - a) * w
    return pts, wts


def bisect_inverse(psi, s, iters=200):
    """Solve psi(t) = s elementwise by bisection on [0, hi], hi found by doubling."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    lo = np.zeros_like(s)
    hi = np.ones_like(s)
    for _ in range(2000):
        grow = np.asarray(psi(hi)) < s
        if not np.any(grow):
            break
        hi = np.where(grow, hi * 2, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = np.asarray(psi(np.maximum(mid, 1e-300))) < s
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            break
    return np.where(s > 0, 0.5 * (lo + hi), 0.0)


def nested_radial(model, N, sigma, g, R, n, psi_inv=None, q=GL_POINTS):
    """Brute-force P(r) = int_0^r psi^-1( xi(z)^-1 int_0^z xi g ) dz at r_k = R k / n.

    ``sigma`` and ``g`` are vectorized callables.  Every outer GL point sums
    the inner integrand over all inner points below it (an O(n^2) dense
    masked sum) plus a GL rule on its own partial panel.
    """
    psi_inv = psi_inv or (lambda s: bisect_inverse(model.psi, s))
    breaks = np.linspace(0.0, R, n + 1)
    zp, zw = _gl_panels(breaks, q)                 # outer points (n, q)
    flat_t = zp.ravel()
    flat_w = zw.ravel()
    panel_of = np.repeat(np.arange(n), q)

    def locate(z):
        return np.clip(np.searchsorted(breaks, z, side="right") - 1, 0, n - 1)

    def partial(fun, z, j):
        pp, pw = _gl_panels(np.stack([breaks[j], z]).T.reshape(-1), q)
        pp, pw = pp[::2], pw[::2]                           # panels [b_j, z]
        return (fun(pp.ravel()).reshape(pp.shape) * pw).sum(axis=1)

    def S(t):
        # int_0^t sigma via cumulative panel sums plus the partial panel
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        j = locate(flat)
        full = np.concatenate([[0.0], np.cumsum((sigma(zp) * zw).sum(axis=1))])
        return (full[j] + partial(sigma, flat, j)).reshape(t.shape)

    def xi(t):
        return t ** (N - 1) * np.exp(S(t))

    def integrand(t):
        return xi(t) * g(t)

    def prefix(fun, z):
        # every outer point sums all inner points of earlier panels: dense O(n^2)
        j = locate(z)
        mask = panel_of[None, :] < j[:, None]
        full = mask.astype(float) @ (fun(flat_t) * flat_w)
        return full + partial(fun, z, j)

    z = flat_t
    inner = prefix(integrand, z) / xi(z)
    d = psi_inv(inner).reshape(n, q)
    panel = (d * zw).sum(axis=1)
    return breaks, np.concatenate([[0.0], np.cumsum(panel)])


def dense_function(breaks, values):
    return PchipInterpolator(breaks, values)


def z_inverse_ode(spec, y):
    """Z^-1(y) by integrating dt/dy = thetabar1(f1(t,t)) + thetabar2(f2(t,t))."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m1, m2 = spec.model1, spec.model2

    def rhs(_, t):
        tt = np.array([t[0]])
        return [float(m1.theta_upper(spec.f1(tt, tt))[0] + m2.theta_upper(spec.f2(tt, tt))[0])]

    order = np.argsort(y)
    top = float(y.max())
    if top == 0:
        return np.full_like(y, spec.a1 + spec.a2)
    sol = solve_ivp(rhs, (0.0, top), [spec.a1 + spec.a2], dense_output=True,
                    rtol=1e-11, atol=1e-12, method="DOP853")
    out = np.empty_like(y)
    out[order] = sol.sol(y[order])[0]
    return out


def quad_prefix(g, a, x):
    """int_a^x g by adaptive quadrature (log-substitution for wide ranges)."""
    val, _ = quad(lambda s: g(np.exp(s)) * np.exp(s), np.log(a), np.log(x),
                  epsabs=0, epsrel=1e-12, limit=400)
    return val


def shoot_laplacian(p1, p2, f1, f2, a1, a2, R, r_eval):
    """Classical Laplacian in R^3: u'' + (2/r) u' = p1 f1(u, v), same for v.

    Started off the singular point with the two-term Taylor expansion.
    """
    r0 = 1e-6
    c1 = p1(0.0) * f1(a1, a2) / 6.0
    c2 = p2(0.0) * f2(a1, a2) / 6.0
    y0 = [a1 + c1 * r0 * r0, 2 * c1 * r0, a2 + c2 * r0 * r0, 2 * c2 * r0]

    def rhs(r, y):
        u, du, v, dv = y
        return [du, p1(r) * f1(u, v) - 2 * du / r, dv, p2(r) * f2(u, v) - 2 * dv / r]

    sol = solve_ivp(rhs, (r0, R), y0, t_eval=np.clip(r_eval, r0, R), rtol=1e-11,
                    atol=1e-13, method="DOP853")
    return sol.y[0], sol.y[2]


def relative_sup(impl, ref):
    impl, ref = np.asarray(impl, float), np.asarray(ref, float)
    scale = np.max(np.abs(ref))
    if scale == 0:
        return float(np.max(np.abs(impl)))
    return float(np.max(np.abs(impl - ref)) / scale)


def oracle_tables(spec, R, n, q=GL_POINTS):
    """Brute-force P_i, Pbar_i, Punder_i at the uniform nodes R k / n."""
    out = {}
    P_fun = {}
    for i in (1, 2):
        model = spec.model(i)
        sig = spec.sigma(i)
        p = spec.p(i)
        # P on a finer uniform grid, then monotone interpolation for inner use
        fine_b, fine_v = nested_radial(model, spec.N, sig, p, R, 2 * n, q=q)
        P_fun[i] = dense_function(fine_b, fine_v)
        out[f"P{i}"] = fine_v[::2]

    def zinv_of_P(t):
        return z_inverse_ode(spec, P_fun[1](t) + P_fun[2](t))

    for i in (1, 2):
        model, sig, p, f = spec.model(i), spec.sigma(i), spec.p(i), spec.f(i)
        if f.has_decomposition:
            def gbar(t, p=p, f=f):
                return p(t) * f.fbar(1.0 + zinv_of_P(t))
            out[f"Pbar{i}"] = nested_radial(model, spec.N, sig, gbar, R, n, q=q)[1]
        if i == 1:
            c = float(spec.f2(spec.a1, spec.a2))
            e_lo, e_hi = spec.model2.theta_exponents

            def gunder(t):
                k = min(c ** (1 / e_hi), c ** (1 / e_lo))
                return spec.p1(t) * spec.f1(spec.a1, spec.a2 + k * P_fun[2](t))
        else:
            c = float((spec.f1 if spec.punder_variant == "notation" else spec.f2)(spec.a1, spec.a2))
            e_lo, e_hi = spec.model1.theta_exponents

            def gunder(t):
                k = min(c ** (1 / e_hi), c ** (1 / e_lo))
                return spec.p2(t) * spec.f2(spec.a1 + k * P_fun[1](t), spec.a2)
        out[f"Punder{i}"] = nested_radial(model, spec.N, sig, gunder, R, n, q=q)[1]
    return out
