"""Area-preserving map of the plane that rotates a central square by -pi/2.

Construction on ``Delta = [-1, 1]**2`` for ``0 < eps < 1/2``:

* ``psi(p) = Lam(N(p)) p`` where ``N`` is the ``l^k`` gauge (``k`` even) and
  ``Lam`` ramps smoothly from ``1/5`` (for ``N <= a``) to ``1`` (for ``N >= b``).
  With ``a = 2**(1/k) (1 - 2 eps)`` and ``b = 1 - eps`` this is the identity off
  ``Delta(eps)`` and the scaling by ``1/5`` on ``Delta(2 eps)``.
* ``eta`` rotates the circle of radius ``rho`` by ``tau(rho)``, which is
  ``-pi/2`` inside ``R_in`` and ``0`` outside ``R_out``; it preserves area.
* ``phitilde = psi^{-1} o eta o psi`` has the right geometry but distorts
  area in the ramp; the Moser flow ``nu`` of the field ``X_t`` solving
  ``Omega_t(X_t, .) = beta`` repairs it, and the final map is
  ``phi = phitilde o nu``.

All per-point kernels are compiled with numba.  Points where ``N <= a`` or
``N >= b`` never enter the ramp formulas, so the rotation and identity
regions are reproduced exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import integrate

# parameter vector layout shared by all kernels
_EPS, _A, _B, _K, _RIN, _ROUT = range(6)


@numba.njit(cache=True, nogil=True)
def _step(t):
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    f = math.exp(-1.0 / t)
    g = math.exp(-1.0 / (1.0 - t))
    return f / (f + g)


@numba.njit(cache=True, nogil=True)
def _dstep(t):
    if t <= 0.0 or t >= 1.0:
        return 0.0
    f = math.exp(-1.0 / t)
    g = math.exp(-1.0 / (1.0 - t))
    s = f + g
    return f * g * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / (s * s)


@numba.njit(cache=True, nogil=True)
def _lam(n, prm):
    a, b = prm[_A], prm[_B]
    return 0.2 + 0.8 * _step((n - a) / (b - a))


@numba.njit(cache=True, nogil=True)
def _dlam(n, prm):
    a, b = prm[_A], prm[_B]
    return 0.8 * _dstep((n - a) / (b - a)) / (b - a)


@numba.njit(cache=True, nogil=True)
def _gauge(x, y, k):
    m = max(abs(x), abs(y))
    if m == 0.0:
        return 0.0
    kk = int(k)
    u, v = x / m, y / m
    return m * (u ** kk + v ** kk) ** (1.0 / kk)


@numba.njit(cache=True, nogil=True)
def _gauge_grad(x, y, k):
    m = max(abs(x), abs(y))
    kk = int(k)
    u, v = x / m, y / m
    s = u ** kk + v ** kk
    c = s ** ((kk - 1.0) / kk)
    return u ** (kk - 1) / c, v ** (kk - 1) / c


@numba.njit(cache=True, nogil=True)
def _psi(x, y, prm):
    lam = _lam(_gauge(x, y, prm[_K]), prm)
    return lam * x, lam * y


@numba.njit(cache=True, nogil=True)
def _dpsi(x, y, prm):
    n = _gauge(x, y, prm[_K])
    lam = _lam(n, prm)
    dl = _dlam(n, prm)
    if dl == 0.0:
        return lam, 0.0, 0.0, lam
    gx, gy = _gauge_grad(x, y, prm[_K])
    return lam + dl * x * gx, dl * x * gy, dl * y * gx, lam + dl * y * gy


@numba.njit(cache=True, nogil=True)
def _psi_inv(u, v, prm):
    a, b = prm[_A], prm[_B]
    s = _gauge(u, v, prm[_K])
    if s <= 0.2 * a:
        return 5.0 * u, 5.0 * v
    if s >= b:
        return u, v
    # solve t*Lam(t) = s on [a, b] (strictly increasing); safeguarded Newton
    lo, hi = a, b
    t = a + (b - a) * (s - 0.2 * a) / (b - 0.2 * a)
    for _ in range(100):
        g = t * _lam(t, prm) - s
        if g > 0.0:
            hi = t
        else:
            lo = t
        dg = _lam(t, prm) + t * _dlam(t, prm)
        tn = t - g / dg
        if not (lo < tn < hi):
            tn = 0.5 * (lo + hi)
        if abs(tn - t) <= 1e-16 * b:
            t = tn
            break
        t = tn
    lam = _lam(t, prm)
    return u / lam, v / lam


@numba.njit(cache=True, nogil=True)
def _tau(rho, prm):
    return -0.5 * math.pi * (1.0 - _step((rho - prm[_RIN]) / (prm[_ROUT] - prm[_RIN])))


@numba.njit(cache=True, nogil=True)
def _dtau(rho, prm):
    w = prm[_ROUT] - prm[_RIN]
    return 0.5 * math.pi * _dstep((rho - prm[_RIN]) / w) / w


@numba.njit(cache=True, nogil=True)
def _eta(x, y, prm, sign):
    rho = math.sqrt(x * x + y * y)
    if rho >= prm[_ROUT]:
        return x, y
    if rho <= prm[_RIN]:
        if sign > 0:
            return y, -x
        return -y, x
    t = sign * _tau(rho, prm)
    c, s = math.cos(t), math.sin(t)
    return c * x - s * y, s * x + c * y


@numba.njit(cache=True, nogil=True)
def _deta(x, y, prm):
    rho = math.sqrt(x * x + y * y)
    if rho >= prm[_ROUT]:
        return 1.0, 0.0, 0.0, 1.0
    t = _tau(rho, prm)
    c, s = math.cos(t), math.sin(t)
    if rho <= prm[_RIN]:
        return c, -s, s, c
    dt = _dtau(rho, prm) / rho
    # d/dtau (R q) = J R q with J the quarter turn
    rx, ry = c * x - s * y, s * x + c * y
    jx, jy = -ry, rx
    return c + dt * jx * x, -s + dt * jx * y, s + dt * jy * x, c + dt * jy * y


@numba.njit(cache=True, nogil=True)
def _phitilde(x, y, prm, sign):
    """``phitilde`` (sign=+1) or its inverse (sign=-1)."""
    n = _gauge(x, y, prm[_K])
    if n <= prm[_A]:
        if sign > 0:
            return y, -x
        return -y, x
    if n >= prm[_B]:
        return x, y
    w0, w1 = _psi(x, y, prm)
    z0, z1 = _eta(w0, w1, prm, sign)
    return _psi_inv(z0, z1, prm)


@numba.njit(cache=True, nogil=True)
def _phitilde_jac(x, y, prm):
    """``u, v, Du (row major), J = det Du`` of the forward ``phitilde``."""
    n = _gauge(x, y, prm[_K])
    if n <= prm[_A]:
        return y, -x, 0.0, 1.0, -1.0, 0.0, 1.0
    if n >= prm[_B]:
        return x, y, 1.0, 0.0, 0.0, 1.0, 1.0
    w0, w1 = _psi(x, y, prm)
    z0, z1 = _eta(w0, w1, prm, 1.0)
    u, v = _psi_inv(z0, z1, prm)
    p00, p01, p10, p11 = _dpsi(x, y, prm)
    e00, e01, e10, e11 = _deta(w0, w1, prm)
    q00, q01, q10, q11 = _dpsi(u, v, prm)
    dq = q00 * q11 - q01 * q10
    i00, i01, i10, i11 = q11 / dq, -q01 / dq, -q10 / dq, q00 / dq
    # M = E P, D = Q^{-1} M
    m00 = e00 * p00 + e01 * p10
    m01 = e00 * p01 + e01 * p11
    m10 = e10 * p00 + e11 * p10
    m11 = e10 * p01 + e11 * p11
    d00 = i00 * m00 + i01 * m10
    d01 = i00 * m01 + i01 * m11
    d10 = i10 * m00 + i11 * m10
    d11 = i10 * m01 + i11 * m11
    jac = (p00 * p11 - p01 * p10) / dq
    return u, v, d00, d01, d10, d11, jac


@numba.njit(cache=True, nogil=True)
def _keys(s):
    s = abs(s)
    if s <= 1.0:
        return (1.5 * s - 2.5) * s * s + 1.0
    if s < 2.0:
        return ((-0.5 * s + 2.5) * s - 4.0) * s + 2.0
    return 0.0


@numba.njit(cache=True, nogil=True)
def _field(t, x, y, prm, wt, wo, jt):
    """``X_t = w / rho_t`` with ``div w = 1 - J`` (tabulated minimal-flux primitive)."""
    a, b = prm[_A], prm[_B]
    n = _gauge(x, y, prm[_K])
    if n <= a or n >= b:
        return 0.0, 0.0
    kk = int(prm[_K])
    rho = math.hypot(x, y)
    c, s = x / rho, y / rho
    om = math.atan2(y, x)
    if om < 0.0:
        om += 2.0 * math.pi
    # the gauge is 1-homogeneous, so g(omega) = N / |p|
    g = n / rho
    dg = g ** (1.0 - kk) * (s ** (kk - 1) * c - c ** (kk - 1) * s)
    nt, no = wo.shape
    u = (n - a) / (b - a) * (nt - 1)
    v = om / (2.0 * math.pi) * no
    i0 = int(math.floor(u))
    j0 = int(math.floor(v))
    fu = u - i0
    fv = v - j0
    wv0, wv1, wv2, wv3 = _keys(fv + 1.0), _keys(fv), _keys(fv - 1.0), _keys(fv - 2.0)
    j_m, j_0, j_1, j_2 = (j0 - 1) % no, j0 % no, (j0 + 1) % no, (j0 + 2) % no
    radial = 0.0
    angular = 0.0
    jac = 0.0
    for di in range(-1, 3):
        i = i0 + di
        if i < 0 or i >= nt:
            continue
        wu = _keys(fu - di)
        radial += wt[i] * wu
        angular += wu * (wo[i, j_m] * wv0 + wo[i, j_0] * wv1 + wo[i, j_1] * wv2 + wo[i, j_2] * wv3)
        jac += wu * (jt[i, j_m] * wv0 + jt[i, j_0] * wv1 + jt[i, j_1] * wv2 + jt[i, j_2] * wv3)
    # p = N e(omega), e = (c, s)/g; coordinate density m = N / g**2
    ex, ey = c / g, s / g
    dex = -s / g - c * dg / (g * g)
    dey = c / g - s * dg / (g * g)
    scale = g * g / n
    wx = scale * (radial * ex + angular * n * dex)
    wy = scale * (radial * ey + angular * n * dey)
    dens = 1.0 + t * (jac - 1.0)
    return wx / dens, wy / dens


@numba.njit(cache=True, nogil=True)
def _field_one_form(t, x, y, prm):
    """Field from the one-form ``omega_0 - phitilde^* omega_0`` (large circulation)."""
    n = _gauge(x, y, prm[_K])
    if n <= prm[_A] or n >= prm[_B]:
        return 0.0, 0.0
    u, v, ux, uy, vx, vy, jac = _phitilde_jac(x, y, prm)
    bx = -0.5 * y - 0.5 * (u * vx - v * ux)
    by = 0.5 * x - 0.5 * (u * vy - v * uy)
    dens = 1.0 + t * (jac - 1.0)
    return by / dens, -bx / dens


@numba.njit(cache=True, nogil=True)
def _fieldsel(t, x, y, prm, wt, wo, jt):
    if wo.shape[0] == 0:
        return _field_one_form(t, x, y, prm)
    return _field(t, x, y, prm, wt, wo, jt)


@numba.njit(cache=True, nogil=True)
def _flow(x, y, prm, wt, wo, jt, steps, backward):
    n = _gauge(x, y, prm[_K])
    if n <= prm[_A] or n >= prm[_B]:
        return x, y
    h = 1.0 / steps
    t = 0.0
    if backward:
        h = -h
        t = 1.0
    for _ in range(steps):
        k1x, k1y = _fieldsel(t, x, y, prm, wt, wo, jt)
        k2x, k2y = _fieldsel(t + 0.5 * h, x + 0.5 * h * k1x, y + 0.5 * h * k1y, prm, wt, wo, jt)
        k3x, k3y = _fieldsel(t + 0.5 * h, x + 0.5 * h * k2x, y + 0.5 * h * k2y, prm, wt, wo, jt)
        k4x, k4y = _fieldsel(t + h, x + h * k3x, y + h * k3y, prm, wt, wo, jt)
        x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        y += h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        t += h
    return x, y


@numba.njit(cache=True, nogil=True)
def _apply(xs, ys, prm, wt, wo, jt, steps, mode):
    """mode 0: phi = phitilde o nu; 1: phi^-1; 2: phitilde; 3: phitilde^-1; 4: nu; 5: nu^-1;
    6: nu o phitilde (the rejected order); 7: its inverse."""
    n = xs.size
    ox = np.empty(n)
    oy = np.empty(n)
    for i in range(n):
        x, y = xs[i], ys[i]
        if mode == 0:
            x, y = _flow(x, y, prm, wt, wo, jt, steps, False)
            x, y = _phitilde(x, y, prm, 1.0)
        elif mode == 1:
            x, y = _phitilde(x, y, prm, -1.0)
            x, y = _flow(x, y, prm, wt, wo, jt, steps, True)
        elif mode == 2:
            x, y = _phitilde(x, y, prm, 1.0)
        elif mode == 3:
            x, y = _phitilde(x, y, prm, -1.0)
        elif mode == 4:
            x, y = _flow(x, y, prm, wt, wo, jt, steps, False)
        elif mode == 5:
            x, y = _flow(x, y, prm, wt, wo, jt, steps, True)
        elif mode == 6:
            x, y = _phitilde(x, y, prm, 1.0)
            x, y = _flow(x, y, prm, wt, wo, jt, steps, False)
        else:
            x, y = _flow(x, y, prm, wt, wo, jt, steps, True)
            x, y = _phitilde(x, y, prm, -1.0)
        ox[i] = x
        oy[i] = y
    return ox, oy


@numba.njit(cache=True, nogil=True)
def _jac_nu(x, y, prm, wt, wo, jt, steps, backward, h):
    n = _gauge(x, y, prm[_K])
    if n <= prm[_A] - 4 * h or n >= prm[_B] + 4 * h:
        return 1.0, 0.0, 0.0, 1.0
    xp, yp = _flow(x + h, y, prm, wt, wo, jt, steps, backward)
    xm, ym = _flow(x - h, y, prm, wt, wo, jt, steps, backward)
    a00 = (xp - xm) / (2 * h)
    a10 = (yp - ym) / (2 * h)
    xp, yp = _flow(x, y + h, prm, wt, wo, jt, steps, backward)
    xm, ym = _flow(x, y - h, prm, wt, wo, jt, steps, backward)
    return a00, (xp - xm) / (2 * h), a10, (yp - ym) / (2 * h)


@numba.njit(cache=True, nogil=True)
def _jacobians(xs, ys, prm, wt, wo, jt, steps, mode, h):
    """Jacobians (N, 2, 2) and determinants of mode 0 (phi), 1 (phi^-1), 2 (phitilde)
    or 6 (nu o phitilde)."""
    n = xs.size
    out = np.empty((n, 2, 2))
    dets = np.empty(n)
    for i in range(n):
        x, y = xs[i], ys[i]
        if mode == 2:
            _, _, d00, d01, d10, d11, jac = _phitilde_jac(x, y, prm)
            out[i, 0, 0], out[i, 0, 1], out[i, 1, 0], out[i, 1, 1] = d00, d01, d10, d11
            dets[i] = jac
            continue
        if mode == 0 or mode == 1:
            if mode == 1:
                # D(phi^-1)(x) = (D phi (phi^-1 x))^-1
                x, y = _phitilde(x, y, prm, -1.0)
                x, y = _flow(x, y, prm, wt, wo, jt, steps, True)
            n00, n01, n10, n11 = _jac_nu(x, y, prm, wt, wo, jt, steps, False, h)
            xn, yn = _flow(x, y, prm, wt, wo, jt, steps, False)
            _, _, d00, d01, d10, d11, jac = _phitilde_jac(xn, yn, prm)
            m00 = d00 * n00 + d01 * n10
            m01 = d00 * n01 + d01 * n11
            m10 = d10 * n00 + d11 * n10
            m11 = d10 * n01 + d11 * n11
            det = jac * (n00 * n11 - n01 * n10)
            if mode == 1:
                dm = m00 * m11 - m01 * m10
                m00, m01, m10, m11 = m11 / dm, -m01 / dm, -m10 / dm, m00 / dm
                det = 1.0 / det
            out[i, 0, 0], out[i, 0, 1], out[i, 1, 0], out[i, 1, 1] = m00, m01, m10, m11
            dets[i] = det
        else:
            xu, yu = _phitilde(x, y, prm, 1.0)
            _, _, d00, d01, d10, d11, jac = _phitilde_jac(x, y, prm)
            n00, n01, n10, n11 = _jac_nu(xu, yu, prm, wt, wo, jt, steps, False, h)
            out[i, 0, 0] = n00 * d00 + n01 * d10
            out[i, 0, 1] = n00 * d01 + n01 * d11
            out[i, 1, 0] = n10 * d00 + n11 * d10
            out[i, 1, 1] = n10 * d01 + n11 * d11
            dets[i] = jac * (n00 * n11 - n01 * n10)
    return out, dets


@numba.njit(cache=True, nogil=True)
def _tabulate(prm, nt, no):
    """``J`` and ``F = (1 - J) N / g**2`` on the gauge-polar grid of the ramp annulus."""
    a, b = prm[_A], prm[_B]
    kk = int(prm[_K])
    jt = np.ones((nt, no))
    ff = np.zeros((nt, no))
    for j in range(no):
        om = 2.0 * math.pi * j / no
        c, s = math.cos(om), math.sin(om)
        g = (c ** kk + s ** kk) ** (1.0 / kk)
        for i in range(1, nt - 1):
            t = a + (b - a) * i / (nt - 1)
            jac = _phitilde_jac(t * c / g, t * s / g, prm)[6]
            jt[i, j] = jac
            ff[i, j] = (1.0 - jac) * t / (g * g)
    return jt, ff


@numba.njit(cache=True, nogil=True)
def _density_min(xs, ys, prm, tsteps):
    """Smallest ``rho_t = 1 + t (J - 1)`` over the points and a t-grid."""
    best = np.inf
    for i in range(xs.size):
        _, _, _, _, _, _, jac = _phitilde_jac(xs[i], ys[i], prm)
        for j in range(tsteps + 1):
            t = j / tsteps
            d = 1.0 + t * (jac - 1.0)
            if d < best:
                best = d
    return best


class DegenerateDeformation(ArithmeticError):
    """The interpolated density vanished: the Moser flow is undefined."""


class CorrectorQualityError(ArithmeticError):
    """Neither composition order produced an area-preserving map."""


def gauge_exponent(eps: float, fraction: float = 0.25) -> int:
    """Smallest even ``k >= 4`` with ``2**(1/k) (1 - 2 eps) <= (1 - 2 eps) + fraction * eps``."""
    ratio = 1 + fraction * (((1 - eps) / (1 - 2 * eps)) - 1)
    k = 4
    while 2 ** (1 / k) > ratio:
        k += 2
    return k


@dataclass
class MoserCorrector:
    """Moser flow data.

    ``primitive="flux"`` uses the tabulated vector field ``w`` with ``div w = 1 - J``
    built from a radial and an angular flux in gauge-polar coordinates; ``"one_form"``
    uses the one-form ``omega_0 - phitilde^* omega_0`` directly.  Both have the
    same exterior derivative, so either yields an exact Moser flow; the first one
    barely circulates and is far better conditioned.
    """

    steps: int
    order: str = "phitilde o nu"
    min_density: float = 1.0
    det_error: dict = field(default_factory=dict)
    primitive: str = "flux"
    radial_table: np.ndarray = field(default_factory=lambda: np.zeros(1))
    angular_table: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    jac_table: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))

    @property
    def tables(self):
        return self.radial_table, self.angular_table, self.jac_table


def flux_tables(prm: np.ndarray, nt: int = 513, no: int = 2048):
    """Tabulate the radial flux, the angular flux and ``J`` on the ramp annulus."""
    jt, ff = _tabulate(prm, nt, no)
    a, b = float(prm[_A]), float(prm[_B])
    mean = ff.mean(axis=1)
    radial = integrate.cumulative_simpson(mean, dx=(b - a) / (nt - 1), initial=0.0)
    # spread the tiny quadrature defect Wt(b) != 0 linearly so the flux closes exactly
    radial -= radial[-1] * np.linspace(0.0, 1.0, nt)
    spec = np.fft.rfft(ff - mean[:, None], axis=1)
    j = np.arange(spec.shape[1])
    j[0] = 1
    spec = spec / (1j * j)
    spec[:, 0] = 0.0
    angular = np.fft.irfft(spec, n=no, axis=1)
    return (np.ascontiguousarray(radial), np.ascontiguousarray(angular),
            np.ascontiguousarray(jt))


@dataclass
class StandardSquareMap:
    """``phi(eps)``: identity off ``Delta(eps)``, the rotation ``(x, y) -> (y, -x)`` on ``Delta(2 eps)``."""

    epsilon: float
    corrector: MoserCorrector
    params: np.ndarray
    fd_step: float = 1e-6

    @property
    def gauge_k(self) -> int:
        return int(self.params[_K])

    @property
    def ramp(self) -> tuple[float, float]:
        return float(self.params[_A]), float(self.params[_B])

    @property
    def radii(self) -> tuple[float, float]:
        return float(self.params[_RIN]), float(self.params[_ROUT])

    @property
    def steps(self) -> int:
        return self.corrector.steps

    def _run(self, x, y, mode):
        x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)).ravel())
        y = np.ascontiguousarray(np.atleast_1d(np.asarray(y, dtype=float)).ravel())
        return _apply(x, y, self.params, *self.corrector.tables, self.steps, mode)

    def forward(self, x, y):
        return self._run(x, y, 0)

    def inverse(self, x, y):
        return self._run(x, y, 1)

    def phitilde(self, x, y, inverse: bool = False):
        return self._run(x, y, 3 if inverse else 2)

    def nu(self, x, y, inverse: bool = False):
        return self._run(x, y, 5 if inverse else 4)

    def psi(self, x, y):
        x, y = np.atleast_1d(x).astype(float), np.atleast_1d(y).astype(float)
        out = np.array([_psi(a, b, self.params) for a, b in zip(x, y)])
        return out[:, 0], out[:, 1]

    def psi_inverse(self, x, y):
        x, y = np.atleast_1d(x).astype(float), np.atleast_1d(y).astype(float)
        out = np.array([_psi_inv(a, b, self.params) for a, b in zip(x, y)])
        return out[:, 0], out[:, 1]

    def eta(self, x, y, inverse: bool = False):
        x, y = np.atleast_1d(x).astype(float), np.atleast_1d(y).astype(float)
        s = -1.0 if inverse else 1.0
        out = np.array([_eta(a, b, self.params, s) for a, b in zip(x, y)])
        return out[:, 0], out[:, 1]

    def jacobian(self, x, y, which: str = "phi"):
        """``(N, 2, 2)`` Jacobians and determinants; ``which`` is phi, phitilde or reversed."""
        mode = {"phi": 0, "phitilde": 2, "reversed": 6}[which]
        x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)).ravel())
        y = np.ascontiguousarray(np.atleast_1d(np.asarray(y, dtype=float)).ravel())
        return _jacobians(x, y, self.params, *self.corrector.tables, self.steps, mode, self.fd_step)

    def support_mask(self, x, y):
        """Points where the corrector can move anything (``a < N < b``)."""
        x, y = np.atleast_1d(x).astype(float), np.atleast_1d(y).astype(float)
        k = self.gauge_k
        m = np.maximum(np.abs(x), np.abs(y))
        safe = np.where(m == 0, 1.0, m)
        n = np.where(m == 0, 0.0, m * ((x / safe) ** k + (y / safe) ** k) ** (1.0 / k))
        a, b = self.ramp
        return (n > a) & (n < b)

    def det_sweep(self, grid: int = 64, seed: int = 0, which: str = "phi") -> float:
        """Max ``|det - 1|`` over a jittered ``grid x grid`` sample of ``Delta``."""
        x, y = jittered_square(grid, seed)
        _, d = self.jacobian(x, y, which)
        return float(np.abs(d - 1).max())


def jittered_square(grid: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    g = -1 + (np.arange(grid) + 0.5) * (2.0 / grid)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    j = rng.uniform(-1, 1, size=(2, grid * grid)) / grid
    return gx.ravel() + j[0], gy.ravel() + j[1]


def standard_params(epsilon: float) -> np.ndarray:
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    k = gauge_exponent(epsilon)
    a = 2 ** (1 / k) * (1 - 2 * epsilon)
    b = 1 - epsilon
    kappa = min(1.0, (1 - epsilon) / math.sqrt(2 / 3))
    return np.array([epsilon, a, b, float(k), kappa * math.sqrt(1 / 3), kappa * math.sqrt(2 / 3)])


def build_standard_map(epsilon: float, moser_steps: int = 256, tolerance: float = 1e-3,
                       check_grid: int = 16, select_order: bool = True,
                       primitive: str = "flux") -> StandardSquareMap:
    """Construct ``phi(epsilon)``; the composition order is chosen by a determinant test."""
    if moser_steps < 16:
        raise ValueError("moser_steps must be >= 16")
    prm = standard_params(epsilon)
    x, y = jittered_square(48, 1)
    dmin = _density_min(np.ascontiguousarray(x), np.ascontiguousarray(y), prm, 16)
    if not dmin > 0:
        raise DegenerateDeformation(f"density rho_t reaches {dmin} <= 0")
    cor = MoserCorrector(moser_steps, min_density=float(dmin), primitive=primitive)
    if primitive == "flux":
        cor.radial_table, cor.angular_table, cor.jac_table = flux_tables(prm)
    elif primitive != "one_form":
        raise ValueError("primitive must be 'flux' or 'one_form'")
    sm = StandardSquareMap(float(epsilon), cor, prm)
    if select_order:
        errs = {}
        for which, label in (("phi", "phitilde o nu"), ("reversed", "nu o phitilde")):
            gx, gy = jittered_square(check_grid, 2)
            errs[label] = float(np.abs(sm.jacobian(gx, gy, which)[1] - 1).max())
        cor.det_error = errs
        best = min(errs, key=errs.get)
        if errs[best] > tolerance:
            raise CorrectorQualityError(f"both composition orders fail the determinant test: {errs}")
        if best != "phitilde o nu":
            raise CorrectorQualityError("determinant test preferred nu o phitilde; kernel assumes the other order")
        cor.order = best
    return sm
