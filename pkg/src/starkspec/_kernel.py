"""Compiled DOP853 integrator for the two Prufer systems used by the toolkit.

system 0 -- Liouville-transformed equation in the variable xi, state
    y = (log R, phi, s, s_tilde) with theta = xi + phi and
        (log R)'  = V sin(2 theta) / 2
        phi'      = -V sin(theta)^2
        s'        = -V - lam cos(2 theta) / x
        s_tilde'  = -V
    where x = c xi^(2/3).  sigma = 2 xi + s and sigma_tilde = 2 xi + s_tilde.

system 1 -- the original equation in x, state y = (log rho, vartheta) with
    u = rho sin(vartheta), u' = rho cos(vartheta), W = x + lam - q(x),
        vartheta' = cos^2 + W sin^2,  (log rho)' = sin cos (1 - W).

Besides the state, every step accumulates two integrals by 8-point
Gauss-Legendre quadrature on the step's dense interpolant:
    acc[0] = int V sin(2 theta) dxi      (system 0; zero for system 1)
    acc[1] = int u^2 dx                  (both systems)

Butcher and interpolation tables are taken from scipy's DOP853.
"""

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dc

C_LIOUVILLE = 1.5 ** (2.0 / 3.0)

_A = np.ascontiguousarray(_dc.A, dtype=np.float64)
_B = np.ascontiguousarray(_dc.B, dtype=np.float64)
_C = np.ascontiguousarray(_dc.C, dtype=np.float64)
_E3 = np.ascontiguousarray(_dc.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(_dc.E5, dtype=np.float64)
_D = np.ascontiguousarray(_dc.D, dtype=np.float64)

_gx, _gw = np.polynomial.legendre.leggauss(8)
GL_X = 0.5 * (_gx + 1.0)
GL_W = 0.5 * _gw

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


@njit(cache=True, nogil=True)
def q_eval(code, p, tx, tq, x):
    if code == 0:
        return 0.0
    if code == 1:
        return p[0] * (1.0 + x) ** (-p[1])
    if code == 2:
        return p[0] * (1.0 + x) ** (-p[1]) * math.sin(4.0 / 3.0 * x * math.sqrt(x) + p[2])
    if code == 3:
        s = 0.0
        coef = 1.0
        freq = 1.0
        ratio = 2.0 ** (-(p[1] + 1.0))
        for _ in range(int(p[2]) + 1):
            s += coef * math.sin(freq * x)
            coef *= ratio
            freq *= 2.0
        return p[0] * s
    return np.interp(x, tx, tq)


@njit(cache=True, nogil=True)
def _rhs(system, code, p, tx, tq, lam, t, y, out):
    if system == 0:
        x = C_LIOUVILLE * t ** (2.0 / 3.0)
        V = -5.0 / (36.0 * t * t) + (q_eval(code, p, tx, tq, x) - lam) / x
        th = t + y[1]
        sn = math.sin(th)
        cs = math.cos(th)
        s2 = 2.0 * sn * cs
        c2 = cs * cs - sn * sn
        out[0] = 0.5 * V * s2
        out[1] = -V * sn * sn
        out[2] = -V - lam * c2 / x
        out[3] = -V
    else:
        W = t + lam - q_eval(code, p, tx, tq, t)
        sn = math.sin(y[1])
        cs = math.cos(y[1])
        out[0] = sn * cs * (1.0 - W)
        out[1] = cs * cs + W * sn * sn


@njit(cache=True, nogil=True)
def _acc_integrand(system, code, p, tx, tq, lam, t, y, out):
    if system == 0:
        x = C_LIOUVILLE * t ** (2.0 / 3.0)
        V = -5.0 / (36.0 * t * t) + (q_eval(code, p, tx, tq, x) - lam) / x
        th = t + y[1]
        sn = math.sin(th)
        out[0] = V * math.sin(2.0 * th)
        out[1] = math.exp(2.0 * y[0]) * sn * sn / x
    else:
        sn = math.sin(y[1])
        out[0] = 0.0
        out[1] = math.exp(2.0 * y[0]) * sn * sn


@njit(cache=True, nogil=True)
def _dense(F, y_old, frac, out):
    n = y_old.size
    for j in range(n):
        out[j] = 0.0
    for i in range(7):
        for j in range(n):
            out[j] += F[6 - i, j]
            if i % 2 == 0:
                out[j] *= frac
            else:
                out[j] *= 1.0 - frac
    for j in range(n):
        out[j] += y_old[j]


@njit(cache=True, nogil=True)
def _gl_partial(system, code, p, tx, tq, lam, t, h, F, y_old, frac, gx, gw, ytmp, tmp, out):
    out[0] = 0.0
    out[1] = 0.0
    for k in range(gx.size):
        fr = frac * gx[k]
        _dense(F, y_old, fr, ytmp)
        _acc_integrand(system, code, p, tx, tq, lam, t + fr * h, ytmp, tmp)
        wk = frac * h * gw[k]
        out[0] += wk * tmp[0]
        out[1] += wk * tmp[1]


@njit(cache=True, nogil=True)
def _local_cap(system, qfreq, max_step, t):
    cap = max_step
    if qfreq > 0.0:
        if system == 0:
            x = C_LIOUVILLE * t ** (2.0 / 3.0)
            fxi = qfreq / math.sqrt(x)
        else:
            fxi = qfreq
        c2 = 0.5 * math.pi / fxi
        if c2 < cap:
            cap = c2
    return cap


@njit(cache=True, nogil=True)
def integrate(system, code, p, tx, tq, qfreq, lam, t0, t1, y0, rtol, atol,
              max_step, store_dense, t_eval, max_steps):
    n = y0.size
    A = _A
    B = _B
    Cc = _C
    E3 = _E3
    E5 = _E5
    D = _D
    gx = GL_X
    gw = GL_W

    K = np.empty((16, n))
    ytmp = np.empty(n)
    ynew = np.empty(n)
    fnew = np.empty(n)
    F = np.empty((7, n))
    tmp2 = np.empty(2)
    part = np.empty(2)

    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    acc = np.empty((cap, 2))
    if store_dense:
        Fs = np.empty((cap, 7, n))
    else:
        Fs = np.empty((1, 7, n))

    ne = t_eval.size
    ye = np.empty((ne, n))
    ae = np.empty((ne, 2))
    ie = 0
    while ie < ne and t_eval[ie] <= t0:
        for j in range(n):
            ye[ie, j] = y0[j]
        ae[ie, 0] = 0.0
        ae[ie, 1] = 0.0
        ie += 1

    t = t0
    y = y0.copy()
    f = np.empty(n)
    _rhs(system, code, p, tx, tq, lam, t, y, f)
    nfev = 1
    ts[0] = t
    for j in range(n):
        ys[0, j] = y[j]
    acc[0, 0] = 0.0
    acc[0, 1] = 0.0
    count = 1

    status = STATUS_OK
    nrej = 0
    hmin = np.inf
    hmax = 0.0
    hsum = 0.0
    h = min(_local_cap(system, qfreq, max_step, t), 1e-2)
    exponent = -1.0 / 8.0

    while t < t1:
        if count - 1 >= max_steps:
            status = STATUS_MAX_STEPS
            break
        lc = _local_cap(system, qfreq, max_step, t)
        if h > lc:
            h = lc
        min_step = 1e-12 * max(abs(t), 1.0)
        accepted = False
        rejected = False
        factor = 1.0
        tn = t
        while not accepted:
            if h < min_step:
                status = STATUS_STEP_UNDERFLOW
                break
            tn = t + h
            if tn > t1:
                tn = t1
            h = tn - t
            for j in range(n):
                K[0, j] = f[j]
            for s in range(1, 12):
                for j in range(n):
                    acc_s = 0.0
                    for r in range(s):
                        acc_s += A[s, r] * K[r, j]
                    ytmp[j] = y[j] + h * acc_s
                _rhs(system, code, p, tx, tq, lam, t + Cc[s] * h, ytmp, K[s])
            for j in range(n):
                acc_s = 0.0
                for r in range(12):
                    acc_s += B[r] * K[r, j]
                ynew[j] = y[j] + h * acc_s
            _rhs(system, code, p, tx, tq, lam, tn, ynew, fnew)
            nfev += 12
            for j in range(n):
                K[12, j] = fnew[j]
            e5 = 0.0
            e3 = 0.0
            for j in range(n):
                sc = atol + max(abs(y[j]), abs(ynew[j])) * rtol
                a5 = 0.0
                a3 = 0.0
                for r in range(13):
                    a5 += E5[r] * K[r, j]
                    a3 += E3[r] * K[r, j]
                a5 /= sc
                a3 /= sc
                e5 += a5 * a5
                e3 += a3 * a3
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * n)
            if err < 1.0:
                if err == 0.0:
                    factor = 10.0
                else:
                    factor = min(10.0, 0.9 * err ** exponent)
                if rejected:
                    factor = min(1.0, factor)
                accepted = True
            else:
                h *= max(0.2, 0.9 * err ** exponent)
                rejected = True
                nrej += 1
        if status != STATUS_OK:
            break

        # extra stages of the 7th-order continuous extension
        for s in range(13, 16):
            for j in range(n):
                acc_s = 0.0
                for r in range(s):
                    acc_s += A[s, r] * K[r, j]
                ytmp[j] = y[j] + h * acc_s
            _rhs(system, code, p, tx, tq, lam, t + Cc[s] * h, ytmp, K[s])
        nfev += 3
        for j in range(n):
            dy = ynew[j] - y[j]
            F[0, j] = dy
            F[1, j] = h * f[j] - dy
            F[2, j] = 2.0 * dy - h * (fnew[j] + f[j])
            for i in range(4):
                acc_s = 0.0
                for r in range(16):
                    acc_s += D[i, r] * K[r, j]
                F[3 + i, j] = h * acc_s

        # requested output points inside (t, tn]
        while ie < ne and t_eval[ie] <= tn:
            frac = (t_eval[ie] - t) / h
            _dense(F, y, frac, ytmp)
            for j in range(n):
                ye[ie, j] = ytmp[j]
            _gl_partial(system, code, p, tx, tq, lam, t, h, F, y, frac, gx, gw, ytmp, tmp2, part)
            ae[ie, 0] = acc[count - 1, 0] + part[0]
            ae[ie, 1] = acc[count - 1, 1] + part[1]
            ie += 1

        _gl_partial(system, code, p, tx, tq, lam, t, h, F, y, 1.0, gx, gw, ytmp, tmp2, part)

        if count == cap:
            cap *= 2
            ts2 = np.empty(cap)
            ys2 = np.empty((cap, n))
            acc2 = np.empty((cap, 2))
            ts2[:count] = ts[:count]
            ys2[:count] = ys[:count]
            acc2[:count] = acc[:count]
            ts = ts2
            ys = ys2
            acc = acc2
            if store_dense:
                Fs2 = np.empty((cap, 7, n))
                Fs2[:count - 1] = Fs[:count - 1]
                Fs = Fs2
        if store_dense:
            Fs[count - 1] = F
        ts[count] = tn
        for j in range(n):
            ys[count, j] = ynew[j]
        acc[count, 0] = acc[count - 1, 0] + part[0]
        acc[count, 1] = acc[count - 1, 1] + part[1]
        count += 1

        hmin = min(hmin, h)
        hmax = max(hmax, h)
        hsum += h
        t = tn
        for j in range(n):
            y[j] = ynew[j]
            f[j] = fnew[j]
        h = h * factor

    nsteps = count - 1
    if store_dense:
        Fout = Fs[:max(nsteps, 0)].copy()
    else:
        Fout = Fs[:0].copy()
    stats = np.array([float(nsteps), float(nrej), hmin, hmax,
                      hsum / max(nsteps, 1), float(nfev)])
    return (status, ts[:count].copy(), ys[:count].copy(), acc[:count].copy(),
            Fout, ye[:ie].copy(), ae[:ie].copy(), stats)


def dense_eval(F, y_old, frac):
    """Vectorised evaluation of DOP853 interpolants.

    ``F`` has shape (m, 7, n), ``y_old`` (m, n), ``frac`` (m,) or (m, k).
    """
    frac = np.asarray(frac, dtype=float)
    if frac.ndim == 1:
        fr = frac[:, None]
        out = np.zeros(y_old.shape)
        for i in range(7):
            out += F[:, 6 - i, :]
            out *= fr if i % 2 == 0 else (1.0 - fr)
        return out + y_old
    fr = frac[:, :, None]
    out = np.zeros(frac.shape + (y_old.shape[1],))
    for i in range(7):
        out += F[:, None, 6 - i, :]
        out *= fr if i % 2 == 0 else (1.0 - fr)
    return out + y_old[:, None, :]
