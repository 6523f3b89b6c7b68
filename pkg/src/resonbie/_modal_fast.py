"""Numba-compiled core of the accelerated waveguide modal sums.

One kernel evaluates, per evaluation point, the closed-form asymptotic
tail (geometric sums and polylogarithms of z = exp(-pi d + i theta)) and
the exact-minus-asymptotic residual series with per-point adaptive
truncation.  Semantics match the pure-numpy reference implementation in
:mod:`resonbie.kernels`; tests compare the two paths.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*a, **k):
        def wrap(f):
            return f
        return wrap

    prange = range

_SPLIT_RADIUS = 0.6
_SERIES_LMAX = 64
_MU_JMAX = 72


@njit(cache=True, inline="always")
def _polylog_scalar(s, mu, mu_coeffs, harm):
    """Li_s(e^mu) for one scalar mu with Re(mu) <= 0, |Im(mu)| <= pi."""
    z = np.exp(mu)
    az = abs(z)
    if az <= _SPLIT_RADIUS:
        acc = 0.0 + 0.0j
        p = 1.0 + 0.0j
        bound = 1.0
        for l in range(1, _SERIES_LMAX + 1):
            p *= z
            acc += p / l**s
            bound *= az
            if bound < 1e-17:
                break
        return acc
    # expansion around the singular point z = 1
    fact = 1.0
    for j in range(1, s):
        fact *= j
    acc = (mu ** (s - 1) / fact) * (harm[s - 1] - np.log(-mu))
    p = 1.0 + 0.0j
    tiny = 0
    for j in range(_MU_JMAX + 1):
        t = mu_coeffs[s - 2, j] * p
        acc += t
        p *= mu
        # some expansion coefficients vanish identically, so require two
        # consecutive negligible terms before stopping
        if abs(t) < 1e-17 * abs(acc) and j > 2:
            tiny += 1
            if tiny >= 2:
                break
        else:
            tiny = 0
    return acc


@njit(cache=True, inline="always")
def _one_minus_exp(mu):
    """1 - exp(mu), cancellation-safe for small |mu|."""
    if abs(mu) > 1e-4:
        return 1.0 - np.exp(mu)
    return -(mu * (1.0 + mu / 2.0 * (1.0 + mu / 3.0 * (1.0 + mu / 4.0 * (1.0 + mu / 5.0)))))


@njit(cache=True, parallel=True)
def _modal_point_kernel(d, thm, thp, gam_tab, delta_tab, kc, rel_tol,
                        need_grad, need_hyper, mu_coeffs, harm, max_modes,
                        out, modes_used, flags):
    """Fill out[8, npts] with the modal sums S_* for every point.

    out rows: 0 val, 1 du, 2 dv, 3 dd, 4 duv, 5 ddd, 6 dud, 7 dvd.
    flags[p]: 0 ok, 2 residual did not converge.
    """
    npts = d.shape[0]
    pi = np.pi
    eps = (kc / pi) ** 2
    a1 = pi * eps / 2.0
    a3 = pi * eps**2 / 8.0
    a5 = pi * eps**3 / 16.0
    G1c = 1.0 / pi
    G3c = eps / (2.0 * pi)
    G5c = 3.0 * eps**2 / (8.0 * pi)

    for p in prange(npts):
        dp = d[p]
        tm = thm[p] - 2.0 * pi * np.round(thm[p] / (2.0 * pi))
        tp = thp[p] - 2.0 * pi * np.round(thp[p] / (2.0 * pi))
        mu_m = complex(-pi * dp, tm)
        mu_p = complex(-pi * dp, tp)

        E1 = a1 * dp
        E2 = (a1 * dp) ** 2 / 2.0
        E3 = a3 * dp + (a1 * dp) ** 3 / 6.0
        E4 = a1 * a3 * dp * dp + (a1 * dp) ** 4 / 24.0
        E5 = a5 * dp + a1**2 * a3 * dp**3 / 2.0 + (a1 * dp) ** 5 / 120.0
        E6 = (a1 * a5 * dp * dp + a3**2 * dp * dp / 2.0
              + a1**3 * a3 * dp**4 / 6.0 + (a1 * dp) ** 6 / 720.0)

        qarr = np.empty(6, dtype=np.complex128)
        qarr[0] = G1c
        qarr[1] = G1c * E1
        qarr[2] = G1c * E2 + G3c
        qarr[3] = G1c * E3 + G3c * E1
        qarr[4] = G1c * E4 + G3c * E2 + G5c
        qarr[5] = G1c * E5 + G3c * E3 + G5c * E1
        earr = np.empty(6, dtype=np.complex128)
        earr[0] = 1.0
        earr[1] = E1; earr[2] = E2; earr[3] = E3; earr[4] = E4; earr[5] = E5
        garr = np.empty(6, dtype=np.complex128)
        garr[0] = pi * E1
        garr[1] = pi * E2 - a1
        garr[2] = pi * E3 - a1 * E1
        garr[3] = pi * E4 - a1 * E2 - a3
        garr[4] = pi * E5 - a1 * E3 - a3 * E1
        garr[5] = pi * E6 - a1 * E4 - a3 * E2 - a5

        # Phi_s(z) tables for s = -1..6 at index s+1, both z arguments
        phim = np.empty(8, dtype=np.complex128)
        phip = np.empty(8, dtype=np.complex128)
        for which in range(2):
            mu = mu_m if which == 0 else mu_p
            one_minus = _one_minus_exp(mu)
            z = np.exp(mu)
            tab = phim if which == 0 else phip
            tab[0] = z / (one_minus * one_minus)
            tab[1] = z / one_minus
            tab[2] = -np.log(one_minus)
            for s in range(2, 7):
                tab[s + 1] = _polylog_scalar(s, mu, mu_coeffs, harm)

        # trig-combination values of Phi at shifted orders
        # cc(s) = sum t^l cos(l thm)/l^s averaged with thp, etc.
        F_val = 0j
        for s in range(1, 7):
            F_val += qarr[s - 1] * 0.5 * (phim[s + 1].real + phip[s + 1].real)
        F_du = 0j; F_dv = 0j; F_dd = 0j
        F_duv = 0j; F_ddd = 0j; F_dud = 0j; F_dvd = 0j
        if need_grad or need_hyper:
            for s in range(1, 7):
                F_du += qarr[s - 1] * 0.5 * (phim[s].imag + phip[s].imag)
                F_dv += qarr[s - 1] * 0.5 * (phip[s].imag - phim[s].imag)
            for s in range(0, 6):
                F_dd += earr[s] * 0.5 * (phim[s + 1].real + phip[s + 1].real)
        if need_hyper:
            for s in range(1, 7):
                F_duv += qarr[s - 1] * 0.5 * (phim[s - 1].real - phip[s - 1].real)
            F_ddd = pi * 0.5 * (phim[0].real + phip[0].real)
            for s in range(0, 6):
                F_ddd += garr[s] * 0.5 * (phim[s + 1].real + phip[s + 1].real)
                F_dud += earr[s] * 0.5 * (phim[s].imag + phip[s].imag)
                F_dvd += earr[s] * 0.5 * (phip[s].imag - phim[s].imag)

        zm = np.exp(mu_m)
        zp = np.exp(mu_p)
        Zm = 1.0 + 0j
        Zp = 1.0 + 0j
        sc_val = 1e-6; sc_du = 1e-6; sc_dv = 1e-6; sc_dd = 1e-6
        sc_duv = 1e-6; sc_ddd = 1e-6; sc_dud = 1e-6; sc_dvd = 1e-6
        below = 0
        l = 0
        ok_exit = False
        while l < max_modes:
            l += 1
            gam = gam_tab[l]
            ed = np.exp(delta_tab[l] * dp)
            il = 1.0 / l
            r_g = ed / gam - ((((((qarr[5] * il + qarr[4]) * il + qarr[3]) * il + qarr[2]) * il + qarr[1]) * il + qarr[0]) * il)
            r_e = ed - (((((earr[5] * il + earr[4]) * il + earr[3]) * il + earr[2]) * il + earr[1]) * il + earr[0])
            r_ge = gam * ed - (pi * l + ((((garr[5] * il + garr[4]) * il + garr[3]) * il + garr[2]) * il + garr[1]) * il + garr[0])
            Zm *= zm
            Zp *= zp
            ccl = 0.5 * (Zm.real + Zp.real)
            scl = 0.5 * (Zm.imag + Zp.imag)
            csl = 0.5 * (Zp.imag - Zm.imag)
            ssl = 0.5 * (Zm.real - Zp.real)

            t = r_g * ccl
            F_val += t
            m = abs(t)
            if m > sc_val:
                sc_val = m
            conv = m <= rel_tol * sc_val
            if need_grad or need_hyper:
                t = l * r_g * scl
                F_du += t
                m = abs(t)
                if m > sc_du:
                    sc_du = m
                conv = conv and m <= rel_tol * sc_du
                t = l * r_g * csl
                F_dv += t
                m = abs(t)
                if m > sc_dv:
                    sc_dv = m
                conv = conv and m <= rel_tol * sc_dv
                t = r_e * ccl
                F_dd += t
                m = abs(t)
                if m > sc_dd:
                    sc_dd = m
                conv = conv and m <= rel_tol * sc_dd
            if need_hyper:
                t = l * l * r_g * ssl
                F_duv += t
                m = abs(t)
                if m > sc_duv:
                    sc_duv = m
                conv = conv and m <= rel_tol * sc_duv
                t = r_ge * ccl
                F_ddd += t
                m = abs(t)
                if m > sc_ddd:
                    sc_ddd = m
                conv = conv and m <= rel_tol * sc_ddd
                t = l * r_e * scl
                F_dud += t
                m = abs(t)
                if m > sc_dud:
                    sc_dud = m
                conv = conv and m <= rel_tol * sc_dud
                t = l * r_e * csl
                F_dvd += t
                m = abs(t)
                if m > sc_dvd:
                    sc_dvd = m
                conv = conv and m <= rel_tol * sc_dvd

            below = below + 1 if conv else 0
            if below >= 3:
                ok_exit = True
                break

        out[0, p] = F_val
        out[1, p] = F_du
        out[2, p] = F_dv
        out[3, p] = F_dd
        out[4, p] = F_duv
        out[5, p] = F_ddd
        out[6, p] = F_dud
        out[7, p] = F_dvd
        modes_used[p] = l
        flags[p] = 0 if ok_exit else 2


def modal_sums_fast(d, thm, thp, k, gam_tab, delta_tab, rel_tol,
                    need_grad, need_hyper, mu_coeffs, harm, max_modes):
    """Numba front-end; returns (out[8, n], modes_used, flags)."""
    d = np.ascontiguousarray(d, dtype=np.float64).ravel()
    thm = np.ascontiguousarray(thm, dtype=np.float64).ravel()
    thp = np.ascontiguousarray(thp, dtype=np.float64).ravel()
    out = np.empty((8, d.size), dtype=np.complex128)
    modes_used = np.empty(d.size, dtype=np.int64)
    flags = np.empty(d.size, dtype=np.int64)
    _modal_point_kernel(d, thm, thp, gam_tab, delta_tab, complex(k),
                        float(rel_tol), bool(need_grad), bool(need_hyper),
                        mu_coeffs, harm, int(max_modes), out, modes_used, flags)
    return out, modes_used, flags
