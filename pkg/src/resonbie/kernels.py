"""Free-space and Neumann-waveguide Green's functions with normal derivatives.

Free space (wavenumber k):

    outgoing  G(x,y) =  (i/4) H_0^(1)(k |x-y|)
    incoming  G(x,y) = -(i/4) H_0^(2)(k |x-y|)

Waveguide (strip P = [-1/2, 1/2] x R, Neumann walls, wavenumber k):

    G(x,y) = sum_{l>=0} f_l exp(-gam_l d) / gam_l
             * cos(l pi (x1+1/2)) cos(l pi (y1+1/2)),
    d = |x2 - y2|,  f_0 = 1/2,  f_l = 1 otherwise,
    gam_l = mode_gamma(l, k).

The modal series converges like 1/l at d = 0 (and its termwise derivatives
diverge there), so it is never summed naively.  Each modal weight is
split into its large-l asymptotic expansion, whose sums against
cos(l theta)/sin(l theta) are geometric series and polylogarithms in
z = exp(-pi d + i theta) known in closed form, plus a residual that
decays at least like l^-5 (times exp(-l pi d)) and is summed directly.
The closed forms carry the exact log singularity of the Green's function,
so evaluation is uniformly accurate for all separations, including
coincident heights x2 = y2.

All evaluation routines are pure functions and broadcast over point
arrays; scalar convenience wrappers mirror the array core.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.special as _sp

from . import _modal_fast
from .errors import BranchCutError, ConvergenceError, SingularityError
from .special import _MU_COEFFS, _harmonic, cexpm1, mode_gamma, polylog_exp

DEFAULT_REL_TOL = 1e-10
MAX_MODES = 10_000
GAMMA_GUARD = 1e-8  # refuse evaluation closer than this to a mode cutoff


class KernelMode(enum.Enum):
    OUTGOING = "outgoing"
    INCOMING = "incoming"


class DomainKind(enum.Enum):
    FREESPACE = "freespace"
    WAVEGUIDE = "waveguide"


# ---------------------------------------------------------------------------
# free-space kernels
# ---------------------------------------------------------------------------

def _hankel_pair(mode: KernelMode, w):
    """(c0, h0, h1) with G = c0*h0(k r); h0' = -h1 holds for both kinds."""
    if mode is KernelMode.OUTGOING:
        return 0.25j, _sp.hankel1(0, w), _sp.hankel1(1, w)
    return -0.25j, _sp.hankel2(0, w), _sp.hankel2(1, w)


def free_fields(x, y, nx, ny, k, mode: KernelMode):
    """Free-space kernel set on the product grid of targets x and sources y.

    Parameters
    ----------
    x, y : (M, 2), (Q, 2) arrays of points.
    nx, ny : unit normals at x and y, same shapes.
    k : complex wavenumber.
    mode : outgoing or incoming fundamental solution.

    Returns
    -------
    dict with (M, Q) arrays ``value``, ``dny``, ``dnx``, ``hyper`` and the
    distance matrix ``r``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    nx = np.atleast_2d(np.asarray(nx, dtype=float))
    ny = np.atleast_2d(np.asarray(ny, dtype=float))
    dx = x[:, None, :] - y[None, :, :]
    r = np.sqrt(dx[..., 0] ** 2 + dx[..., 1] ** 2)
    if np.any(r == 0):
        raise SingularityError("free-space kernel evaluated at x = y")
    w = k * r
    c0, h0, h1 = _hankel_pair(mode, w)
    G = c0 * h0
    Gp = -c0 * k * h1                    # dG/dr
    Gpp = -c0 * k * k * (h0 - h1 / w)    # d2G/dr2
    rn_y = (dx[..., 0] * ny[None, :, 0] + dx[..., 1] * ny[None, :, 1]) / r
    rn_x = (dx[..., 0] * nx[:, None, 0] + dx[..., 1] * nx[:, None, 1]) / r
    nn = nx[:, None, 0] * ny[None, :, 0] + nx[:, None, 1] * ny[None, :, 1]
    return {
        "value": G,
        "dny": -Gp * rn_y,
        "dnx": Gp * rn_x,
        "hyper": -Gpp * rn_x * rn_y - Gp * (nn - rn_x * rn_y) / r,
        "r": r,
    }


def free_fields_pairs(x, y, nx, ny, k, mode: KernelMode):
    """Free-space kernel set for matched point pairs (all inputs (n, 2))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = np.asarray(nx, dtype=float)
    ny = np.asarray(ny, dtype=float)
    dx = x - y
    r = np.hypot(dx[:, 0], dx[:, 1])
    if np.any(r == 0):
        raise SingularityError("free-space kernel evaluated at x = y")
    w = k * r
    c0, h0, h1 = _hankel_pair(mode, w)
    G = c0 * h0
    Gp = -c0 * k * h1
    Gpp = -c0 * k * k * (h0 - h1 / w)
    rn_y = (dx[:, 0] * ny[:, 0] + dx[:, 1] * ny[:, 1]) / r
    rn_x = (dx[:, 0] * nx[:, 0] + dx[:, 1] * nx[:, 1]) / r
    nn = nx[:, 0] * ny[:, 0] + nx[:, 1] * ny[:, 1]
    return {
        "value": G,
        "dny": -Gp * rn_y,
        "dnx": Gp * rn_x,
        "hyper": -Gpp * rn_x * rn_y - Gp * (nn - rn_x * rn_y) / r,
        "r": r,
    }


def _as_point(p):
    a = np.asarray(p, dtype=float).reshape(2)
    return a


def greens_free(x, y, k, mode: KernelMode = KernelMode.OUTGOING) -> complex:
    """Free-space fundamental solution at a single point pair."""
    f = free_fields(_as_point(x)[None], _as_point(y)[None],
                    np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]), k, mode)
    return complex(f["value"][0, 0])


def greens_free_dny(x, y, ny, k, mode: KernelMode = KernelMode.OUTGOING) -> complex:
    f = free_fields(_as_point(x)[None], _as_point(y)[None],
                    np.array([[1.0, 0.0]]), _as_point(ny)[None], k, mode)
    return complex(f["dny"][0, 0])


def greens_free_dnx(x, y, nx, k, mode: KernelMode = KernelMode.OUTGOING) -> complex:
    f = free_fields(_as_point(x)[None], _as_point(y)[None],
                    _as_point(nx)[None], np.array([[1.0, 0.0]]), k, mode)
    return complex(f["dnx"][0, 0])


def greens_free_hyper(x, y, nx, ny, k, mode: KernelMode = KernelMode.OUTGOING) -> complex:
    f = free_fields(_as_point(x)[None], _as_point(y)[None],
                    _as_point(nx)[None], _as_point(ny)[None], k, mode)
    return complex(f["hyper"][0, 0])


# ---------------------------------------------------------------------------
# waveguide modal machinery
# ---------------------------------------------------------------------------

@dataclass
class ModalInfo:
    """Bookkeeping returned alongside accelerated modal sums."""
    modes_used: int
    rel_tol: float


def _phi_table(mu, smax: int):
    """Phi_s(z) = sum_{l>=1} z^l / l^s for s = -1..smax, z = exp(mu).

    ``1 - z`` is formed as ``-expm1(mu)`` so the closed forms stay accurate
    arbitrarily close to the singular point z -> 1.
    """
    one_minus = -cexpm1(mu)
    z = np.exp(mu)
    tab = {}
    tab[-1] = z / (one_minus * one_minus)
    tab[0] = z / one_minus
    tab[1] = -np.log(one_minus)
    for s in range(2, smax + 1):
        tab[s] = polylog_exp(s, mu)
    return tab


def _wrap_angle(t):
    return t - 2.0 * np.pi * np.round(t / (2.0 * np.pi))


_MU_COEFF_TABLE = np.array([_MU_COEFFS[s] for s in range(2, 7)])
_HARMONIC_TABLE = np.array([_harmonic(n) for n in range(0, 8)])


def _gamma_tables(k: complex, max_modes: int):
    """gamma_l and (l pi - gamma_l) for l = 0..max_modes, with cutoff guard."""
    ls = np.arange(max_modes + 1)
    gam = np.sqrt((ls * np.pi - k) * (ls * np.pi + k))
    flip = (gam.real < 0) | ((gam.real == 0) & (gam.imag > 0))
    gam = np.where(flip, -gam, gam)
    l_near = int(abs(k) / np.pi) + 2
    small = np.abs(gam[1:l_near + 1]) < GAMMA_GUARD
    if np.any(small):
        lbad = 1 + int(np.argmax(small))
        raise BranchCutError(
            f"wavenumber too close to cutoff of mode {lbad} "
            f"(|gamma_l| = {abs(gam[lbad]):.2e})")
    return gam, ls * np.pi - gam


def wg_fields(x, y, k, nx=None, ny=None, rel_tol: float = DEFAULT_REL_TOL,
              max_modes: int = MAX_MODES, need_grad: bool = True,
              need_hyper: bool = True, use_fast: bool | None = None):
    """Waveguide Green's function and derivatives on the grid x (M) times y (Q).

    Returns dict with (M, Q) arrays: ``value`` and, when requested,
    coordinate derivatives ``dx1, dx2, dy1, dy2`` and second derivatives
    ``hx1y1, hx1y2, hx2y1, hx2y2``; plus normal-contracted ``dnx``, ``dny``,
    ``hyper`` when normals are given.  ``info`` reports the modes used.

    The compiled point-adaptive core is used when numba is importable
    (``use_fast=None``); the vectorized numpy path is the reference.

    Raises BranchCutError near a mode cutoff and ConvergenceError if the
    residual series does not settle within ``max_modes`` modes.
    """
    if use_fast is None:
        use_fast = _modal_fast.HAVE_NUMBA
    if use_fast and _modal_fast.HAVE_NUMBA:
        return _wg_fields_fast(x, y, k, nx=nx, ny=ny, rel_tol=rel_tol,
                               max_modes=max_modes, need_grad=need_grad,
                               need_hyper=need_hyper)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    k = complex(k)
    x2 = x[:, None, 1]
    y2 = y[None, :, 1]
    d = np.abs(x2 - y2)
    sgn = np.where(x2 >= y2, 1.0, -1.0)
    u = x[:, None, 0] + 0.5
    v = y[None, :, 0] + 0.5
    th_m = np.pi * (u - v)
    th_p = np.pi * (u + v)
    mu_m = -np.pi * d + 1j * _wrap_angle(th_m)
    mu_p = -np.pi * d + 1j * _wrap_angle(th_p)
    if np.any((np.abs(mu_m) < 1e-14) | (np.abs(mu_p) < 1e-14)):
        raise SingularityError("waveguide kernel evaluated at x = y (or its wall image)")

    # large-l expansion coefficients; eps = (k/pi)^2
    eps = (k / np.pi) ** 2
    a1 = np.pi * eps / 2.0
    a3 = np.pi * eps**2 / 8.0
    a5 = np.pi * eps**3 / 16.0
    E1 = a1 * d
    E2 = (a1 * d) ** 2 / 2.0
    E3 = a3 * d + (a1 * d) ** 3 / 6.0
    E4 = a1 * a3 * d * d + (a1 * d) ** 4 / 24.0
    E5 = a5 * d + a1**2 * a3 * d**3 / 2.0 + (a1 * d) ** 5 / 120.0
    E6 = (a1 * a5 * d * d + a3**2 * d * d / 2.0
          + a1**3 * a3 * d**4 / 6.0 + (a1 * d) ** 6 / 720.0)
    G1c = 1.0 / np.pi
    G3c = eps / (2.0 * np.pi)
    G5c = 3.0 * eps**2 / (8.0 * np.pi)

    # coefficients of l^-s in exp(delta_l d)/gamma_l       (s = 1..6)
    q = {1: G1c * np.ones_like(d) + 0j, 2: G1c * E1, 3: G1c * E2 + G3c,
         4: G1c * E3 + G3c * E1, 5: G1c * E4 + G3c * E2 + G5c,
         6: G1c * E5 + G3c * E3 + G5c * E1}
    # coefficients of l^-s in exp(delta_l d)                (s = 0..5)
    e = {0: np.ones_like(d) + 0j, 1: E1, 2: E2, 3: E3, 4: E4, 5: E5}
    # gamma_l exp(delta_l d) = pi l + sum_s g_s l^-s        (s = 0..5)
    g = {0: np.pi * E1, 1: np.pi * E2 - a1, 2: np.pi * E3 - a1 * E1,
         3: np.pi * E4 - a1 * E2 - a3, 4: np.pi * E5 - a1 * E3 - a3 * E1,
         5: np.pi * E6 - a1 * E4 - a3 * E2 - a5}

    tab_m = _phi_table(mu_m, 6)
    tab_p = _phi_table(mu_p, 6)

    def cc(s):
        return 0.5 * (tab_m[s].real + tab_p[s].real)

    def sc(s):
        return 0.5 * (tab_m[s].imag + tab_p[s].imag)

    def cs(s):
        return 0.5 * (tab_p[s].imag - tab_m[s].imag)

    def ss(s):
        return 0.5 * (tab_m[s].real - tab_p[s].real)

    F_val = sum(q[s] * cc(s) for s in range(1, 7))
    if need_grad or need_hyper:
        F_du = sum(q[s] * sc(s - 1) for s in range(1, 7))
        F_dv = sum(q[s] * cs(s - 1) for s in range(1, 7))
        F_dd = sum(e[s] * cc(s) for s in range(0, 6))
    if need_hyper:
        F_duv = sum(q[s] * ss(s - 2) for s in range(1, 7))
        F_ddd = np.pi * cc(-1) + sum(g[s] * cc(s) for s in range(0, 6))
        F_dud = sum(e[s] * sc(s - 1) for s in range(0, 6))
        F_dvd = sum(e[s] * cs(s - 1) for s in range(0, 6))

    # residual series with exact modal weights
    zm = np.exp(mu_m)
    zp = np.exp(mu_p)
    Zm = np.ones_like(zm)
    Zp = np.ones_like(zp)
    scale = {}
    below = 0
    l = 0
    while True:
        l += 1
        if l > max_modes:
            raise ConvergenceError(f"modal residual did not converge within {max_modes} modes")
        gam = mode_gamma(l, k, cut_tol=0.0)
        if abs(gam) < GAMMA_GUARD:
            raise BranchCutError(
                f"wavenumber too close to cutoff of mode {l} (|gamma_l| = {abs(gam):.2e})")
        Zm = Zm * zm
        Zp = Zp * zp
        delta = l * np.pi - gam
        ed = np.exp(delta * d)
        gt = ed / gam
        r_g = gt - sum(q[s] / l**s for s in range(1, 7))
        r_e = ed - sum(e[s] / l**s for s in range(0, 6))
        r_ge = gam * ed - (np.pi * l + sum(g[s] / l**s for s in range(0, 6)))
        ccl = 0.5 * (Zm.real + Zp.real)
        scl = 0.5 * (Zm.imag + Zp.imag)
        csl = 0.5 * (Zp.imag - Zm.imag)
        ssl = 0.5 * (Zm.real - Zp.real)

        terms = {"val": r_g * ccl}
        F_val += terms["val"]
        if need_grad or need_hyper:
            terms["du"] = l * r_g * scl
            terms["dv"] = l * r_g * csl
            terms["dd"] = r_e * ccl
            F_du += terms["du"]
            F_dv += terms["dv"]
            F_dd += terms["dd"]
        if need_hyper:
            terms["duv"] = l * l * r_g * ssl
            terms["ddd"] = r_ge * ccl
            terms["dud"] = l * r_e * scl
            terms["dvd"] = l * r_e * csl
            F_duv += terms["duv"]
            F_ddd += terms["ddd"]
            F_dud += terms["dud"]
            F_dvd += terms["dvd"]

        ok = True
        for name, t in terms.items():
            tmax = float(np.max(np.abs(t)))
            scale[name] = max(scale.get(name, 0.0), tmax, 1e-6)
            if tmax > rel_tol * scale[name]:
                ok = False
        below = below + 1 if ok else 0
        if below >= 3:
            break

    if not (need_grad or need_hyper):
        F_du = F_dv = F_dd = None
    if not need_hyper:
        F_duv = F_ddd = F_dud = F_dvd = None
    return _finalize_wg((F_val, F_du, F_dv, F_dd, F_duv, F_ddd, F_dud, F_dvd),
                        d, sgn, k, nx, ny, need_grad, need_hyper,
                        ModalInfo(modes_used=l, rel_tol=rel_tol))


def _finalize_wg(F, d, sgn, k, nx, ny, need_grad, need_hyper, info):
    """Combine modal sums with the l = 0 term and contract with normals."""
    F_val, F_du, F_dv, F_dd, F_duv, F_ddd, F_dud, F_dvd = F
    ekd = np.exp(1j * k * d)
    out = {"value": (0.5j / k) * ekd + F_val, "info": info}
    if need_grad or need_hyper:
        out["dx1"] = -np.pi * F_du
        out["dy1"] = -np.pi * F_dv
        out["dx2"] = sgn * (-0.5 * ekd - F_dd)
        out["dy2"] = -out["dx2"]
    if need_hyper:
        out["hx1y1"] = np.pi**2 * F_duv
        out["hx1y2"] = -sgn * np.pi * F_dud
        out["hx2y1"] = sgn * np.pi * F_dvd
        out["hx2y2"] = 0.5j * k * ekd - F_ddd
    if ny is not None and (need_grad or need_hyper):
        ny = np.atleast_2d(np.asarray(ny, dtype=float))
        out["dny"] = out["dy1"] * ny[None, :, 0] + out["dy2"] * ny[None, :, 1]
    if nx is not None and (need_grad or need_hyper):
        nx = np.atleast_2d(np.asarray(nx, dtype=float))
        out["dnx"] = out["dx1"] * nx[:, None, 0] + out["dx2"] * nx[:, None, 1]
    if nx is not None and ny is not None and need_hyper:
        out["hyper"] = (nx[:, None, 0] * ny[None, :, 0] * out["hx1y1"]
                        + nx[:, None, 0] * ny[None, :, 1] * out["hx1y2"]
                        + nx[:, None, 1] * ny[None, :, 0] * out["hx2y1"]
                        + nx[:, None, 1] * ny[None, :, 1] * out["hx2y2"])
    return out


def _wg_fields_fast(x, y, k, nx=None, ny=None, rel_tol: float = DEFAULT_REL_TOL,
                    max_modes: int = MAX_MODES, need_grad: bool = True,
                    need_hyper: bool = True):
    """Compiled-core variant of :func:`wg_fields` (same contract)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    k = complex(k)
    x2 = x[:, None, 1]
    y2 = y[None, :, 1]
    d = np.abs(x2 - y2)
    sgn = np.where(x2 >= y2, 1.0, -1.0)
    u = x[:, None, 0] + 0.5
    v = y[None, :, 0] + 0.5
    th_m = np.pi * (u - v) + 0.0 * d
    th_p = np.pi * (u + v) + 0.0 * d
    if np.any((d < 1e-14) & (np.abs(_wrap_angle(th_m)) < 1e-14)):
        raise SingularityError("waveguide kernel evaluated at x = y")
    if np.any((d < 1e-14) & (np.abs(_wrap_angle(th_p)) < 1e-14)):
        raise SingularityError("waveguide kernel evaluated at a wall image point")
    gam_tab, delta_tab = _gamma_tables(k, max_modes)
    shape = d.shape
    sums, modes_used, flags = _modal_fast.modal_sums_fast(
        d, th_m, th_p, k, gam_tab, delta_tab, rel_tol,
        need_grad or need_hyper, need_hyper,
        _MU_COEFF_TABLE, _HARMONIC_TABLE, max_modes)
    if np.any(flags == 2):
        raise ConvergenceError(
            f"modal residual did not converge within {max_modes} modes")
    F = [s.reshape(shape) for s in sums]
    if not (need_grad or need_hyper):
        F[1] = F[2] = F[3] = None
    if not need_hyper:
        F[4] = F[5] = F[6] = F[7] = None
    return _finalize_wg(tuple(F), d, sgn, k, nx, ny, need_grad, need_hyper,
                        ModalInfo(modes_used=int(modes_used.max()), rel_tol=rel_tol))


def _check_strip(*pts):
    for p in pts:
        if abs(p[0]) > 0.5 + 1e-12:
            raise SingularityError(f"point {tuple(p)} lies outside the strip |x1| <= 1/2")


def greens_waveguide(x, y, k, rel_tol: float = DEFAULT_REL_TOL,
                     return_info: bool = False):
    """Waveguide Green's function at one point pair (modal series, accelerated)."""
    x = _as_point(x); y = _as_point(y)
    _check_strip(x, y)
    f = wg_fields(x[None], y[None], k, rel_tol=rel_tol,
                  need_grad=False, need_hyper=False)
    val = complex(f["value"][0, 0])
    if return_info:
        return val, f["info"]
    return val


def greens_waveguide_dny(x, y, ny, k, rel_tol: float = DEFAULT_REL_TOL) -> complex:
    x = _as_point(x); y = _as_point(y)
    _check_strip(x, y)
    f = wg_fields(x[None], y[None], k, ny=_as_point(ny)[None],
                  rel_tol=rel_tol, need_hyper=False)
    return complex(f["dny"][0, 0])


def greens_waveguide_dnx(x, y, nx, k, rel_tol: float = DEFAULT_REL_TOL) -> complex:
    x = _as_point(x); y = _as_point(y)
    _check_strip(x, y)
    f = wg_fields(x[None], y[None], k, nx=_as_point(nx)[None],
                  rel_tol=rel_tol, need_hyper=False)
    return complex(f["dnx"][0, 0])


def greens_waveguide_hyper(x, y, nx, ny, k, rel_tol: float = DEFAULT_REL_TOL) -> complex:
    x = _as_point(x); y = _as_point(y)
    _check_strip(x, y)
    f = wg_fields(x[None], y[None], k, nx=_as_point(nx)[None],
                  ny=_as_point(ny)[None], rel_tol=rel_tol)
    return complex(f["hyper"][0, 0])


def wg_remainder_fields(x, y, nx, ny, k, rel_tol: float = DEFAULT_REL_TOL):
    """Waveguide kernels minus the outgoing free-space ones at the same k.

    The difference is smooth across x = y (the modal sum's log singularity
    is exactly the free-space one), so plain quadrature integrates it.
    """
    wg = wg_fields(x, y, k, nx=nx, ny=ny, rel_tol=rel_tol)
    fr = free_fields(x, y, nx, ny, k, KernelMode.OUTGOING)
    return {key: wg[key] - fr[key] for key in ("value", "dny", "dnx", "hyper")}


def naive_waveguide_sum(x, y, k, n_modes: int) -> complex:
    """Literal modal truncation of the waveguide Green's function.

    Converges only for x2 != y2; used as an independent oracle in tests.
    """
    x = _as_point(x); y = _as_point(y)
    d = abs(x[1] - y[1])
    u = x[0] + 0.5
    v = y[0] + 0.5
    tot = 0.5 * np.exp(1j * k * d) / (-1j * complex(k))
    for l in range(1, n_modes + 1):
        gam = mode_gamma(l, k, cut_tol=0.0)
        tot += (np.exp(-gam * d) / gam
                * math.cos(l * math.pi * u) * math.cos(l * math.pi * v))
    return complex(tot)
