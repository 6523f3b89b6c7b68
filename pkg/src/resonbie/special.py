"""Complex-argument special functions used by the boundary kernels.

Bessel and Hankel functions of integer order are evaluated through the
AMOS routines exposed by :mod:`scipy.special`, wrapped with the domain
checks this library guarantees (order <= 60, |z| <= 200).  On that region
the relative accuracy is far below the 1e-10 the kernels need.

Two pieces are implemented here rather than delegated:

* :func:`mode_gamma`, the branch-resolved square root
  ``sqrt((l*pi)**2 - k**2)`` that fixes the radiation condition of the
  waveguide modes.  The branch is analytic in the k-plane cut along the
  vertical rays ``(+-l*pi, +-l*pi - i*inf)`` and approaches ``-i*k`` for
  large ``|k|`` in the upper half-plane, so that propagating modes are
  outgoing and evanescent modes decay.
* :func:`polylog`, the polylogarithm ``Li_s(z)`` on the closed unit disk
  for integer ``s``, which the accelerated waveguide Green's function
  uses to resum asymptotic mode tails in closed form.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.special as _sp

from .errors import BranchCutError, DomainError, SingularityError

MAX_ORDER = 60
MAX_ABS_Z = 200.0

_BERNOULLI = _sp.bernoulli(120)


def _check_order_arg(n: int, z: complex) -> complex:
    if n < 0 or n != int(n):
        raise DomainError(f"order must be a nonnegative integer, got {n}")
    if n > MAX_ORDER:
        raise DomainError(f"order {n} exceeds supported maximum {MAX_ORDER}")
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise DomainError(f"non-finite argument {z}")
    if abs(z) > MAX_ABS_Z:
        raise DomainError(f"|z| = {abs(z):.3g} exceeds supported region {MAX_ABS_Z}")
    return z


def bessel_j(n: int, z: complex) -> complex:
    """Bessel function J_n(z) for complex z, integer order 0 <= n <= 60."""
    z = _check_order_arg(n, z)
    return complex(_sp.jv(n, z))


def bessel_y(n: int, z: complex) -> complex:
    """Bessel function Y_n(z), principal branch (cut along the negative real axis)."""
    z = _check_order_arg(n, z)
    if z == 0:
        raise SingularityError("Y_n is singular at z = 0")
    return complex(_sp.yv(n, z))


def hankel1(n: int, z: complex) -> complex:
    """Hankel function of the first kind, H_n^(1)(z) = J_n(z) + i Y_n(z)."""
    z = _check_order_arg(n, z)
    if z == 0:
        raise SingularityError("H_n^(1) is singular at z = 0")
    return complex(_sp.hankel1(n, z))


def hankel2(n: int, z: complex) -> complex:
    """Hankel function of the second kind, H_n^(2)(z) = J_n(z) - i Y_n(z)."""
    z = _check_order_arg(n, z)
    if z == 0:
        raise SingularityError("H_n^(2) is singular at z = 0")
    return complex(_sp.hankel2(n, z))


def cyl_deriv(fn, n: int, z: complex):
    """Derivative of a cylinder function via Z_n'(z) = Z_{n-1}(z) - (n/z) Z_n(z).

    ``fn`` is any of :func:`bessel_j`, :func:`bessel_y`, :func:`hankel1`,
    :func:`hankel2`.  For n = 0 the identity Z_0' = -Z_1 is used.
    """
    if n == 0:
        return -fn(1, z)
    return fn(n - 1, z) - (n / z) * fn(n, z)


# ---------------------------------------------------------------------------
# branch-resolved modal square root
# ---------------------------------------------------------------------------

def cut_distance(l: int, k: complex) -> float:
    """Distance from k to the branch cuts of mode l (rays from +-l*pi downward)."""
    k = complex(k)
    d = math.inf
    for s in (1.0, -1.0):
        bx = s * l * math.pi
        dx = k.real - bx
        dy = k.imag
        if dy <= 0.0:
            d = min(d, abs(dx))
        else:
            d = min(d, math.hypot(dx, dy))
    return d


def mode_gamma(l: int, k: complex, cut_tol: float = 1e-12):
    """Branch-resolved sqrt((l*pi)**2 - k**2) for waveguide mode l.

    Real positive for real k below the mode cutoff l*pi, equal to
    ``-i*sqrt(k**2 - (l*pi)**2)`` above it, and asymptotic to ``-i*k`` in
    the upper half-plane.  Accepts array ``k``; the cut check is skipped
    for array input (callers validate contours separately).

    Raises
    ------
    BranchCutError
        If scalar ``k`` lies within ``cut_tol`` of a branch cut of mode l
        (l >= 1; the l = 0 root ``-i*k`` is entire).
    """
    if l < 0 or l != int(l):
        raise DomainError(f"mode index must be a nonnegative integer, got {l}")
    if np.isscalar(k) or getattr(k, "ndim", 1) == 0:
        k = complex(k)
        if l >= 1 and cut_distance(l, k) < cut_tol:
            raise BranchCutError(f"k = {k} lies on a branch cut of mode {l}")
        s = np.sqrt(complex(l * math.pi - k) * complex(l * math.pi + k))
        if s.real < 0 or (s.real == 0 and s.imag > 0):
            s = -s
        return s
    k = np.asarray(k, dtype=complex)
    s = np.sqrt((l * math.pi - k) * (l * math.pi + k))
    flip = (s.real < 0) | ((s.real == 0) & (s.imag > 0))
    return np.where(flip, -s, s)


# ---------------------------------------------------------------------------
# polylogarithm on the closed unit disk
# ---------------------------------------------------------------------------

def _zeta_int(n: int) -> float:
    """zeta(n) for integer n != 1 (negative values via Bernoulli numbers)."""
    if n > 1:
        return float(_sp.zeta(n))
    if n == 0:
        return -0.5
    m = -n
    # zeta(-m) = -B_{m+1}/(m+1); odd Bernoulli numbers beyond B_1 vanish
    return -float(_BERNOULLI[m + 1]) / (m + 1)


def _harmonic(n: int) -> float:
    return sum(1.0 / j for j in range(1, n + 1))


_MU_JMAX = 72
_SERIES_LMAX = 64
_SPLIT_RADIUS = 0.6


def _polylog_mu_coeffs(s: int) -> np.ndarray:
    coeffs = np.zeros(_MU_JMAX + 1)
    fact = 1.0
    for j in range(_MU_JMAX + 1):
        if j > 0:
            fact *= j
        if j != s - 1:
            coeffs[j] = _zeta_int(s - j) / fact
    return coeffs


_MU_COEFFS = {s: _polylog_mu_coeffs(s) for s in range(2, 7)}


def polylog_exp(s: int, mu: np.ndarray) -> np.ndarray:
    """Li_s(e^mu) for integer s in [2, 6], Re(mu) <= 0, |Im(mu)| <= pi.

    Uses the direct power series where |e^mu| <= 0.6 and the expansion of
    Li_s around the singular point mu = 0 elsewhere (convergent for
    |mu| < 2*pi; the wrapped imaginary part keeps |mu| <= sqrt(pi^2 + log(0.6)^2)).
    """
    if s not in _MU_COEFFS:
        raise DomainError(f"polylog order {s} not supported (need 2 <= s <= 6)")
    mu = np.asarray(mu, dtype=complex)
    if np.any(mu.real > 1e-12):
        raise DomainError("polylog_exp requires Re(mu) <= 0")
    z = np.exp(mu)
    out = np.empty_like(z)
    small = np.abs(z) <= _SPLIT_RADIUS

    if np.any(small):
        zs = z[small]
        acc = np.zeros_like(zs)
        p = np.ones_like(zs)
        for l in range(1, _SERIES_LMAX + 1):
            p = p * zs
            acc += p / l**s
        out[small] = acc

    big = ~small
    if np.any(big):
        mub = mu[big]
        if np.any(np.abs(mub) < 1e-300):
            raise SingularityError("polylog_exp evaluated at the singular point z = 1")
        coeffs = _MU_COEFFS[s]
        acc = (mub ** (s - 1) / math.factorial(s - 1)) * (_harmonic(s - 1) - np.log(-mub))
        p = np.ones_like(mub)
        for j in range(_MU_JMAX + 1):
            acc += coeffs[j] * p
            p = p * mub
        out[big] = acc
    return out


def polylog(s: int, z: np.ndarray) -> np.ndarray:
    """Li_s(z) for integer s in [2, 6] and |z| <= 1, z != 1."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1 + 1e-12):
        raise DomainError("polylog is implemented on the closed unit disk only")
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.log(z)
    mu = np.where(np.abs(z) == 0, -np.inf - 0j, mu)
    out = np.empty_like(z)
    zero = np.abs(z) == 0
    out[zero] = 0.0
    rest = ~zero
    if np.any(rest):
        mr = mu[rest]
        mr = np.where(mr.real > 0, 1j * mr.imag, mr)  # guard roundoff on |z| = 1
        out[rest] = polylog_exp(s, mr)
    return out


def cexpm1(w: np.ndarray) -> np.ndarray:
    """expm1 for complex arrays (numpy >= 2 supports complex natively)."""
    return np.expm1(np.asarray(w, dtype=complex))
