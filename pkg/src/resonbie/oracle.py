"""Semi-analytic resonance equations for a single circular scatterer.

Separating variables on a circle of radius r0 (exterior medium 1,
interior medium 2, angular order n) turns each resonance problem into a
2 x 2 determinant per order.  Two families matter here:

* the free-space transmission problem with the media swapped (interior
  wavenumber k1 as J_n, exterior k2 radiating), whose eigenvalues are the
  spurious ones a boundary-integral discretization of the original
  problem picks up:

      f(omega) = -S2 H_n^(iota)(k2 r0) d/dr J_n(k1 r)|_{r0}
                 + S1 d/dr H_n^(iota)(k2 r)|_{r0} J_n(k1 r0),

  iota = 1 for the outgoing exterior kernel, iota = 2 for the incoming
  one (roots are complex conjugates of each other);

* the original free-space transmission problem (interior k2, exterior k1
  outgoing), obtained by applying the interface conditions
  u+ = u-, S1 du+/dn = S2 du-/dn to J_n(k2 r) inside and H_n^(1)(k1 r)
  outside:

      g(omega) = S2 k2 J_n'(k2 r0) H_n^(1)(k1 r0)
                 - S1 k1 H_n^(1)'(k1 r0) J_n(k2 r0).

Roots are found by a grid-seeded Newton iteration with analytic
derivatives (cylinder-function recurrences) and verified against an
argument-principle winding count over the search rectangle.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.special as _sp

from .assembly import Material
from .errors import ConfigError, DomainError, IncompleteRootsError
from .ssm import ContourSpec

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
DEDUP_TOL = 1e-8
DEFAULT_GRID = 60


class CharKind(enum.Enum):
    FICTITIOUS_OUTGOING = "fictitious_outgoing"   # iota = 1
    FICTITIOUS_INCOMING = "fictitious_incoming"   # iota = 2
    TRUE_FREESPACE = "true_freespace"


@dataclass(frozen=True)
class CharSpec:
    n: int
    r0: float
    exterior: Material
    interior: Material
    kind: CharKind

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError("angular order must be nonnegative")
        if self.r0 <= 0:
            raise ConfigError("radius must be positive")


def _pair(fn, n, z):
    """(Z_n(z), Z_n'(z)) via Z_n' = Z_{n-1} - (n/z) Z_n."""
    zn = fn(n, z)
    znm = fn(n - 1, z) if n >= 1 else -fn(1, z)
    if n >= 1:
        return zn, znm - (n / z) * zn
    return zn, znm


def _pair2(fn, n, z):
    """(Z_n, Z_n', Z_n'') from the recurrences."""
    zn, dzn = _pair(fn, n, z)
    if n >= 1:
        znm, dznm = _pair(fn, n - 1, z)
        d2 = dznm - (n / z) * dzn + (n / z**2) * zn
    else:
        z1, dz1 = _pair(fn, 1, z)
        d2 = -dz1
    return zn, dzn, d2


def char_value(spec: CharSpec, omega: complex) -> complex:
    """Characteristic determinant at omega; zero exactly at a resonance."""
    if omega == 0:
        raise DomainError("omega = 0 is outside the characteristic equation domain")
    v, _ = _char_value_deriv(spec, complex(omega))
    return v


def _char_value_deriv(spec: CharSpec, om: complex):
    n, r0 = spec.n, spec.r0
    s1, s2 = spec.exterior.shear, spec.interior.shear
    c1 = math.sqrt(spec.exterior.rho / spec.exterior.shear)
    c2 = math.sqrt(spec.interior.rho / spec.interior.shear)
    k1, k2 = c1 * om, c2 * om
    jv = _sp.jv
    if spec.kind is CharKind.TRUE_FREESPACE:
        hv = _sp.hankel1
        J, dJ, d2J = _pair2(jv, n, k2 * r0)
        H, dH, d2H = _pair2(hv, n, k1 * r0)
        val = s2 * k2 * dJ * H - s1 * k1 * dH * J
        # d/domega with dk/domega = c
        dval = (s2 * c2 * dJ * H + s2 * k2 * d2J * c2 * r0 * H + s2 * k2 * dJ * dH * c1 * r0
                - s1 * c1 * dH * J - s1 * k1 * d2H * c1 * r0 * J - s1 * k1 * dH * dJ * c2 * r0)
        return val, dval
    hv = _sp.hankel1 if spec.kind is CharKind.FICTITIOUS_OUTGOING else _sp.hankel2
    J, dJ, d2J = _pair2(jv, n, k1 * r0)
    H, dH, d2H = _pair2(hv, n, k2 * r0)
    # -S2 H_n(k2 r0) k1 J_n'(k1 r0) + S1 k2 H_n'(k2 r0) J_n(k1 r0)
    val = -s2 * H * k1 * dJ + s1 * k2 * dH * J
    dval = (-s2 * dH * c2 * r0 * k1 * dJ - s2 * H * c1 * dJ - s2 * H * k1 * d2J * c1 * r0
            + s1 * c2 * dH * J + s1 * k2 * d2H * c2 * r0 * J + s1 * k2 * dH * dJ * c1 * r0)
    return val, dval


def _newton(spec: CharSpec, z0: complex):
    z = z0
    for _ in range(NEWTON_MAXIT):
        val, dval = _char_value_deriv(spec, z)
        if dval == 0:
            return None
        step = val / dval
        z = z - step
        if abs(step) < NEWTON_TOL * max(1.0, abs(z)):
            return z
    return None


def winding_number(spec: CharSpec, region: ContourSpec, n_per_side: int = 512,
                   max_refine: int = 6) -> int:
    """Zero count inside the rectangle by phase continuation along its boundary.

    The boundary sampling is refined until adjacent phase steps stay below
    pi/2 (the characteristic function is analytic in the right half-plane,
    so the count is exact once the sampling resolves the phase).
    """
    for it in range(max_refine):
        n = n_per_side * 2**it
        corners = region.corners()
        zs = []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            s = np.arange(n) / n
            zs.append(a + s * (b - a))
        zs = np.concatenate(zs)
        vals = np.array([char_value(spec, z) for z in zs])
        if np.any(vals == 0) or np.any(~np.isfinite(vals)):
            continue
        ph = np.angle(vals)
        dph = np.diff(np.concatenate([ph, ph[:1]]))
        dph = (dph + np.pi) % (2 * np.pi) - np.pi
        if np.max(np.abs(dph)) < 0.5 * np.pi:
            return int(round(float(dph.sum() / (2 * np.pi))))
    raise IncompleteRootsError(
        "winding count did not stabilize; a zero may sit on the region boundary")


def find_roots(spec: CharSpec, region: ContourSpec, grid: int = DEFAULT_GRID) -> list[complex]:
    """All roots of the characteristic equation inside the rectangle.

    Newton iterations are seeded at local minima of |f| on a grid x grid
    sampling; duplicates are merged at 1e-8.  The count is cross-checked
    with the argument-principle winding number; disagreement after one
    grid refinement raises IncompleteRootsError.
    """
    target = winding_number(spec, region)
    for g in (grid, 2 * grid):
        roots = _grid_newton(spec, region, g)
        if len(roots) == target:
            return roots
    raise IncompleteRootsError(
        f"found {len(roots)} roots but winding count is {target} "
        f"(order n = {spec.n}, kind {spec.kind.value})")


def _grid_newton(spec: CharSpec, region: ContourSpec, g: int) -> list[complex]:
    xs = np.linspace(region.re_min, region.re_max, g)
    ys = np.linspace(region.im_min, region.im_max, g)
    Z = xs[None, :] + 1j * ys[:, None]
    V = np.abs(np.vectorize(lambda z: char_value(spec, z))(Z))
    roots: list[complex] = []
    inner = V[1:-1, 1:-1]
    is_min = ((inner <= V[:-2, 1:-1]) & (inner <= V[2:, 1:-1])
              & (inner <= V[1:-1, :-2]) & (inner <= V[1:-1, 2:]))
    for i, j in zip(*np.nonzero(is_min)):
        r = _newton(spec, complex(Z[i + 1, j + 1]))
        if r is None or not region.contains(r):
            continue
        if all(abs(r - q) > DEDUP_TOL for q in roots):
            roots.append(r)
    return sorted(roots, key=lambda z: (z.real, z.imag))


def sweep_orders(r0: float, exterior: Material, interior: Material,
                 kind: CharKind, region: ContourSpec, n_max: int = 15,
                 grid: int = DEFAULT_GRID):
    """Roots for angular orders 0..n_max inside the region, as (n, root) pairs."""
    out = []
    for n in range(n_max + 1):
        spec = CharSpec(n, r0, exterior, interior, kind)
        for r in find_roots(spec, region, grid=grid):
            out.append((n, r))
    return out


def write_oracle_csv(rows, kind: CharKind, path) -> None:
    """CSV schema: n, re_omega, im_omega, kind."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re_omega", "im_omega", "kind"])
        for n, r in rows:
            w.writerow([n, f"{r.real:.17g}", f"{r.imag:.17g}", kind.value])


# ---------------------------------------------------------------------------
# partial-wave forward solution (single circle, free space)
# ---------------------------------------------------------------------------

@dataclass
class MieSolution:
    """Partial-wave coefficients of a plane-wave scattering problem.

    The incident field is expanded as sum c_n J_n(k1 r) e^{i n phi}; the
    scattered exterior field uses a_n H_n^(1)(k1 r), the interior field
    b_n J_n(k2 r).
    """

    r0: float
    k1: float
    k2: float
    s1: float
    s2: float
    orders: np.ndarray
    c: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def boundary_traces(self, phi):
        """(u, q) of the total field on the circle at polar angles phi."""
        phi = np.asarray(phi, dtype=float)
        u = np.zeros(phi.shape, dtype=complex)
        q = np.zeros(phi.shape, dtype=complex)
        for n, bn in zip(self.orders, self.b):
            J, dJ = _pair_signed(_sp.jv, n, self.k2 * self.r0)
            u += bn * J * np.exp(1j * n * phi)
            q += self.s2 * bn * self.k2 * dJ * np.exp(1j * n * phi)
        return u, q

    def scattering_cross_section(self) -> float:
        """sigma = (4/k1) sum |a_n / c_n-normalized|^2 for unit incident amplitude."""
        return 4.0 / self.k1 * float(np.sum(np.abs(self.a) ** 2))

    def forward_amplitude_cross_section(self) -> float:
        """Optical-theorem value: sigma = -(4/k1) Re sum a_n (for c_n = 1)."""
        return -4.0 / self.k1 * float(np.real(np.sum(self.a)))

    def cross_section_quadrature(self, n_phi: int = 4096) -> float:
        """Angular integral of the far-field intensity (independent check)."""
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        f = np.zeros(n_phi, dtype=complex)
        for n, an in zip(self.orders, self.a):
            f += an * (-1j) ** n * np.exp(1j * n * phi)
        # |far field|^2 with H_n ~ sqrt(2/(pi k r)) e^{i(kr - n pi/2 - pi/4)}
        return float(2.0 / (np.pi * self.k1) * np.sum(np.abs(f) ** 2) * (2 * np.pi / n_phi))


def _pair_signed(fn, n, z):
    """(Z_n, Z_n') for possibly negative integer order (Z_{-n} = (-1)^n Z_n)."""
    m = abs(n)
    sgn = 1.0 if (n >= 0 or m % 2 == 0) else -1.0
    zm, dzm = _pair(fn, m, z)
    return sgn * zm, sgn * dzm


def mie_forward_solution(r0: float, exterior: Material, interior: Material,
                         omega: float, direction=(0.0, 1.0),
                         n_extra: int = 20) -> MieSolution:
    """Plane-wave scattering by one circle at the origin, free space.

    The series is truncated at ceil(k1 r0) + n_extra orders.  Incident
    amplitude is one; ``direction`` is the propagation direction.
    """
    if omega <= 0:
        raise ConfigError("mie_forward_solution needs real positive omega")
    k1 = exterior.wavenumber(omega)
    k2 = interior.wavenumber(omega)
    s1, s2 = exterior.shear, interior.shear
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    phi_d = math.atan2(d[1], d[0])
    nmax = int(math.ceil(k1 * r0)) + n_extra
    orders = np.arange(-nmax, nmax + 1)
    c = np.array([1j**n * np.exp(-1j * n * phi_d) for n in orders], dtype=complex)
    a = np.zeros(len(orders), dtype=complex)
    b = np.zeros(len(orders), dtype=complex)
    for i, n in enumerate(orders):
        J1, dJ1 = _pair_signed(_sp.jv, n, k1 * r0)
        H1, dH1 = _pair_signed(_sp.hankel1, n, k1 * r0)
        J2, dJ2 = _pair_signed(_sp.jv, n, k2 * r0)
        M = np.array([[H1, -J2], [s1 * k1 * dH1, -s2 * k2 * dJ2]])
        rhs = -c[i] * np.array([J1, s1 * k1 * dJ1])
        a[i], b[i] = np.linalg.solve(M, rhs)
    return MieSolution(r0=r0, k1=k1, k2=k2, s1=s1, s2=s2,
                       orders=orders, c=c, a=a, b=b)
