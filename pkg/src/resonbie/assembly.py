"""Dense collocation assembly of the Mueller and PMCHWT transmission BIEs.

Unknowns are the boundary trace u and flux q = S du/dn on each panel,
interleaved as (u_0, q_0, u_1, q_1, ...); the two collocated equations of
each panel occupy the matching interleaved rows.  With exterior medium 1
and interior medium 2 (normal pointing into medium 1), the homogeneous
systems are

Mueller:
    (S1+S2)/2 u - int (S1 dG1/dny - S2 dG2/dny) u + int (G1 - G2) q = 0
    (S1+S2)/(2 S1 S2) q - int (d2G1 - d2G2) u
        + int ((1/S1) dG1/dnx - (1/S2) dG2/dnx) q = 0

PMCHWT:
    int (dG1/dny + dG2/dny) u - int (G1/S1 + G2/S2) q = 0
    fp int (S1 d2G1 + S2 d2G2) u - int (dG1/dnx + dG2/dnx) q = 0

G1 is the exterior kernel (free-space or waveguide Green's function at
k1, always outgoing); G2 is the interior free-space kernel at k2 and may
be switched to the incoming fundamental solution.

Quadrature: 8-point Gauss-Legendre on regular source panels, 64-point
within two panel lengths of the collocation point, and an analytic
split on the self panel: the static log part of the single layer and the
finite-part plus log parts of the hypersingular operator are integrated
in closed form on the flat panel, the smooth remainders with 16-point
Gauss on each half.  The double layer vanishes identically on a flat
self panel; the adjoint double layer gets its curvature diagonal limit
-kappa/(4 pi) times the panel length (the double layer's curvature
content is already carried by the polygon's turning angles, adding it
there double-counts).  Waveguide exterior kernels are split into the
free-space part (same singular machinery) plus a smooth modal remainder
integrated with a 4-point rule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special as _sp
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, DomainError
from .geometry import BoundaryMesh
from .kernels import DomainKind, KernelMode, free_fields, free_fields_pairs, wg_fields

REGULAR_QUAD = 8
NEAR_QUAD = 64
SELF_QUAD = 16
REMAINDER_QUAD = 4
NEAR_FACTOR = 2.0
TARGET_CHUNK = 64


@dataclass(frozen=True)
class Material:
    """Homogeneous medium with density rho and shear modulus shear."""

    rho: float
    shear: float

    def __post_init__(self):
        if self.rho <= 0 or self.shear <= 0:
            raise ConfigError(f"material constants must be positive, got {self}")

    def wavenumber(self, omega):
        return omega * math.sqrt(self.rho / self.shear)


class Formulation(enum.Enum):
    MUELLER = "mueller"
    PMCHWT = "pmchwt"


@dataclass
class ProblemSpec:
    """Everything needed to assemble A(omega) for one transmission problem."""

    mesh: BoundaryMesh
    exterior: Material
    interior: Material
    domain: DomainKind = DomainKind.FREESPACE
    formulation: Formulation = Formulation.MUELLER
    kernel_mode: KernelMode = KernelMode.OUTGOING
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.domain is DomainKind.WAVEGUIDE:
            if np.any(np.abs(self.mesh.midpoints[:, 0]) >= 0.5):
                raise ConfigError("waveguide mesh must lie strictly inside |x1| < 1/2")

    @property
    def size(self) -> int:
        return 2 * self.mesh.n_panels


@dataclass
class DensityPair:
    """Boundary trace u and flux q = S du/dn per panel."""

    u: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.q.shape:
            raise ConfigError("u and q must have equal lengths")

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "DensityPair":
        return cls(u=x[0::2].copy(), q=x[1::2].copy())

    def to_vector(self) -> np.ndarray:
        out = np.empty(2 * len(self.u), dtype=complex)
        out[0::2] = self.u
        out[1::2] = self.q
        return out


# ---------------------------------------------------------------------------
# incident fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlaneWaveMode:
    """Waveguide mode l arriving from x2 = -inf: cos(l pi (x1+1/2)) e^{i beta_l x2}."""

    l: int = 0

    def beta(self, k1: float) -> float:
        val = k1 * k1 - (self.l * math.pi) ** 2
        if val <= 0:
            raise ConfigError(
                f"incident waveguide mode l = {self.l} is evanescent at k1 = {k1}")
        return math.sqrt(val)

    def fields(self, pts: np.ndarray, k1: float):
        """(u_inc, grad u_inc) at the given points."""
        b = self.beta(k1)
        lp = self.l * math.pi
        c = np.cos(lp * (pts[:, 0] + 0.5))
        s = np.sin(lp * (pts[:, 0] + 0.5))
        ph = np.exp(1j * b * pts[:, 1])
        u = c * ph
        grad = np.stack([-lp * s * ph, 1j * b * c * ph], axis=1)
        return u, grad


@dataclass(frozen=True)
class FreeSpacePlaneWave:
    """Unit plane wave e^{i k1 d.x} with direction d (normalized on use)."""

    direction: tuple[float, float] = (0.0, 1.0)

    def fields(self, pts: np.ndarray, k1: float):
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        ph = np.exp(1j * k1 * (pts @ d))
        grad = 1j * k1 * d[None, :] * ph[:, None]
        return ph, grad


Incident = PlaneWaveMode | FreeSpacePlaneWave


def incident_traces(incident: Incident, mesh: BoundaryMesh, k1: float, s1: float):
    """(u_inc, q_inc) at the collocation points; q_inc = S1 du_inc/dn."""
    u, grad = incident.fields(mesh.midpoints, k1)
    q = s1 * np.einsum("ij,ij->i", grad, mesh.normals)
    return u, q


# ---------------------------------------------------------------------------
# operator blocks
# ---------------------------------------------------------------------------

_GAUSS = {n: leggauss(n) for n in (REMAINDER_QUAD, REGULAR_QUAD, SELF_QUAD, NEAR_QUAD)}


def _panel_quad_points(mesh: BoundaryMesh, n: int):
    """Quadrature nodes/weights on every panel: (N*n, 2), (N, n), normals (N*n, 2)."""
    xg, wg = _GAUSS[n]
    mid = mesh.midpoints[:, None, :]
    half = 0.5 * (mesh.ends - mesh.starts)[:, None, :]
    pts = mid + xg[None, :, None] * half
    wts = 0.5 * mesh.lengths[:, None] * wg[None, :]
    nrm = np.repeat(mesh.normals, n, axis=0)
    return pts.reshape(-1, 2), wts, nrm


def _segment_distances(pts: np.ndarray, mesh: BoundaryMesh) -> np.ndarray:
    """Distance from each point to each panel segment, (M, N)."""
    a = mesh.starts
    t = mesh.ends - mesh.starts
    L2 = np.sum(t * t, axis=1)
    dp = pts[:, None, :] - a[None, :, :]
    s = np.clip(np.einsum("mnj,nj->mn", dp, t) / L2[None, :], 0.0, 1.0)
    proj = a[None, :, :] + s[..., None] * t[None, :, :]
    return np.linalg.norm(pts[:, None, :] - proj, axis=2)


def free_operator_blocks(mesh: BoundaryMesh, k, mode: KernelMode) -> dict:
    """Collocated single/double/adjoint/hypersingular blocks for a free-space kernel.

    Returns dict of (N, N) arrays ``Sl, Dl, Dp, Hy``; entry (i, j) is the
    integral of the kernel over panel j, collocated at the midpoint of
    panel i.  Self entries use the analytic singular split.
    """
    N = mesh.n_panels
    k = complex(k)
    mid = mesh.midpoints
    nrm = mesh.normals
    Sl = np.empty((N, N), dtype=complex)
    Dl = np.empty((N, N), dtype=complex)
    Dp = np.empty((N, N), dtype=complex)
    Hy = np.empty((N, N), dtype=complex)

    yq, wq, nyq = _panel_quad_points(mesh, REGULAR_QUAD)
    for lo in range(0, N, TARGET_CHUNK):
        hi = min(lo + TARGET_CHUNK, N)
        f = free_fields(mid[lo:hi], yq, nrm[lo:hi], nyq, k, mode)
        for name, blk in (("value", Sl), ("dny", Dl), ("dnx", Dp), ("hyper", Hy)):
            contrib = f[name].reshape(hi - lo, N, REGULAR_QUAD)
            blk[lo:hi] = np.einsum("cjq,jq->cj", contrib, wq)

    # near pairs: within NEAR_FACTOR source-panel lengths, excluding self
    dist = _segment_distances(mid, mesh)
    near_i, near_j = np.nonzero((dist < NEAR_FACTOR * mesh.lengths[None, :])
                                & ~np.eye(N, dtype=bool))
    if len(near_i):
        xg, wg = _GAUSS[NEAR_QUAD]
        a = mesh.midpoints[near_j][:, None, :]
        half = 0.5 * (mesh.ends - mesh.starts)[near_j][:, None, :]
        ypts = (a + xg[None, :, None] * half).reshape(-1, 2)
        wts = 0.5 * mesh.lengths[near_j][:, None] * wg[None, :]
        xs = np.repeat(mid[near_i], NEAR_QUAD, axis=0)
        nxs = np.repeat(nrm[near_i], NEAR_QUAD, axis=0)
        nys = np.repeat(nrm[near_j], NEAR_QUAD, axis=0)
        f = free_fields_pairs(xs, ypts, nxs, nys, k, mode)
        for name, blk in (("value", Sl), ("dny", Dl), ("dnx", Dp), ("hyper", Hy)):
            vals = f[name].reshape(len(near_i), NEAR_QUAD)
            blk[near_i, near_j] = np.sum(vals * wts, axis=1)

    _self_entries(mesh, k, mode, Sl, Dl, Dp, Hy)
    return {"Sl": Sl, "Dl": Dl, "Dp": Dp, "Hy": Hy}


def _self_entries(mesh, k, mode, Sl, Dl, Dp, Hy):
    N = mesh.n_panels
    h = mesh.lengths
    c0 = 0.25j if mode is KernelMode.OUTGOING else -0.25j
    ilog = h * (np.log(h / 2.0) - 1.0)          # int_{-h/2}^{h/2} log|s| ds
    xg, wg = _GAUSS[SELF_QUAD]
    # nodes on both halves of the panel, in signed arclength
    s_nodes = np.concatenate([0.25 * h[:, None] * (xg[None, :] + 1.0),
                              -0.25 * h[:, None] * (xg[None, :] + 1.0)], axis=1)
    s_w = np.concatenate([0.25 * h[:, None] * wg[None, :]] * 2, axis=1)
    r = np.abs(s_nodes)
    w = k * r
    if mode is KernelMode.OUTGOING:
        h0 = _sp.hankel1(0, w)
        h1 = _sp.hankel1(1, w)
    else:
        h0 = _sp.hankel2(0, w)
        h1 = _sp.hankel2(1, w)
    G = c0 * h0
    Sl[np.arange(N), np.arange(N)] = (-(1.0 / (2 * np.pi)) * ilog
                                      + np.sum((G + np.log(r) / (2 * np.pi)) * s_w, axis=1))
    Dl[np.arange(N), np.arange(N)] = 0.0
    Dp[np.arange(N), np.arange(N)] = -mesh.curvature * h / (4 * np.pi)
    # hypersingular kernel on a flat self panel: T(r) = -G'(r)/r
    T = c0 * k * h1 / r
    k2 = k * k
    rem = T - 1.0 / (2 * np.pi * r * r) + (k2 / (4 * np.pi)) * np.log(r)
    Hy[np.arange(N), np.arange(N)] = ((1.0 / (2 * np.pi)) * (-4.0 / h)
                                      - (k2 / (4 * np.pi)) * ilog
                                      + np.sum(rem * s_w, axis=1))


def wg_remainder_blocks(mesh: BoundaryMesh, k, rel_tol: float) -> dict:
    """Smooth waveguide-minus-free-space kernel blocks, low-order quadrature."""
    N = mesh.n_panels
    k = complex(k)
    mid = mesh.midpoints
    nrm = mesh.normals
    out = {key: np.empty((N, N), dtype=complex) for key in ("Sl", "Dl", "Dp", "Hy")}
    yq, wq, nyq = _panel_quad_points(mesh, REMAINDER_QUAD)
    for lo in range(0, N, TARGET_CHUNK):
        hi = min(lo + TARGET_CHUNK, N)
        wg = wg_fields(mid[lo:hi], yq, k, nx=nrm[lo:hi], ny=nyq, rel_tol=rel_tol)
        fr = free_fields(mid[lo:hi], yq, nrm[lo:hi], nyq, k, KernelMode.OUTGOING)
        for name, key in (("value", "Sl"), ("dny", "Dl"), ("dnx", "Dp"), ("hyper", "Hy")):
            contrib = (wg[name] - fr[name]).reshape(hi - lo, N, REMAINDER_QUAD)
            out[key][lo:hi] = np.einsum("cjq,jq->cj", contrib, wq)
    return out


def _exterior_blocks(spec: ProblemSpec, k1) -> dict:
    b = free_operator_blocks(spec.mesh, k1, KernelMode.OUTGOING)
    if spec.domain is DomainKind.WAVEGUIDE:
        rem = wg_remainder_blocks(spec.mesh, k1, spec.rel_tol)
        for key in b:
            b[key] = b[key] + rem[key]
    return b


def assemble(spec: ProblemSpec, omega) -> np.ndarray:
    """Dense 2N x 2N system matrix A(omega) for the chosen formulation."""
    omega = complex(omega)
    if omega == 0:
        raise DomainError("omega = 0 is outside the assembler's domain")
    s1, s2 = spec.exterior.shear, spec.interior.shear
    k1 = spec.exterior.wavenumber(omega)
    k2 = spec.interior.wavenumber(omega)
    b1 = _exterior_blocks(spec, k1)
    b2 = free_operator_blocks(spec.mesh, k2, spec.kernel_mode)
    N = spec.mesh.n_panels
    A = np.zeros((2 * N, 2 * N), dtype=complex)
    iu = 2 * np.arange(N)
    iq = iu + 1
    if spec.formulation is Formulation.MUELLER:
        A[np.ix_(iu, iu)] = -(s1 * b1["Dl"] - s2 * b2["Dl"])
        A[np.ix_(iu, iq)] = b1["Sl"] - b2["Sl"]
        A[np.ix_(iq, iu)] = -(b1["Hy"] - b2["Hy"])
        A[np.ix_(iq, iq)] = b1["Dp"] / s1 - b2["Dp"] / s2
        A[iu, iu] += (s1 + s2) / 2.0
        A[iq, iq] += (s1 + s2) / (2.0 * s1 * s2)
    else:
        A[np.ix_(iu, iu)] = b1["Dl"] + b2["Dl"]
        A[np.ix_(iu, iq)] = -(b1["Sl"] / s1 + b2["Sl"] / s2)
        A[np.ix_(iq, iu)] = s1 * b1["Hy"] + s2 * b2["Hy"]
        A[np.ix_(iq, iq)] = -(b1["Dp"] + b2["Dp"])
    return A


def assemble_rhs(spec: ProblemSpec, omega: float, incident: Incident) -> np.ndarray:
    """Right-hand side so that A(omega) x = rhs yields total-field traces.

    Substituting total = incident + scattered traces into the homogeneous
    systems leaves S1 u_inc and du_inc/dn on the Mueller right-hand side
    and -u_inc, -q_inc on the PMCHWT one.
    """
    omega = float(omega)
    if omega <= 0:
        raise ConfigError("forward problems need a real positive omega")
    if (spec.domain is DomainKind.FREESPACE) == isinstance(incident, PlaneWaveMode):
        raise ConfigError("incident field type does not match the problem domain")
    s1 = spec.exterior.shear
    k1 = spec.exterior.wavenumber(omega)
    u_inc, q_inc = incident_traces(incident, spec.mesh, k1, s1)
    rhs = np.empty(2 * spec.mesh.n_panels, dtype=complex)
    if spec.formulation is Formulation.MUELLER:
        rhs[0::2] = s1 * u_inc
        rhs[1::2] = q_inc / s1
    else:
        rhs[0::2] = -u_inc
        rhs[1::2] = -q_inc
    return rhs


def dump_matrix(A: np.ndarray, path) -> None:
    """Binary dump: row-major little-endian complex128 (debugging aid)."""
    np.ascontiguousarray(A, dtype="<c16").tofile(path)
