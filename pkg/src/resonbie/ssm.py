"""Contour-integral eigensolver for the nonlinear problem A(omega) x = 0.

Moment matrices

    M_k = P^H (1/(2 pi i)) oint_gamma z^k A(z)^{-1} Q dz,   k = 0..2m-1,

are computed on a rectangle gamma with Gauss-Legendre quadrature on each
side (one LU factorization per node solves all L probe columns).  Block
Hankel matrices H = [M_{i+j}] and H< = [M_{i+j+1}] reduce the problem to
a small dense eigenproblem; eigenvalues inside gamma are the nonlinear
eigenvalues, eigenvectors are lifted back to density space through the
stored probe solves.

Internally the moments are formed in the shifted/scaled variable
mu = (z - c)/rho (c the rectangle center, rho its half-extent) so the
Hankel matrices stay well conditioned far from the origin; the plain
z^k moments are also recorded.  Candidates are certified by an LU-based
smallest-singular-value estimate of A(lambda) and classified by the sign
of Im(lambda) when the incoming interior kernel is in use (fictitious
eigenvalues then sit in the upper half-plane, true ones do not move).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import ProblemSpec, assemble
from .errors import ConfigError, ContourHitsEigenvalueError, SingularMatrixError
from .kernels import DomainKind, KernelMode
from .linalg import LUFactor, eig_small, svd

CUT_MARGIN = 1e-3


@dataclass(frozen=True)
class ContourSpec:
    """Axis-aligned rectangle in the complex omega plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_quad_per_side: int | None = None

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ConfigError("contour rectangle is degenerate")

    @property
    def nodes_per_side(self) -> int:
        if self.n_quad_per_side is not None:
            return self.n_quad_per_side
        return 32 if self.re_max < math.pi else 64

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max),
                       0.5 * (self.im_min + self.im_max))

    @property
    def scale(self) -> float:
        return max(0.5 * (self.re_max - self.re_min),
                   0.5 * (self.im_max - self.im_min))

    def contains(self, z: complex) -> bool:
        return (self.re_min < z.real < self.re_max
                and self.im_min < z.imag < self.im_max)

    def corners(self):
        return (complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max))


@dataclass(frozen=True)
class SsmParams:
    L: int = 10
    m: int = 12
    seed: int = 0
    sv_threshold: float = 1e-10
    residual_threshold: float = 1e-6

    def __post_init__(self):
        if self.L < 1 or self.m < 1:
            raise ConfigError("SSM needs L >= 1 probes and moment order m >= 1")


@dataclass
class EigenResult:
    lam: complex
    residual: float
    inside_contour: bool
    classification: str = "unknown"  # true_eig | fictitious | unknown
    vector: np.ndarray | None = field(default=None, repr=False)


def rectangle_nodes(contour: ContourSpec):
    """Gauss-Legendre nodes/weights along the rectangle, counterclockwise."""
    n = contour.nodes_per_side
    xg, wg = np.polynomial.legendre.leggauss(n)
    corners = contour.corners()
    nodes, weights = [], []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        nodes.append(0.5 * (a + b) + 0.5 * (b - a) * xg)
        weights.append(0.5 * (b - a) * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def _point_ray_distance(z: complex, x0: float) -> float:
    """Distance from a point to the downward ray {x0 + i t, t <= 0}."""
    if z.imag <= 0.0:
        return abs(z.real - x0)
    return math.hypot(z.real - x0, z.imag)


def _segment_ray_distance(a: complex, b: complex, x0: float) -> float:
    """Exact distance between segment [a, b] and the ray {x0 + i t, t <= 0}."""
    # point-to-segment for the ray tip
    ab = b - a
    denom = abs(ab) ** 2
    s = 0.0 if denom == 0 else min(max((((x0 - a.real) * ab.real
                                         + (0.0 - a.imag) * ab.imag) / denom), 0.0), 1.0)
    d = abs(a + s * ab - complex(x0, 0.0))
    # segment endpoints to the ray
    d = min(d, _point_ray_distance(a, x0), _point_ray_distance(b, x0))
    # crossing of the vertical line Re = x0
    if (a.real - x0) * (b.real - x0) < 0:
        t = (x0 - a.real) / (b.real - a.real)
        d = min(d, _point_ray_distance(a + t * ab, x0))
    return d


def validate_waveguide_contour(contour: ContourSpec, k1_factor: float,
                               margin: float = CUT_MARGIN) -> None:
    """Reject rectangles whose k1-image comes within ``margin`` of a branch cut.

    The cuts are the rays k1 = p*pi - i*kappa (kappa >= 0, integer p >= 1);
    ``k1_factor`` maps omega to k1 = k1_factor * omega.
    """
    corners = contour.corners()
    kmax = max(abs(c.real) for c in corners) * k1_factor
    pmax = int(kmax / math.pi) + 2
    for p in range(1, pmax + 1):
        for sign in (1.0, -1.0):
            x0 = sign * p * math.pi
            for a, b in zip(corners, corners[1:] + corners[:1]):
                d = _segment_ray_distance(a * k1_factor, b * k1_factor, x0)
                if d < margin:
                    raise ConfigError(
                        f"contour side within {d:.2e} of the branch cut at "
                        f"k1 = {x0:.6f} (margin {margin})")


@dataclass
class MomentSet:
    """Output of the contour quadrature: all data needed downstream.

    ``moments`` are the plain z^k moments P^H S_k; the scaled variants
    (moments of ((z - center)/scale)^k) drive the Hankel reduction, and
    ``s_blocks`` are the corresponding N x L probe-solve combinations used
    to lift eigenvectors.
    """

    moments: list
    scaled_moments: list
    s_blocks: list
    center: complex
    scale: float
    contour: ContourSpec
    params: SsmParams
    n_dim: int


def probe_matrices(n_dim: int, params: SsmParams):
    """Seeded counter-based standard-normal complex probes (Q, P)."""
    rng = np.random.Generator(np.random.Philox(key=params.seed))
    Q = (rng.standard_normal((n_dim, params.L))
         + 1j * rng.standard_normal((n_dim, params.L))) / math.sqrt(2.0)
    P = (rng.standard_normal((n_dim, params.L))
         + 1j * rng.standard_normal((n_dim, params.L))) / math.sqrt(2.0)
    return Q, P


def _probe_solve(system, z, Q):
    A = np.asarray(system(z), dtype=complex)
    if A.shape != (Q.shape[0], Q.shape[0]):
        raise ConfigError(f"system returned shape {A.shape}, expected square of {Q.shape[0]}")
    try:
        return LUFactor(A).solve(Q)
    except SingularMatrixError as exc:
        raise ContourHitsEigenvalueError(
            f"A(z) numerically singular at contour node z = {z}; "
            "perturb the rectangle slightly") from exc


def _moment_worker(args):
    system, z, Q = args
    return _probe_solve(system, z, Q)


def compute_moments(system, contour: ContourSpec, params: SsmParams, n_dim: int,
                    n_jobs: int = 1) -> MomentSet:
    """Contour moments M_0..M_{2m-1} of A(z)^{-1} against the probe pair.

    ``system`` maps a complex omega to the dense matrix A(omega); it must
    be picklable if ``n_jobs > 1``.  One LU factorization per node solves
    all L probe columns; nodes are reduced in fixed order so the result
    does not depend on ``n_jobs``.
    """
    Q, P = probe_matrices(n_dim, params)
    nodes, weights = rectangle_nodes(contour)
    c, rho = contour.center, contour.scale
    nm = 2 * params.m
    S_plain = [np.zeros((n_dim, params.L), dtype=complex) for _ in range(nm)]
    S_scaled = [np.zeros((n_dim, params.L), dtype=complex) for _ in range(nm)]

    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            solves = list(ex.map(_moment_worker,
                                 [(system, z, Q) for z in nodes],
                                 chunksize=max(1, len(nodes) // (4 * n_jobs))))
    else:
        solves = [_probe_solve(system, z, Q) for z in nodes]

    for z, w, Y in zip(nodes, weights, solves):
        f = w / (2j * math.pi)
        pz = f
        ps = f
        mu = (z - c) / rho
        for k in range(nm):
            S_plain[k] += pz * Y
            S_scaled[k] += ps * Y
            pz = pz * z
            ps = ps * mu
    PH = P.conj().T
    return MomentSet(
        moments=[PH @ S for S in S_plain],
        scaled_moments=[PH @ S for S in S_scaled],
        s_blocks=S_scaled,
        center=c, scale=rho, contour=contour, params=params, n_dim=n_dim,
    )


def extract_eigen(moments: MomentSet, params: SsmParams | None = None) -> list[EigenResult]:
    """Hankel reduction of the moments; eigenvalues with lifted vectors.

    Residuals are not yet evaluated here (NaN) and every candidate is
    classified ``unknown``; see :func:`certify_and_classify`.
    """
    params = params or moments.params
    m, L = params.m, params.L
    Ms = moments.scaled_moments
    H = np.block([[Ms[i + j] for j in range(m)] for i in range(m)])
    Hs = np.block([[Ms[i + j + 1] for j in range(m)] for i in range(m)])
    U, s, V = svd(H)
    # a contour enclosing no eigenvalues leaves only quadrature noise
    if s[0] <= 1e-13 * moments.n_dim:
        return []
    r = int(np.sum(s > params.sv_threshold * s[0]))
    if r == 0:
        return []
    Ur, sr, Vr = U[:, :r], s[:r], V[:, :r]
    B = Ur.conj().T @ Hs @ Vr / sr[None, :]
    mu, Y = eig_small(B)
    Smat = np.concatenate(moments.s_blocks[:m], axis=1)  # N x (mL)
    lams = moments.center + moments.scale * mu
    out = []
    for i in np.argsort(lams):
        lam = complex(lams[i])
        vec = Smat @ (Vr @ (Y[:, i] / sr))
        nv = np.linalg.norm(vec)
        if nv > 0:
            vec = vec / nv
        out.append(EigenResult(lam=lam, residual=float("nan"),
                               inside_contour=moments.contour.contains(lam),
                               classification="unknown", vector=vec))
    return out


def certify_and_classify(candidates: list[EigenResult], system,
                         kernel_mode: KernelMode, contour: ContourSpec,
                         params: SsmParams) -> list[EigenResult]:
    """Residual-certify candidates and classify them by half-plane.

    For each candidate one LU factorization of A(lambda) refines the lifted
    vector by inverse iteration; the residual ||A v|| / ||v|| estimates the
    smallest singular value.  Candidates above ``residual_threshold`` are
    dropped.  With the incoming interior kernel, eigenvalues with
    Im(lambda) above a small classification margin are fictitious and the
    rest are true; with the outgoing kernel no classification is possible.
    """
    eps_class = 1e-6 * (contour.im_max - contour.im_min)
    rng = np.random.Generator(np.random.Philox(key=params.seed + 1))
    out = []
    for cand in candidates:
        if cand.vector is not None and np.linalg.norm(cand.vector) > 0:
            b = cand.vector / np.linalg.norm(cand.vector)
        else:
            b = rng.standard_normal(_dim_of(system, cand, candidates)) + 0j
            b /= np.linalg.norm(b)
        try:
            w = LUFactor(np.asarray(system(cand.lam), dtype=complex)).solve(b)
            nw = np.linalg.norm(w)
            residual = 1.0 / nw
            vec = w / nw
        except SingularMatrixError:
            residual = 0.0
            vec = b
        if residual > params.residual_threshold:
            continue
        if kernel_mode is KernelMode.INCOMING:
            cls = "fictitious" if cand.lam.imag > eps_class else "true_eig"
        else:
            cls = "unknown"
        out.append(EigenResult(lam=cand.lam, residual=residual,
                               inside_contour=contour.contains(cand.lam),
                               classification=cls, vector=vec))
    out.sort(key=lambda e: (e.lam.real, e.lam.imag))
    return out


def _dim_of(system, cand, candidates):
    for c in candidates:
        if c.vector is not None:
            return len(c.vector)
    return np.asarray(system(cand.lam)).shape[0]


class BiemSystem:
    """Picklable omega -> A(omega) callable for a transmission problem."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec

    @property
    def n_dim(self) -> int:
        return self.spec.size

    def __call__(self, omega):
        return assemble(self.spec, omega)


def solve_eigenproblem(spec: ProblemSpec, contour: ContourSpec,
                       params: SsmParams | None = None,
                       n_jobs: int = 1) -> list[EigenResult]:
    """End-to-end resonance search for a transmission problem."""
    params = params or SsmParams()
    system = BiemSystem(spec)
    if spec.domain is DomainKind.WAVEGUIDE:
        k1f = math.sqrt(spec.exterior.rho / spec.exterior.shear)
        validate_waveguide_contour(contour, k1f)
    moments = compute_moments(system, contour, params, system.n_dim, n_jobs=n_jobs)
    candidates = extract_eigen(moments, params)
    return certify_and_classify(candidates, system, spec.kernel_mode, contour, params)


def write_eigs_csv(results: list[EigenResult], path) -> None:
    """CSV schema: re_omega, im_omega, residual, inside_contour, classification."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_omega", "im_omega", "residual", "inside_contour", "classification"])
        for e in results:
            w.writerow([f"{e.lam.real:.17g}", f"{e.lam.imag:.17g}",
                        f"{e.residual:.17g}", int(e.inside_contour), e.classification])
