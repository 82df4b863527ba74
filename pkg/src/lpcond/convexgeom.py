"""Spherical convex hulls as polyhedral cones.

Membership, nearest-point projection (nonnegative least squares), distances
to hulls, duals and boundaries, plus the outer/inner neighborhood indicator
used by the volume experiments.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DegenerateHullError, DualEmptyError
from .sphere import Cap, SpherePoint, angular_distance, clipped_arccos

# A point is treated as a member of a hull when its hull distance is below
# this; chosen so NNLS roundoff never flips membership of true members.
MEMBER_TOL = 1e-9

_KKT_TOL = 1e-12


def nnls(A: np.ndarray, b: np.ndarray, kkt_tol: float = _KKT_TOL, max_iter: int | None = None):
    """Lawson-Hanson active-set solver for min ||A x - b|| s.t. x >= 0.

    Returns (x, residual_vector).  Columns are normalized internally so the
    entering test uses one homogeneous tolerance; sized for small dense
    problems, with an iteration cap of 100 per column by default.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    d, k = A.shape
    if max_iter is None:
        max_iter = 100 * k
    col_scale = np.linalg.norm(A, axis=0)
    col_scale[col_scale == 0.0] = 1.0
    A = A / col_scale
    # Gradient roundoff grows with ||b||; keep the entering test above it.
    w_tol = kkt_tol * max(1.0, float(np.max(np.abs(b), initial=0.0)))
    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    resid = b.copy()
    w = A.T @ resid
    iters = 0
    while True:
        candidates = ~passive & (w > w_tol)
        if not candidates.any():
            break
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        while True:
            iters += 1
            if iters > max_iter:
                raise ConvergenceError(f"nnls exceeded {max_iter} iterations")
            idx = np.flatnonzero(passive)
            z, *_ = np.linalg.lstsq(A[:, idx], b, rcond=None)
            if np.all(z > 0):
                x[:] = 0.0
                x[idx] = z
                break
            # Step toward z until the first passive variable hits zero,
            # then demote it and re-solve.
            cur = x[idx]
            neg = z <= 0
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, cur / (cur - z), np.inf)
            step = float(np.min(ratios))
            cur = cur + step * (z - cur)
            x[:] = 0.0
            x[idx] = np.maximum(cur, 0.0)
            passive[idx[cur <= w_tol]] = False
        resid = b - A @ x
        w = A.T @ resid
    return x / col_scale, resid


@dataclass(eq=False)
class SpherePolytope:
    """sconv of finitely many sphere points, viewed as cone(generators)."""

    generators: np.ndarray
    _facets: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        gens = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if gens.size == 0:
            raise ValueError("polytope needs at least one generator")
        norms = np.linalg.norm(gens, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("generators must be unit vectors")
        self.generators = gens / norms[:, None]

    @classmethod
    def from_points(cls, points) -> "SpherePolytope":
        return cls(np.array([p.coords for p in points]))

    @property
    def k(self) -> int:
        return self.generators.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.generators.shape[1]

    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.generators, tol=1e-10))

    def properly_convex(self, tol: float = 1e-8) -> bool:
        """True iff the origin is outside conv(generators) (pointed cone)."""
        # Penalty form of min ||sum(lam_i b_i)|| over the simplex; the
        # constraint weight only distorts the distance by O(dist^2/scale).
        scale = 100.0
        A = np.vstack([self.generators.T, scale * np.ones((1, self.k))])
        b = np.zeros(self.ambient_dim + 1)
        b[-1] = scale
        lam, resid = nnls(A, b)
        return float(np.linalg.norm(resid[:-1])) > tol

    def facet_normals(self) -> np.ndarray:
        """Inward unit normals of the facets of the full-dimensional cone.

        A size-(d-1) generator subset spans a facet candidate; the candidate
        is kept iff every generator lies on one closed side (tol 1e-10).
        Cached after the first computation.
        """
        if self._facets is not None:
            return self._facets
        gens = self.generators
        d = self.ambient_dim
        m = d - 1
        normals = []
        for subset in itertools.combinations(range(self.k), m):
            sub = gens[list(subset)]
            _, svals, vt = np.linalg.svd(sub)
            if svals.size < m or svals[-1] < 1e-10:
                continue  # subset does not span an (m)-dim subspace
            normal = vt[-1]
            dots = gens @ normal
            if np.min(dots) >= -1e-10:
                pass
            elif np.max(dots) <= 1e-10:
                normal = -normal
                dots = -dots
            else:
                continue  # generators straddle the hyperplane
            if any(abs(float(n @ normal)) > 1.0 - 1e-9 for n in normals):
                continue  # same facet reached through another subset
            normals.append(normal)
        self._facets = np.array(normals) if normals else np.empty((0, d))
        return self._facets


def project_onto_cone(x: SpherePoint, P: SpherePolytope):
    """Nearest point of cone(generators) to x, with its certificate.

    Returns (z, lam) with z = sum lam_i b_i, lam >= 0, and KKT residual
    below 1e-10.  z may be the zero vector.
    """
    xv = np.asarray(x.coords if isinstance(x, SpherePoint) else x, dtype=float)
    if xv.size != P.ambient_dim:
        raise ValueError("point and polytope dimensions differ")
    lam, resid = nnls(P.generators.T, xv)
    z = xv - resid
    grad = P.generators @ resid
    if np.max(grad, initial=0.0) > 1e-10 or abs(float(lam @ grad)) > 1e-10:
        raise ConvergenceError("cone projection failed its KKT certificate")
    return z, lam


def distance_to_sconv(x: SpherePoint, P: SpherePolytope) -> float:
    """Angular distance from x to sconv(generators); 0 iff x is a member."""
    xv = x.coords if isinstance(x, SpherePoint) else np.asarray(x, dtype=float)
    z, _ = project_onto_cone(x, P)
    nz = float(np.linalg.norm(z))
    if nz > 1e-12:
        return float(clipped_arccos(float(xv @ z) / nz))
    # x sits in the polar cone: the nearest hull point is a generator.
    return float(clipped_arccos(float(np.max(P.generators @ xv))))


def _interior_boundary_distance(xv: np.ndarray, P: SpherePolytope) -> float:
    facets = P.facet_normals()
    if facets.shape[0] == 0:
        raise DualEmptyError("cone has no facets; sconv covers the sphere")
    return float(np.min(np.arcsin(np.clip(np.abs(facets @ xv), 0.0, 1.0))))


def distance_to_dual(x: SpherePoint, P: SpherePolytope) -> float:
    """Angular distance from x to the dual set of sconv(generators)."""
    xv = x.coords if isinstance(x, SpherePoint) else np.asarray(x, dtype=float)
    z, _ = project_onto_cone(x, P)
    w = xv - z
    nw = float(np.linalg.norm(w))
    nz = float(np.linalg.norm(z))
    if nz <= 1e-12:
        return 0.0  # all generator inner products <= 0: x is in the dual
    if nw > 1e-12:
        return float(clipped_arccos(float(xv @ w) / nw))
    # x lies in the hull itself: everything in the dual is at least pi/2
    # away, plus however deep x sits inside the hull.
    if P.rank() < P.ambient_dim:
        return math.pi / 2
    return math.pi / 2 + _interior_boundary_distance(xv, P)


def distance_to_boundary(x: SpherePoint, P: SpherePolytope) -> float:
    """Angular distance from x to the boundary of sconv(generators).

    Exterior points: equals the hull distance.  Interior points: minimum
    over facet great subspheres of arcsin |<normal, x>|.
    """
    xv = x.coords if isinstance(x, SpherePoint) else np.asarray(x, dtype=float)
    d_hull = distance_to_sconv(x, P)
    if d_hull > MEMBER_TOL:
        return d_hull
    if P.rank() < P.ambient_dim:
        raise DegenerateHullError("hull spans a proper subspace; boundary distance undefined")
    return _interior_boundary_distance(xv, P)


def in_neighborhood(x: SpherePoint, P: SpherePolytope, phi: float, side: str = "both") -> bool:
    """Strict phi-neighborhood indicator of the hull boundary.

    side: "outer" (x outside K, d(x, bd K) < phi), "inner" (x in K,
    d(x, bd K) < phi), or "both".
    """
    if not 0.0 < phi <= math.pi / 2:
        raise ValueError(f"phi={phi} outside (0, pi/2]")
    if side not in ("outer", "inner", "both"):
        raise ValueError(f"unknown side {side!r}")
    xv = x.coords if isinstance(x, SpherePoint) else np.asarray(x, dtype=float)
    d_hull = distance_to_sconv(x, P)
    if d_hull > MEMBER_TOL:
        outer = d_hull < phi
        return outer and side in ("outer", "both")
    if side == "outer":
        return False
    return _interior_boundary_distance(xv, P) < phi


def cap_distance_suite(x: SpherePoint, C: Cap):
    """(d(x,K), d(x,K_dual), d(x,bd K)) for a cap K, in closed form.

    Requires radius <= pi/2 so that the dual is the antipodal cap of
    radius pi/2 - radius.
    """
    if C.radius > math.pi / 2 + 1e-12:
        raise ValueError("cap radius beyond pi/2: dual is not a cap")
    dc = angular_distance(x, C.center)
    r = C.radius
    d_hull = max(0.0, dc - r)
    d_dual = max(0.0, (math.pi - dc) - (math.pi / 2 - r))
    d_bd = abs(dc - r)
    return d_hull, d_dual, d_bd


def cone_member_batch(X: np.ndarray, gens: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Vectorized membership of many points in cone(gens), by Caratheodory.

    Every member of a finitely generated cone in R^d lies in a simplicial
    subcone of at most d generators, so membership is a batched linear
    solve over the d-subsets.  Independent of the NNLS projection path.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    gens = np.atleast_2d(np.asarray(gens, dtype=float))
    k, d = gens.shape
    member = np.zeros(X.shape[0], dtype=bool)
    for size in range(min(k, d), 0, -1):
        for subset in itertools.combinations(range(k), size):
            sub = gens[list(subset)]  # (size, d)
            if size == d:
                try:
                    coef = np.linalg.solve(sub.T, X.T).T
                except np.linalg.LinAlgError:
                    continue
            else:
                coef, *_ = np.linalg.lstsq(sub.T, X.T, rcond=None)
                coef = coef.T
                off = np.linalg.norm(coef @ sub - X, axis=1)
                coef = np.where(off[:, None] <= tol, coef, -1.0)
            member |= np.all(coef >= -tol, axis=1)
        if member.all():
            break
    return member


def cap_distances_batch(X: np.ndarray, center: np.ndarray, radius: float):
    """Vectorized cap_distance_suite over rows of X; returns three arrays."""
    if radius > math.pi / 2 + 1e-12:
        raise ValueError("cap radius beyond pi/2: dual is not a cap")
    dc = clipped_arccos(X @ center)
    d_hull = np.maximum(0.0, dc - radius)
    d_dual = np.maximum(0.0, (math.pi - dc) - (math.pi / 2 - radius))
    d_bd = np.abs(dc - radius)
    return d_hull, d_dual, d_bd
