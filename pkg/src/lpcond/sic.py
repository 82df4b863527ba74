"""Smallest-including-cap solvers and the derived condition number.

The cap of minimal angular radius rho containing all rows of an instance
determines the feasibility class (rho vs pi/2) and the condition number
1/|cos rho|.  Two routes are provided: an exhaustive support-subset
enumeration (`sic_bruteforce`, the reference oracle) and a multistart
subgradient solver with active-set polish (`sic_solve`), plus a vectorized
batch enumeration for Monte Carlo work.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateSubsetError,
    InstanceTooLargeError,
)
from .lp import FeasibilityClass
from .sphere import Cap, SpherePoint, clipped_arccos, unit_vector

# |rho - pi/2| at or below this band counts as ill-posed.
ILL_POSED_BAND = 1e-8
# Condition numbers beyond this are reported as infinite (overflow bucket).
COND_OVERFLOW = 1e15

_CONTAIN_TOL = 1e-9
_SUBSET_GUARD = 10**7
_GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class Instance:
    """n unit rows in R^{m+1} with n > m+1, i.e. a point of (S^m)^n."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        n, d = mat.shape
        if d < 2:
            raise ValueError("ambient dimension must be at least 2")
        if n <= d:
            raise ValueError(f"need n > m+1 rows, got n={n} with m+1={d}")
        norms = np.linalg.norm(mat, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-6)
        if bad.size:
            raise ValueError(
                f"row {bad[0] + 1} has norm {norms[bad[0]]:.9g}, not unit to 1e-6"
            )
        mat = mat / norms[:, None]
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_points(cls, points) -> "Instance":
        return cls(np.array([p.coords for p in points]))

    @classmethod
    def from_file(cls, path) -> "Instance":
        """Read the instance file format: header "n m", then n rows."""
        with open(path) as fh:
            tokens = fh.read().split()
        if len(tokens) < 2:
            raise ValueError(f"{path}: missing 'n m' header")
        n, m = int(tokens[0]), int(tokens[1])
        vals = [float(t) for t in tokens[2:]]
        if len(vals) != n * (m + 1):
            raise ValueError(
                f"{path}: expected {n * (m + 1)} coordinates, found {len(vals)}"
            )
        return cls(np.array(vals).reshape(n, m + 1))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def m(self) -> int:
        return self.matrix.shape[1] - 1

    def row(self, i: int) -> SpherePoint:
        return SpherePoint(self.matrix[i])

    def prefix(self, k: int) -> "Instance":
        if k < self.m + 2:
            raise ValueError(f"prefix length {k} below m+2={self.m + 2}")
        return Instance(self.matrix[:k])

    def with_row(self, point: SpherePoint) -> "Instance":
        return Instance(np.vstack([self.matrix, point.coords]))


@dataclass(frozen=True)
class SicResult:
    center: SpherePoint
    rho: float
    support: tuple
    cls: FeasibilityClass
    cond: float
    dist_to_sigma: float


def classify_rho(rho: float) -> FeasibilityClass:
    if abs(rho - math.pi / 2) <= ILL_POSED_BAND:
        return FeasibilityClass.ILL_POSED
    if rho < math.pi / 2:
        return FeasibilityClass.STRICTLY_FEASIBLE
    return FeasibilityClass.INFEASIBLE


def cond_from_rho(rho: float) -> float:
    if abs(rho - math.pi / 2) <= ILL_POSED_BAND:
        return math.inf
    return 1.0 / abs(math.cos(rho))


def _make_result(mat: np.ndarray, center: np.ndarray, rho: float, support) -> SicResult:
    angles = clipped_arccos(mat @ center)
    if float(np.max(angles)) > rho + 1e-9:
        raise ConvergenceError("cap fails to contain all instance points")
    sup_list = tuple(int(i) for i in support)
    if sup_list and float(np.max(np.abs(angles[list(sup_list)] - rho))) > 1e-8:
        raise ConvergenceError("support points are off the cap boundary")
    return SicResult(
        center=SpherePoint(center),
        rho=float(rho),
        support=sup_list,
        cls=classify_rho(rho),
        cond=cond_from_rho(rho),
        dist_to_sigma=abs(math.pi / 2 - rho),
    )


def circumcap(points, sign: int = 1) -> Cap:
    """Equidistant cap through 1..m+1 points, center on the `sign` side.

    Solves G lam = 1 for the Gram matrix G; the center is
    sign * normalize(sum lam_i a_i) and every input point sits at the
    common inner product sign/||v|| from it.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if hasattr(points, "coords"):
        points = [points]
    B = np.atleast_2d(
        np.array([p.coords if hasattr(p, "coords") else p for p in points], dtype=float)
    )
    k, d = B.shape
    if not 1 <= k <= d:
        raise ValueError(f"need between 1 and m+1={d} points, got {k}")
    G = B @ B.T
    evals = np.linalg.eigvalsh(G)
    if evals[0] <= 0.0 or evals[-1] >= _GRAM_COND_LIMIT * evals[0]:
        raise DegenerateSubsetError("support subset has a singular Gram matrix")
    lam = np.linalg.solve(G, np.ones(k))
    v = B.T @ lam
    nv = float(np.linalg.norm(v))
    center = sign * v / nv
    c = sign / nv
    return Cap(SpherePoint(center), float(clipped_arccos(c)))


def _subset_candidates(sub: np.ndarray):
    """Yield (center, radius) equidistant candidates for one subset.

    Consistent systems give the two signed circumcap centers.  Rank
    deficient subsets whose common inner product can only be zero (e.g. an
    antipodal pair) yield hemisphere candidates from the nullspace; this
    keeps the enumeration complete on exactly ill-posed instances.
    """
    k, d = sub.shape
    ones = np.ones(k)
    q, _, rank, svals = np.linalg.lstsq(sub, ones, rcond=None)
    if rank == k or float(np.max(np.abs(sub @ q - ones))) <= 1e-9:
        nq = float(np.linalg.norm(q))
        if nq < 1e-12:
            return []
        center = q / nq
        c = 1.0 / nq
        return [
            (center, float(clipped_arccos(c))),
            (-center, float(clipped_arccos(-c))),
        ]
    caps = []
    null_basis = np.linalg.svd(sub)[2][rank:]
    for u in null_basis:
        caps.append((u, math.pi / 2))
        caps.append((-u, math.pi / 2))
    return caps


def _check_guard(n: int, m: int):
    total = sum(math.comb(n, k) for k in range(1, m + 2))
    if total > _SUBSET_GUARD:
        raise InstanceTooLargeError(
            f"{total} support subsets exceed the {_SUBSET_GUARD} guard"
        )


def _best_candidate(mat: np.ndarray, subsets):
    """Scan (subset, center, radius) candidates; smallest containing cap wins."""
    best = None
    for subset in subsets:
        sub = mat[list(subset)]
        for center, radius in _subset_candidates(sub):
            cover = float(clipped_arccos(float(np.min(mat @ center))))
            if cover <= radius + _CONTAIN_TOL:
                if best is None or radius < best[0]:
                    best = (radius, center, subset)
    return best


def sic_bruteforce(A: Instance) -> SicResult:
    """Exhaustive smallest-including-cap: the reference oracle.

    Enumerates every support subset of size 1..m+1 with both center signs
    and keeps the smallest candidate cap that contains all points.
    """
    mat = A.matrix
    n, d = mat.shape
    _check_guard(n, d - 1)
    subsets = itertools.chain.from_iterable(
        itertools.combinations(range(n), size) for size in range(1, d + 1)
    )
    best = _best_candidate(mat, subsets)
    if best is None:
        raise ConvergenceError("no containing candidate cap found")
    radius, center, subset = best
    return _make_result(mat, center, radius, subset)


def _instance_seed(mat: np.ndarray) -> int:
    digest = hashlib.blake2b(mat.tobytes(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def sic_solve(A: Instance, restarts: int = 50, iterations: int = 2000) -> SicResult:
    """Projected subgradient ascent on min_i <a_i, p> with multistart.

    After the ascent phase the most active points at the best local optima
    form a pool; equidistant caps of its subsets are polished candidates.
    The pool widens to the full instance if no candidate cap covers the
    points, so the result always matches the brute-force enumeration at
    desk scale.
    """
    mat = A.matrix
    n, d = mat.shape
    m = d - 1
    rng = np.random.Generator(np.random.Philox(key=_instance_seed(mat)))

    starts = [mat]
    g = rng.standard_normal((restarts, d))
    starts.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    sums = mat[None, :, :] + mat[:, None, :]
    iu = np.triu_indices(n, k=1)
    pair_sums = sums[iu]
    keep = np.linalg.norm(pair_sums, axis=1) > 1e-12
    mids = pair_sums[keep] / np.linalg.norm(pair_sums[keep], axis=1, keepdims=True)
    starts.extend([mids, -mids])
    P = np.vstack(starts)

    for t in range(1, iterations + 1):
        dots = P @ mat.T
        gidx = np.argmin(dots, axis=1)
        P = P + (0.5 / math.sqrt(t)) * mat[gidx]
        P /= np.linalg.norm(P, axis=1, keepdims=True)

    fvals = np.min(P @ mat.T, axis=1)
    order = np.argsort(-fvals)
    tops = []
    for idx in order:
        p = P[idx]
        if any(float(p @ q) > 1.0 - 1e-6 for q in tops):
            continue  # same optimum reached from another start
        tops.append(p)
        if len(tops) == 3:
            break

    pool_subsets = []
    seen = set()
    for p in tops:
        active = np.argsort(mat @ p)[: min(n, m + 3)]
        for size in range(1, m + 2):
            for subset in itertools.combinations(sorted(active.tolist()), size):
                if subset not in seen:
                    seen.add(subset)
                    pool_subsets.append(subset)
    pool_subsets.sort(key=lambda s: (len(s), s))

    best = _best_candidate(mat, pool_subsets)
    if best is None:
        # Widen to the full enumeration; always admits the true support.
        subsets = itertools.chain.from_iterable(
            itertools.combinations(range(n), size) for size in range(1, m + 2)
        )
        best = _best_candidate(mat, subsets)
    if best is None:
        pairwise = clipped_arccos(mat @ mat.T)
        raise ConvergenceError(
            "smallest-cap polish found no covering candidate",
            lower=float(np.max(pairwise)) / 2.0,
            upper=math.pi,
        )
    radius, center, subset = best
    return _make_result(mat, center, radius, subset)


def _combo_index_arrays(n: int, m: int):
    return [
        np.array(list(itertools.combinations(range(n), size)), dtype=np.intp)
        for size in range(1, m + 2)
    ]


def sic_rho_batch(mats: np.ndarray):
    """Vectorized brute-force radii for a stack of instances.

    mats: (B, n, m+1).  Returns (rho, centers, exact) where `exact` flags
    rows certified by an equidistant candidate; the remaining rows (near
    degenerate, vanishingly rare for sampled data) carry a pointwise cover
    radius and should be re-solved scalar for full precision.
    """
    mats = np.asarray(mats, dtype=float)
    B, n, d = mats.shape
    m = d - 1
    _check_guard(n, m)

    best_radius = np.full(B, np.inf)
    best_center = np.zeros((B, d))

    # Pointwise cover caps (center at a row): valid bounds, never below rho.
    gram_all = np.einsum("bnd,bkd->bnk", mats, mats)
    cover_angles = clipped_arccos(np.min(gram_all, axis=2))  # (B, n) max angle per center row
    cover_idx = np.argmin(cover_angles, axis=1)
    cover_radius = cover_angles[np.arange(B), cover_idx]
    cover_center = mats[np.arange(B), cover_idx]

    for combos in _combo_index_arrays(n, m):
        S, size = combos.shape
        sub = mats[:, combos]  # (B, S, size, d)
        G = np.einsum("bskd,bsld->bskl", sub, sub)
        if size == 1:
            ok = np.ones((B, S), dtype=bool)
            lam = np.ones((B, S, 1))
        else:
            evals = np.linalg.eigvalsh(G)
            ok = (evals[..., 0] > 0.0) & (evals[..., -1] < _GRAM_COND_LIMIT * evals[..., 0])
            Gsafe = np.where(ok[..., None, None], G, np.eye(size))
            lam = np.linalg.solve(Gsafe, np.ones(size))
        v = np.einsum("bsk,bskd->bsd", lam, sub)
        nv = np.linalg.norm(v, axis=2)
        ok &= nv > 1e-12
        nv_safe = np.where(ok, nv, 1.0)
        centers = v / nv_safe[..., None]
        dots = np.einsum("bnd,bsd->bsn", mats, centers)
        worst_plus = clipped_arccos(np.min(dots, axis=2))  # (B, S)
        worst_minus = clipped_arccos(np.min(-dots, axis=2))
        for sign, worst in ((1.0, worst_plus), (-1.0, worst_minus)):
            radius = clipped_arccos(sign / nv_safe)
            valid = ok & (worst <= radius + _CONTAIN_TOL)
            radius = np.where(valid, radius, np.inf)
            sidx = np.argmin(radius, axis=1)
            rmin = radius[np.arange(B), sidx]
            better = rmin < best_radius
            best_radius = np.where(better, rmin, best_radius)
            best_center[better] = sign * centers[np.arange(B), sidx][better]

    exact = best_radius <= cover_radius + _CONTAIN_TOL
    rho = np.where(exact, best_radius, cover_radius)
    centers_out = np.where(exact[:, None], best_center, cover_center)
    return rho, centers_out, exact


def cond_and_class(A: Instance):
    """(condition number, feasibility class, distance to the ill-posed set)."""
    res = sic_solve(A)
    return res.cond, res.cls, res.dist_to_sigma


def prefix_cond_profile(A: Instance):
    """[(k, cond(A_k), class(A_k))] for k = m+2..n, via the exact oracle."""
    out = []
    for k in range(A.m + 2, A.n + 1):
        res = sic_bruteforce(A.prefix(k))
        out.append((k, res.cond, res.cls))
    return out
