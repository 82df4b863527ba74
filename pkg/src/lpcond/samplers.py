"""Seeded random generation of sphere points and instances.

Counter-based streams (Philox) keyed by (master seed, purpose, sample, row)
make every draw a pure function of its coordinates, so results never depend
on scheduling.  Gaussians come from the inverse-normal transform of
uniforms: each variate consumes exactly one uniform, keeping streams
aligned.  Perturbation laws are the radially symmetric cap distributions
with density C r^(-beta) h(r) in r = sin(colatitude).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtri

from .errors import ConfigError
from .sic import Instance
from .sphere import SpherePoint, integral_I, rotation_to

_MASK64 = (1 << 64) - 1
_ROW_BITS = 16
_SAMPLE_BITS = 40

PURPOSE_SAMPLE = 1
PURPOSE_CENTER = 2
PURPOSE_WENDEL = 3
PURPOSE_TUBE = 4
PURPOSE_PROPERTY = 5
PURPOSE_CHECK = 6


@dataclass(frozen=True)
class RngStream:
    """A (seed, index) pair naming one independent Philox stream."""

    master: int
    index: int = 0

    def generator(self) -> np.random.Generator:
        key = ((self.master & _MASK64) << 64) | (self.index & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def with_row(self, row: int) -> "RngStream":
        if not 0 <= row < (1 << _ROW_BITS):
            raise ValueError("row index out of stream range")
        return replace(self, index=(self.index & ~((1 << _ROW_BITS) - 1)) | row)


def stream(master: int, purpose: int, sample: int = 0, row: int = 0) -> RngStream:
    if not 0 <= sample < (1 << _SAMPLE_BITS):
        raise ValueError("sample index out of stream range")
    if not 0 <= row < (1 << _ROW_BITS):
        raise ValueError("row index out of stream range")
    index = (purpose << (_SAMPLE_BITS + _ROW_BITS)) | (sample << _ROW_BITS) | row
    return RngStream(master, index)


def _generator(rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


def _uniforms(gen: np.random.Generator, size) -> np.ndarray:
    # random() lives in [0, 1); clip away exact zero for ndtri.
    return np.clip(gen.random(size), 1e-300, None)


def gaussians(gen: np.random.Generator, size) -> np.ndarray:
    """Standard normals, one uniform consumed per variate."""
    return ndtri(_uniforms(gen, size))


def uniform_sphere(m: int, rng) -> SpherePoint:
    """Uniform point of S^m: a normalized (m+1)-vector of Gaussians."""
    if m < 1:
        raise ValueError("sphere dimension must be at least 1")
    g = gaussians(_generator(rng), m + 1)
    return SpherePoint(g / np.linalg.norm(g))


def uniform_sphere_block(m: int, gen: np.random.Generator, count: int) -> np.ndarray:
    g = gaussians(gen, (count, m + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class HTable:
    """Tabled radial factor h; linear interpolation between nodes."""

    r_nodes: tuple
    h_values: tuple

    def __post_init__(self):
        r = np.asarray(self.r_nodes, dtype=float)
        h = np.asarray(self.h_values, dtype=float)
        if r.ndim != 1 or r.shape != h.shape or r.size < 1:
            raise ValueError("h table needs matching 1-d node/value columns")
        if np.any(np.diff(r) <= 0):
            raise ValueError("h table radii must be strictly ascending")
        if r[0] < 0:
            raise ValueError("h table radii must be nonnegative")
        if np.any(h < 0):
            raise ValueError("h values must be nonnegative")
        if h[0] <= 0:
            raise ValueError("h(0) must be positive")

    @classmethod
    def from_file(cls, path) -> "HTable":
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}: expected two columns, got {line!r}")
                rows.append((float(parts[0]), float(parts[1])))
        if not rows:
            raise ValueError(f"{path}: empty h table")
        r, h = zip(*rows)
        return cls(tuple(r), tuple(h))

    def __call__(self, r) -> np.ndarray:
        return np.interp(r, np.asarray(self.r_nodes), np.asarray(self.h_values))

    def scaled(self, factor: float) -> "HTable":
        return HTable(self.r_nodes, tuple(v * factor for v in self.h_values))

    @property
    def sup(self) -> float:
        # piecewise linear: the supremum is attained at a node
        return float(max(self.h_values))


@dataclass(frozen=True)
class AdversarialParams:
    """One radially symmetric perturbation law on a cap of radius alpha."""

    m: int
    alpha: float
    sigma: float
    beta: float
    h_table: HTable | None  # None means h identically 1
    H: float
    C_norm: float
    c_exponent: float
    delta_c: float
    delta_mode: str

    def h(self, r):
        if self.h_table is None:
            return np.ones_like(np.asarray(r, dtype=float))
        return self.h_table(r)


def compute_delta_c(m: int, beta: float, H: float, delta_mode: str = "lemma") -> float:
    """Tolerance delta such that nu(G) <= delta forces mu(G) <= nu(G)^c.

    "lemma" evaluates (2/(pi m)) * ((1/H) sqrt(1 - (2/(pi m))^(1/m)))^(1/c)
    with c = (1 - beta/m)/2; "beta0-remark" is the simpler 1/H^2 tolerance
    available when the density has no pole.
    """
    if delta_mode == "lemma":
        c = 0.5 * (1.0 - beta / m)
        base = 2.0 / (math.pi * m)
        inner = math.sqrt(1.0 - base ** (1.0 / m)) / H
        return base * inner ** (1.0 / c)
    if delta_mode == "beta0-remark":
        if beta != 0.0:
            raise ConfigError("the beta=0 remark tolerance requires beta = 0")
        return 1.0 / H**2
    raise ConfigError(f"unknown delta mode {delta_mode!r}")


def _colatitude_mass(m: int, beta: float, alpha: float, h_func) -> float:
    """Integral of sin^(m-beta-1) h(sin t) over [0, alpha], pole-safe.

    Uses the substitution theta = alpha * s^(1/(m-beta)), under which the
    integrand extends continuously to s = 0 for any beta < m.
    """
    p = m - beta

    def integrand(s):
        theta = alpha * s ** (1.0 / p)
        sin_t = math.sin(theta)
        return sin_t ** (m - 1 - beta) * float(h_func(sin_t)) * (alpha / p) * s ** (1.0 / p - 1.0)

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def _substituted_radial(params: "AdversarialParams"):
    """Vectorized CDF integrand in the pole-regularizing variable s."""
    p = params.m - params.beta
    alpha = params.alpha
    expo = params.m - 1 - params.beta

    def integrand(s):
        s = np.asarray(s, dtype=float)
        theta = alpha * s ** (1.0 / p)
        sin_t = np.sin(theta)
        return params.C_norm * sin_t**expo * params.h(sin_t) * (alpha / p) * s ** (1.0 / p - 1.0)

    return integrand


def make_adversarial_params(
    m: int,
    alpha: float,
    beta: float = 0.0,
    h_table: HTable | None = None,
    delta_mode: str = "lemma",
) -> AdversarialParams:
    """Normalize an (alpha, beta, h) triple into a usable parameter set.

    A user-supplied h is rescaled by one global factor so the cap law
    integrates to one, H is the supremum of the rescaled h, and the
    smoothness exponent and tolerance are filled in.
    """
    if m < 1:
        raise ConfigError("sphere dimension must be at least 1")
    if not 0.0 < alpha <= math.pi / 2 + 1e-12:
        raise ConfigError(f"alpha={alpha} outside (0, pi/2]")
    if not 0.0 <= beta < m:
        raise ConfigError(f"beta={beta} outside [0, m={m})")
    sigma = math.sin(alpha)
    c = 0.5 * (1.0 - beta / m)
    # Mass identity: integral of sin^(m-beta-1) h(sin t) over [0, alpha]
    # must equal I_{m-beta}(alpha).
    i_m_beta = _colatitude_mass(m, beta, alpha, lambda r: 1.0)
    if h_table is None:
        H = 1.0
        scaled = None
    else:
        raw = _colatitude_mass(m, beta, alpha, h_table)
        if raw <= 0:
            raise ConfigError("h table integrates to zero over the cap")
        scaled = h_table.scaled(i_m_beta / raw)
        H = scaled.sup
        if H < 1.0 - 1e-9:
            raise ConfigError("normalized h has supremum below 1")
        H = max(H, 1.0)
    i_m = integral_I(m, alpha)
    C_norm = i_m / i_m_beta
    delta = compute_delta_c(m, beta, H, delta_mode)
    return AdversarialParams(
        m=m, alpha=alpha, sigma=sigma, beta=beta, h_table=scaled,
        H=H, C_norm=C_norm, c_exponent=c, delta_c=delta, delta_mode=delta_mode,
    )


def radial_density(theta, params: AdversarialParams) -> np.ndarray:
    """Unnormalized colatitude density C (sin theta)^(m-1-beta) h(sin theta).

    Zero beyond the cap radius; an integrable pole at zero when
    beta > m-1 is reported as inf.
    """
    theta = np.asarray(theta, dtype=float)
    expo = params.m - 1 - params.beta
    sin_t = np.sin(np.minimum(theta, params.alpha))
    with np.errstate(divide="ignore"):
        core = np.where(sin_t > 0.0, sin_t**expo, np.inf if expo < 0 else (1.0 if expo == 0 else 0.0))
    val = params.C_norm * core * params.h(sin_t)
    return np.where(theta > params.alpha, 0.0, val)


@dataclass(frozen=True, eq=False)
class RadialCdf:
    """Monotone inverse-CDF table for the colatitude draw.

    Tabulated against s = (theta/alpha)^(m-beta), in which the CDF is
    linear to leading order at the pole, so linear interpolation keeps the
    CDF error below 1e-6 across the whole range.
    """

    s_nodes: np.ndarray
    cdf: np.ndarray
    alpha: float
    p_exponent: float
    node_count: int

    def theta_of_u(self, u) -> np.ndarray:
        s = np.interp(u, self.cdf, self.s_nodes)
        return self.alpha * s ** (1.0 / self.p_exponent)

    def cdf_of_theta(self, theta) -> np.ndarray:
        s = np.clip(np.asarray(theta, dtype=float) / self.alpha, 0.0, 1.0) ** self.p_exponent
        return np.interp(s, self.s_nodes, self.cdf)


@lru_cache(maxsize=64)
def build_radial_cdf(params: AdversarialParams, node_count: int = 4096) -> RadialCdf:
    """Tabulate the colatitude CDF on `node_count` cells.

    Composite Gauss-Legendre on the pole-regularizing substitution.
    """
    p = params.m - params.beta
    integrand = _substituted_radial(params)
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, 1.0, node_count + 1)
    los, his = edges[:-1], edges[1:]
    half = 0.5 * (his - los)
    mids = 0.5 * (his + los)
    pts = mids[:, None] + half[:, None] * nodes[None, :]
    vals = integrand(pts)
    cells = (vals @ weights) * half
    cdf = np.concatenate([[0.0], np.cumsum(cells)])
    cdf = np.maximum.accumulate(cdf)
    if cdf[-1] <= 0:
        raise ConfigError("radial density integrates to zero")
    cdf /= cdf[-1]
    return RadialCdf(s_nodes=edges, cdf=cdf, alpha=params.alpha,
                     p_exponent=p, node_count=node_count)


def _assemble_cap_points(center_vec: np.ndarray, thetas: np.ndarray, dirs: np.ndarray):
    """Pole-frame points (cos theta, sin theta * w) rotated to the center."""
    m = center_vec.size - 1
    w = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = np.empty((thetas.size, m + 1))
    pts[:, 0] = np.cos(thetas)
    pts[:, 1:] = np.sin(thetas)[:, None] * w
    pole = SpherePoint(np.eye(m + 1)[0])
    R = rotation_to(pole, SpherePoint(center_vec))
    return pts @ R.T


def sample_cap(abar: SpherePoint, params: AdversarialParams, rng) -> SpherePoint:
    """One draw from the adversarial law centered at abar.

    Colatitude by inverse CDF, direction uniform on the orthogonal
    S^{m-1}; the draw count per sample is fixed at m+1 uniforms.
    """
    m = params.m
    if abar.dim != m:
        raise ValueError("center dimension does not match params")
    gen = _generator(rng)
    u = _uniforms(gen, m + 1)
    theta = float(build_radial_cdf(params).theta_of_u(u[0]))
    dirs = ndtri(u[1:])[None, :]
    pt = _assemble_cap_points(abar.coords, np.array([theta]), dirs)[0]
    return SpherePoint(pt / np.linalg.norm(pt))


def cap_block(center_vec: np.ndarray, params: AdversarialParams,
              gen: np.random.Generator, count: int) -> np.ndarray:
    """Vectorized draws around one fixed center from a single stream."""
    table = build_radial_cdf(params)
    u = _uniforms(gen, count)
    thetas = table.theta_of_u(u)
    dirs = gaussians(gen, (count, params.m))
    pts = _assemble_cap_points(center_vec, thetas, dirs)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def rejection_cap_block(center_vec: np.ndarray, alpha: float, m: int,
                        gen: np.random.Generator, count: int) -> np.ndarray:
    """Uniform-in-cap oracle: uniform sphere draws filtered by membership."""
    cos_a = math.cos(alpha)
    out = []
    have = 0
    while have < count:
        batch = uniform_sphere_block(m, gen, max(4 * (count - have), 128))
        hits = batch[batch @ center_vec >= cos_a]
        out.append(hits)
        have += hits.shape[0]
    return np.vstack(out)[:count]


def sample_instance(center: Instance, params: AdversarialParams, rng: RngStream) -> Instance:
    """Independent per-row draws; row i comes from the row-i substream."""
    rows = [
        sample_cap(center.row(i), params, rng.with_row(i))
        for i in range(center.n)
    ]
    return Instance.from_points(rows)


def perturb_rows(mat: np.ndarray, delta: float, gen: np.random.Generator) -> np.ndarray:
    """Rotate every row by exactly `delta` in a random tangent direction."""
    mat = np.asarray(mat, dtype=float)
    g = gaussians(gen, mat.shape)
    tang = g - (np.sum(g * mat, axis=1, keepdims=True)) * mat
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    out = math.cos(delta) * mat + math.sin(delta) * tang
    return out / np.linalg.norm(out, axis=1, keepdims=True)
