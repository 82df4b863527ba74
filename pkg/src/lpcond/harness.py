"""Monte Carlo experiment drivers.

Estimates tail probabilities and expectations of the condition number under
seeded perturbation laws, evaluates the matching closed-form upper bounds,
runs the exact-formula feasibility (Wendel) and neighborhood-volume checks,
and persists plot-ready tables plus per-sample records.

All experiments draw through counter-based streams keyed by sample index
(or by fixed-size chunk for the bulk geometric experiments), so outputs are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import convexgeom, samplers, sic
from .convexgeom import SpherePolytope, cap_distances_batch
from .errors import ConfigError
from .lp import FeasibilityClass, gordan_classify
from .samplers import (
    PURPOSE_CENTER,
    PURPOSE_CHECK,
    PURPOSE_PROPERTY,
    PURPOSE_SAMPLE,
    PURPOSE_TUBE,
    PURPOSE_WENDEL,
    AdversarialParams,
    RngStream,
    stream,
)
from .sic import Instance, classify_rho, cond_from_rho
from .sphere import SpherePoint, clipped_arccos, rotation_to

CHUNK = 4096  # fixed work-item granularity; never depends on worker count

CSV_HEADER = "sample_index,seed_hi,seed_lo,class,rho,cond,ln_cond,ipm_proxy"


@dataclass
class ExperimentConfig:
    kind: str
    m: int = 2
    n: int = 5
    alpha: float = math.pi / 6
    beta: float = 0.0
    h_path: str | None = None
    delta_mode: str = "lemma"
    N: int = 100_000
    master_seed: int = 0
    center: str = "random"  # "random" or "file:PATH"
    t_grid: tuple | None = None
    k_values: tuple | None = None
    phi: float | None = None
    cap_radius: float | None = None
    placement_offset: float = 0.0
    workers: int = 1
    out_dir: str | None = None

    def echo(self) -> dict:
        """Config echo for summaries: scientific knobs only, no runtime ones."""
        d = {
            "kind": self.kind, "m": self.m, "n": self.n, "alpha": self.alpha,
            "beta": self.beta, "h_path": self.h_path, "delta_mode": self.delta_mode,
            "N": self.N, "master_seed": self.master_seed, "center": self.center,
            "t_grid": list(self.t_grid) if self.t_grid else None,
            "k_values": list(self.k_values) if self.k_values else None,
            "phi": self.phi, "cap_radius": self.cap_radius,
            "placement_offset": self.placement_offset,
        }
        return d


@dataclass
class SampleRecord:
    index: int
    seed_hi: int
    seed_lo: int
    cls: FeasibilityClass | None
    rho: float | None
    cond: float | None
    ln_cond: float | None
    ipm_proxy: float | None
    displacement: float | None = None


@dataclass
class BoundReport:
    t: float
    empirical: float
    se: float
    bound: float
    vacuous: bool
    passed: bool | None
    covered: bool = True


# ---------------------------------------------------------------------------
# Closed-form bound values


def params_from_config(cfg: ExperimentConfig) -> AdversarialParams:
    h_table = samplers.HTable.from_file(cfg.h_path) if cfg.h_path else None
    return samplers.make_adversarial_params(
        cfg.m, cfg.alpha, cfg.beta, h_table=h_table, delta_mode=cfg.delta_mode
    )


def threshold_F(params: AdversarialParams, n: int) -> float:
    m = params.m
    return 13.0 * m * (m + 1) / (2.0 * params.sigma * params.delta_c)


def bound_F(t: float, params: AdversarialParams, n: int) -> float:
    """Feasible-tail upper bound n (13 m (m+1) / (2 sigma))^c t^-c."""
    m, c = params.m, params.c_exponent
    return n * (13.0 * m * (m + 1) / (2.0 * params.sigma)) ** c * t ** (-c)


def bound_I(t: float, params: AdversarialParams, n: int) -> float:
    """Infeasible-tail upper bound, valid for t >= 1."""
    m, c = params.m, params.c_exponent
    lead = n * (1690.0 * m * m * (m + 1) / (4.0 * params.sigma**2)) ** c
    return lead * t ** (-c) * (params.delta_c ** (-c) + c * n * math.log(t))


def bound_Emain(params: AdversarialParams, n: int):
    """(expectation bound, informational_only).

    The explicit constant is only available without a density pole; for
    beta > 0 the value is reported but carries no pass/fail weight.
    """
    m = params.m
    value = (
        12.0 * math.log(n)
        + 17.0 * math.log(m)
        + 6.0 * math.log(1.0 / params.sigma)
        + 8.0 * math.log(params.H)
        + 29.0
    )
    return value, params.beta != 0.0


def default_t_grid(params: AdversarialParams, n: int, points: int = 12,
                   span: float = 1e4) -> tuple:
    lo = threshold_F(params, n)
    return tuple(float(t) for t in np.geomspace(lo, lo * span, points))


# ---------------------------------------------------------------------------
# Exact feasibility probabilities (Wendel)


def wendel_p_exact(k: int, m: int) -> Fraction:
    """p(k, m) = 2^(1-k) * sum_{i<=m} C(k-1, i), as an exact rational."""
    if k <= m:
        raise ValueError(f"need k > m, got k={k}, m={m}")
    return Fraction(sum(math.comb(k - 1, i) for i in range(m + 1)), 2 ** (k - 1))


def wendel_p(k: int, m: int) -> float:
    return float(wendel_p_exact(k, m))


def wendel_p_pascal(k: int, m: int) -> Fraction:
    """Independent evaluation: Pascal-triangle row built by additions."""
    if k <= m:
        raise ValueError(f"need k > m, got k={k}, m={m}")
    row = [1]
    for _ in range(k - 1):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return Fraction(sum(row[: m + 1]), 2 ** (k - 1))


def pkm_partial_sum(m: int, k_max: int) -> Fraction:
    """sum_{k=4m+1}^{k_max} k p(k, m); the full series is o(1) in m."""
    total = Fraction(0)
    for k in range(4 * m + 1, k_max + 1):
        total += k * wendel_p_exact(k, m)
    return total


# ---------------------------------------------------------------------------
# Shared machinery


def binomial_se(p_hat: float, n: int) -> float:
    if n <= 0:
        return math.inf
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


def _chunk_ranges(total: int):
    return [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]


def _run_chunks(total: int, workers: int, fn):
    """Apply fn(lo, hi) over fixed chunks; order of results is by chunk."""
    ranges = _chunk_ranges(total)
    if workers <= 1 or len(ranges) <= 1:
        return [fn(lo, hi) for lo, hi in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]


def resolve_center(cfg: ExperimentConfig, params: AdversarialParams) -> Instance:
    if cfg.center == "random":
        gen = stream(cfg.master_seed, PURPOSE_CENTER).generator()
        return Instance(samplers.uniform_sphere_block(cfg.m, gen, cfg.n))
    if cfg.center.startswith("file:"):
        return Instance.from_file(cfg.center[5:])
    if cfg.center == "equal-rows":
        gen = stream(cfg.master_seed, PURPOSE_CENTER).generator()
        row = samplers.uniform_sphere_block(cfg.m, gen, 1)[0]
        return Instance(np.tile(row, (cfg.n, 1)))
    if cfg.center == "great-circle":
        angles = np.linspace(0.0, 2.0 * math.pi, cfg.n, endpoint=False)
        mat = np.zeros((cfg.n, cfg.m + 1))
        mat[:, 0] = np.cos(angles)
        mat[:, 1] = np.sin(angles)
        return Instance(mat)
    raise ConfigError(f"unknown center source {cfg.center!r}")


def _ipm_proxy(m: int, n: int, ln_cond: float) -> float:
    return math.sqrt(m + n) * (math.log(m + n) + ln_cond)


def draw_condition_records(cfg: ExperimentConfig, params: AdversarialParams,
                           center: Instance):
    """Sample N instances from the product law and solve each for rho.

    Returns (records, counts).  Chunked batch enumeration with a scalar
    fallback for rows the vectorized path cannot certify.
    """
    n, m = cfg.n, cfg.m

    def do_chunk(lo, hi):
        count = hi - lo
        mats = np.empty((count, n, m + 1))
        seeds = []
        disp = np.empty(count)
        for i in range(count):
            s = stream(cfg.master_seed, PURPOSE_SAMPLE, lo + i)
            inst = samplers.sample_instance(center, params, s)
            mats[i] = inst.matrix
            seeds.append((cfg.master_seed, s.index))
            disp[i] = float(
                np.max(clipped_arccos(np.sum(inst.matrix * center.matrix, axis=1)))
            )
        rho, _, exact = sic.sic_rho_batch(mats)
        failed = np.zeros(count, dtype=bool)
        for i in np.flatnonzero(~exact):
            try:
                rho[i] = sic.sic_solve(Instance(mats[i])).rho
            except Exception:
                failed[i] = True
        return rho, exact | ~failed, seeds, disp

    records: list[SampleRecord] = []
    counts = {"sf": 0, "ip": 0, "if": 0, "overflow": 0, "failed": 0}
    results = _run_chunks(cfg.N, cfg.workers, do_chunk)
    idx = 0
    for rho, solved, seeds, disp in results:
        for j in range(rho.size):
            seed_hi, seed_lo = seeds[j]
            if not solved[j]:
                counts["failed"] += 1
                records.append(SampleRecord(idx, seed_hi, seed_lo, None, None,
                                            None, None, None, float(disp[j])))
                idx += 1
                continue
            r = float(rho[j])
            cls = classify_rho(r)
            cond = cond_from_rho(r)
            counts[cls.short.lower()] += 1
            if math.isfinite(cond) and cond <= sic.COND_OVERFLOW:
                ln_c = math.log(cond)
                ipm = _ipm_proxy(cfg.m, cfg.n, ln_c)
            else:
                counts["overflow"] += 1
                ln_c = None
                ipm = None
            records.append(SampleRecord(idx, seed_hi, seed_lo, cls, r,
                                        cond, ln_c, ipm, float(disp[j])))
            idx += 1
    if counts["failed"] > 0.001 * cfg.N:
        raise ConfigError(f"{counts['failed']} solver failures exceed the 0.1% budget")
    return records, counts


# ---------------------------------------------------------------------------
# Experiments


def run_tail_experiment(cfg: ExperimentConfig):
    if cfg.n <= cfg.m + 1:
        raise ConfigError("tail experiment needs n > m+1")
    params = params_from_config(cfg)
    center = resolve_center(cfg, params)
    records, counts = draw_condition_records(cfg, params, center)
    grid = tuple(cfg.t_grid) if cfg.t_grid else default_t_grid(params, cfg.n)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("t grid must be nonempty and strictly increasing")
    if grid[0] < 1.0:
        raise ConfigError("the infeasible-tail bound needs t >= 1")
    n_eff = sum(1 for r in records if r.cls is not None)
    t_lo = threshold_F(params, cfg.n)
    conds = np.array([r.cond if r.cond is not None else np.nan for r in records])
    is_sf = np.array([r.cls is FeasibilityClass.STRICTLY_FEASIBLE for r in records])
    is_if = np.array([r.cls is FeasibilityClass.INFEASIBLE for r in records])
    table = []
    for t in grid:
        t = float(t)
        hits_f = int(np.sum(is_sf & (conds >= t)))
        hits_i = int(np.sum(is_if & (conds >= t)))
        emp_f, emp_i = hits_f / n_eff, hits_i / n_eff
        se_f, se_i = binomial_se(emp_f, n_eff), binomial_se(emp_i, n_eff)
        bf, bi = bound_F(t, params, cfg.n), bound_I(t, params, cfg.n)
        covered = t >= t_lo * (1.0 - 1e-12)
        table.append({
            "t": t,
            "emp_F": emp_f, "se_F": se_f, "bound_F": bf,
            "pass_F": (emp_f - 3.0 * se_f <= bf) if covered else None,
            "emp_I": emp_i, "se_I": se_i, "bound_I": bi,
            "pass_I": emp_i - 3.0 * se_i <= bi,
            "covered": covered,
            "vacuous_F": bf >= 1.0, "vacuous_I": bi >= 1.0,
        })
    summary = {
        "config": cfg.echo(), "counts": counts, "tail_table": table,
        "expectation": None, "wendel_table": None, "tube_table": None,
        "property_suite": None,
        "delta_c": params.delta_c, "threshold_F": t_lo,
    }
    return records, summary


def tail_bound_reports(summary: dict):
    """The tail table as typed (feasible, infeasible) BoundReport lists."""
    reports_f, reports_i = [], []
    for row in summary["tail_table"]:
        reports_f.append(BoundReport(
            t=row["t"], empirical=row["emp_F"], se=row["se_F"],
            bound=row["bound_F"], vacuous=row["vacuous_F"],
            passed=row["pass_F"], covered=row["covered"],
        ))
        reports_i.append(BoundReport(
            t=row["t"], empirical=row["emp_I"], se=row["se_I"],
            bound=row["bound_I"], vacuous=row["vacuous_I"],
            passed=row["pass_I"], covered=True,
        ))
    return reports_f, reports_i


def run_expectation_experiment(cfg: ExperimentConfig):
    if cfg.n <= cfg.m + 1:
        raise ConfigError("expectation experiment needs n > m+1")
    params = params_from_config(cfg)
    center = resolve_center(cfg, params)
    records, counts = draw_condition_records(cfg, params, center)
    lns = np.array([r.ln_cond for r in records if r.ln_cond is not None])
    bound, informational = bound_Emain(params, cfg.n)
    if lns.size >= 2:
        mean = float(np.mean(lns))
        se = float(np.std(lns, ddof=1) / math.sqrt(lns.size))
        passed = None if informational else (mean + 3.0 * se <= bound)
        status = "informational" if informational else ("pass" if passed else "fail")
    else:
        mean = float(lns[0]) if lns.size else None
        se = None
        passed = None
        status = "insufficient-precision"
    expectation = {
        "mean": mean, "se": se, "bound": bound, "pass": passed,
        "status": status, "used": int(lns.size),
        "overflow": counts["overflow"],
    }
    summary = {
        "config": cfg.echo(), "counts": counts, "tail_table": None,
        "expectation": expectation, "wendel_table": None, "tube_table": None,
        "property_suite": None,
    }
    return records, summary


def _feasible_batch_small_m(mats: np.ndarray) -> np.ndarray:
    """Vectorized hemisphere feasibility for m in {1, 2}.

    A witness direction for A x <= 0 can a.s. be taken orthogonal to m of
    the rows, so candidate rays are signed row normals (m=1) or signed
    pairwise cross products (m=2).
    """
    B, k, d = mats.shape
    tol = 1e-12
    if d == 2:
        rays = np.stack([-mats[..., 1], mats[..., 0]], axis=-1)  # (B, k, 2)
    elif d == 3:
        iu, ju = np.triu_indices(k, k=1)
        rays = np.cross(mats[:, iu], mats[:, ju])  # (B, P, 3)
        norms = np.linalg.norm(rays, axis=2, keepdims=True)
        rays = np.where(norms > 1e-12, rays / np.maximum(norms, 1e-300), 0.0)
    else:
        raise ValueError("fast path only covers m = 1 and m = 2")
    dots = np.einsum("bkd,bpd->bpk", mats, rays)
    ok_plus = np.max(dots, axis=2) <= tol
    ok_minus = np.min(dots, axis=2) >= -tol
    nonzero = np.linalg.norm(rays, axis=2) > 0.5
    return np.any((ok_plus | ok_minus) & nonzero, axis=1)


def feasible_fraction(m: int, k: int, N: int, master_seed: int, workers: int = 1):
    """Empirical probability that k uniform rows on S^m are feasible."""

    def do_chunk(lo, hi):
        count = hi - lo
        mats = np.empty((count, k, m + 1))
        for i in range(count):
            gen = stream(master_seed, PURPOSE_WENDEL, lo + i).generator()
            mats[i] = samplers.uniform_sphere_block(m, gen, count=k)
        if m in (1, 2):
            feas = _feasible_batch_small_m(mats)
        else:
            feas = np.array([
                gordan_classify(mats[i]) is not FeasibilityClass.INFEASIBLE
                for i in range(count)
            ])
        return int(np.sum(feas))

    hits = sum(_run_chunks(N, workers, do_chunk))
    return hits / N


def run_wendel_experiment(cfg: ExperimentConfig):
    ks = cfg.k_values or (cfg.m + 2, 2 * cfg.m + 2, 3 * cfg.m + 2)
    table = []
    for k in ks:
        if k <= cfg.m:
            raise ConfigError(f"wendel needs k > m, got k={k}")
        p_exact = wendel_p(k, cfg.m)
        p_hat = feasible_fraction(cfg.m, k, cfg.N, cfg.master_seed, cfg.workers)
        gate = 4.0 * math.sqrt(p_exact * (1.0 - p_exact) / cfg.N)
        table.append({
            "k": k, "m": cfg.m, "p_hat": p_hat, "p_exact": p_exact,
            "gate": gate, "pass": abs(p_hat - p_exact) <= gate, "N": cfg.N,
        })
    decay = [
        {"m": mm, "k_max": 4 * mm + 60,
         "partial_sum": float(pkm_partial_sum(mm, 4 * mm + 60))}
        for mm in range(1, 7)
    ]
    summary = {
        "config": cfg.echo(), "counts": None, "tail_table": None,
        "expectation": None, "wendel_table": table, "tube_table": None,
        "property_suite": None, "pkm_decay": decay,
    }
    return [], summary


def run_tube_experiment(cfg: ExperimentConfig):
    """Relative volume of the outer/inner phi-neighborhood of a cap boundary
    inside a projective ball, versus the 13m/4 * eps/sigma bound."""
    if cfg.cap_radius is None or cfg.phi is None:
        raise ConfigError("tube experiment needs cap_radius and phi")
    if not 0.0 < cfg.cap_radius < math.pi / 2:
        raise ConfigError("the cap K must be properly convex: radius in (0, pi/2)")
    m = cfg.m
    params = samplers.make_adversarial_params(m, cfg.alpha, 0.0)
    sigma = params.sigma
    eps = math.sin(cfg.phi)
    if eps > sigma / (2.0 * m) + 1e-12:
        raise ConfigError(
            f"eps={eps:.6g} exceeds sigma/(2m)={sigma / (2 * m):.6g}: "
            "outside the bound's hypothesis"
        )
    k_center = np.eye(m + 1)[0]
    a_center = np.zeros(m + 1)
    a_center[0] = math.cos(cfg.placement_offset)
    a_center[1] = math.sin(cfg.placement_offset)

    def do_chunk(lo, hi):
        count = hi - lo
        gen = stream(cfg.master_seed, PURPOSE_TUBE, lo // CHUNK).generator()
        signs = gen.random(count) < 0.5
        pts = samplers.cap_block(a_center, params, gen, count)
        pts = np.where(signs[:, None], pts, -pts)
        d_hull, _, d_bd = cap_distances_batch(pts, k_center, cfg.cap_radius)
        outer = int(np.sum((d_hull > 0.0) & (d_hull < cfg.phi)))
        inner = int(np.sum((d_hull <= 0.0) & (d_bd < cfg.phi)))
        return outer, inner

    results = _run_chunks(cfg.N, cfg.workers, do_chunk)
    outer = sum(r[0] for r in results) / cfg.N
    inner = sum(r[1] for r in results) / cfg.N
    se_o, se_i = binomial_se(outer, cfg.N), binomial_se(inner, cfg.N)
    bound = 13.0 * m / 4.0 * eps / sigma
    row = {
        "m": m, "alpha": cfg.alpha, "phi": cfg.phi,
        "cap_radius": cfg.cap_radius, "offset": cfg.placement_offset,
        "est_outer": outer, "se_outer": se_o,
        "est_inner": inner, "se_inner": se_i,
        "bound": bound, "vacuous": bound >= 1.0,
        "pass_outer": outer - 3.0 * se_o <= bound,
        "pass_inner": inner - 3.0 * se_i <= bound,
        "N": cfg.N,
    }
    summary = {
        "config": cfg.echo(), "counts": None, "tail_table": None,
        "expectation": None, "wendel_table": None, "tube_table": [row],
        "property_suite": None,
    }
    return [], summary


# ---------------------------------------------------------------------------
# Property suite


def _prop_stream(master: int, check_id: int, index: int) -> RngStream:
    return stream(master, PURPOSE_PROPERTY, (check_id << 32) | index)


def _uniform_instances(master: int, check_id: int, m: int, n: int, count: int):
    mats = np.empty((count, n, m + 1))
    for i in range(count):
        gen = _prop_stream(master, check_id, i).generator()
        mats[i] = samplers.uniform_sphere_block(m, gen, n)
    return mats


def _status(qualifying: int, violations: int) -> str:
    if qualifying < 20:
        return "inconclusive"
    return "pass" if violations == 0 else "fail"


def _af_check(cfg: ExperimentConfig, target: int = 250, pool: int = 6000):
    """Large condition numbers force a row near its complementary hull."""
    m, n = cfg.m, cfg.n
    eps = (m + 1) / 12.0  # qualify at C(A) >= 12
    phi = math.asin(eps)
    mats = _uniform_instances(cfg.master_seed, 1, m, n, pool)
    rho, _, exact = sic.sic_rho_batch(mats)
    conds = np.array([cond_from_rho(r) for r in rho])
    sf = np.array([classify_rho(r) is FeasibilityClass.STRICTLY_FEASIBLE for r in rho])
    qualify_idx = np.flatnonzero(sf & exact & (conds >= (m + 1) / eps))[:target]
    violations = 0
    for i in qualify_idx:
        found = False
        for j in range(n):
            others = np.delete(mats[i], j, axis=0)
            poly = SpherePolytope(-others)
            d = convexgeom.distance_to_sconv(SpherePoint(mats[i, j]), poly)
            if convexgeom.MEMBER_TOL < d <= phi + 1e-6:
                found = True
                break
        if not found:
            violations += 1
    q = int(qualify_idx.size)
    return {"check": "feasible-witness", "qualifying": q, "violations": violations,
            "phi": phi, "status": _status(q, violations)}


def _if_check(cfg: ExperimentConfig, target: int = 220, pool: int = 2000):
    """Appending a point of the reflected hull caps the new condition number."""
    m, n = cfg.m, cfg.n
    mats = _uniform_instances(cfg.master_seed, 2, m, n, pool)
    rho, _, exact = sic.sic_rho_batch(mats)
    qualifying = 0
    violations = 0
    skipped = 0
    for i in range(pool):
        if qualifying >= target:
            break
        if not exact[i] or classify_rho(rho[i]) is not FeasibilityClass.STRICTLY_FEASIBLE:
            continue
        gen = _prop_stream(cfg.master_seed, 3, i).generator()
        neg = -mats[i]
        b = None
        for _ in range(200):  # 200 * 512 proposals, then give up
            props = samplers.uniform_sphere_block(m, gen, 512)
            member = convexgeom.cone_member_batch(props, neg)
            hit = np.flatnonzero(member)
            if hit.size:
                b = props[hit[0]]
                break
        if b is None:
            skipped += 1
            continue
        poly = SpherePolytope(neg)
        d_bd = convexgeom.distance_to_boundary(SpherePoint(b), poly)
        res_ab = sic.sic_bruteforce(Instance(np.vstack([mats[i], b])))
        cond_a = cond_from_rho(rho[i])
        if not math.isfinite(res_ab.cond):
            skipped += 1
            continue
        qualifying += 1
        if res_ab.cls is FeasibilityClass.STRICTLY_FEASIBLE:
            violations += 1  # (A, b) must be infeasible or ill-posed
        elif res_ab.cond * math.sin(d_bd) > 10.0 * cond_a * (1.0 + 1e-6):
            violations += 1
    return {"check": "infeasible-transition", "qualifying": qualifying,
            "violations": violations, "skipped": skipped,
            "status": _status(qualifying, violations)}


def _ccine_check(cfg: ExperimentConfig, target: int = 250, pool: int = 400):
    """Condition numbers of infeasible prefixes dominate the full instance."""
    m = cfg.m
    n = max(cfg.n, m + 6)
    mats = _uniform_instances(cfg.master_seed, 4, m, n, pool)
    qualifying = 0
    violations = 0
    for i in range(pool):
        if qualifying >= target:
            break
        inst = Instance(mats[i])
        profile = sic.prefix_cond_profile(inst)
        full_cond = profile[-1][1]
        prefix_if = [
            (k, cond) for k, cond, cls in profile[:-1]
            if cls is FeasibilityClass.INFEASIBLE
        ]
        if not prefix_if:
            continue
        qualifying += 1
        for _, cond_k in prefix_if:
            if cond_k < full_cond - 1e-8:
                violations += 1
                break
    return {"check": "prefix-monotonicity", "qualifying": qualifying,
            "violations": violations, "status": _status(qualifying, violations)}


def _multrva_check(cfg: ExperimentConfig, N: int = 200_000):
    """Tail of a product of two heavy-tailed variables vs the product bound."""
    c = 0.5
    x_u, x_v = 4.0, 9.0
    a_coef, b_coef = 3.0, 4.0  # looser than the exact tails x_u^c = 2, x_v^c = 3
    gen = _prop_stream(cfg.master_seed, 5, 0).generator()
    w = np.clip(gen.random((2, N)), 1e-300, None)
    U = x_u * w[0] ** (-1.0 / c)
    V = x_v * w[1] ** (-1.0 / c)
    prod = U * V
    grid = np.geomspace(x_u * x_v, x_u * x_v * 1e4, 12)
    rows = []
    violations = 0
    for x in grid:
        p_hat = float(np.mean(prod >= x))
        se = binomial_se(p_hat, N)
        bound = (c * a_coef * b_coef * x ** (-c) * math.log(max(x / (x_u * x_v), 1.0))
                 + min(a_coef * x_v**c, b_coef * x_u**c) * x ** (-c))
        ok = p_hat - 3.0 * se <= bound
        if not ok:
            violations += 1
        rows.append({"x": float(x), "p_hat": p_hat, "se": se,
                     "bound": bound, "pass": ok})
    return {"check": "product-tail", "qualifying": N, "violations": violations,
            "grid": rows, "status": _status(N, violations)}


def run_property_suite(cfg: ExperimentConfig):
    suite = {
        "af": _af_check(cfg),
        "if": _if_check(cfg),
        "ccine": _ccine_check(cfg),
        "multrva": _multrva_check(cfg),
    }
    summary = {
        "config": cfg.echo(), "counts": None, "tail_table": None,
        "expectation": None, "wendel_table": None, "tube_table": None,
        "property_suite": suite,
    }
    return [], summary


# ---------------------------------------------------------------------------
# Sampler fidelity


def ks_statistic(sample: np.ndarray, cdf_values: np.ndarray) -> float:
    """Two-sided KS distance between an empirical sample and model CDF values
    evaluated at the sorted sample points."""
    n = sample.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - cdf_values, cdf_values - (i - 1) / n)))


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    data = np.sort(np.concatenate([a, b]))
    cdf_a = np.searchsorted(np.sort(a), data, side="right") / a.size
    cdf_b = np.searchsorted(np.sort(b), data, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_threshold(n: int) -> float:
    return 1.63 / math.sqrt(n)


def ks_two_sample_threshold(n1: int, n2: int) -> float:
    return 1.63 * math.sqrt((n1 + n2) / (n1 * n2))


def oracle_radial_cdf(params: AdversarialParams, thetas: np.ndarray) -> np.ndarray:
    """Colatitude CDF by independent adaptive quadrature on a fine grid."""
    from scipy.integrate import quad

    p = params.m - params.beta
    integrand = samplers._substituted_radial(params)
    grid = np.linspace(0.0, 1.0, 2049)
    cells = np.array([
        quad(integrand, grid[i], grid[i + 1], epsabs=1e-12, limit=100)[0]
        for i in range(grid.size - 1)
    ])
    cdf = np.concatenate([[0.0], np.cumsum(cells)])
    cdf /= cdf[-1]
    s_vals = np.clip(thetas / params.alpha, 0.0, 1.0) ** p
    return np.interp(s_vals, grid, cdf)


def run_sampler_check(cfg: ExperimentConfig):
    """Radial-law, symmetry, support, and rejection-oracle fidelity checks."""
    m = cfg.m
    N = cfg.N
    gen = stream(cfg.master_seed, PURPOSE_CHECK, 0).generator()
    abar = samplers.uniform_sphere_block(m, gen, 1)[0]
    rows = []
    for beta in (cfg.beta,):
        params = samplers.make_adversarial_params(m, cfg.alpha, beta,
                                                  delta_mode=cfg.delta_mode)
        draw_gen = stream(cfg.master_seed, PURPOSE_CHECK,
                          1 + int(round(1000 * beta))).generator()
        pts = samplers.cap_block(abar, params, draw_gen, N)
        ang = clipped_arccos(pts @ abar)
        support_ok = bool(np.max(ang) <= cfg.alpha + 1e-10)
        theta_sorted = np.sort(ang)
        ks_rad = ks_statistic(theta_sorted, oracle_radial_cdf(params, theta_sorted))
        row = {
            "beta": beta, "alpha": cfg.alpha, "N": N,
            "ks_radial": ks_rad, "ks_radial_threshold": ks_threshold(N),
            "pass_radial": ks_rad <= ks_threshold(N),
            "support_ok": support_ok,
        }
        if m >= 2:
            # Direction symmetry: one angular coordinate must be uniform.
            R = rotation_to(SpherePoint(np.eye(m + 1)[0]), SpherePoint(abar))
            back = pts @ R
            w = back[:, 1:]
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            angle = np.arctan2(w[:, 1], w[:, 0])
            u_sorted = np.sort((angle + math.pi) / (2.0 * math.pi))
            ks_dir = ks_statistic(u_sorted, u_sorted)
            row["ks_direction"] = ks_dir
            row["pass_direction"] = ks_dir <= ks_threshold(N)
        if beta == 0.0:
            rej_gen = stream(cfg.master_seed, PURPOSE_CHECK, 2).generator()
            rej = samplers.rejection_cap_block(abar, cfg.alpha, m, rej_gen, N)
            ks2 = ks_two_sample(ang, clipped_arccos(rej @ abar))
            row["ks_rejection"] = ks2
            row["ks_rejection_threshold"] = ks_two_sample_threshold(N, N)
            row["pass_rejection"] = ks2 <= ks_two_sample_threshold(N, N)
        rows.append(row)
    summary = {
        "config": cfg.echo(), "counts": None, "tail_table": None,
        "expectation": None, "wendel_table": None, "tube_table": None,
        "property_suite": None, "sampler_table": rows,
    }
    return [], summary


# ---------------------------------------------------------------------------
# Persistence


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def persist(records, summary: dict, cfg: ExperimentConfig, out_dir: str):
    """Write the per-sample CSV and the summary JSON; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "records.csv")
    json_path = os.path.join(out_dir, "summary.json")
    try:
        with open(csv_path, "w", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in records:
                fields = [
                    str(r.index), str(r.seed_hi), str(r.seed_lo),
                    r.cls.short if r.cls is not None else "",
                    _fmt(r.rho), _fmt(r.cond), _fmt(r.ln_cond), _fmt(r.ipm_proxy),
                ]
                fh.write(",".join(fields) + "\n")
        body = dict(summary)
        body.setdefault("N", len(records))
        with open(json_path, "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True, allow_nan=False,
                      default=_json_default)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing experiment outputs under {out_dir}: {exc}") from exc
    return csv_path, json_path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["config", "counts", "tail_table", "expectation",
                 "wendel_table", "tube_table", "property_suite"],
    "properties": {
        "config": {"type": "object"},
        "counts": {"type": ["object", "null"]},
        "tail_table": {"type": ["array", "null"]},
        "expectation": {"type": ["object", "null"]},
        "wendel_table": {"type": ["array", "null"]},
        "tube_table": {"type": ["array", "null"]},
        "property_suite": {"type": ["object", "null"]},
    },
}
