import math

import numpy as np
import pytest

from lpcond.errors import DegenerateSubsetError, InstanceTooLargeError
from lpcond.lp import FeasibilityClass
from lpcond.sic import (
    Instance,
    circumcap,
    cond_and_class,
    cond_from_rho,
    prefix_cond_profile,
    sic_bruteforce,
    sic_rho_batch,
    sic_solve,
)
from lpcond.sphere import SpherePoint, angular_distance


def random_instance(rng, n, m):
    mat = rng.standard_normal((n, m + 1))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return Instance(mat)


def circle_points(*angles):
    return np.array([[math.cos(a), math.sin(a)] for a in angles])


SYM_TRIPLE = circle_points(0.0, 2 * math.pi / 3, 4 * math.pi / 3)
SIMPLEX_WITH_CENTER = np.vstack([np.eye(3), np.ones(3) / math.sqrt(3)])
ILL_POSED_S1 = np.array([[1.0, 0], [-1.0, 0], [0, 1.0], [0, 1.0]])


class TestInstance:
    def test_bad_row_named(self):
        with pytest.raises(ValueError, match="row 2"):
            Instance(np.array([[1.0, 0], [2.0, 0], [0, 1.0]]))

    def test_needs_n_above_dim(self):
        with pytest.raises(ValueError):
            Instance(np.eye(3))

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "inst.txt"
        path.write_text("3 1\n1 0\n0 1\n-1 0\n")
        inst = Instance.from_file(path)
        assert inst.n == 3 and inst.m == 1
        assert np.allclose(inst.matrix[2], [-1.0, 0.0])

    def test_file_header_errors(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 1\n1 0\n0 1\n")
        with pytest.raises(ValueError, match="expected 6 coordinates"):
            Instance.from_file(path)

    def test_prefix_and_append(self):
        inst = Instance(np.vstack([SYM_TRIPLE, SYM_TRIPLE[:1]]))
        assert inst.prefix(3).n == 3
        grown = inst.with_row(SpherePoint([0.0, 1.0]))
        assert grown.n == 5


class TestCircumcap:
    def test_coordinate_triple(self):
        cap = circumcap(np.eye(3), 1)
        assert np.allclose(cap.center.coords, np.ones(3) / math.sqrt(3), atol=1e-12)
        assert cap.radius == pytest.approx(math.acos(1 / math.sqrt(3)), abs=1e-12)

    def test_singleton(self):
        cap = circumcap(np.array([[1.0, 0, 0]]), 1)
        assert cap.radius == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(cap.center.coords, [1.0, 0, 0])

    def test_arc_midpoint(self):
        pts = circle_points(0.0, 2 * math.pi / 3)
        cap = circumcap(pts, 1)
        assert math.atan2(*cap.center.coords[::-1]) == pytest.approx(math.pi / 3)
        assert cap.radius == pytest.approx(math.pi / 3, abs=1e-12)

    def test_equidistance(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            k = int(rng.integers(1, 4))
            pts = rng.standard_normal((k, 3))
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)
            for sign in (1, -1):
                cap = circumcap(pts, sign)
                dots = pts @ cap.center.coords
                assert np.max(np.abs(dots - dots[0])) <= 1e-10

    def test_singular_gram_rejected(self):
        with pytest.raises(DegenerateSubsetError):
            circumcap(np.array([[1.0, 0], [-1.0, 0]]), 1)

    def test_sign_validated(self):
        with pytest.raises(ValueError):
            circumcap(np.eye(3), 2)


class TestBruteforce:
    def test_symmetric_triple_with_duplicate(self):
        res = sic_bruteforce(Instance(np.vstack([SYM_TRIPLE, SYM_TRIPLE[:1]])))
        assert res.rho == pytest.approx(2 * math.pi / 3, abs=1e-12)
        assert res.cond == pytest.approx(2.0, abs=1e-9)
        assert res.cls is FeasibilityClass.INFEASIBLE

    def test_simplex_with_center(self):
        res = sic_bruteforce(Instance(SIMPLEX_WITH_CENTER))
        assert res.rho == pytest.approx(math.acos(1 / math.sqrt(3)), abs=1e-12)
        assert res.cond == pytest.approx(math.sqrt(3), abs=1e-9)
        assert res.cls is FeasibilityClass.STRICTLY_FEASIBLE

    def test_exactly_ill_posed(self):
        res = sic_bruteforce(Instance(ILL_POSED_S1))
        assert res.rho == pytest.approx(math.pi / 2, abs=1e-12)
        assert math.isinf(res.cond)
        assert res.cls is FeasibilityClass.ILL_POSED
        assert res.dist_to_sigma == pytest.approx(0.0, abs=1e-12)

    def test_containment_and_support_invariants(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            inst = random_instance(rng, int(rng.integers(4, 9)), 2)
            res = sic_bruteforce(inst)
            angles = np.arccos(np.clip(inst.matrix @ res.center.coords, -1, 1))
            assert np.max(angles) <= res.rho + 1e-9
            assert len(res.support) <= inst.m + 1
            for i in res.support:
                assert abs(angles[i] - res.rho) <= 1e-8

    def test_guard(self):
        rng = np.random.default_rng(2)
        mat = rng.standard_normal((250, 4))
        mat /= np.linalg.norm(mat, axis=1, keepdims=True)
        with pytest.raises(InstanceTooLargeError):
            sic_bruteforce(Instance(mat))


class TestSolve:
    def test_matches_oracle_on_constructed(self):
        for mat in (np.vstack([SYM_TRIPLE, SYM_TRIPLE[:1]]),
                    SIMPLEX_WITH_CENTER, ILL_POSED_S1):
            inst = Instance(mat)
            assert sic_solve(inst).rho == pytest.approx(
                sic_bruteforce(inst).rho, abs=1e-8
            )

    def test_matches_oracle_on_random(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            m = int(rng.integers(2, 4))
            n = int(rng.integers(m + 2, 10))
            inst = random_instance(rng, n, m)
            assert sic_solve(inst).rho == pytest.approx(
                sic_bruteforce(inst).rho, abs=1e-8
            )

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng, 7, 2)
        r1, r2 = sic_solve(inst), sic_solve(inst)
        assert r1.rho == r2.rho
        assert np.array_equal(r1.center.coords, r2.center.coords)

    def test_tiny_cluster(self):
        rng = np.random.default_rng(5)
        base = np.array([1.0, 0, 0])
        pts = []
        for _ in range(6):
            t = rng.standard_normal(3)
            t -= (t @ base) * base
            t /= np.linalg.norm(t)
            ang = rng.uniform(0, 1e-3)
            pts.append(math.cos(ang) * base + math.sin(ang) * t)
        res = sic_solve(Instance(np.array(pts)))
        assert res.rho <= 1e-3
        assert res.cond == pytest.approx(1.0, abs=1e-5)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(6)
        inst = random_instance(rng, 7, 2)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        rotated = Instance(inst.matrix @ q.T)
        assert sic_solve(rotated).cond == pytest.approx(
            sic_solve(inst).cond, abs=1e-9, rel=1e-9
        )


class TestBatch:
    def test_matches_bruteforce(self):
        rng = np.random.default_rng(7)
        mats = rng.standard_normal((60, 6, 3))
        mats /= np.linalg.norm(mats, axis=2, keepdims=True)
        rho, centers, exact = sic_rho_batch(mats)
        assert exact.all()
        for i in range(60):
            ref = sic_bruteforce(Instance(mats[i]))
            assert rho[i] == pytest.approx(ref.rho, abs=1e-10)
            angles = np.arccos(np.clip(mats[i] @ centers[i], -1, 1))
            assert np.max(angles) <= rho[i] + 1e-9


class TestDerived:
    def test_cond_and_class_triple(self):
        cond, cls, dist = cond_and_class(Instance(np.vstack([SYM_TRIPLE, SYM_TRIPLE[:1]])))
        assert cond == pytest.approx(2.0, abs=1e-9)
        assert cls is FeasibilityClass.INFEASIBLE
        assert dist == pytest.approx(math.pi / 6, abs=1e-9)

    def test_cond_and_class_simplex(self):
        cond, cls, dist = cond_and_class(Instance(SIMPLEX_WITH_CENTER))
        assert cond == pytest.approx(math.sqrt(3), abs=1e-9)
        assert cls is FeasibilityClass.STRICTLY_FEASIBLE
        assert dist == pytest.approx(math.pi / 2 - math.acos(1 / math.sqrt(3)), abs=1e-9)

    def test_cond_and_class_ill_posed(self):
        cond, cls, dist = cond_and_class(Instance(ILL_POSED_S1))
        assert math.isinf(cond)
        assert cls is FeasibilityClass.ILL_POSED
        assert dist == pytest.approx(0.0, abs=1e-12)

    def test_profile_last_entry_consistent(self):
        rng = np.random.default_rng(8)
        inst = random_instance(rng, 8, 2)
        profile = prefix_cond_profile(inst)
        assert profile[0][0] == inst.m + 2
        assert profile[-1][0] == inst.n
        full = sic_bruteforce(inst)
        assert profile[-1][1] == pytest.approx(full.cond, abs=1e-9, rel=1e-9)
        assert profile[-1][2] is full.cls

    def test_profile_feasible_prefixes(self):
        # Points packed in a small cap: every prefix stays strictly feasible.
        rng = np.random.default_rng(9)
        base = np.array([1.0, 0, 0])
        pts = []
        for _ in range(7):
            t = rng.standard_normal(3)
            t -= (t @ base) * base
            t /= np.linalg.norm(t)
            ang = rng.uniform(0, 0.3)
            pts.append(math.cos(ang) * base + math.sin(ang) * t)
        profile = prefix_cond_profile(Instance(np.array(pts)))
        assert all(cls is FeasibilityClass.STRICTLY_FEASIBLE for _, _, cls in profile)

    def test_cond_from_rho_band(self):
        assert math.isinf(cond_from_rho(math.pi / 2 + 5e-9))
        assert math.isfinite(cond_from_rho(math.pi / 2 + 5e-8))
