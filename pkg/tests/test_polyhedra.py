import numpy as np
import pytest
from scipy.optimize import linprog

from tiltstab.polyhedra import (
    EmptyPolyhedron,
    LPStatus,
    NegativeRadius,
    StdPolyhedron,
    TooManyColumns,
    contains,
    enumerate_vertices_rays,
    lp_solve,
    truncate_ball,
)

# {lam in R^3_+ : -lam1 + lam2 = 1}, the multiplier set of the degenerate-line example
LINE3 = StdPolyhedron([[-1.0, 1.0, 0.0]], [1.0])
DIAG2 = StdPolyhedron([[1.0, -1.0]], [0.0])
SIMPLEX2 = StdPolyhedron([[1.0, 1.0]], [1.0])


def rows_as_set(M, digits=9):
    return {tuple(np.round(r, digits) + 0.0) for r in M}


class TestLPSolve:
    def test_zero_cost_face_is_whole_set(self):
        out = lp_solve(LINE3, np.zeros(3))
        assert out.status is LPStatus.OPTIMAL
        assert out.value == 0.0
        assert rows_as_set(out.face) == {(0.0, 1.0, 0.0)}
        assert rows_as_set(out.face_rays) == {(1.0, 1.0, 0.0), (0.0, 0.0, 1.0)}

    def test_simplex_vertex(self):
        out = lp_solve(SIMPLEX2, [1.0, 0.0])
        assert out.status is LPStatus.OPTIMAL
        assert out.value == pytest.approx(0.0)
        np.testing.assert_allclose(out.vertex, [0.0, 1.0])

    def test_unbounded(self):
        assert lp_solve(DIAG2, [-1.0, -1.0]).status is LPStatus.UNBOUNDED

    def test_infeasible(self):
        P = StdPolyhedron([[1.0, 1.0]], [-1.0])
        assert lp_solve(P, [1.0, 0.0]).status is LPStatus.INFEASIBLE

    def test_face_vertices_attain_value(self):
        P = StdPolyhedron([[1.0, 1.0, 1.0]], [2.0])
        out = lp_solve(P, [1.0, 1.0, 3.0])
        assert out.value == pytest.approx(2.0)
        assert rows_as_set(out.face) == {(2.0, 0.0, 0.0), (0.0, 2.0, 0.0)}
        for v in out.face:
            assert abs(np.dot([1, 1, 3], v) - out.value) <= 1e-8 * (1 + abs(out.value))

    def test_against_linprog(self, rng):
        for _ in range(60):
            k, m = rng.integers(1, 4), rng.integers(2, 6)
            A = rng.integers(-3, 4, size=(k, m)).astype(float)
            b = rng.integers(-3, 4, size=k).astype(float)
            c = rng.integers(-3, 4, size=m).astype(float)
            ref = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * m, method="highs")
            out = lp_solve(StdPolyhedron(A, b), c, with_face=False)
            if ref.status == 2:
                assert out.status is LPStatus.INFEASIBLE
            elif ref.status == 3:
                assert out.status is LPStatus.UNBOUNDED
            else:
                assert out.status is LPStatus.OPTIMAL
                assert out.value == pytest.approx(ref.fun, abs=1e-8)

    def test_cost_dimension_checked(self):
        with pytest.raises(ValueError):
            lp_solve(SIMPLEX2, [1.0, 2.0, 3.0])


class TestEnumerate:
    def test_line3(self):
        dec = enumerate_vertices_rays(LINE3)
        assert rows_as_set(dec.vertices) == {(0.0, 1.0, 0.0)}
        assert rows_as_set(dec.rays) == {(1.0, 1.0, 0.0), (0.0, 0.0, 1.0)}

    def test_diag(self):
        dec = enumerate_vertices_rays(DIAG2)
        assert rows_as_set(dec.vertices) == {(0.0, 0.0)}
        assert rows_as_set(dec.rays) == {(1.0, 1.0)}

    def test_simplex(self):
        dec = enumerate_vertices_rays(SIMPLEX2)
        assert rows_as_set(dec.vertices) == {(1.0, 0.0), (0.0, 1.0)}
        assert dec.bounded

    def test_empty(self):
        with pytest.raises(EmptyPolyhedron):
            enumerate_vertices_rays(StdPolyhedron([[1.0, 1.0]], [-1.0]))

    def test_too_many_columns(self):
        with pytest.raises(TooManyColumns):
            enumerate_vertices_rays(StdPolyhedron(np.ones((1, 17)), [1.0]))

    def test_decomposition_invariants(self, rng):
        for _ in range(40):
            k, m = rng.integers(1, 4), rng.integers(2, 6)
            A = rng.integers(-3, 4, size=(k, m)).astype(float)
            b = rng.integers(-3, 4, size=k).astype(float)
            P = StdPolyhedron(A, b)
            try:
                dec = enumerate_vertices_rays(P)
            except EmptyPolyhedron:
                continue
            for v in dec.vertices:
                np.testing.assert_allclose(A @ v, b, atol=1e-9)
                assert v.min() >= -1e-9
                # at least rank(A) tight constraints among lam_i = 0 and the equality rows
                assert np.sum(np.abs(v) <= 1e-9) >= m - np.linalg.matrix_rank(A)
            for r in dec.rays:
                assert np.abs(A @ r).max() <= 1e-9
                assert r.min() >= -1e-9
                assert np.abs(r).max() == pytest.approx(1.0)
            V = dec.vertices
            for i in range(len(V)):
                for j in range(i + 1, len(V)):
                    assert np.abs(V[i] - V[j]).max() > 1e-7
            # convex combinations of vertices plus rays stay inside
            for _ in range(5):
                wts = rng.dirichlet(np.ones(len(V)))
                lam = wts @ V
                if len(dec.rays):
                    lam = lam + rng.uniform(0, 2, size=len(dec.rays)) @ dec.rays
                assert contains(P, lam, 1e-8)


class TestTruncate:
    def test_line3_box(self):
        dec = truncate_ball(LINE3, 2.0)
        assert rows_as_set(dec.vertices) == {(0.0, 1.0, 0.0), (1.0, 2.0, 0.0), (0.0, 1.0, 2.0), (1.0, 2.0, 2.0)}
        assert dec.bounded and dec.norm == "inf" and not dec.over_approximated

    def test_radius_zero(self):
        assert rows_as_set(truncate_ball(DIAG2, 0.0).vertices) == {(0.0, 0.0)}
        assert truncate_ball(LINE3, 0.0).empty

    def test_diag_unit(self):
        dec = truncate_ball(DIAG2, 1.0)
        assert rows_as_set(dec.vertices) == {(0.0, 0.0), (1.0, 1.0)}
        assert len(dec.rays) == 0

    def test_negative_radius(self):
        with pytest.raises(NegativeRadius):
            truncate_ball(DIAG2, -1.0)

    def test_two_norm_is_flagged(self):
        dec = truncate_ball(DIAG2, 1.0, norm="2")
        assert dec.over_approximated and dec.norm == "2"
        assert all(np.linalg.norm(v) <= 1.0 + 1e-12 for v in dec.vertices)


class TestContains:
    def test_membership(self):
        assert contains(LINE3, [0.0, 1.0, 0.0])
        assert not contains(LINE3, [1.0, 0.0, 0.0])
        assert contains(LINE3, [0.5, 1.5, 7.0])

    def test_decomposition_membership(self):
        dec = enumerate_vertices_rays(LINE3)
        assert contains(dec, [0.5, 1.5, 7.0])
        assert not contains(dec, [1.0, 0.0, 0.0])
