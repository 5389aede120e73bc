import numpy as np
import pytest

from tiltstab import exprcore as ec
from tiltstab.exprcore import Add, Const, Mul, Neg, Pow, Var

X = ["x1", "x2"]


def central_gradient(f, x, h=1e-5):
    g = np.zeros(len(x))
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


class TestParse:
    def test_sum_of_squares(self):
        assert ec.parse_expr("x1^2 + x2^2", X) == Add(Pow(Var(0), 2), Pow(Var(1), 2))

    def test_product_with_power(self):
        assert ec.parse_expr("x1*x2^2", X) == Mul(Var(0), Pow(Var(1), 2))

    def test_unknown_identifier(self):
        with pytest.raises(ec.UnknownIdentifier) as info:
            ec.parse_expr("x1 - y", X)
        assert info.value.name == "y"
        assert info.value.offset == 5

    def test_power_binds_tighter_than_unary_minus(self):
        e = ec.parse_expr("-x1^2", X)
        assert e == Neg(Pow(Var(0), 2))
        assert ec.eval_expr(e, np.array([3.0, 0.0])) == -9.0

    def test_left_associative(self):
        e = ec.parse_expr("x1 - x2 - 1", X)
        assert ec.eval_expr(e, np.array([5.0, 2.0])) == 2.0
        e = ec.parse_expr("x1 / x2 / 2", X)
        assert ec.eval_expr(e, np.array([8.0, 2.0])) == 2.0

    def test_parentheses_and_numbers(self):
        e = ec.parse_expr("(x1 + 1.5e0) * 2", X)
        assert ec.eval_expr(e, np.array([0.5, 0.0])) == 4.0

    @pytest.mark.parametrize("text", ["x1^0.5", "x1^-1", "x1^x2"])
    def test_non_integer_exponent(self, text):
        with pytest.raises(ec.ParseError):
            ec.parse_expr(text, X)

    def test_fractional_power_is_its_own_error(self):
        with pytest.raises(ec.NonIntegerExponent):
            ec.parse_expr("x1^0.5", X)

    @pytest.mark.parametrize("text", ["", "x1 +", "(x1", "x1 x2", "x1 * * x2"])
    def test_syntax_errors(self, text):
        with pytest.raises(ec.ParseError):
            ec.parse_expr(text, X)

    def test_round_trip_text(self):
        for text in ["x2^2 + x1*x2 - x1", "-(x1 - x2)^3 / (1 + x2^2)", "x1*x2^2", "-x1"]:
            e = ec.parse_expr(text, X)
            assert ec.parse_expr(ec.to_text(e, X), X) == e


class TestEval:
    def test_values(self):
        assert ec.eval_expr(ec.parse_expr("x1^2+x2^2", X), np.array([1.0, 2.0])) == 5.0
        assert ec.eval_expr(ec.parse_expr("x1*x2^2", X), np.array([0.0, 0.5])) == 0.0
        assert ec.eval_expr(ec.parse_expr("x2^2+x1*x2-x1", X), np.array([0.0, 0.0])) == 0.0

    def test_division_near_zero(self):
        e = ec.parse_expr("1 / x1", X)
        with pytest.raises(ec.DivisionNearZero):
            ec.eval_expr(e, np.array([1e-13, 0.0]))
        with pytest.raises(ec.DivisionNearZero):
            ec.lambdify(e)(np.array([0.0, 0.0]))

    def test_lambdify_matches_eval(self, rng):
        e = ec.parse_expr("(x1 - 2*x2)^3 / (2 + x1^2) - x2", X)
        f = ec.lambdify(e)
        for x in rng.uniform(-2, 2, size=(20, 2)):
            assert f(x) == pytest.approx(ec.eval_expr(e, x), rel=1e-14)

    def test_vectorized_points(self):
        e = ec.parse_expr("x1*x2", X)
        pts = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        np.testing.assert_allclose(ec.eval_expr(e, pts), [4.0, 10.0, 18.0])


class TestDerivatives:
    def test_grad_product(self):
        g = ec.grad(ec.parse_expr("x1*x2^2", X), 2)
        x = np.array([1.5, -2.0])
        np.testing.assert_allclose(ec.eval_vector(g, x), [4.0, 2 * 1.5 * -2.0])

    def test_grad_objective_at_origin(self):
        g = ec.grad(ec.parse_expr("x2^2+x1*x2-x1", X), 2)
        np.testing.assert_array_equal(ec.eval_vector(g, np.zeros(2)), [-1.0, 0.0])

    def test_grad_affine(self):
        g = ec.grad(ec.parse_expr("x1-x2", X), 2)
        np.testing.assert_array_equal(ec.eval_vector(g, np.array([3.0, 7.0])), [1.0, -1.0])

    def test_hessian_vanishes(self):
        H = ec.hessian(ec.parse_expr("x1*x2^2", X), 2)
        np.testing.assert_array_equal(ec.eval_matrix(H, np.zeros(2)), np.zeros((2, 2)))

    def test_hessian_constant(self, rng):
        H = ec.hessian(ec.parse_expr("x2^2+x1*x2-x1", X), 2)
        for x in rng.uniform(-2, 2, size=(5, 2)):
            np.testing.assert_array_equal(ec.eval_matrix(H, x), [[0.0, 1.0], [1.0, 2.0]])

    def test_hessian_sum_of_squares(self):
        H = ec.hessian(ec.parse_expr("x1^2+x2^2", X), 2)
        np.testing.assert_array_equal(ec.eval_matrix(H, np.array([0.3, 0.1])), 2 * np.eye(2))

    def test_hessian_exactly_symmetric(self, rng):
        e = ec.parse_expr("x1^3*x2 / (1 + x2^2) - x1*x2^4", X)
        H = ec.hessian(e, 2)
        for x in rng.uniform(-2, 2, size=(10, 2)):
            M = ec.eval_matrix(H, x)
            assert np.array_equal(M, M.T)

    def test_hessian_is_gradient_of_gradient(self, rng):
        e = ec.parse_expr("(x1 - x2)^3 * x2 - x1 / (2 + x2^2)", X)
        g = ec.grad(e, 2)
        H = ec.hessian(e, 2)
        for x in rng.uniform(-2, 2, size=(10, 2)):
            for i in range(2):
                row = ec.eval_vector(ec.grad(g[i], 2), x)
                np.testing.assert_allclose(ec.eval_matrix(H, x)[i], row, atol=1e-12)

    def test_gradient_vs_finite_difference(self, rng):
        e = ec.parse_expr("x1^3*x2 - 2*x1*x2^2 + x2 / (3 + x1^2)", X)
        f = ec.lambdify(e)
        g = ec.grad(e, 2)
        for x in rng.uniform(-2, 2, size=(25, 2)):
            gs = ec.eval_vector(g, x)
            np.testing.assert_allclose(gs, central_gradient(f, x), rtol=0, atol=1e-6 * (1 + np.abs(gs).max()))

    def test_constant_folding_only_on_literals(self):
        assert ec.parse_expr("2*3 + x1", X) == Add(Const(6.0), Var(0))
