#include <gtest/gtest.h>

#include <cmath>

#include "orthokalman/matrix.hpp"
#include "orthokalman/random.hpp"

using namespace orthokalman;

namespace {

double relative(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

Matrix random_upper(Rng& rng, Index n) {
    Matrix u = rng.normal_matrix(n, n).triangularView<Eigen::Upper>();
    for (Index i = 0; i < n; ++i) {
        u(i, i) = 1.0 + std::abs(u(i, i));
    }
    return u;
}

}  // namespace

TEST(Triangularize, IdentityStaysSignDiagonal) {
    Vector rhs(2);
    rhs << 1.0, 2.0;
    const Triangularized t = triangularize(Matrix::Identity(2, 2), {}, rhs);
    EXPECT_NEAR(std::abs(t.r_top(0, 0)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(t.r_top(1, 1)), 1.0, 1e-15);
    EXPECT_EQ(t.r_top(1, 0), 0.0);
    EXPECT_NEAR(std::abs(t.rhs(0)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(t.rhs(1)), 2.0, 1e-15);
    EXPECT_EQ(t.r_residual.rows(), 0);
}

TEST(Triangularize, TallColumnCollapsesToItsNorm) {
    Matrix a(2, 1);
    a << 3.0, 4.0;
    Vector rhs(2);
    rhs << 3.0, 4.0;
    const Triangularized t = triangularize(a, {}, rhs);
    ASSERT_EQ(t.r_top.rows(), 1);
    EXPECT_NEAR(std::abs(t.r_top(0, 0)), 5.0, 1e-14);
    EXPECT_NEAR(t.rhs(0), t.r_top(0, 0), 1e-14);
    EXPECT_NEAR(t.rhs(1), 0.0, 1e-14);
    EXPECT_EQ(t.r_residual.rows(), 1);
}

TEST(Triangularize, PreservesGramMatricesOfAllBlocks) {
    Rng rng(5);
    const Matrix a = rng.normal_matrix(5, 3);
    const Matrix b = rng.normal_matrix(5, 2);
    const Vector y = rng.normal_vector(5);
    const Triangularized t = triangularize(a, {b}, y);

    EXPECT_TRUE(t.r_top.isUpperTriangular(0.0));
    EXPECT_LT(relative(t.r_top.transpose() * t.r_top, a.transpose() * a), 1e-12);
    const Matrix& tb = t.companions.front();
    EXPECT_LT(relative(tb.transpose() * tb, b.transpose() * b), 1e-12);
    EXPECT_NEAR(t.rhs.norm(), y.norm(), 1e-12 * y.norm());

    // The same transformation was applied to every block.
    Matrix joined(5, 6);
    joined << a, b, y;
    Matrix out(5, 6);
    Matrix top = Matrix::Zero(5, 3);
    top.topRows(3) = t.r_top;
    out << top, tb, t.rhs;
    EXPECT_LT(relative(out.transpose() * out, joined.transpose() * joined), 1e-12);
}

TEST(Triangularize, WideBlockKeepsAllRows) {
    Rng rng(9);
    const Matrix a = rng.normal_matrix(2, 4);
    const Triangularized t = triangularize(a);
    EXPECT_EQ(t.r_top.rows(), 2);
    EXPECT_EQ(t.r_top.cols(), 4);
    EXPECT_EQ(t.r_top(1, 0), 0.0);
    EXPECT_LT(relative(t.r_top.transpose() * t.r_top, a.transpose() * a), 1e-12);
}

TEST(Triangularize, RejectsMismatchedBlocks) {
    EXPECT_THROW(triangularize(Matrix::Identity(3, 2), {Matrix::Zero(2, 1)}), DimensionError);
    EXPECT_THROW(triangularize(Matrix::Identity(3, 2), {}, Vector::Zero(2)), DimensionError);
    EXPECT_THROW(triangularize(Matrix(0, 2)), DimensionError);
}

TEST(Cholesky, Identity) {
    EXPECT_EQ(cholesky_upper(Matrix::Identity(3, 3)), Matrix(Matrix::Identity(3, 3)));
}

TEST(Cholesky, Diagonal) {
    Matrix a(2, 2);
    a << 4.0, 0.0, 0.0, 9.0;
    Matrix expected(2, 2);
    expected << 2.0, 0.0, 0.0, 3.0;
    EXPECT_EQ(cholesky_upper(a), expected);
}

TEST(Cholesky, Reconstructs) {
    Matrix a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const Matrix u = cholesky_upper(a);
    EXPECT_TRUE(u.isUpperTriangular(0.0));
    EXPECT_LT((u.transpose() * u - a).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Cholesky, RoundTripOfRandomFactors) {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix u = random_upper(rng, 1 + trial % 6);
        EXPECT_LT(relative(cholesky_upper(u.transpose() * u), u), 1e-12);
    }
}

TEST(Cholesky, NamesTheFailingPivot) {
    Matrix a(3, 3);
    a << 1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0;
    try {
        cholesky_upper(a);
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2);
    }
    EXPECT_THROW(cholesky_upper(Matrix::Zero(2, 3)), DimensionError);
}

TEST(Solve, Identity) {
    Vector rhs(2);
    rhs << 7.0, 8.0;
    EXPECT_EQ(solve_upper_triangular(Matrix::Identity(2, 2), rhs), rhs);
}

TEST(Solve, HandBackSubstitution) {
    Matrix u(2, 2);
    u << 2.0, 1.0, 0.0, 4.0;
    Vector rhs(2);
    rhs << 4.0, 8.0;
    const Vector x = solve_upper_triangular(u, rhs);
    EXPECT_DOUBLE_EQ(x(0), 1.0);
    EXPECT_DOUBLE_EQ(x(1), 2.0);
}

TEST(Solve, SmallResidualAndRoundTrip) {
    Rng rng(33);
    const Matrix u = random_upper(rng, 6);
    const Vector rhs = rng.normal_vector(6);
    const Vector x = solve_upper_triangular(u, rhs);
    EXPECT_LE((u * x - rhs).norm() / rhs.norm(), 1e-13);

    const Vector truth = rng.normal_vector(6);
    EXPECT_LE((solve_upper_triangular(u, Vector(u * truth)) - truth).norm() / truth.norm(), 1e-12);
    const Vector xt = solve_upper_transposed(u, rhs);
    EXPECT_LE((u.transpose() * xt - rhs).norm() / rhs.norm(), 1e-13);

    const Matrix b = rng.normal_matrix(6, 3);
    EXPECT_LT(relative(u * solve_upper_triangular(u, b), b), 1e-13);
}

TEST(Solve, ZeroPivotIsSingular) {
    Matrix u(3, 3);
    u << 1.0, 2.0, 3.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0;
    try {
        solve_upper_triangular(u, Vector(Vector::Ones(3)));
        FAIL() << "expected SingularMatrix";
    } catch (const SingularMatrix& e) {
        EXPECT_EQ(e.index(), 1);
    }
    EXPECT_THROW(solve_upper_triangular(Matrix::Identity(2, 2), Vector(Vector::Ones(3))),
                 DimensionError);
}

TEST(StackRows, ConcatenatesVertically) {
    const Matrix a = Matrix::Ones(1, 2);
    const Matrix b = Matrix::Zero(2, 2);
    const Matrix s = stack_rows(a, b);
    EXPECT_EQ(s.rows(), 3);
    EXPECT_EQ(s(0, 1), 1.0);
    EXPECT_EQ(s(2, 1), 0.0);
    EXPECT_THROW(stack_rows(a, Matrix::Zero(1, 3)), DimensionError);
}

TEST(Orthogonal, IsUnitary) {
    Rng rng(1);
    for (Index n : {1, 2, 6, 48}) {
        const Matrix q = rng.orthogonal(n);
        EXPECT_LE((q.transpose() * q - Matrix::Identity(n, n)).norm(), 1e-12) << n;
    }
}
