#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include <finapprox/hilbert.hpp>

#include "test_support.hpp"

using namespace finapprox;
using finapprox::testing::Rng;

namespace
{

Vector v2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

Matrix m2(double a, double b, double c, double d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

} // namespace

TEST(MakeProjector, CoordinateAxis)
{
    const std::vector<Vector> b{v2(1, 0)};
    const Projector p = make_projector(2, b);
    EXPECT_EQ(p.rank(), 1);
    EXPECT_LE((p.map() - m2(1, 0, 0, 0)).norm(), 1e-15);
}

TEST(MakeProjector, DiagonalDirection)
{
    // q = (1,1)/sqrt(2), map = q q^T
    const std::vector<Vector> b{v2(1, 1)};
    const Projector p = make_projector(2, b);
    EXPECT_EQ(p.rank(), 1);
    EXPECT_LE((p.map() - m2(0.5, 0.5, 0.5, 0.5)).norm(), 1e-15);
}

TEST(MakeProjector, EmptyBasisIsZero)
{
    const Projector p = make_projector(3, std::vector<Vector>{});
    EXPECT_EQ(p.rank(), 0);
    EXPECT_EQ(p.map().rows(), 3);
    EXPECT_EQ(p.map().norm(), 0.0);
}

TEST(MakeProjector, DropsDependentVectors)
{
    const std::vector<Vector> b{v2(1, 1), v2(2, 2), v2(0, 0)};
    const Projector p = make_projector(2, b);
    EXPECT_EQ(p.rank(), 1);
}

TEST(MakeProjector, RejectsNonFinite)
{
    const std::vector<Vector> b{v2(1, std::numeric_limits<double>::quiet_NaN())};
    EXPECT_THROW(make_projector(2, b), InputError);
}

TEST(MakeProjector, RejectsZeroRankWhenDemanded)
{
    const std::vector<Vector> b{v2(0, 0)};
    EXPECT_THROW(make_projector(2, b, 1e-10, true), InputError);
    EXPECT_NO_THROW(make_projector(2, b, 1e-10, false));
}

TEST(MakeProjector, RejectsDimensionMismatch)
{
    const std::vector<Vector> b{Vector::Ones(3)};
    EXPECT_THROW(make_projector(2, b), InputError);
}

TEST(ValidateLinearMap, Nilpotent)
{
    // P^2 = 0, so ||P^2 - P||_F = ||P||_F = 1.
    const ProjectorReport r = validate_linear_map(m2(0, 1, 0, 0));
    EXPECT_DOUBLE_EQ(r.idempotency_defect, 1.0);
    EXPECT_DOUBLE_EQ(r.symmetry_defect, std::sqrt(2.0));
    EXPECT_FALSE(r.is_orthogonal_projector);
}

TEST(ValidateLinearMap, CoordinateProjector)
{
    const ProjectorReport r = validate_linear_map(m2(1, 0, 0, 0));
    EXPECT_EQ(r.idempotency_defect, 0.0);
    EXPECT_EQ(r.symmetry_defect, 0.0);
    EXPECT_EQ(r.rank, 1);
    EXPECT_TRUE(r.is_orthogonal_projector);
}

TEST(ValidateLinearMap, HalfMatrix)
{
    const ProjectorReport r = validate_linear_map(m2(0.5, 0.5, 0.5, 0.5));
    EXPECT_EQ(r.idempotency_defect, 0.0);
    EXPECT_EQ(r.symmetry_defect, 0.0);
    EXPECT_EQ(r.rank, 1);
    EXPECT_TRUE(r.is_orthogonal_projector);
}

TEST(ValidateLinearMap, RejectsNonSquare)
{
    EXPECT_THROW(validate_linear_map(Matrix::Zero(2, 3)), InputError);
}

TEST(Gram, Examples)
{
    EXPECT_EQ(gram(Matrix::Identity(2, 2)), Matrix::Identity(2, 2));

    const Matrix e1 = Matrix(v2(1, 0));
    EXPECT_EQ(gram(e1), m2(1, 0, 0, 0));

    Matrix l(3, 2);
    l << 1, 0, 1, 1, 0, 2;
    Matrix expected(3, 3);
    expected << 1, 1, 0, 1, 2, 2, 0, 2, 4;
    EXPECT_EQ(gram(l), expected);
}

TEST(GramRepresentable, RankExceedsDimU)
{
    const Matrix g = Vector(Eigen::Vector3d(1, 1, 0)).asDiagonal();
    const auto r = gram_representable(g, 1);
    EXPECT_FALSE(r.representable);
    EXPECT_EQ(r.rank, 2);
    EXPECT_FALSE(r.factor.has_value());
}

TEST(GramRepresentable, SpectralFactor)
{
    const Matrix g = Vector(Eigen::Vector3d(1, 1, 0)).asDiagonal();
    const auto r = gram_representable(g, 2);
    ASSERT_TRUE(r.representable);
    ASSERT_TRUE(r.factor.has_value());
    EXPECT_LE((*r.factor - Matrix::Identity(3, 2)).norm(), 1e-15);
    EXPECT_LE((*r.factor * r.factor->transpose() - g).norm(), 1e-15);
}

TEST(GramRepresentable, ZeroOperator)
{
    const auto r = gram_representable(Matrix::Zero(3, 3), 1);
    ASSERT_TRUE(r.representable);
    EXPECT_EQ(r.rank, 0);
    EXPECT_EQ(r.factor->norm(), 0.0);
    EXPECT_EQ(r.factor->cols(), 1);
}

TEST(GramRepresentable, RejectsIndefinite)
{
    const auto r = gram_representable(m2(1, 0, 0, -1), 2);
    EXPECT_FALSE(r.representable);
    EXPECT_THROW(gram_representable(Matrix::Zero(2, 3), 1), InputError);
}

TEST(MakeProblem, IdentityData)
{
    const std::vector<Vector> e1{v2(1, 0)};
    ProblemData d;
    d.L = Matrix::Identity(2, 2);
    d.constraint = ConstraintMap::projector(make_projector(2, e1));
    d.h = v2(1, 1);
    const ProblemInstance p = make_problem(d);
    EXPECT_EQ(p.gamma(), Matrix::Identity(2, 2));
    EXPECT_TRUE(p.representable());
    EXPECT_TRUE(p.constraint().is_projector());
    EXPECT_EQ(p.dim_u(), 2);
}

TEST(MakeProblem, GammaOnlyNotRepresentable)
{
    const std::vector<Vector> e1{Vector::Unit(3, 0)};
    ProblemData d;
    d.gamma = Matrix(Vector(Eigen::Vector3d(1, 1, 0)).asDiagonal());
    d.dim_u = 1;
    d.constraint = ConstraintMap::projector(make_projector(3, e1));
    d.h = Vector::Ones(3);
    const ProblemInstance p = make_problem(d);
    EXPECT_FALSE(p.representable());
    EXPECT_FALSE(p.has_L());
}

TEST(MakeProblem, GramInconsistency)
{
    const std::vector<Vector> e1{v2(1, 0)};
    ProblemData d;
    d.L = Matrix::Identity(2, 2);
    d.gamma = 2.0 * Matrix::Identity(2, 2);
    d.constraint = ConstraintMap::projector(make_projector(2, e1));
    d.h = v2(1, 1);
    try
    {
        make_problem(d);
        FAIL() << "expected InputError";
    }
    catch (const InputError& e)
    {
        EXPECT_NE(std::string(e.what()).find("gram_defect"), std::string::npos);
    }
}

TEST(MakeProblem, RejectsAsymmetricGamma)
{
    ProblemData d;
    d.gamma = m2(1, 0.5, 0, 1);
    d.constraint = ConstraintMap::raw(Matrix::Zero(2, 2));
    d.h = v2(1, 1);
    try
    {
        make_problem(d);
        FAIL() << "expected InputError";
    }
    catch (const InputError& e)
    {
        EXPECT_NE(std::string(e.what()).find("symmetry"), std::string::npos);
    }
}

TEST(MakeProblem, RejectsIndefiniteGamma)
{
    ProblemData d;
    d.gamma = m2(1, 0, 0, -0.5);
    d.constraint = ConstraintMap::raw(Matrix::Zero(2, 2));
    d.h = v2(1, 1);
    EXPECT_THROW(make_problem(d), InputError);
}

TEST(MakeProblem, RejectsShapeMismatch)
{
    ProblemData d;
    d.L = Matrix::Identity(3, 3);
    d.constraint = ConstraintMap::raw(Matrix::Zero(2, 2));
    d.h = v2(1, 1);
    EXPECT_THROW(make_problem(d), InputError);

    ProblemData none;
    none.constraint = ConstraintMap::raw(Matrix::Zero(2, 2));
    none.h = v2(1, 1);
    EXPECT_THROW(make_problem(none), InputError);
}

TEST(MakeProblem, RawNonProjectorIsFlagged)
{
    ProblemData d;
    d.L = Matrix::Identity(2, 2);
    d.constraint = ConstraintMap::raw(m2(0, 1, 0, 0));
    d.h = v2(0, 1);
    const ProblemInstance p = make_problem(d);
    EXPECT_TRUE(p.constraint().is_raw());
    EXPECT_FALSE(p.constraint().is_projector());
}

// Property: every projector satisfies the orthonormality and idempotency
// bounds, and the map depends only on the span.
TEST(ProjectorProperty, InvariantsAndSpanInvariance)
{
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial)
    {
        const Index n = finapprox::testing::uniform_int(rng, 1, 10);
        const Index k = finapprox::testing::uniform_int(rng, 0, static_cast<int>(n));
        const Matrix a = finapprox::testing::random_matrix(rng, n, k);
        const Projector p = make_projector_from_columns(a);
        ASSERT_EQ(p.rank(), k);
        EXPECT_LE((p.basis().transpose() * p.basis() - Matrix::Identity(k, k)).norm(), 1e-10);
        EXPECT_LE((p.map() * p.map() - p.map()).norm(), 1e-9);

        // Another basis of the same span: a * (random invertible mixing).
        Matrix mix = finapprox::testing::random_matrix(rng, k, k) + 3.0 * Matrix::Identity(k, k);
        const Projector q = make_projector_from_columns(a * mix);
        EXPECT_LE((p.map() - q.map()).norm(), 1e-9) << "trial " << trial;
    }
}

TEST(GramProperty, SymmetricPsdAndRepresentable)
{
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial)
    {
        const Index n = finapprox::testing::uniform_int(rng, 1, 10);
        const Index m = finapprox::testing::uniform_int(rng, 1, 10);
        const Matrix l = finapprox::testing::random_matrix(rng, n, m);
        const Matrix g = gram(l);
        EXPECT_EQ((g - g.transpose()).norm(), 0.0);

        for (int probe = 0; probe < 5; ++probe)
        {
            const Vector x = finapprox::testing::random_vector(rng, n);
            EXPECT_GE(x.dot(g * x), -1e-10 * x.squaredNorm() * rel_scale(g.norm()));
        }

        const auto r = gram_representable(g, m);
        ASSERT_TRUE(r.representable) << r.reason;
        const Matrix& f = *r.factor;
        EXPECT_EQ(f.cols(), m);
        EXPECT_LE((f * f.transpose() - g).norm(), 1e-10 * rel_scale(g.norm()));
    }
}
