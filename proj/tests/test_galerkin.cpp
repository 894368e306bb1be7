#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/LU>
#include <Eigen/QR>
#include <gtest/gtest.h>

#include <finapprox/galerkin.hpp>
#include <finapprox/scenarios.hpp>

#include "test_support.hpp"

using namespace finapprox;
using finapprox::testing::Rng;

namespace
{

/// Orthogonal projector onto the column span via Householder QR, kept apart
/// from the library's Gram-Schmidt.
Matrix qr_projector(const Matrix& cols)
{
    const Eigen::HouseholderQR<Matrix> qr(cols);
    const Matrix q = qr.householderQ() * Matrix::Identity(cols.rows(), cols.cols());
    return q * q.transpose();
}

Matrix stack(const std::vector<Vector>& vs, Index dim)
{
    Matrix m(dim, static_cast<Index>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j)
    {
        m.col(static_cast<Index>(j)) = vs[j];
    }
    return m;
}

ProblemInstance identity_problem(const Vector& h, const Matrix& l)
{
    ProblemData d;
    d.L = l;
    d.constraint = ConstraintMap::projector(make_projector(h.size(), std::vector<Vector>{}));
    d.h = h;
    return make_problem(d);
}

} // namespace

TEST(FamilyProjector, CanonicalLevels)
{
    const auto f = canonical_family(3);
    EXPECT_EQ(f.max_n, 3);
    const Projector p = family_projector(f, 2);
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 0) = expected(1, 1) = 1.0;
    EXPECT_EQ(p.map(), expected);
    EXPECT_EQ(family_projector(f, 0).rank(), 0);
    EXPECT_EQ(family_projector(f, 0).map().norm(), 0.0);
}

TEST(FamilyProjector, RejectsOutOfRangeLevel)
{
    const auto f = canonical_family(3);
    EXPECT_THROW(family_projector(f, 4), InputError);
    EXPECT_THROW(family_projector(f, -1), InputError);
    EXPECT_THROW(canonical_family(3, 4), InputError);
}

TEST(FamilyProjector, DependentLevelNamesTheLevel)
{
    SubspaceFamily f;
    f.dim = 3;
    f.max_n = 2;
    f.description = "repeated";
    f.level = [](int n) {
        std::vector<Vector> vs(static_cast<std::size_t>(n), Vector::Unit(3, 0));
        return vs;
    };
    try
    {
        family_projector(f, 2);
        FAIL() << "expected InputError";
    }
    catch (const InputError& e)
    {
        EXPECT_NE(std::string(e.what()).find("level 2"), std::string::npos);
    }
}

TEST(SineFamily, SmallGrids)
{
    const auto f4 = sine_family(4);
    EXPECT_EQ(f4.max_n, 1);
    const Projector p = family_projector(f4, 1);
    EXPECT_EQ(p.rank(), 2);
    EXPECT_LE((p.basis().transpose() * p.basis() - Matrix::Identity(2, 2)).norm(), 1e-10);
    EXPECT_THROW(family_projector(f4, 2), InputError);
    EXPECT_THROW(sine_family(3), InputError);

    const auto f8 = sine_family(8);
    const auto vs = f8.level(1);
    ASSERT_EQ(vs.size(), 2u);
    // Midpoint rule: the samples of 1 and sin(2 pi x) are orthogonal, with
    // discrete norms 1 and 1/sqrt(2).
    const Matrix g = stack(vs, 8).transpose() * stack(vs, 8);
    EXPECT_NEAR(g(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(g(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(vs[0].norm(), 1.0, 1e-15);
    const Matrix q = family_projector(f8, 1).basis();
    EXPECT_LE((q.transpose() * q - Matrix::Identity(2, 2)).norm(), 1e-10);
}

TEST(SineFamily, FinestLevelIsFullRank)
{
    for (Index m : {4, 5, 16, 64, 256})
    {
        const auto f = sine_family(m);
        const Projector p = family_projector(f, f.max_n);
        EXPECT_EQ(p.rank(), f.max_n + 1);
        const Matrix oracle = qr_projector(stack(f.level(f.max_n), m));
        EXPECT_LE((p.map() - oracle).norm(), 1e-10) << "m = " << m;
    }
}

TEST(StrongConvergenceProbe, CanonicalExamples)
{
    const auto f = canonical_family(3, 2);
    const std::vector<Index> idx{0, 1};
    const Projector target = coordinate_projector(3, idx);
    const std::vector<Vector> probes{Vector::Unit(3, 1), Vector::Unit(3, 2), Vector::Unit(3, 0)};
    const auto t = strong_convergence_probe(f, target, probes);
    ASSERT_EQ(t.defects.size(), 3u);
    EXPECT_EQ(t.defects[0], (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(t.defects[1], (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(t.defects[2], (std::vector<double>{0.0, 0.0}));

    EXPECT_THROW(strong_convergence_probe(f, coordinate_projector(4, idx), probes), InputError);
    EXPECT_THROW(strong_convergence_probe(f, target, {Vector::Ones(2)}), InputError);
}

TEST(StrongConvergenceProbe, NonIncreasingForNestedLevels)
{
    const auto f = sine_family(64);
    const Projector target = family_projector(f, f.max_n);
    Rng rng(41);
    std::vector<Vector> probes;
    for (int i = 0; i < 10; ++i)
    {
        probes.push_back(finapprox::testing::random_vector(rng, 64));
    }
    const auto t = strong_convergence_probe(f, target, probes);
    for (std::size_t p = 0; p < probes.size(); ++p)
    {
        const auto& d = t.defects[p];
        for (std::size_t n = 1; n < d.size(); ++n)
        {
            EXPECT_LE(d[n], d[n - 1] + 1e-12);
        }
        EXPECT_LE(d.back(), 1e-12);
        // Pythagoras: ||pi_n x - pi x||^2 = ||pi x||^2 - ||pi_n x||^2.
        const int n = 5;
        const Matrix pn = qr_projector(stack(f.level(n), 64));
        const double expect =
            std::sqrt(std::max(0.0, target.apply(probes[p]).squaredNorm() -
                                        (pn * probes[p]).squaredNorm()));
        EXPECT_NEAR(d[n - 1], expect, 1e-10);
    }
}

TEST(DiagonalSchedule, Steps)
{
    const auto s = diagonal_schedule(3);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].n, 1);
    EXPECT_EQ(s[0].alpha, 0.1);
    EXPECT_EQ(s[2].n, 3);
    EXPECT_EQ(s[2].alpha, 1e-3);
}

TEST(GalerkinSweep, CanonicalClosedForm)
{
    const Vector h = Vector::Ones(4);
    const auto p = identity_problem(h, Matrix::Identity(4, 4));
    const auto f = canonical_family(4);
    const std::vector<GalerkinStep> steps{{1, 1e-1}, {2, 1e-2}, {3, 1e-3}};
    const auto rep = galerkin_sweep(p, f, steps);
    ASSERT_EQ(rep.records.size(), 3u);
    for (const auto& r : rep.records)
    {
        ASSERT_FALSE(r.singular);
        const Matrix pn = qr_projector(Matrix::Identity(4, r.n));
        const double expect = r.alpha / (1 + r.alpha) * (h - pn * h).norm();
        EXPECT_NEAR(r.norm_residual, expect, 1e-15);
        EXPECT_LE(r.norm_constraint_residual_n, 1e-15);
    }
}

TEST(GalerkinSweep, ZeroRightHandSide)
{
    const auto p = identity_problem(Vector::Zero(4), Matrix::Identity(4, 4));
    const auto rep = galerkin_sweep(p, canonical_family(4), diagonal_schedule(4));
    for (const auto& r : rep.records)
    {
        EXPECT_EQ(r.norm_residual, 0.0);
        EXPECT_EQ(r.norm_constraint_residual_n, 0.0);
    }
}

TEST(GalerkinSweep, RejectsBadInput)
{
    const auto p = identity_problem(Vector::Ones(4), Matrix::Identity(4, 4));
    EXPECT_THROW(galerkin_sweep(p, canonical_family(4), {}), InputError);
    EXPECT_THROW(galerkin_sweep(p, canonical_family(5), diagonal_schedule(2)), InputError);
    EXPECT_THROW(galerkin_sweep(p, canonical_family(4), diagonal_schedule(5)), InputError);
}

// The library path against an independent dense solve at full grid resolution.
TEST(GalerkinSweep, FunctionSpaceMatchesDenseSolve)
{
    const Scenario sc = build_scenario("function_space_galerkin");
    const Index m = sc.problem.dim_h();
    const Vector& h = sc.problem.h();
    std::vector<GalerkinStep> steps;
    for (int k = 1; k <= 16; ++k)
    {
        steps.push_back({k, std::pow(10.0, -std::min(k, 4))});
    }
    const auto rep = galerkin_sweep(sc.problem, *sc.family, steps, sc.target);
    for (const auto& r : rep.records)
    {
        ASSERT_FALSE(r.singular);
        const Matrix pn = qr_projector(stack(sc.family->level(r.n), m));
        const Matrix t = r.alpha * (Matrix::Identity(m, m) - pn) + Matrix::Identity(m, m);
        const Vector z = t.partialPivLu().solve(h);
        EXPECT_NEAR(r.norm_residual, (z - h).norm(), 1e-12);
        EXPECT_LE(r.norm_constraint_residual_n, 1e-9 * h.norm());
    }
    EXPECT_LE(rep.records.back().norm_residual, 1e-3);
}

// Per-level identities on random instances: exact constraint under pi_n and
// ||L u - h|| = ||(I - pi_n) y||.
TEST(GalerkinProperty, PerLevelIdentities)
{
    Rng rng(42);
    for (int trial = 0; trial < 30; ++trial)
    {
        const Index m = finapprox::testing::uniform_int(rng, 8, 32);
        const Matrix l = finapprox::testing::random_operator(rng, m, m, m);
        const auto p = identity_problem(finapprox::testing::random_vector(rng, m), l);
        const auto f = sine_family(m);
        const int count = std::min(f.max_n, 6);
        const auto rep = galerkin_sweep(p, f, diagonal_schedule(count), std::nullopt, 2);
        for (const auto& r : rep.records)
        {
            ASSERT_FALSE(r.singular);
            EXPECT_LE(r.norm_constraint_residual_n, 1e-9 * rep.h_norm);
            EXPECT_NEAR(r.norm_residual, r.norm_complement_y, 1e-9 * rep.h_norm);
            EXPECT_FALSE(r.norm_constraint_residual_target.has_value());
        }
    }
}

TEST(GalerkinProperty, DiagonalLimitForPositiveGamma)
{
    Rng rng(43);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Index m = finapprox::testing::uniform_int(rng, 3, 10);
        const Matrix l = finapprox::testing::random_operator(rng, m, m, m);
        const auto p = identity_problem(finapprox::testing::random_vector(rng, m), l);
        const auto rep = galerkin_sweep(p, canonical_family(m), diagonal_schedule(static_cast<int>(m)));
        EXPECT_LE(rep.records.back().norm_residual, 1e-3);
    }
}

TEST(InnerLimitProxy, SmallestAlphaPerLevel)
{
    const auto p = identity_problem(Vector::Ones(4), Matrix::Identity(4, 4));
    const std::vector<GalerkinStep> steps{{1, 0.1}, {1, 0.01}, {2, 0.1}, {2, 0.001}};
    const auto rep = galerkin_sweep(p, canonical_family(4), steps);
    const auto proxy = inner_limit_proxy(rep);
    ASSERT_EQ(proxy.size(), 2u);
    EXPECT_EQ(proxy[0].n, 1);
    EXPECT_EQ(proxy[0].alpha, 0.01);
    EXPECT_EQ(proxy[1].n, 2);
    EXPECT_EQ(proxy[1].alpha, 0.001);
}
