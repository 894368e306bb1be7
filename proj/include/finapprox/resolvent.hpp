///
/// \file resolvent.hpp
///
/// Assembly and solution of the regularized system
///
///   T_alpha z = h,   T_alpha = alpha (I - P) + Gamma,
///
/// together with the canonical control u = L^T z and the derived vectors
/// Lu = Gamma z, y = alpha z. A singular T_alpha is an analysis outcome, not
/// an error: solve_resolvent() then returns a SingularReport carrying a unit
/// kernel vector.
///
#ifndef FINAPPROX_RESOLVENT_HPP
#define FINAPPROX_RESOLVENT_HPP

#include <optional>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <finapprox/core.hpp>
#include <finapprox/hilbert.hpp>

namespace finapprox
{

struct ResolventSolution
{
    double alpha = 0.0;
    Vector z;                  ///< T_alpha^{-1} h
    std::optional<Vector> u;   ///< L^T z, only when L is known
    Vector Lu;                 ///< Gamma z
    Vector y;                  ///< alpha z
    Vector residual;           ///< Lu - h
    Vector constraint_residual; ///< P (Lu - h)
    double sigma_ratio = 0.0;  ///< sigma_min / sigma_max of T_alpha
    bool symmetric_path = false;
};

struct SingularReport
{
    double alpha = 0.0;
    Vector kernel_vector;       ///< unit norm, T_alpha * kernel_vector ~ 0
    double smallest_eigenvalue = 0.0;
    Index  kernel_dimension = 0;
};

using SolveOutcome = std::variant<ResolventSolution, SingularReport>;

inline bool is_singular(const SolveOutcome& o)
{
    return std::holds_alternative<SingularReport>(o);
}

/// alpha (I - P) + Gamma.
inline Matrix assemble_T(double alpha, const ProblemInstance& problem)
{
    if (!(alpha > 0.0))
    {
        throw InputError("alpha must be positive");
    }
    const Index n = problem.dim_h();
    return alpha * (Matrix::Identity(n, n) - problem.constraint().map()) + problem.gamma();
}

namespace detail
{

/// Unit vector in span(kernel) best aligned with h; falls back to the first
/// kernel column when h has no component there.
inline Vector pick_kernel_vector(const Matrix& kernel, const Vector& h)
{
    Vector w = kernel * (kernel.transpose() * h);
    if (w.norm() > 1e-8 * h.norm() && w.norm() > 0.0)
    {
        return w / w.norm();
    }
    return kernel.col(0);
}

///
/// Mixed-precision iterative refinement: residuals and the accumulated
/// solution are kept in long double, corrections come from the double
/// factorization. Returns the refined solution in long double.
///
template <typename Factorization>
LongVector refine(const Factorization& fact, const Matrix& t, const Vector& h, int max_steps = 4)
{
    const LongMatrix tl = t.cast<long double>();
    const LongVector hl = h.cast<long double>();
    LongVector z = fact.solve(h).template cast<long double>();
    for (int step = 0; step < max_steps; ++step)
    {
        const LongVector r = hl - tl * z;
        const Vector d = fact.solve(Vector(r.cast<double>()));
        z += d.cast<long double>();
        if (d.norm() <= 1e-17 * static_cast<double>(z.norm()))
        {
            break;
        }
    }
    return z;
}

} // namespace detail

///
/// Solve T_alpha z = h. The spectrum of T_alpha is inspected first (a
/// symmetric eigensolve for projector constraints, an SVD for raw maps) and
/// T_alpha is declared singular when sigma_min <= tol.singular * sigma_max.
/// The solve itself runs in the eigenbasis of Gamma with partial-pivot LU and
/// long-double refinement.
///
inline SolveOutcome solve_resolvent(double alpha, const ProblemInstance& problem)
{
    const Matrix t = assemble_T(alpha, problem);
    const Vector& h = problem.h();
    const Index n = t.rows();
    const double singular_tol = problem.tolerances().singular;
    const bool symmetric = problem.constraint().is_projector();

    Vector sv;
    Matrix vectors;
    Vector signed_values;
    if (symmetric)
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(t));
        signed_values = es.eigenvalues();
        sv = signed_values.cwiseAbs();
        vectors = es.eigenvectors();
    }
    else
    {
        Eigen::BDCSVD<Matrix> svd(t, Eigen::ComputeFullV);
        sv = svd.singularValues();
        signed_values = sv;
        vectors = svd.matrixV();
    }
    const double smax = sv.maxCoeff();
    const double smin = sv.minCoeff();

    if (smax == 0.0 || smin <= singular_tol * smax)
    {
        const double cut = singular_tol * smax;
        Matrix kernel(n, n);
        Index k = 0;
        Index imin = 0;
        sv.minCoeff(&imin);
        kernel.col(k++) = vectors.col(imin);
        for (Index i = 0; i < n; ++i)
        {
            if (i != imin && sv(i) <= cut)
            {
                kernel.col(k++) = vectors.col(i);
            }
        }
        SingularReport rep;
        rep.alpha = alpha;
        rep.kernel_vector = detail::pick_kernel_vector(kernel.leftCols(k), h);
        rep.smallest_eigenvalue = signed_values(imin);
        rep.kernel_dimension = k;
        return rep;
    }

    // Work in the eigenbasis of Gamma. Eigenvalues at or below tol.rank are
    // exact zeros there, and the kernel block is solved for c = alpha z_K, so
    // the unknowns stay O(||h||) even when z grows like 1/alpha:
    //
    //   [ Lambda_R + alpha B_RR   B_RK ] [a]   [Q_R^T h]
    //   [ alpha B_KR              B_KK ] [c] = [Q_K^T h],   B = Q^T (I - P) Q,
    //
    // with z = Q_R a + Q_K c / alpha, Lu = Q_R Lambda_R a, y = alpha Q_R a + Q_K c.
    const Eigen::SelfAdjointEigenSolver<Matrix> ges(symmetrize(problem.gamma()));
    const Vector& lambda = ges.eigenvalues();
    const double lmax = n > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0;
    const double cut = problem.tolerances().rank * lmax;
    std::vector<Index> range_idx, kernel_idx;
    for (Index i = n - 1; i >= 0; --i)
    {
        (lambda(i) > cut ? range_idx : kernel_idx).push_back(i);
    }
    const auto nr = static_cast<Index>(range_idx.size());
    const auto nk = static_cast<Index>(kernel_idx.size());
    Matrix q(n, n);
    Vector lam_r(nr);
    for (Index j = 0; j < nr; ++j)
    {
        q.col(j) = ges.eigenvectors().col(range_idx[static_cast<std::size_t>(j)]);
        lam_r(j) = lambda(range_idx[static_cast<std::size_t>(j)]);
    }
    for (Index j = 0; j < nk; ++j)
    {
        q.col(nr + j) = ges.eigenvectors().col(kernel_idx[static_cast<std::size_t>(j)]);
    }

    const Matrix b = q.transpose() * (Matrix::Identity(n, n) - problem.constraint().map()) * q;
    Matrix m(n, n);
    m.topLeftCorner(nr, nr) = alpha * b.topLeftCorner(nr, nr);
    m.topLeftCorner(nr, nr).diagonal() += lam_r;
    m.topRightCorner(nr, nk) = b.topRightCorner(nr, nk);
    m.bottomLeftCorner(nk, nr) = alpha * b.bottomLeftCorner(nk, nr);
    m.bottomRightCorner(nk, nk) = b.bottomRightCorner(nk, nk);
    const Vector rhs = q.transpose() * h;

    const Eigen::PartialPivLU<Matrix> lu(m);
    const LongVector x = detail::refine(lu, m, rhs);
    const LongMatrix ql = q.cast<long double>();
    const LongVector a = x.head(nr);
    const LongVector c = x.tail(nk);
    const long double al = alpha;

    const LongVector lul = ql.leftCols(nr) * (lam_r.cast<long double>().asDiagonal() * a);
    const LongVector yl = al * (ql.leftCols(nr) * a) + ql.rightCols(nk) * c;
    const LongVector zl = ql.leftCols(nr) * a + ql.rightCols(nk) * (c / al);
    const LongVector resl = lul - h.cast<long double>();

    ResolventSolution sol;
    sol.alpha = alpha;
    sol.z = zl.cast<double>();
    sol.Lu = lul.cast<double>();
    sol.y = yl.cast<double>();
    sol.residual = resl.cast<double>();
    sol.constraint_residual =
        (problem.constraint().map().cast<long double>() * resl).cast<double>();
    if (problem.L())
    {
        // Only the range part: L^T annihilates the kernel block.
        sol.u = (problem.L()->transpose().cast<long double>() * (ql.leftCols(nr) * a))
                    .cast<double>();
    }
    sol.sigma_ratio = smin / smax;
    sol.symmetric_path = symmetric;
    return sol;
}

struct IdentityReport
{
    double basic_identity = 0.0; ///< ||Gamma z - (h - alpha (I-P) z)||
    double error_form     = 0.0; ///< ||(Lu - h) + (I-P) y||
    double constraint     = 0.0; ///< ||P (Lu - h)||
};

inline IdentityReport identity_residuals(const ResolventSolution& sol,
                                         const ProblemInstance& problem)
{
    const LongMatrix g = problem.gamma().cast<long double>();
    const LongMatrix p = problem.constraint().map().cast<long double>();
    const LongVector z = sol.z.cast<long double>();
    const LongVector h = problem.h().cast<long double>();
    const long double alpha = sol.alpha;

    const LongVector comp_z = z - p * z;
    IdentityReport r;
    r.basic_identity =
        static_cast<double>((g * z - (h - alpha * comp_z)).norm());

    const Vector comp_y = problem.constraint().complement(sol.y);
    r.error_form = ((sol.Lu - problem.h()) + comp_y).norm();
    r.constraint = problem.constraint().apply(sol.Lu - problem.h()).norm();
    return r;
}

} // namespace finapprox

#endif /* FINAPPROX_RESOLVENT_HPP */
