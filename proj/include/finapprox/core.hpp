///
/// \file core.hpp
///
/// Shared scalar/vector/matrix aliases, tolerance bundle, error types and a
/// handful of dense helpers used by every other header.
///
#ifndef FINAPPROX_CORE_HPP
#define FINAPPROX_CORE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SVD>

namespace finapprox
{

using Index  = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class of everything this library throws.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user data (shapes, tolerances, problem files).
class InputError : public Error
{
public:
    using Error::Error;
};

/// An operation was called outside its contract, e.g. asking for a witness
/// from a sweep that never stabilized.
class MisuseError : public Error
{
public:
    using Error::Error;
};

///
/// Every threshold the library uses. Values marked "relative" are scaled by
/// max(1, norm) of the quantity they are compared against.
///
struct Tolerances
{
    double ortho    = 1e-10; ///< ||Q^T Q - I||_F for orthonormal bases
    double proj     = 1e-10; ///< idempotency / symmetry defect of a projector
    double sym      = 1e-10; ///< Gamma symmetry (relative)
    double psd      = 1e-10; ///< smallest eigenvalue of Gamma >= -psd (relative)
    double gram     = 1e-10; ///< ||L L^T - Gamma||_F (relative)
    double rank     = 1e-10; ///< singular values below rank * sigma_max are zero
    double singular = 1e-12; ///< T singular when sigma_min <= singular * sigma_max
    double identity = 1e-9;  ///< algebraic identity defects, relative to ||h||
    double decision = 1e-6;  ///< limit detection in the alpha sweep, relative to ||h||
    double oracle   = 1e-8;  ///< least-squares residuals in the range oracle, relative to ||h||
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m)
{
    return m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& what)
{
    if (!m.allFinite())
    {
        throw InputError(what + " contains non-finite entries");
    }
}

/// Number of singular values above `rel_tol * sigma_max`.
inline Index numerical_rank(const Matrix& m, double rel_tol)
{
    if (m.size() == 0)
    {
        return 0;
    }
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
    {
        return 0;
    }
    const double cut = rel_tol * s(0);
    return static_cast<Index>((s.array() > cut).count());
}

inline Matrix symmetrize(const Matrix& m)
{
    return 0.5 * (m + m.transpose());
}

/// Scale used by relative tolerances: max(1, x).
inline double rel_scale(double x)
{
    return std::max(1.0, x);
}

} // namespace finapprox

#endif /* FINAPPROX_CORE_HPP */
