///
/// \file hilbert.hpp
///
/// Finite-coordinate Hilbert-space objects: orthogonal projectors, Gram
/// operators and the validated problem bundle (L, Gamma, constraint, h)
/// consumed by the resolvent and analyzer layers.
///
#ifndef FINAPPROX_HILBERT_HPP
#define FINAPPROX_HILBERT_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include <finapprox/core.hpp>

namespace finapprox
{

///
/// ### Projector
///
/// Orthogonal projector onto span(basis). The basis columns are orthonormal;
/// the map is basis * basis^T. Only make_projector() builds one, so the
/// invariants below hold for every instance:
///
///   ||Q^T Q - I||_F <= tol_ortho,   ||P^2 - P||_F <= 10 tol_ortho.
///
class Projector
{
public:
    Index dim() const { return m_map.rows(); }
    Index rank() const { return m_basis.cols(); }
    const Matrix& basis() const { return m_basis; }
    const Matrix& map() const { return m_map; }

    Vector apply(const Vector& x) const { return m_basis * (m_basis.transpose() * x); }
    Vector complement(const Vector& x) const { return x - apply(x); }

private:
    friend Projector make_projector(Index, std::span<const Vector>, double, bool);

    Projector(Matrix basis) : m_basis(std::move(basis)), m_map(m_basis * m_basis.transpose()) {}

    Matrix m_basis;
    Matrix m_map;
};

///
/// Orthonormalize `vectors` (modified Gram-Schmidt, two passes) and return
/// the projector onto their span. Vectors that are numerically dependent on
/// the ones before them (remaining norm <= 1e-10 of the input norm) are
/// dropped, so rank() may be smaller than vectors.size().
///
inline Projector make_projector(Index dim, std::span<const Vector> vectors,
                                double tol_ortho = 1e-10, bool require_nonzero = false)
{
    if (dim <= 0)
    {
        throw InputError("projector dimension must be positive");
    }
    constexpr double drop_tol = 1e-10;

    Matrix q(dim, static_cast<Index>(vectors.size()));
    Index kept = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i)
    {
        const Vector& v = vectors[i];
        if (v.size() != dim)
        {
            std::ostringstream os;
            os << "basis vector " << i << " has dimension " << v.size() << ", expected " << dim;
            throw InputError(os.str());
        }
        require_finite(v, "basis vector " + std::to_string(i));

        const double vnorm = v.norm();
        if (vnorm == 0.0)
        {
            continue;
        }
        Vector w = v;
        for (int pass = 0; pass < 2; ++pass)
        {
            for (Index j = 0; j < kept; ++j)
            {
                w -= q.col(j).dot(w) * q.col(j);
            }
        }
        const double wnorm = w.norm();
        if (wnorm <= drop_tol * vnorm)
        {
            continue;
        }
        q.col(kept++) = w / wnorm;
    }

    if (require_nonzero && kept == 0)
    {
        throw InputError("basis spans the zero subspace but a nonzero rank was required");
    }

    Matrix basis = q.leftCols(kept);
    const double defect =
        (basis.transpose() * basis - Matrix::Identity(kept, kept)).norm();
    if (defect > tol_ortho)
    {
        std::ostringstream os;
        os << "orthonormalization defect " << defect << " exceeds " << tol_ortho;
        throw Error(os.str());
    }
    return Projector(std::move(basis));
}

/// Projector onto the span of the given columns.
inline Projector make_projector_from_columns(const Matrix& columns, double tol_ortho = 1e-10)
{
    std::vector<Vector> vs;
    vs.reserve(static_cast<std::size_t>(columns.cols()));
    for (Index j = 0; j < columns.cols(); ++j)
    {
        vs.emplace_back(columns.col(j));
    }
    return make_projector(columns.rows(), vs, tol_ortho);
}

/// Projector onto span{e_i : i in indices} (0-based).
inline Projector coordinate_projector(Index dim, std::span<const Index> indices)
{
    std::vector<Vector> vs;
    for (Index i : indices)
    {
        if (i < 0 || i >= dim)
        {
            throw InputError("coordinate index out of range");
        }
        vs.push_back(Vector::Unit(dim, i));
    }
    return make_projector(dim, vs);
}

struct ProjectorReport
{
    double idempotency_defect = 0.0; ///< ||P^2 - P||_F
    double symmetry_defect    = 0.0; ///< ||P^T - P||_F
    Index  rank               = 0;
    bool   is_orthogonal_projector = false;
};

/// Diagnostic only; never throws for a square input.
inline ProjectorReport validate_linear_map(const Matrix& p, double tol = 1e-10)
{
    if (p.rows() != p.cols())
    {
        throw InputError("validate_linear_map expects a square matrix");
    }
    ProjectorReport r;
    r.idempotency_defect = (p * p - p).norm();
    r.symmetry_defect    = (p.transpose() - p).norm();
    r.rank               = numerical_rank(p, 1e-10);
    r.is_orthogonal_projector = r.idempotency_defect <= tol && r.symmetry_defect <= tol;
    return r;
}

/// Gamma = L L^T, symmetrized so the result is exactly symmetric.
inline Matrix gram(const Matrix& l)
{
    return symmetrize(l * l.transpose());
}

struct RepresentabilityReport
{
    bool   representable    = false;
    double symmetry_defect  = 0.0;
    double min_eigenvalue   = 0.0;
    Index  rank             = 0;
    Index  dim_u            = 0;
    std::optional<Matrix> factor; ///< some L with L L^T = Gamma, width dim_u
    std::string reason;
};

///
/// Decide whether Gamma = L L^T for some L with dim_u columns: Gamma must be
/// symmetric PSD within tol (relative) and have numerical rank <= dim_u. The
/// returned factor has columns sqrt(lambda_i) v_i in order of decreasing
/// eigenvalue, padded with zero columns.
///
inline RepresentabilityReport gram_representable(const Matrix& gamma, Index dim_u,
                                                 double tol = 1e-10)
{
    if (gamma.rows() != gamma.cols())
    {
        throw InputError("gram_representable expects a square Gamma");
    }
    if (dim_u <= 0)
    {
        throw InputError("dimU must be positive");
    }
    RepresentabilityReport r;
    r.dim_u = dim_u;
    const Index n = gamma.rows();
    const double scale = rel_scale(gamma.norm());
    r.symmetry_defect = (gamma - gamma.transpose()).norm();

    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(gamma));
    const Vector& lambda = es.eigenvalues();
    r.min_eigenvalue = n > 0 ? lambda.minCoeff() : 0.0;
    const double lmax = n > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0;

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return lambda(a) > lambda(b); });
    const double cut = 1e-10 * lmax;
    for (Index i : order)
    {
        if (lambda(i) > cut)
        {
            ++r.rank;
        }
    }

    if (r.symmetry_defect > tol * scale)
    {
        r.reason = "Gamma is not symmetric";
        return r;
    }
    if (r.min_eigenvalue < -tol * scale)
    {
        r.reason = "Gamma is not positive semidefinite";
        return r;
    }
    if (r.rank > dim_u)
    {
        std::ostringstream os;
        os << "rank(Gamma) = " << r.rank << " exceeds dimU = " << dim_u;
        r.reason = os.str();
        return r;
    }

    // Within a cluster of equal eigenvalues, order the eigenvectors by the
    // index of their dominant entry and make that entry positive, so a
    // diagonal Gamma factors into scaled coordinate columns.
    const Matrix& vecs = es.eigenvectors();
    auto dominant = [&](Index i) {
        Index at = 0;
        vecs.col(i).cwiseAbs().maxCoeff(&at);
        return at;
    };
    for (std::size_t a = 0; a < order.size();)
    {
        std::size_t b = a + 1;
        while (b < order.size() && lambda(order[a]) - lambda(order[b]) <= 1e-12 * lmax)
        {
            ++b;
        }
        std::sort(order.begin() + static_cast<std::ptrdiff_t>(a),
                  order.begin() + static_cast<std::ptrdiff_t>(b),
                  [&](Index x, Index y) { return dominant(x) < dominant(y); });
        a = b;
    }

    Matrix factor = Matrix::Zero(n, dim_u);
    for (Index k = 0; k < r.rank; ++k)
    {
        const Index i = order[static_cast<std::size_t>(k)];
        const double sign = vecs(dominant(i), i) < 0.0 ? -1.0 : 1.0;
        factor.col(k) = sign * std::sqrt(lambda(i)) * vecs.col(i);
    }
    r.factor = std::move(factor);
    r.representable = true;
    return r;
}

///
/// The constraint map of a problem. Either a validated orthogonal projector,
/// or a raw square matrix admitted for counterexample studies. Raw maps carry
/// their ProjectorReport; a raw map that happens to be an orthogonal
/// projector within tolerance counts as one for solver selection.
///
class ConstraintMap
{
public:
    static ConstraintMap projector(Projector p)
    {
        ConstraintMap c;
        c.m_map = p.map();
        c.m_report.idempotency_defect = (c.m_map * c.m_map - c.m_map).norm();
        c.m_report.symmetry_defect = (c.m_map.transpose() - c.m_map).norm();
        c.m_report.rank = p.rank();
        c.m_report.is_orthogonal_projector = true;
        c.m_projector = std::move(p);
        return c;
    }

    static ConstraintMap raw(Matrix m, double tol = 1e-10)
    {
        if (m.rows() != m.cols())
        {
            throw InputError("raw constraint map must be square");
        }
        require_finite(m, "raw constraint map");
        ConstraintMap c;
        c.m_report = validate_linear_map(m, tol);
        c.m_map = std::move(m);
        return c;
    }

    Index dim() const { return m_map.rows(); }
    const Matrix& map() const { return m_map; }
    const ProjectorReport& report() const { return m_report; }
    bool is_raw() const { return !m_projector.has_value(); }
    bool is_projector() const { return m_projector.has_value() || m_report.is_orthogonal_projector; }
    const std::optional<Projector>& as_projector() const { return m_projector; }

    Vector apply(const Vector& x) const { return m_map * x; }
    Vector complement(const Vector& x) const { return x - m_map * x; }

private:
    ConstraintMap() = default;

    Matrix m_map;
    ProjectorReport m_report;
    std::optional<Projector> m_projector;
};

/// Raw, unvalidated problem data (what a problem file or scenario provides).
struct ProblemData
{
    std::optional<Index>  dim_h;
    std::optional<Index>  dim_u;
    std::optional<Matrix> L;
    std::optional<Matrix> gamma;
    std::optional<ConstraintMap> constraint;
    Vector h;
    Tolerances tol;
};

struct Check
{
    std::string name;
    double value     = 0.0;
    double threshold = 0.0;
    bool   ok        = true;
    std::string message;
};

struct ValidationReport
{
    std::vector<Check> checks;
    RepresentabilityReport representability;

    bool ok() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok; });
    }

    const Check* first_failure() const
    {
        for (const auto& c : checks)
        {
            if (!c.ok)
            {
                return &c;
            }
        }
        return nullptr;
    }
};

namespace detail
{

inline void add_shape_check(ValidationReport& rep, const std::string& name, Index got,
                            Index expected)
{
    Check c;
    c.name      = name;
    c.value     = static_cast<double>(got);
    c.threshold = static_cast<double>(expected);
    c.ok        = got == expected;
    if (!c.ok)
    {
        std::ostringstream os;
        os << name << ": got " << got << ", expected " << expected;
        c.message = os.str();
    }
    rep.checks.push_back(std::move(c));
}

inline void add_bound_check(ValidationReport& rep, const std::string& name, double value,
                            double threshold, bool ok, const std::string& what)
{
    Check c;
    c.name      = name;
    c.value     = value;
    c.threshold = threshold;
    c.ok        = ok;
    if (!ok)
    {
        std::ostringstream os;
        os.precision(6);
        os << what << " (" << name << " = " << value << ", threshold " << threshold << ")";
        c.message = os.str();
    }
    rep.checks.push_back(std::move(c));
}

} // namespace detail

///
/// Run every structural check on `data` without throwing. Shape failures stop
/// the remaining numeric checks.
///
inline ValidationReport validate_problem(const ProblemData& data)
{
    ValidationReport rep;
    const Tolerances& tol = data.tol;

    auto fail = [&](const std::string& name, const std::string& msg) {
        Check c;
        c.name    = name;
        c.ok      = false;
        c.message = msg;
        rep.checks.push_back(std::move(c));
        return rep;
    };

    if (!data.L && !data.gamma)
    {
        return fail("operator", "at least one of L or Gamma must be supplied");
    }
    if (!data.constraint)
    {
        return fail("constraint", "a constraint map is required");
    }
    if (!data.h.allFinite())
    {
        return fail("h_finite", "h contains non-finite entries");
    }
    if (data.L && !data.L->allFinite())
    {
        return fail("L_finite", "L contains non-finite entries");
    }
    if (data.gamma && !data.gamma->allFinite())
    {
        return fail("Gamma_finite", "Gamma contains non-finite entries");
    }

    const Index dim_h = data.dim_h.value_or(data.h.size());
    if (dim_h <= 0)
    {
        return fail("dimH", "dimH must be positive");
    }
    detail::add_shape_check(rep, "h_dim", data.h.size(), dim_h);
    if (data.L)
    {
        detail::add_shape_check(rep, "L_rows", data.L->rows(), dim_h);
        if (data.dim_u)
        {
            detail::add_shape_check(rep, "L_cols", data.L->cols(), *data.dim_u);
        }
    }
    if (data.gamma)
    {
        detail::add_shape_check(rep, "Gamma_rows", data.gamma->rows(), dim_h);
        detail::add_shape_check(rep, "Gamma_cols", data.gamma->cols(), dim_h);
    }
    detail::add_shape_check(rep, "constraint_dim", data.constraint->dim(), dim_h);
    if (data.dim_u && *data.dim_u <= 0)
    {
        return fail("dimU", "dimU must be positive");
    }
    if (!rep.ok())
    {
        return rep;
    }

    const Matrix gamma = data.gamma ? *data.gamma : gram(*data.L);
    const double gscale = rel_scale(gamma.norm());

    const double sym = (gamma - gamma.transpose()).norm();
    detail::add_bound_check(rep, "gamma_symmetry_defect", sym, tol.sym * gscale,
                            sym <= tol.sym * gscale, "Gamma is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(gamma), Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    const double psd_thr = -tol.psd * rel_scale(es.eigenvalues().cwiseAbs().maxCoeff());
    detail::add_bound_check(rep, "gamma_min_eigenvalue", min_eig, psd_thr, min_eig >= psd_thr,
                            "Gamma is not positive semidefinite");

    if (data.L && data.gamma)
    {
        const double defect = (gram(*data.L) - *data.gamma).norm();
        detail::add_bound_check(rep, "gram_defect", defect, tol.gram * gscale,
                                defect <= tol.gram * gscale,
                                "L L^T and Gamma are inconsistent");
    }

    const Index dim_u = data.L ? data.L->cols() : data.dim_u.value_or(dim_h);
    if (rep.ok())
    {
        rep.representability = gram_representable(gamma, dim_u, tol.gram);
    }
    return rep;
}

///
/// ### ProblemInstance
///
/// A validated bundle of the equation data. Gamma is always stored (computed
/// from L when only L is given); L is optional. Immutable after construction.
///
class ProblemInstance
{
public:
    Index dim_h() const { return m_h.size(); }
    Index dim_u() const { return m_dim_u; }
    bool has_L() const { return m_L.has_value(); }
    const std::optional<Matrix>& L() const { return m_L; }
    const Matrix& gamma() const { return m_gamma; }
    const ConstraintMap& constraint() const { return m_constraint; }
    const Vector& h() const { return m_h; }
    const Tolerances& tolerances() const { return m_tol; }
    const ValidationReport& validation() const { return m_validation; }

    /// False when Gamma cannot be written as L L^T with dimU columns.
    bool representable() const { return m_validation.representability.representable; }

    /// Same operators and h, different constraint (used by Galerkin steps).
    ProblemInstance with_constraint(ConstraintMap c) const
    {
        if (c.dim() != dim_h())
        {
            throw InputError("replacement constraint has the wrong dimension");
        }
        ProblemInstance p = *this;
        p.m_constraint = std::move(c);
        return p;
    }

private:
    friend ProblemInstance make_problem(const ProblemData&);

    ProblemInstance(std::optional<Matrix> l, Matrix gamma, ConstraintMap c, Vector h,
                    Index dim_u, Tolerances tol, ValidationReport rep)
        : m_L(std::move(l))
        , m_gamma(std::move(gamma))
        , m_constraint(std::move(c))
        , m_h(std::move(h))
        , m_dim_u(dim_u)
        , m_tol(tol)
        , m_validation(std::move(rep))
    {
    }

    std::optional<Matrix> m_L;
    Matrix m_gamma;
    ConstraintMap m_constraint;
    Vector m_h;
    Index m_dim_u;
    Tolerances m_tol;
    ValidationReport m_validation;
};

/// Validate and freeze. Throws InputError naming the first failing check.
inline ProblemInstance make_problem(const ProblemData& data)
{
    ValidationReport rep = validate_problem(data);
    if (const Check* bad = rep.first_failure())
    {
        throw InputError(bad->message);
    }
    Matrix gamma = data.gamma ? symmetrize(*data.gamma) : gram(*data.L);
    const Index dim_u = data.L ? data.L->cols() : data.dim_u.value_or(data.h.size());
    return ProblemInstance(data.L, std::move(gamma), *data.constraint, data.h, dim_u, data.tol,
                           std::move(rep));
}

} // namespace finapprox

#endif /* FINAPPROX_HILBERT_HPP */
