///
/// \file galerkin.hpp
///
/// Nested finite-rank projector families pi_n and the joint (n, alpha)
/// sweep that replaces an unusable target constraint by its finite-rank
/// approximations.
///
#ifndef FINAPPROX_GALERKIN_HPP
#define FINAPPROX_GALERKIN_HPP

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <finapprox/analyzer.hpp>
#include <finapprox/core.hpp>
#include <finapprox/hilbert.hpp>
#include <finapprox/resolvent.hpp>

namespace finapprox
{

///
/// ### SubspaceFamily
///
/// `level(n)` returns the ordered basis of H_n for 0 <= n <= max_n. The list
/// for level n must extend the list for level n - 1 (nested subspaces).
///
struct SubspaceFamily
{
    Index dim = 0;
    int max_n = 0;
    std::string description;
    std::function<std::vector<Vector>(int)> level;
};

/// {e_1}, {e_1, e_2}, ... in R^dim.
inline SubspaceFamily canonical_family(Index dim, int max_n = -1)
{
    if (dim <= 0)
    {
        throw InputError("canonical family needs a positive dimension");
    }
    if (max_n < 0)
    {
        max_n = static_cast<int>(dim);
    }
    if (max_n > dim)
    {
        throw InputError("canonical family cannot exceed the ambient dimension");
    }
    SubspaceFamily f;
    f.dim = dim;
    f.max_n = max_n;
    f.description = "canonical coordinate family in R^" + std::to_string(dim);
    f.level = [dim](int n) {
        std::vector<Vector> vs;
        for (int k = 0; k < n; ++k)
        {
            vs.push_back(Vector::Unit(dim, k));
        }
        return vs;
    };
    return f;
}

/// Midpoints x_j = (j + 1/2) / m, j = 0 .. m-1.
inline Vector midpoint_grid(Index m)
{
    Vector x(m);
    for (Index j = 0; j < m; ++j)
    {
        x(j) = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    }
    return x;
}

///
/// Samples of a function on the midpoint grid, scaled by 1/sqrt(m) so the
/// Euclidean inner product of coordinates equals the discrete L2(0,1)
/// product (1/m) sum f(x_j) g(x_j).
///
template <typename F>
Vector sample_function(Index m, F&& f)
{
    const Vector x = midpoint_grid(m);
    const double s = 1.0 / std::sqrt(static_cast<double>(m));
    Vector v(m);
    for (Index j = 0; j < m; ++j)
    {
        v(j) = s * f(x(j));
    }
    return v;
}

///
/// Level n spans {1, sin(2 pi x), ..., sin(2 pi n x)} sampled on m midpoints.
/// max_n = floor((m - 2) / 2) keeps the sampled sines independent.
///
inline SubspaceFamily sine_family(Index m)
{
    if (m < 4)
    {
        throw InputError("sine family needs a grid of at least 4 points");
    }
    SubspaceFamily f;
    f.dim = m;
    f.max_n = static_cast<int>((m - 2) / 2);
    f.description = "span{1, sin(2 pi k x), k <= n} on " + std::to_string(m) + " midpoints";
    f.level = [m](int n) {
        std::vector<Vector> vs;
        vs.push_back(sample_function(m, [](double) { return 1.0; }));
        for (int k = 1; k <= n; ++k)
        {
            vs.push_back(sample_function(
                m, [k](double x) { return std::sin(2.0 * std::numbers::pi * k * x); }));
        }
        return vs;
    };
    return f;
}

/// Orthonormalized projector onto level n (n = 0 gives the zero projector).
inline Projector family_projector(const SubspaceFamily& family, int n, double tol_ortho = 1e-10)
{
    if (n < 0 || n > family.max_n)
    {
        std::ostringstream os;
        os << "level " << n << " outside [0, " << family.max_n << "] for " << family.description;
        throw InputError(os.str());
    }
    if (n == 0)
    {
        return make_projector(family.dim, std::vector<Vector>{}, tol_ortho);
    }
    const auto vs = family.level(n);
    Projector p = make_projector(family.dim, vs, tol_ortho);
    if (p.rank() != static_cast<Index>(vs.size()))
    {
        std::ostringstream os;
        os << "level " << n << " basis is numerically dependent: rank " << p.rank() << " of "
           << vs.size() << " vectors";
        throw InputError(os.str());
    }
    return p;
}

/// defects[p][n - 1] = ||pi_n x_p - pi x_p|| for n = 1 .. max_n.
struct ProbeTable
{
    std::vector<std::vector<double>> defects;
};

///
/// Strong-convergence diagnostic. The finest level is orthonormalized once;
/// Gram-Schmidt processes vectors in order, so the first k columns of that
/// basis are exactly the orthonormal basis of any level with k vectors.
///
inline ProbeTable strong_convergence_probe(const SubspaceFamily& family, const Projector& target,
                                           const std::vector<Vector>& probes)
{
    if (target.dim() != family.dim)
    {
        throw InputError("target projector dimension does not match the family");
    }
    for (const auto& x : probes)
    {
        if (x.size() != family.dim)
        {
            throw InputError("probe dimension does not match the family");
        }
    }
    ProbeTable table;
    table.defects.assign(probes.size(), std::vector<double>(static_cast<std::size_t>(family.max_n)));
    if (family.max_n == 0)
    {
        return table;
    }

    const auto finest_vs = family.level(family.max_n);
    const Projector finest = family_projector(family, family.max_n);
    const Matrix& q = finest.basis();

    std::vector<Vector> target_images;
    for (const auto& x : probes)
    {
        target_images.push_back(target.apply(x));
    }

    for (int n = 1; n <= family.max_n; ++n)
    {
        const auto vs = family.level(n);
        for (std::size_t i = 0; i < vs.size(); ++i)
        {
            if (vs[i] != finest_vs[i])
            {
                throw InputError("family is not nested at level " + std::to_string(n));
            }
        }
        const auto k = static_cast<Index>(vs.size());
        for (std::size_t p = 0; p < probes.size(); ++p)
        {
            const Vector img = q.leftCols(k) * (q.leftCols(k).transpose() * probes[p]);
            table.defects[p][static_cast<std::size_t>(n - 1)] = (img - target_images[p]).norm();
        }
    }
    return table;
}

struct GalerkinStep
{
    int n = 0;
    double alpha = 0.0;
};

/// (n_k, alpha_k) = (k, alpha0 * ratio^(k-1)), k = 1 .. count.
inline std::vector<GalerkinStep> diagonal_schedule(int count = 8, double alpha0 = 0.1,
                                                   double ratio = 0.1)
{
    const AlphaSchedule alphas(alpha0, ratio, count);
    std::vector<GalerkinStep> steps;
    int k = 1;
    for (double a : alphas.values())
    {
        steps.push_back({k++, a});
    }
    return steps;
}

struct GalerkinRecord
{
    int step = 0;
    int n = 0;
    double alpha = 0.0;
    double norm_residual = 0.0;               ///< ||L u_{alpha,n} - h||
    double norm_constraint_residual_n = 0.0;  ///< ||pi_n (L u - h)||
    std::optional<double> norm_constraint_residual_target; ///< ||pi (L u - h)||
    double norm_complement_y = 0.0;           ///< ||(I - pi_n) alpha z||
    bool singular = false;
};

struct GalerkinReport
{
    std::vector<GalerkinRecord> records; ///< ordered by step index
    double h_norm = 0.0;
};

inline GalerkinReport galerkin_sweep(const ProblemInstance& problem, const SubspaceFamily& family,
                                     const std::vector<GalerkinStep>& steps,
                                     const std::optional<Projector>& target = std::nullopt,
                                     int jobs = 1)
{
    if (steps.empty())
    {
        throw InputError("galerkin sweep needs at least one step");
    }
    if (family.dim != problem.dim_h())
    {
        throw InputError("family dimension does not match the problem");
    }
    std::map<int, ProblemInstance> by_level;
    for (const auto& s : steps)
    {
        if (!(s.alpha > 0.0))
        {
            throw InputError("galerkin step alpha must be positive");
        }
        if (!by_level.contains(s.n))
        {
            by_level.emplace(s.n, problem.with_constraint(
                                      ConstraintMap::projector(family_projector(family, s.n))));
        }
    }

    GalerkinReport rep;
    rep.h_norm = problem.h().norm();
    rep.records.resize(steps.size());
    detail::parallel_for(steps.size(), jobs, [&](std::size_t i) {
        const auto& s = steps[i];
        const ProblemInstance& pn = by_level.at(s.n);
        GalerkinRecord rec;
        rec.step = static_cast<int>(i) + 1;
        rec.n = s.n;
        rec.alpha = s.alpha;
        SolveOutcome out = solve_resolvent(s.alpha, pn);
        if (auto* sol = std::get_if<ResolventSolution>(&out))
        {
            rec.norm_residual = sol->residual.norm();
            rec.norm_constraint_residual_n = sol->constraint_residual.norm();
            rec.norm_complement_y = pn.constraint().complement(sol->y).norm();
            if (target)
            {
                rec.norm_constraint_residual_target = target->apply(sol->residual).norm();
            }
        }
        else
        {
            rec.singular = true;
        }
        rep.records[i] = rec;
    });
    return rep;
}

/// For each level n, the regular record with the smallest alpha: a proxy for
/// the inner limit alpha -> 0 at fixed n.
inline std::vector<GalerkinRecord> inner_limit_proxy(const GalerkinReport& report)
{
    std::map<int, GalerkinRecord> best;
    for (const auto& r : report.records)
    {
        if (r.singular)
        {
            continue;
        }
        auto it = best.find(r.n);
        if (it == best.end() || r.alpha < it->second.alpha)
        {
            best[r.n] = r;
        }
    }
    std::vector<GalerkinRecord> out;
    for (auto& [n, r] : best)
    {
        out.push_back(r);
    }
    return out;
}

} // namespace finapprox

#endif /* FINAPPROX_GALERKIN_HPP */
