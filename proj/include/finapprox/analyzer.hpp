///
/// \file analyzer.hpp
///
/// Decide finite-approximate solvability of L u = h under the exact
/// constraint P(Lu) = P h by sweeping alpha -> 0+ and watching
/// y_alpha = alpha T_alpha^{-1} h:
///
///   - y_alpha -> 0                     : solvable (u_alpha is the construction)
///   - y_alpha -> y != 0                : not solvable, v = (I-P) y is a witness
///                                        with <L u_alpha - h, v> -> -||y||^2
///   - T_alpha singular at every alpha  : singular
///   - none of the above on the schedule: inconclusive
///
/// A direct least-squares oracle (requires L) decides the same question
/// without resolvents and is used for cross-validation.
///
#ifndef FINAPPROX_ANALYZER_HPP
#define FINAPPROX_ANALYZER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include <finapprox/core.hpp>
#include <finapprox/hilbert.hpp>
#include <finapprox/resolvent.hpp>

namespace finapprox
{

/// alpha_k = alpha0 * ratio^k, k = 0 .. count-1.
class AlphaSchedule
{
public:
    AlphaSchedule(double alpha0 = 1.0, double ratio = 0.1, int count = 8)
        : m_alpha0(alpha0), m_ratio(ratio), m_count(count)
    {
        if (!(alpha0 > 0.0) || !std::isfinite(alpha0))
        {
            throw InputError("alpha0 must be a positive finite number");
        }
        if (!(ratio > 0.0 && ratio < 1.0))
        {
            throw InputError("ratio must lie in (0, 1)");
        }
        if (count <= 0)
        {
            throw InputError("count must be positive");
        }
    }

    double alpha0() const { return m_alpha0; }
    double ratio() const { return m_ratio; }
    int count() const { return m_count; }

    std::vector<double> values() const
    {
        // Dividing by powers of 1/ratio keeps decades exact (1e-3, not 1.0000000000000002e-3).
        std::vector<double> a(static_cast<std::size_t>(m_count));
        const double inv = 1.0 / m_ratio;
        for (int k = 0; k < m_count; ++k)
        {
            a[static_cast<std::size_t>(k)] = m_alpha0 / std::pow(inv, k);
        }
        return a;
    }

private:
    double m_alpha0;
    double m_ratio;
    int m_count;
};

struct SweepRecord
{
    double alpha = 0.0;
    double norm_y = 0.0;
    double norm_residual = 0.0;
    double norm_constraint_residual = 0.0;
    bool   singular = false;
    Vector y;              ///< empty when singular
    Vector complement_y;   ///< (I-P) y, empty when singular
    std::optional<Vector> kernel_vector; ///< set when singular
};

struct SweepReport
{
    std::vector<SweepRecord> records; ///< decreasing alpha
    double h_norm = 0.0;

    /// Last nonsingular record (smallest alpha), if any.
    const SweepRecord* last_regular() const
    {
        for (auto it = records.rbegin(); it != records.rend(); ++it)
        {
            if (!it->singular)
            {
                return &*it;
            }
        }
        return nullptr;
    }

    bool all_singular() const
    {
        return std::all_of(records.begin(), records.end(),
                           [](const SweepRecord& r) { return r.singular; });
    }
};

namespace detail
{

inline SweepRecord make_record(double alpha, const ProblemInstance& problem)
{
    SweepRecord rec;
    rec.alpha = alpha;
    SolveOutcome out = solve_resolvent(alpha, problem);
    if (auto* s = std::get_if<SingularReport>(&out))
    {
        rec.singular = true;
        rec.kernel_vector = s->kernel_vector;
        return rec;
    }
    auto& sol = std::get<ResolventSolution>(out);
    rec.norm_y = sol.y.norm();
    rec.norm_residual = sol.residual.norm();
    rec.norm_constraint_residual = sol.constraint_residual.norm();
    rec.complement_y = problem.constraint().complement(sol.y);
    rec.y = std::move(sol.y);
    return rec;
}

/// Run f(i) for i in [0, n) on up to `jobs` threads. Each index is written
/// by exactly one thread, so results stay deterministic.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f)
{
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            f(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers)
            {
                f(i);
            }
        });
    }
    for (auto& t : pool)
    {
        t.join();
    }
}

} // namespace detail

inline SweepReport alpha_sweep(const ProblemInstance& problem, const AlphaSchedule& schedule,
                               int jobs = 1)
{
    const auto alphas = schedule.values();
    SweepReport rep;
    rep.h_norm = problem.h().norm();
    rep.records.resize(alphas.size());
    detail::parallel_for(alphas.size(), jobs, [&](std::size_t i) {
        rep.records[i] = detail::make_record(alphas[i], problem);
    });
    return rep;
}

enum class Verdict
{
    Solvable,
    NotSolvable,
    Singular,
    Inconclusive
};

inline const char* to_string(Verdict v)
{
    switch (v)
    {
    case Verdict::Solvable: return "SOLVABLE";
    case Verdict::NotSolvable: return "NOT_SOLVABLE";
    case Verdict::Singular: return "SINGULAR";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

struct Decision
{
    Verdict verdict = Verdict::Inconclusive;
    std::optional<Vector> witness_y; ///< limit of y_alpha
    std::optional<Vector> witness_v; ///< (I-P) y
    double decision_tol = 0.0;
    double h_norm = 0.0;
    double final_norm_y = 0.0;
    double final_difference = 0.0; ///< ||y_last - y_prev||, NaN if unavailable
    double final_alpha = 0.0;
};

///
/// Tail tests on the sweep:
///   vanishing: ||y|| at the smallest regular alpha <= tol ||h|| and the last
///              three norms do not grow by more than 10% step to step;
///   stable:    ||y_last - y_prev|| <= tol ||h|| with ||y_last|| and
///              ||(I-P) y_last|| above tol ||h||.
///
inline Decision decide(const SweepReport& report, double decision_tol = 1e-6)
{
    if (report.records.empty())
    {
        throw MisuseError("decide() needs a nonempty sweep report");
    }
    Decision d;
    d.decision_tol = decision_tol;
    d.h_norm = report.h_norm;
    d.final_difference = std::nan("");

    std::vector<const SweepRecord*> regular;
    for (const auto& r : report.records)
    {
        if (!r.singular)
        {
            regular.push_back(&r);
        }
    }
    if (regular.empty())
    {
        d.verdict = Verdict::Singular;
        return d;
    }

    const double thr = decision_tol * report.h_norm;
    const SweepRecord& last = *regular.back();
    d.final_norm_y = last.norm_y;
    d.final_alpha = last.alpha;

    const std::size_t tail = std::min<std::size_t>(3, regular.size());
    bool non_increasing = true;
    for (std::size_t k = regular.size() - tail + 1; k < regular.size(); ++k)
    {
        if (regular[k]->norm_y > 1.1 * regular[k - 1]->norm_y)
        {
            non_increasing = false;
        }
    }
    if (last.norm_y <= thr && non_increasing)
    {
        d.verdict = Verdict::Solvable;
        return d;
    }

    if (regular.size() >= 2)
    {
        const SweepRecord& prev = *regular[regular.size() - 2];
        d.final_difference = (last.y - prev.y).norm();
        if (d.final_difference <= thr && last.norm_y > thr && last.complement_y.norm() > thr)
        {
            d.verdict = Verdict::NotSolvable;
            d.witness_y = last.y;
            d.witness_v = last.complement_y;
            return d;
        }
    }
    d.verdict = Verdict::Inconclusive;
    return d;
}

/// v = (I-P) y for the stabilized limit y. Throws MisuseError when the sweep
/// does not support a NOT_SOLVABLE verdict.
inline Vector extract_witness(const SweepReport& report, double decision_tol = 1e-6)
{
    Decision d = decide(report, decision_tol);
    if (d.verdict != Verdict::NotSolvable)
    {
        throw MisuseError(std::string("no stable nonzero limit of y_alpha: verdict is ") +
                          to_string(d.verdict));
    }
    return *d.witness_v;
}

struct Correlation
{
    double alpha = 0.0;
    double inner_product = 0.0; ///< <L u_alpha - h, v>
};

/// <L u_alpha - h, v> along the schedule; singular alphas are omitted.
inline std::vector<Correlation> witness_correlation(const ProblemInstance& problem,
                                                    const Vector& v,
                                                    const AlphaSchedule& schedule)
{
    if (v.size() != problem.dim_h())
    {
        throw InputError("witness has the wrong dimension");
    }
    if (v.norm() == 0.0)
    {
        throw InputError("witness must be nonzero");
    }
    std::vector<Correlation> out;
    for (double a : schedule.values())
    {
        SolveOutcome o = solve_resolvent(a, problem);
        if (auto* s = std::get_if<ResolventSolution>(&o))
        {
            out.push_back({a, s->residual.dot(v)});
        }
    }
    return out;
}

struct DecomposedVerdict
{
    double h0_residual = 0.0;    ///< min ||P L u - P h||
    double hperp_residual = 0.0; ///< min ||L u - (I-P) h||
    bool solvable = false;
};

struct ConstrainedVerdict
{
    bool feasible = false;
    double feasibility_residual = 0.0; ///< min ||P L u - P h||
    double distance = 0.0;             ///< min ||L u - h|| over feasible u
    Vector u;
    bool solvable = false;
};

struct OracleDecision
{
    DecomposedVerdict decomposed;
    ConstrainedVerdict constrained;
    bool agree = false; ///< decomposed.solvable == constrained.solvable
};

namespace detail
{

/// Minimum-norm least-squares solution with a relative singular-value cutoff.
inline Vector lstsq(const Matrix& a, const Vector& b, double rel_tol)
{
    if (a.cols() == 0)
    {
        return Vector::Zero(0);
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Vector x = Vector::Zero(a.cols());
    if (s.size() == 0 || s(0) == 0.0)
    {
        return x;
    }
    const Vector utb = svd.matrixU().transpose() * b;
    Vector coef = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
    {
        if (s(i) > rel_tol * s(0))
        {
            coef(i) = utb(i) / s(i);
        }
    }
    return svd.matrixV() * coef;
}

/// Orthonormal basis of ker(a) (columns), using the same cutoff as lstsq.
inline Matrix null_space(const Matrix& a, double rel_tol)
{
    const Index n = a.cols();
    if (a.rows() == 0 || n == 0)
    {
        return Matrix::Identity(n, n);
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    Index r = 0;
    if (s.size() > 0 && s(0) > 0.0)
    {
        r = static_cast<Index>((s.array() > rel_tol * s(0)).count());
    }
    return svd.matrixV().rightCols(n - r);
}

} // namespace detail

///
/// Direct finite-dimensional decision, independent of the resolvent.
///
/// (a) decomposed: P h in Range(P L) and (I-P) h in Range(L);
/// (b) constrained: minimize ||L u - h|| subject to P L u = P h by nullspace
///     elimination (u = u_p + Z w, Z spanning ker(P L)).
///
/// In finite dimensions the closure of a range is the range itself, so both
/// are exact yes/no questions up to oracle_tol * ||h||.
///
inline OracleDecision range_oracle(const ProblemInstance& problem, double oracle_tol = 1e-8)
{
    if (!problem.has_L())
    {
        throw InputError("range oracle requires L: Range(L) is not determined by Gamma alone");
    }
    const Matrix& l = *problem.L();
    const Matrix& p = problem.constraint().map();
    const Vector& h = problem.h();
    const double rank_tol = problem.tolerances().rank;
    const double thr = oracle_tol * h.norm();

    const Matrix c = p * l;
    const Vector h0 = p * h;
    const Vector hperp = h - h0;

    OracleDecision out;

    const Vector u0 = detail::lstsq(c, h0, rank_tol);
    out.decomposed.h0_residual = (c * u0 - h0).norm();
    const Vector u1 = detail::lstsq(l, hperp, rank_tol);
    out.decomposed.hperp_residual = (l * u1 - hperp).norm();
    out.decomposed.solvable =
        out.decomposed.h0_residual <= thr && out.decomposed.hperp_residual <= thr;

    auto& cv = out.constrained;
    cv.feasibility_residual = out.decomposed.h0_residual;
    cv.feasible = cv.feasibility_residual <= thr;
    const Matrix z = detail::null_space(c, rank_tol);
    const Vector w = detail::lstsq(l * z, h - l * u0, rank_tol);
    cv.u = u0 + z * w;
    cv.distance = (l * cv.u - h).norm();
    cv.solvable = cv.feasible && cv.distance <= thr;

    out.agree = out.decomposed.solvable == cv.solvable;
    return out;
}

struct InvertibilityReport
{
    double alpha = 0.0;
    Matrix Q;
    double smallest_singular_value = 0.0;
    double largest_singular_value = 0.0;
    bool invertible = false;
};

/// Q_alpha = I - alpha (alpha I + Gamma)^{-1} P.
inline InvertibilityReport q_alpha_invertibility(double alpha, const ProblemInstance& problem)
{
    if (!(alpha > 0.0))
    {
        throw InputError("alpha must be positive");
    }
    const Index n = problem.dim_h();
    const Matrix shifted = alpha * Matrix::Identity(n, n) + problem.gamma();
    Eigen::LDLT<Matrix> ldlt(shifted);

    InvertibilityReport r;
    r.alpha = alpha;
    r.Q = Matrix::Identity(n, n) - alpha * ldlt.solve(problem.constraint().map());
    Eigen::JacobiSVD<Matrix> svd(r.Q);
    r.largest_singular_value = svd.singularValues()(0);
    r.smallest_singular_value = svd.singularValues()(n - 1);
    r.invertible = r.smallest_singular_value > problem.tolerances().singular * r.largest_singular_value;
    return r;
}

/// Everything `analyze` reports: sweep, decision and, when L is present,
/// the oracle and whether its constrained verdict matches the decision.
struct Analysis
{
    SweepReport sweep;
    Decision decision;
    std::optional<OracleDecision> oracle;
    std::optional<bool> agreement;
};

inline Analysis analyze(const ProblemInstance& problem, const AlphaSchedule& schedule, int jobs = 1)
{
    const Tolerances& tol = problem.tolerances();
    Analysis a;
    a.sweep = alpha_sweep(problem, schedule, jobs);
    a.decision = decide(a.sweep, tol.decision);
    if (problem.has_L())
    {
        a.oracle = range_oracle(problem, tol.oracle);
        if (a.decision.verdict == Verdict::Solvable || a.decision.verdict == Verdict::NotSolvable)
        {
            a.agreement = (a.decision.verdict == Verdict::Solvable) == a.oracle->constrained.solvable;
        }
    }
    return a;
}

} // namespace finapprox

#endif /* FINAPPROX_ANALYZER_HPP */
