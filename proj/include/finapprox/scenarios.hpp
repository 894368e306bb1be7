///
/// \file scenarios.hpp
///
/// Named constructors for the worked examples and counterexamples, so tests
/// and the CLI build exactly the same instances.
///
#ifndef FINAPPROX_SCENARIOS_HPP
#define FINAPPROX_SCENARIOS_HPP

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <finapprox/analyzer.hpp>
#include <finapprox/core.hpp>
#include <finapprox/galerkin.hpp>
#include <finapprox/hilbert.hpp>

namespace finapprox
{

struct ScenarioInfo
{
    std::string_view name;
    std::string_view params;
    std::string_view summary;
};

inline constexpr std::array<ScenarioInfo, 6> scenario_catalog{{
    {"diagonal_solvable", "", "R^2, L = I, pi onto e1, h = (1,1)"},
    {"diagonal_unsolvable", "", "R^2, L = e1 column, pi onto e1, h = e2; witness e2"},
    {"truncated_shift", "N=6",
     "R^N, L = e1 column, pi onto span{e2..eN}, h = e2; T_alpha singular at every alpha. "
     "Truncation of the l2 example: e2 lies in ker T_alpha, so the claimed bounded "
     "diagonal resolvent does not exist here"},
    {"rank_deficient_gamma", "dimU=1",
     "R^3, Gamma = diag(1,1,0) without L, pi onto e1, h = (1,1,0); Gamma = L L^T needs dimU >= 2"},
    {"nilpotent_pi", "",
     "R^2, L = I, raw constraint [[0,1],[0,0]], h = (0,1); y_alpha -> 0 but P(Lu_alpha) != P h. "
     "Outside the projector hypothesis on purpose"},
    {"function_space_galerkin", "M=256,op=identity",
     "discrete L2(0,1) on M midpoints, h(x) = x, sine family; op = identity | smoothing"},
}};

struct ScenarioSpec
{
    std::string name;
    std::map<std::string, std::string> params;
};

struct Scenario
{
    ScenarioSpec spec;
    ProblemInstance problem;
    std::optional<SubspaceFamily> family;
    std::optional<Projector> target;
    Verdict expected;
};

namespace detail
{

inline long param_int(const ScenarioSpec& spec, const std::string& key, long fallback)
{
    auto it = spec.params.find(key);
    if (it == spec.params.end())
    {
        return fallback;
    }
    long v = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
    {
        throw InputError("parameter " + key + " must be an integer, got '" + s + "'");
    }
    return v;
}

inline std::string param_str(const ScenarioSpec& spec, const std::string& key,
                             const std::string& fallback)
{
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

inline void check_params(const ScenarioSpec& spec, std::initializer_list<std::string_view> allowed)
{
    for (const auto& [k, v] : spec.params)
    {
        bool known = false;
        for (auto a : allowed)
        {
            known = known || k == a;
        }
        if (!known)
        {
            throw InputError("scenario " + spec.name + " has no parameter '" + k + "'");
        }
    }
}

inline Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs)
    {
        v(i++) = x;
    }
    return v;
}

/// Orthonormal DCT-II basis on m points (columns).
inline Matrix cosine_basis(Index m)
{
    Matrix c(m, m);
    const double md = static_cast<double>(m);
    for (Index k = 0; k < m; ++k)
    {
        const double s = k == 0 ? std::sqrt(1.0 / md) : std::sqrt(2.0 / md);
        for (Index j = 0; j < m; ++j)
        {
            c(j, k) = s * std::cos(std::numbers::pi * static_cast<double>(k) *
                                   (static_cast<double>(j) + 0.5) / md);
        }
    }
    return c;
}

} // namespace detail

///
/// Smoothing operator on the midpoint grid: diagonal in the cosine basis
/// with multipliers 1 / (1 + k). Symmetric positive definite.
///
inline Matrix cosine_smoothing_operator(Index m)
{
    const Matrix c = detail::cosine_basis(m);
    Vector d(m);
    for (Index k = 0; k < m; ++k)
    {
        d(k) = 1.0 / (1.0 + static_cast<double>(k));
    }
    return c * d.asDiagonal() * c.transpose();
}

inline Scenario build_scenario(const ScenarioSpec& spec)
{
    using detail::vec;
    ProblemData data;
    std::optional<SubspaceFamily> family;
    std::optional<Projector> target;
    Verdict expected = Verdict::Solvable;

    if (spec.name == "diagonal_solvable")
    {
        detail::check_params(spec, {});
        const std::array<Index, 1> e1{0};
        data.L = Matrix::Identity(2, 2);
        data.constraint = ConstraintMap::projector(coordinate_projector(2, e1));
        data.h = vec({1.0, 1.0});
    }
    else if (spec.name == "diagonal_unsolvable")
    {
        detail::check_params(spec, {});
        const std::array<Index, 1> e1{0};
        data.L = Matrix(vec({1.0, 0.0}));
        data.constraint = ConstraintMap::projector(coordinate_projector(2, e1));
        data.h = vec({0.0, 1.0});
        expected = Verdict::NotSolvable;
    }
    else if (spec.name == "truncated_shift")
    {
        detail::check_params(spec, {"N"});
        const long n = detail::param_int(spec, "N", 6);
        if (n < 2)
        {
            throw InputError("truncated_shift needs N >= 2");
        }
        std::vector<Index> tail;
        for (Index i = 1; i < n; ++i)
        {
            tail.push_back(i);
        }
        data.L = Matrix(Vector::Unit(n, 0));
        data.constraint = ConstraintMap::projector(coordinate_projector(n, tail));
        data.h = Vector::Unit(n, 1);
        expected = Verdict::Singular;
    }
    else if (spec.name == "rank_deficient_gamma")
    {
        detail::check_params(spec, {"dimU"});
        const long dim_u = detail::param_int(spec, "dimU", 1);
        if (dim_u < 1)
        {
            throw InputError("rank_deficient_gamma needs dimU >= 1");
        }
        const std::array<Index, 1> e1{0};
        data.gamma = Matrix(vec({1.0, 1.0, 0.0}).asDiagonal());
        data.dim_u = dim_u;
        data.constraint = ConstraintMap::projector(coordinate_projector(3, e1));
        data.h = vec({1.0, 1.0, 0.0});
    }
    else if (spec.name == "nilpotent_pi")
    {
        detail::check_params(spec, {});
        Matrix p(2, 2);
        p << 0.0, 1.0, 0.0, 0.0;
        data.L = Matrix::Identity(2, 2);
        data.constraint = ConstraintMap::raw(p);
        data.h = vec({0.0, 1.0});
    }
    else if (spec.name == "function_space_galerkin")
    {
        detail::check_params(spec, {"M", "op"});
        const long m = detail::param_int(spec, "M", 256);
        if (m < 4)
        {
            throw InputError("function_space_galerkin needs M >= 4");
        }
        const std::string op = detail::param_str(spec, "op", "identity");
        if (op == "identity")
        {
            data.L = Matrix::Identity(m, m);
        }
        else if (op == "smoothing")
        {
            data.L = cosine_smoothing_operator(m);
        }
        else
        {
            throw InputError("unknown operator '" + op + "' (identity | smoothing)");
        }
        family = sine_family(m);
        target = family_projector(*family, family->max_n);
        data.constraint = ConstraintMap::projector(*target);
        data.h = sample_function(m, [](double x) { return x; });
    }
    else
    {
        throw InputError("unknown scenario '" + spec.name + "'");
    }

    return Scenario{spec, make_problem(data), std::move(family), std::move(target), expected};
}

inline Scenario build_scenario(const std::string& name)
{
    return build_scenario(ScenarioSpec{name, {}});
}

} // namespace finapprox

#endif /* FINAPPROX_SCENARIOS_HPP */
