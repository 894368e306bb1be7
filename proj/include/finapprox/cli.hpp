///
/// \file cli.hpp
///
/// Batch driver behind the `finapprox` executable. run() is callable from
/// tests: it takes a RunConfig and two streams and returns the exit status.
///
/// CSV reports start with the line `# finapprox v1`, followed by optional
/// `# key=value` metadata lines, the column row and the records. Floating
/// point values use shortest round-trip formatting, so identical inputs give
/// identical bytes.
///
#ifndef FINAPPROX_CLI_HPP
#define FINAPPROX_CLI_HPP

#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <finapprox/analyzer.hpp>
#include <finapprox/galerkin.hpp>
#include <finapprox/hilbert.hpp>
#include <finapprox/io.hpp>
#include <finapprox/scenarios.hpp>

namespace finapprox::cli
{

enum ExitCode : int
{
    ok = 0,
    bad_input = 2,
    singular_only = 3,
    internal_error = 4,
};

struct RunConfig
{
    std::string command;
    std::optional<std::string> scenario;
    std::map<std::string, std::string> params;
    std::optional<std::string> input;
    std::optional<double> alpha0;
    std::optional<double> ratio;
    std::optional<int> count;
    std::optional<double> tol_decision;
    std::optional<std::string> family; ///< galerkin: sine | canonical
    std::string output;                ///< empty: write to the output stream
    std::string format = "csv";
    int jobs = 1;
};

inline const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c{"analyze", "sweep",    "oracle",        "galerkin",
                                            "validate", "export",  "scenarios-list"};
    return c;
}

namespace detail
{

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
    {
        return s;
    }
    std::string out = "\"";
    for (char ch : s)
    {
        out += ch;
        if (ch == '"')
        {
            out += '"';
        }
    }
    return out + "\"";
}

inline std::string join_vector(const Vector& v, char sep = ';')
{
    std::string out;
    for (Index i = 0; i < v.size(); ++i)
    {
        if (i)
        {
            out += sep;
        }
        out += format_double(v(i));
    }
    return out;
}

class CsvWriter
{
public:
    CsvWriter(const std::string& command)
    {
        m_os << "# finapprox v1\n";
        meta("command", command);
    }

    void meta(const std::string& key, const std::string& value)
    {
        m_os << "# " << key << "=" << value << "\n";
    }

    void row(const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i)
        {
            m_os << (i ? "," : "") << csv_field(fields[i]);
        }
        m_os << "\n";
    }

    std::string str() const { return m_os.str(); }

private:
    std::ostringstream m_os;
};

struct Loaded
{
    ProblemData data;
    std::optional<Scenario> scenario;
};

inline Loaded load_input(const RunConfig& cfg)
{
    if (cfg.scenario.has_value() == cfg.input.has_value())
    {
        throw InputError("exactly one of --scenario or --input is required");
    }
    Loaded l;
    if (cfg.input)
    {
        if (!cfg.params.empty())
        {
            throw InputError("--param only applies to --scenario");
        }
        l.data = load_problem_file(*cfg.input);
    }
    else
    {
        l.scenario = build_scenario(ScenarioSpec{*cfg.scenario, cfg.params});
    }
    return l;
}

inline ProblemInstance instance_of(const Loaded& l, const RunConfig& cfg)
{
    ProblemInstance p = l.scenario ? l.scenario->problem : make_problem(l.data);
    if (cfg.tol_decision)
    {
        ProblemData d;
        d.dim_u = p.dim_u();
        d.L = p.L();
        if (!p.L())
        {
            d.gamma = p.gamma();
        }
        d.constraint = p.constraint();
        d.h = p.h();
        d.tol = p.tolerances();
        d.tol.decision = *cfg.tol_decision;
        p = make_problem(d);
    }
    return p;
}

inline AlphaSchedule schedule_of(const RunConfig& cfg)
{
    return AlphaSchedule(cfg.alpha0.value_or(1.0), cfg.ratio.value_or(0.1), cfg.count.value_or(8));
}

inline json sweep_json(const SweepReport& s)
{
    json recs = json::array();
    for (const auto& r : s.records)
    {
        json j;
        j["alpha"] = r.alpha;
        j["singular"] = r.singular;
        if (!r.singular)
        {
            j["norm_y"] = r.norm_y;
            j["norm_residual"] = r.norm_residual;
            j["norm_constraint_residual"] = r.norm_constraint_residual;
        }
        else
        {
            j["kernel_vector"] = vector_to_json(*r.kernel_vector);
        }
        recs.push_back(std::move(j));
    }
    return recs;
}

inline void sweep_rows(CsvWriter& w, const SweepReport& s)
{
    w.row({"alpha", "norm_y", "norm_residual", "norm_constraint_residual", "singular"});
    for (const auto& r : s.records)
    {
        if (r.singular)
        {
            w.row({format_double(r.alpha), "", "", "", "1"});
        }
        else
        {
            w.row({format_double(r.alpha), format_double(r.norm_y), format_double(r.norm_residual),
                   format_double(r.norm_constraint_residual), "0"});
        }
    }
}

inline json oracle_json(const OracleDecision& o)
{
    json j;
    j["decomposed"] = {{"solvable", o.decomposed.solvable},
                       {"h0_residual", o.decomposed.h0_residual},
                       {"hperp_residual", o.decomposed.hperp_residual}};
    j["constrained"] = {{"solvable", o.constrained.solvable},
                        {"feasible", o.constrained.feasible},
                        {"feasibility_residual", o.constrained.feasibility_residual},
                        {"distance", o.constrained.distance},
                        {"u", vector_to_json(o.constrained.u)}};
    j["agree"] = o.agree;
    return j;
}

inline const char* yes_no(bool b) { return b ? "1" : "0"; }

struct Output
{
    std::string text;
    int status = ok;
};

inline Output cmd_scenarios_list(const RunConfig& cfg)
{
    if (cfg.format == "json")
    {
        json a = json::array();
        for (const auto& s : scenario_catalog)
        {
            a.push_back({{"name", s.name}, {"params", s.params}, {"summary", s.summary}});
        }
        return {a.dump(2) + "\n"};
    }
    CsvWriter w("scenarios-list");
    w.row({"name", "params", "summary"});
    for (const auto& s : scenario_catalog)
    {
        w.row({std::string(s.name), std::string(s.params), std::string(s.summary)});
    }
    return {w.str()};
}

inline Output cmd_validate(const RunConfig& cfg, std::ostream& err)
{
    const Loaded l = load_input(cfg);
    ProblemData data = l.data;
    if (l.scenario)
    {
        const auto& p = l.scenario->problem;
        data = ProblemData{};
        data.dim_u = p.dim_u();
        data.L = p.L();
        if (!p.L())
        {
            data.gamma = p.gamma();
        }
        data.constraint = p.constraint();
        data.h = p.h();
        data.tol = p.tolerances();
    }
    const ValidationReport rep = validate_problem(data);
    const ProjectorReport& cr = data.constraint->report();

    Output out;
    if (cfg.format == "json")
    {
        json checks = json::array();
        for (const auto& c : rep.checks)
        {
            checks.push_back({{"check", c.name}, {"value", c.value}, {"threshold", c.threshold},
                              {"ok", c.ok}});
        }
        json j;
        j["valid"] = rep.ok();
        j["checks"] = checks;
        j["constraint"] = {{"orthogonal_projector", cr.is_orthogonal_projector},
                           {"idempotency_defect", cr.idempotency_defect},
                           {"symmetry_defect", cr.symmetry_defect},
                           {"rank", cr.rank}};
        if (rep.ok())
        {
            j["representable"] = rep.representability.representable;
        }
        out.text = j.dump(2) + "\n";
    }
    else
    {
        CsvWriter w("validate");
        w.meta("valid", yes_no(rep.ok()));
        w.meta("constraint_orthogonal_projector", yes_no(cr.is_orthogonal_projector));
        if (rep.ok())
        {
            w.meta("representable", yes_no(rep.representability.representable));
        }
        w.row({"check", "value", "threshold", "ok"});
        for (const auto& c : rep.checks)
        {
            w.row({c.name, format_double(c.value), format_double(c.threshold), yes_no(c.ok)});
        }
        w.row({"constraint_idempotency_defect", format_double(cr.idempotency_defect), "",
               yes_no(cr.is_orthogonal_projector)});
        w.row({"constraint_symmetry_defect", format_double(cr.symmetry_defect), "",
               yes_no(cr.is_orthogonal_projector)});
        out.text = w.str();
    }
    if (const Check* bad = rep.first_failure())
    {
        err << "validation failed: " << bad->message << "\n";
        out.status = bad_input;
    }
    else if (!rep.representability.representable)
    {
        err << "note: Gamma is not representable as L L^T (" << rep.representability.reason
            << ")\n";
    }
    return out;
}

inline Output cmd_sweep(const RunConfig& cfg)
{
    const ProblemInstance p = instance_of(load_input(cfg), cfg);
    const SweepReport s = alpha_sweep(p, schedule_of(cfg), cfg.jobs);
    Output out;
    out.status = s.all_singular() ? singular_only : ok;
    if (cfg.format == "json")
    {
        json j;
        j["h_norm"] = s.h_norm;
        j["records"] = sweep_json(s);
        out.text = j.dump(2) + "\n";
        return out;
    }
    CsvWriter w("sweep");
    w.meta("h_norm", format_double(s.h_norm));
    sweep_rows(w, s);
    out.text = w.str();
    return out;
}

inline Output cmd_analyze(const RunConfig& cfg)
{
    const ProblemInstance p = instance_of(load_input(cfg), cfg);
    const Analysis a = analyze(p, schedule_of(cfg), cfg.jobs);
    const Decision& d = a.decision;
    Output out;
    out.status = d.verdict == Verdict::Singular ? singular_only : ok;

    if (cfg.format == "json")
    {
        json j;
        j["verdict"] = to_string(d.verdict);
        j["decision_tol"] = d.decision_tol;
        j["h_norm"] = d.h_norm;
        j["final_alpha"] = d.final_alpha;
        j["final_norm_y"] = d.final_norm_y;
        j["final_difference"] = d.final_difference;
        j["representable"] = p.representable();
        j["constraint_is_projector"] = p.constraint().is_projector();
        if (d.witness_v)
        {
            j["witness_y"] = vector_to_json(*d.witness_y);
            j["witness_v"] = vector_to_json(*d.witness_v);
        }
        if (a.oracle)
        {
            j["oracle"] = oracle_json(*a.oracle);
        }
        if (a.agreement)
        {
            j["agreement"] = *a.agreement;
        }
        j["sweep"] = sweep_json(a.sweep);
        out.text = j.dump(2) + "\n";
        return out;
    }

    CsvWriter w("analyze");
    w.meta("verdict", to_string(d.verdict));
    w.meta("decision_tol", format_double(d.decision_tol));
    w.meta("final_alpha", format_double(d.final_alpha));
    w.meta("final_norm_y", format_double(d.final_norm_y));
    w.meta("final_difference", format_double(d.final_difference));
    w.meta("representable", yes_no(p.representable()));
    w.meta("constraint_is_projector", yes_no(p.constraint().is_projector()));
    if (a.oracle)
    {
        w.meta("oracle_decomposed", a.oracle->decomposed.solvable ? "SOLVABLE" : "NOT_SOLVABLE");
        w.meta("oracle_constrained", a.oracle->constrained.solvable ? "SOLVABLE" : "NOT_SOLVABLE");
        w.meta("oracle_distance", format_double(a.oracle->constrained.distance));
    }
    if (a.agreement)
    {
        w.meta("agreement", yes_no(*a.agreement));
    }
    w.row({"coord", "h", "witness_y", "witness_v"});
    for (Index i = 0; i < p.dim_h(); ++i)
    {
        w.row({std::to_string(i), format_double(p.h()(i)),
               d.witness_y ? format_double((*d.witness_y)(i)) : "",
               d.witness_v ? format_double((*d.witness_v)(i)) : ""});
    }
    out.text = w.str();
    return out;
}

inline Output cmd_oracle(const RunConfig& cfg)
{
    const ProblemInstance p = instance_of(load_input(cfg), cfg);
    const OracleDecision o = range_oracle(p, p.tolerances().oracle);
    if (cfg.format == "json")
    {
        return {oracle_json(o).dump(2) + "\n"};
    }
    CsvWriter w("oracle");
    w.meta("oracle_tol", format_double(p.tolerances().oracle));
    w.meta("agree", yes_no(o.agree));
    w.row({"criterion", "solvable", "residual"});
    w.row({"decomposed_h0", yes_no(o.constrained.feasible), format_double(o.decomposed.h0_residual)});
    w.row({"decomposed_hperp", yes_no(o.decomposed.hperp_residual <= p.tolerances().oracle * p.h().norm()),
           format_double(o.decomposed.hperp_residual)});
    w.row({"decomposed", yes_no(o.decomposed.solvable), ""});
    w.row({"constrained_feasibility", yes_no(o.constrained.feasible),
           format_double(o.constrained.feasibility_residual)});
    w.row({"constrained_distance", yes_no(o.constrained.solvable),
           format_double(o.constrained.distance)});
    w.row({"constrained", yes_no(o.constrained.solvable), ""});
    return {w.str()};
}

inline Output cmd_galerkin(const RunConfig& cfg)
{
    const Loaded l = load_input(cfg);
    const ProblemInstance p = instance_of(l, cfg);

    SubspaceFamily family;
    const std::string fname =
        cfg.family.value_or(l.scenario && l.scenario->family ? "scenario" : "canonical");
    if (fname == "scenario")
    {
        if (!l.scenario || !l.scenario->family)
        {
            throw InputError("this input has no built-in subspace family; use --family");
        }
        family = *l.scenario->family;
    }
    else if (fname == "sine")
    {
        family = sine_family(p.dim_h());
    }
    else if (fname == "canonical")
    {
        family = canonical_family(p.dim_h());
    }
    else
    {
        throw InputError("unknown family '" + fname + "' (sine | canonical)");
    }

    const int count = cfg.count.value_or(8);
    if (count > family.max_n)
    {
        throw InputError("--count " + std::to_string(count) + " exceeds the family's max_n = " +
                         std::to_string(family.max_n));
    }
    const auto steps = diagonal_schedule(count, cfg.alpha0.value_or(0.1), cfg.ratio.value_or(0.1));
    std::optional<Projector> target;
    if (l.scenario && l.scenario->target)
    {
        target = l.scenario->target;
    }
    else if (const auto& proj = p.constraint().as_projector())
    {
        target = *proj;
    }
    const GalerkinReport g = galerkin_sweep(p, family, steps, target, cfg.jobs);

    if (cfg.format == "json")
    {
        json recs = json::array();
        for (const auto& r : g.records)
        {
            json j;
            j["step"] = r.step;
            j["n"] = r.n;
            j["alpha"] = r.alpha;
            j["singular"] = r.singular;
            if (!r.singular)
            {
                j["residual"] = r.norm_residual;
                j["constraint_residual_n"] = r.norm_constraint_residual_n;
                if (r.norm_constraint_residual_target)
                {
                    j["constraint_residual_target"] = *r.norm_constraint_residual_target;
                }
            }
            recs.push_back(std::move(j));
        }
        json j;
        j["family"] = family.description;
        j["h_norm"] = g.h_norm;
        j["records"] = recs;
        return {j.dump(2) + "\n"};
    }

    CsvWriter w("galerkin");
    w.meta("family", family.description);
    w.meta("h_norm", format_double(g.h_norm));
    w.row({"step", "n", "alpha", "residual", "constraint_residual_n", "constraint_residual_target",
           "singular"});
    for (const auto& r : g.records)
    {
        if (r.singular)
        {
            w.row({std::to_string(r.step), std::to_string(r.n), format_double(r.alpha), "", "", "",
                   "1"});
            continue;
        }
        w.row({std::to_string(r.step), std::to_string(r.n), format_double(r.alpha),
               format_double(r.norm_residual), format_double(r.norm_constraint_residual_n),
               r.norm_constraint_residual_target ? format_double(*r.norm_constraint_residual_target)
                                                 : "",
               "0"});
    }
    return {w.str()};
}

inline Output cmd_export(const RunConfig& cfg)
{
    const ProblemInstance p = instance_of(load_input(cfg), cfg);
    return {problem_to_json(p).dump(2) + "\n"};
}

} // namespace detail

/// Execute one command. The report goes to cfg.output (or `out` when empty);
/// diagnostics go to `err`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    using namespace detail;
    try
    {
        if (cfg.format != "csv" && cfg.format != "json")
        {
            throw InputError("--format must be csv or json");
        }
        if (cfg.jobs < 1)
        {
            throw InputError("--jobs must be at least 1");
        }
        Output res;
        if (cfg.command == "scenarios-list") res = cmd_scenarios_list(cfg);
        else if (cfg.command == "validate") res = cmd_validate(cfg, err);
        else if (cfg.command == "sweep") res = cmd_sweep(cfg);
        else if (cfg.command == "analyze") res = cmd_analyze(cfg);
        else if (cfg.command == "oracle") res = cmd_oracle(cfg);
        else if (cfg.command == "galerkin") res = cmd_galerkin(cfg);
        else if (cfg.command == "export") res = cmd_export(cfg);
        else throw InputError("unknown command '" + cfg.command + "'");

        if (cfg.output.empty())
        {
            out << res.text;
        }
        else
        {
            std::ofstream f(cfg.output, std::ios::binary);
            if (!f)
            {
                throw InputError("cannot write '" + cfg.output + "'");
            }
            f << res.text;
        }
        if (res.status == singular_only)
        {
            err << "T_alpha is singular at every alpha of the schedule\n";
        }
        return res.status;
    }
    catch (const InputError& e)
    {
        err << "error: " << e.what() << "\n";
        return bad_input;
    }
    catch (const std::exception& e)
    {
        err << "internal error: " << e.what() << "\n";
        return internal_error;
    }
}

} // namespace finapprox::cli

#endif /* FINAPPROX_CLI_HPP */
