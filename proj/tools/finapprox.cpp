// finapprox: batch analysis of constrained operator equations.
//
//   finapprox analyze --scenario diagonal_unsolvable
//   finapprox galerkin --scenario function_space_galerkin --param M=256
//   finapprox validate --input problem.json --format json

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <finapprox/cli.hpp>

int main(int argc, char** argv)
{
    namespace fc = finapprox::cli;

    CLI::App app{"Finite-approximate solvability of L u = h with an exact constraint"};
    app.require_subcommand(1, 1);

    fc::RunConfig cfg;
    std::vector<std::string> params;
    double alpha0 = 0.0, ratio = 0.0, tol_decision = 0.0;
    int count = 0;
    std::string family;

    for (const auto& name : fc::commands())
    {
        auto* sub = app.add_subcommand(name);
        if (name == "scenarios-list")
        {
            sub->add_option("--format", cfg.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
            sub->add_option("--output", cfg.output, "report path (default: stdout)");
            continue;
        }
        sub->add_option("--scenario", cfg.scenario, "built-in scenario name");
        sub->add_option("--param", params, "scenario parameter K=V (repeatable)");
        sub->add_option("--input", cfg.input, "problem file (JSON)");
        sub->add_option("--output", cfg.output, "report path (default: stdout)");
        sub->add_option("--format", cfg.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--alpha0", alpha0, "first alpha of the schedule");
        sub->add_option("--ratio", ratio, "geometric ratio of the schedule, in (0,1)");
        sub->add_option("--count", count, "number of schedule points");
        sub->add_option("--tol-decision", tol_decision, "relative decision tolerance");
        sub->add_option("--jobs", cfg.jobs, "parallel alpha solves");
        if (name == "galerkin")
        {
            sub->add_option("--family", family, "subspace family: scenario | sine | canonical");
        }
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : fc::bad_input;
    }

    CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    auto given = [&](const char* opt) { return sub->get_option_no_throw(opt) && sub->count(opt) > 0; };
    if (given("--alpha0")) cfg.alpha0 = alpha0;
    if (given("--ratio")) cfg.ratio = ratio;
    if (given("--count")) cfg.count = count;
    if (given("--tol-decision")) cfg.tol_decision = tol_decision;
    if (given("--family")) cfg.family = family;
    for (const auto& kv : params)
    {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
        {
            std::cerr << "error: --param expects K=V, got '" << kv << "'\n";
            return fc::bad_input;
        }
        cfg.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return fc::run(cfg, std::cout, std::cerr);
}
