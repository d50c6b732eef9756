#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "strata/comparison.hpp"
#include "strata/errors.hpp"
#include "strata/params.hpp"
#include "strata/r0.hpp"
#include "strata/service.hpp"
#include "strata/strategy.hpp"

namespace strata {

inline constexpr double default_calibration_target = 2.854;

enum ExitCode : int { exit_ok = 0, exit_input = 2, exit_numeric = 3 };

namespace cli_detail {

struct CommonOptions {
    std::string params_path;
    std::string output_path;
    std::string format;
    bool raw = false;
    double calibrate = default_calibration_target;
    bool no_calibrate = false;
    std::string substrategies_path;
    std::vector<double> grade_as{0.2, 0.5, 0.8};
};

inline void add_common(CLI::App* app, CommonOptions& o, std::vector<std::string> formats)
{
    app->add_option("--params", o.params_path, "Parameter file (JSON); defaults when omitted")
        ->check(CLI::ExistingFile);
    app->add_option("-o,--output", o.output_path, "Write output to this file instead of stdout");
    app->add_option("--format", o.format, "Output format")->check(CLI::IsMember(formats));
    app->add_flag("--raw", o.raw, "Full-precision numbers");
    auto* cal = app->add_option("--calibrate", o.calibrate, "Rescale transmission so the baseline R0 hits this value");
    app->add_flag("--no-calibrate", o.no_calibrate, "Use the transmission rates as configured")->excludes(cal);
}

inline void add_catalog(CLI::App* app, CommonOptions& o)
{
    app->add_option("--substrategies", o.substrategies_path, "Substrategy catalog (JSON)")->check(CLI::ExistingFile);
}

inline void add_grade_as(CLI::App* app, CommonOptions& o)
{
    app->add_option("--grade-a", o.grade_as, "Horizontal intensities defining the grades")->delimiter(',');
}

inline ParamSet load_baseline(const CommonOptions& o)
{
    ParamSet ps = o.params_path.empty() ? default_params() : load_params_file(o.params_path);
    if (!o.no_calibrate) {
        if (!(o.calibrate > 0.0)) {
            throw ValidationError("--calibrate", "target R0 must be positive");
        }
        ps = calibrate_baseline(ps, o.calibrate);
    }
    return ps;
}

inline std::vector<Substrategy> load_catalog(const CommonOptions& o, const CohortPartition& partition)
{
    if (o.substrategies_path.empty()) {
        return standard_substrategies();
    }
    std::ifstream in(o.substrategies_path);
    if (!in) {
        throw ValidationError(o.substrategies_path, "cannot open substrategy file");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(o.substrategies_path, std::string("malformed JSON: ") + e.what());
    }
    return load_substrategies(doc, partition);
}

/// Output sink opened before any computation so bad paths fail fast.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) {
                throw ValidationError("--output", "cannot write to " + path);
            }
            out_ = file_.get();
        }
    }
    std::ostream& stream() { return *out_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_;
};

inline std::string sci(double v, bool raw)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, raw ? "%.17g" : "%.3e", v);
    return buf;
}

inline std::string fixed(double v, bool raw)
{
    if (!raw) return format_fixed(v, 3);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Rounds to 4 significant digits, matching the 3-decimal scientific text output.
inline double round_sig(double v)
{
    if (v == 0.0 || !std::isfinite(v)) return v;
    return std::stod(sci(v, false));
}

inline Substrategy pick_row(const std::vector<Substrategy>& catalog, int row)
{
    if (row < 1 || row > static_cast<int>(catalog.size())) {
        throw ValidationError("--row", "must lie in 1.." + std::to_string(catalog.size()));
    }
    return catalog[static_cast<std::size_t>(row - 1)];
}

inline CohortSet parse_cohorts(const std::string& text, const char* flag, const CohortPartition& partition)
{
    CohortSet w;
    try {
        w = CohortSet::parse(text);
        check_within(w, partition);
    } catch (const DomainError& e) {
        throw ValidationError(flag, e.what());
    }
    return w;
}

inline Grade resolve_grade(const std::string& spec, const std::vector<Grade>& grades)
{
    for (const auto& g : grades) {
        if (g.name == spec) return g;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(spec, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != spec.size() || !(value > 0.0)) {
        throw ValidationError("--grade", "expected a grade name or a positive R0 value, got '" + spec + "'");
    }
    return {"R0=" + spec, value, std::nullopt};
}

} // namespace cli_detail

/// Entry point of the `strata` tool; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    using namespace cli_detail;
    CLI::App app{"Age-structured R0 and intervention-strategy comparison"};
    app.require_subcommand(1);
    const CohortPartition partition = CohortPartition::standard();

    CommonOptions common;

    // r0
    auto* r0_cmd = app.add_subcommand("r0", "Evaluate R0 for one strategic scale");
    add_common(r0_cmd, common, {"text", "json"});
    std::string wb, wg;
    double a = 1.0, b = 1.0;
    std::optional<double> horizontal_a;
    auto* wb_opt = r0_cmd->add_option("--wb", wb, "Cohorts with reduced contacts, e.g. 1,2,3");
    r0_cmd->add_option("--wg", wg, "Cohorts under testing, e.g. 4,5");
    auto* a_opt = r0_cmd->add_option("-a", a, "Contact multiplier on --wb cohorts, in [0,1]");
    r0_cmd->add_option("-b", b, "Infectious-period multiplier on --wg cohorts, in (0,1]");
    r0_cmd->add_option("--horizontal-a", horizontal_a, "Scale every cohort's contacts by this value")
        ->excludes(wb_opt)
        ->excludes(a_opt);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "R0 over a grid of (a, b)");
    add_common(sweep_cmd, common, {"csv", "json"});
    add_catalog(sweep_cmd, common);
    int row = 0, res = 64;
    std::string sweep_wb, sweep_wg;
    auto* row_opt = sweep_cmd->add_option("--row", row, "Substrategy row of the catalog");
    sweep_cmd->add_option("--wb", sweep_wb, "Cohorts with reduced contacts")->excludes(row_opt);
    sweep_cmd->add_option("--wg", sweep_wg, "Cohorts under testing")->excludes(row_opt);
    sweep_cmd->add_option("--res", res, "Grid points per axis (>= 2)");

    // table
    auto* table_cmd = app.add_subcommand("table", "Comparison table against the horizontal grades");
    add_common(table_cmd, common, {"md", "csv", "json"});
    add_catalog(table_cmd, common);
    add_grade_as(table_cmd, common);
    std::vector<double> grade_values;
    int table_points = 3;
    bool no_loci = false;
    table_cmd->add_option("--grades", grade_values, "Grade R0 values (instead of --grade-a)")->delimiter(',');
    table_cmd->add_option("--points", table_points, "Representative loci per covered cell");
    table_cmd->add_flag("--no-loci", no_loci, "Skip locus extraction");

    // locus
    auto* locus_cmd = app.add_subcommand("locus", "Points of a substrategy reaching a grade");
    add_common(locus_cmd, common, {"text", "csv", "json"});
    add_catalog(locus_cmd, common);
    add_grade_as(locus_cmd, common);
    int locus_row = 1, points = 3;
    std::string grade_spec;
    double tol = default_locus_tol;
    locus_cmd->add_option("--row", locus_row, "Substrategy row of the catalog")->required();
    locus_cmd->add_option("--grade", grade_spec, "Grade name (H, M, L) or R0 value")->required();
    locus_cmd->add_option("--points", points, "Number of points");
    locus_cmd->add_option("--tol", tol, "Relative tolerance on R0");

    // grades
    auto* grades_cmd = app.add_subcommand("grades", "Horizontal lockdown R0 for a = 0, 0.1, ..., 0.9");
    add_common(grades_cmd, common, {"text", "csv", "json"});

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the explorer HTTP API");
    add_common(serve_cmd, common, {"json"});
    add_catalog(serve_cmd, common);
    add_grade_as(serve_cmd, common);
    std::string host = "127.0.0.1", static_dir;
    int port = 8080;
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--static", static_dir, "Directory of UI assets to serve at /")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (r0_cmd->parsed()) {
            StrategicScale scale;
            if (horizontal_a) {
                scale = {CohortSet::all(partition.size()), parse_cohorts(wg, "--wg", partition), *horizontal_a, b};
            } else {
                scale = {parse_cohorts(wb, "--wb", partition), parse_cohorts(wg, "--wg", partition), a, b};
            }
            if (!(scale.a >= 0.0 && scale.a <= 1.0)) throw ValidationError("-a", "must lie in [0,1]");
            if (!(scale.b > 0.0 && scale.b <= 1.0)) throw ValidationError("-b", "must lie in (0,1]");
            const ParamSet baseline = load_baseline(common);
            Sink sink(common.output_path, out);
            const R0Breakdown r = evaluate(scale, baseline, partition);
            if (common.format == "json") {
                nlohmann::json j = to_json(r);
                if (!common.raw) {
                    j = {{"prefactor", round_sig(r.prefactor)},
                         {"r_a", round_sig(r.R_A)},
                         {"r_i", round_sig(r.R_I)},
                         {"r0", round_to(r.R0)}};
                }
                j["scale"] = {{"w_beta", scale.w_beta.to_vector()},
                              {"w_gamma", scale.w_gamma.to_vector()},
                              {"a", scale.a},
                              {"b", scale.b}};
                sink.stream() << j.dump(2) << '\n';
            } else {
                sink.stream() << "prefactor = " << sci(r.prefactor, common.raw) << '\n'
                              << "R_A = " << sci(r.R_A, common.raw) << '\n'
                              << "R_I = " << sci(r.R_I, common.raw) << '\n'
                              << "R0 = " << fixed(r.R0, common.raw) << '\n';
            }
        } else if (sweep_cmd->parsed()) {
            if (res < 2) throw ValidationError("--res", "grid needs at least 2 points per axis");
            const auto catalog = load_catalog(common, partition);
            const Substrategy sub = row_opt->count() ? pick_row(catalog, row)
                                                     : make_substrategy(parse_cohorts(sweep_wb, "--wb", partition),
                                                                        parse_cohorts(sweep_wg, "--wg", partition));
            const ParamSet baseline = load_baseline(common);
            Sink sink(common.output_path, out);
            const SweepGrid grid = sweep_grid(sub, baseline, res, res, partition);
            if (common.format == "json") {
                sink.stream() << to_json(grid, common.raw).dump() << '\n';
            } else {
                sink.stream() << sweep_to_csv(grid, common.raw);
            }
        } else if (table_cmd->parsed()) {
            if (table_points < 1) throw ValidationError("--points", "must be at least 1");
            const auto catalog = load_catalog(common, partition);
            const ParamSet baseline = load_baseline(common);
            Sink sink(common.output_path, out);
            const auto grades = grade_values.empty() ? build_gradation(common.grade_as, baseline, partition)
                                                     : gradation_from_values(grade_values);
            TableOptions opts;
            opts.locus_points = table_points;
            opts.with_loci = !no_loci;
            const ComparisonTable t = build_comparison_table(catalog, grades, baseline, opts, partition);
            if (common.format == "csv") {
                sink.stream() << table_to_csv(t);
            } else if (common.format == "json") {
                sink.stream() << to_json(t, common.raw).dump(2) << '\n';
            } else {
                sink.stream() << table_to_markdown(t);
            }
        } else if (locus_cmd->parsed()) {
            if (points < 1) throw ValidationError("--points", "must be at least 1");
            if (!(tol > 0.0)) throw ValidationError("--tol", "must be positive");
            const auto catalog = load_catalog(common, partition);
            const Substrategy sub = pick_row(catalog, locus_row);
            const ParamSet baseline = load_baseline(common);
            Sink sink(common.output_path, out);
            const Grade grade = resolve_grade(grade_spec, build_gradation(common.grade_as, baseline, partition));
            const auto locus = extract_locus(sub, grade, baseline, points, tol, partition);
            const double period = symptomatic_period_days(baseline);
            if (common.format == "json") {
                nlohmann::json pts = nlohmann::json::array();
                for (const auto& p : locus) pts.push_back(to_json(p, period, common.raw));
                sink.stream() << nlohmann::json{{"substrategy", sub.name}, {"grade", to_json(grade, common.raw)},
                                                {"points", pts}}
                                     .dump(2)
                              << '\n';
            } else if (common.format == "csv") {
                sink.stream() << "a,b,r0,contact_percent,detection_day\n";
                for (const auto& p : locus) {
                    sink.stream() << fixed(p.a, common.raw) << ',' << fixed(p.b, common.raw) << ','
                                  << fixed(p.r0, common.raw) << ',' << fixed(p.a * 100.0, common.raw) << ','
                                  << fixed(p.b * period, common.raw) << '\n';
                }
            } else {
                sink.stream() << sub.name << " at " << grade.name << " (R0 = " << format_fixed(grade.r0_value) << ")\n";
                for (const auto& p : locus) {
                    sink.stream() << "a = " << fixed(p.a, common.raw) << ", b = " << fixed(p.b, common.raw)
                                  << ", R0 = " << fixed(p.r0, common.raw) << "  (" << format_fixed(p.a * 100.0, 2)
                                  << "% and " << format_fixed(p.b * period, 2) << " days)\n";
                }
            }
        } else if (grades_cmd->parsed()) {
            const ParamSet baseline = load_baseline(common);
            Sink sink(common.output_path, out);
            const Substrategy horizontal = horizontal_lockdown(partition);
            std::vector<std::pair<double, double>> rows;
            for (int i = 0; i < 10; ++i) {
                const double av = i / 10.0;
                rows.emplace_back(av, evaluate_r0(horizontal, av, 1.0, baseline, partition));
            }
            if (common.format == "json") {
                nlohmann::json j = nlohmann::json::array();
                for (auto [av, r] : rows) j.push_back({{"a", av}, {"r0", common.raw ? r : round_to(r)}});
                sink.stream() << j.dump(2) << '\n';
            } else if (common.format == "csv") {
                sink.stream() << "a,r0\n";
                for (auto [av, r] : rows) sink.stream() << format_fixed(av, 1) << ',' << fixed(r, common.raw) << '\n';
            } else {
                for (auto [av, r] : rows) sink.stream() << format_fixed(av, 1) << "  " << fixed(r, common.raw) << '\n';
            }
        } else if (serve_cmd->parsed()) {
            const auto catalog = load_catalog(common, partition);
            const ParamSet baseline = load_baseline(common);
            ExplorerService service(baseline, catalog, build_gradation(common.grade_as, baseline, partition),
                                    partition);
            httplib::Server server;
            service.bind(server, static_dir);
            err << "listening on http://" << host << ':' << port << '\n';
            if (!server.listen(host, port)) {
                err << "error: cannot bind " << host << ':' << port << '\n';
                return exit_input;
            }
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.category() == ErrorCategory::input ? exit_input : exit_numeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_numeric;
    }
    return exit_ok;
}

} // namespace strata
