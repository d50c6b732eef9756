#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "strata/errors.hpp"
#include "strata/parallel.hpp"
#include "strata/params.hpp"
#include "strata/r0.hpp"
#include "strata/strategy.hpp"

namespace strata {

struct Grade {
    std::string name;
    double r0_value = 0.0;
    std::optional<double> a;  // horizontal intensity that generated it, if any

    friend bool operator==(const Grade&, const Grade&) = default;
};

/// R0 of the baseline rescaled by `scale`.
inline R0Breakdown evaluate(const StrategicScale& scale, const ParamSet& baseline,
                            const CohortPartition& partition = CohortPartition::standard(),
                            double rel_tol = default_rel_tol)
{
    return compute_R0(apply_scale(scale, baseline, partition).applied, rel_tol);
}

inline double evaluate_r0(const Substrategy& sub, double a, double b, const ParamSet& baseline,
                          const CohortPartition& partition = CohortPartition::standard())
{
    return evaluate(sub.at(a, b), baseline, partition).R0;
}

/// "H", "M", "L" for three grades, otherwise "G1".."Gk".
inline std::vector<std::string> default_grade_names(std::size_t k)
{
    if (k == 3) return {"H", "M", "L"};
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= k; ++i) out.push_back("G" + std::to_string(i));
    return out;
}

/// Sorts ascending, names by position and rejects ties and nonpositive values.
inline std::vector<Grade> finalize_gradation(std::vector<Grade> grades, const std::vector<std::string>& names = {})
{
    if (grades.empty()) {
        throw GradabilityError("a gradation needs at least one grade");
    }
    std::stable_sort(grades.begin(), grades.end(),
                     [](const Grade& x, const Grade& y) { return x.r0_value < y.r0_value; });
    for (std::size_t i = 0; i < grades.size(); ++i) {
        if (!(grades[i].r0_value > 0.0) || !std::isfinite(grades[i].r0_value)) {
            throw GradabilityError("grade values must be positive, got " + std::to_string(grades[i].r0_value));
        }
        if (i > 0 && grades[i].r0_value == grades[i - 1].r0_value) {
            throw GradabilityError("grade values must be strictly increasing");
        }
    }
    const auto labels = names.empty() ? default_grade_names(grades.size()) : names;
    if (labels.size() != grades.size()) {
        throw GradabilityError("one name per grade required");
    }
    for (std::size_t i = 0; i < grades.size(); ++i) grades[i].name = labels[i];
    return grades;
}

/// Grades from horizontal lockdowns of intensity a (every cohort's contacts scaled by a).
inline std::vector<Grade> build_gradation(const std::vector<double>& horizontal_as, const ParamSet& baseline,
                                          const CohortPartition& partition = CohortPartition::standard(),
                                          const std::vector<std::string>& names = {})
{
    std::vector<double> sorted = horizontal_as;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw GradabilityError("horizontal intensities must be pairwise distinct");
    }
    const Substrategy horizontal = horizontal_lockdown(partition);
    std::vector<Grade> grades;
    for (double a : horizontal_as) {
        if (!(a >= 0.0 && a < 1.0)) {
            throw DomainError("horizontal intensity a must lie in [0,1), got " + std::to_string(a));
        }
        grades.push_back({"", evaluate(horizontal.at(a, 1.0), baseline, partition).R0, a});
    }
    return finalize_gradation(std::move(grades), names);
}

/// Grades given directly as R0 values.
inline std::vector<Grade> gradation_from_values(const std::vector<double>& values,
                                                const std::vector<std::string>& names = {})
{
    std::vector<Grade> grades;
    for (double v : values) grades.push_back({"", v, std::nullopt});
    return finalize_gradation(std::move(grades), names);
}

/// Lowest R0 over the substrategy's (a, b) rectangle: the (a_min, b_min) corner.
inline double min_r0(const Substrategy& sub, const ParamSet& baseline,
                     const CohortPartition& partition = CohortPartition::standard())
{
    validate(sub, partition);
    const double corner = evaluate_r0(sub, sub.a_range.lo, sub.b_range.lo, baseline, partition);
    constexpr int n = 8;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double a = sub.a_range.lo + (sub.a_range.hi - sub.a_range.lo) * i / (n - 1);
            const double b = sub.b_range.lo + (sub.b_range.hi - sub.b_range.lo) * j / (n - 1);
            const double v = evaluate_r0(sub, a, b, baseline, partition);
            if (v < corner - 1e-9 * std::max(corner, 1e-300)) {
                throw std::logic_error("R0 is not minimal at the (a_min, b_min) corner of " + sub.name);
            }
        }
    }
    return corner;
}

inline constexpr double default_cover_tol = 1e-3;
inline constexpr double borderline_band = 0.05;

/// True when some (a, b) in the substrategy reaches an R0 at or below the grade.
inline bool covers(const Substrategy& sub, const Grade& grade, const ParamSet& baseline,
                   double tol = default_cover_tol, const CohortPartition& partition = CohortPartition::standard())
{
    if (!(tol >= 0.0)) {
        throw DomainError("coverage tolerance must be nonnegative");
    }
    return min_r0(sub, baseline, partition) <= grade.r0_value * (1.0 + tol);
}

struct LocusPoint {
    double a;
    double b;
    double r0;

    friend bool operator==(const LocusPoint&, const LocusPoint&) = default;
};

inline constexpr double default_locus_tol = 1e-6;

namespace detail {

/// Bisection for f(x) = target with f nondecreasing on [lo, hi] and f(lo) <= target <= f(hi).
template <typename F>
double bisect(F&& f, double lo, double hi, double target, double tol, double* value = nullptr)
{
    double f_lo = f(lo);
    if (std::abs(f_lo - target) <= tol * target) {
        if (value) *value = f_lo;
        return lo;
    }
    double f_hi = f(hi);
    if (std::abs(f_hi - target) <= tol * target) {
        if (value) *value = f_hi;
        return hi;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm - target) <= tol * target || mid == lo || mid == hi) {
            if (value) *value = fm;
            return mid;
        }
        if (fm < target) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    const bool pick_lo = std::abs(f_lo - target) <= std::abs(f_hi - target);
    if (value) *value = pick_lo ? f_lo : f_hi;
    return pick_lo ? lo : hi;
}

/// Smallest x with f(x) >= target (f nondecreasing), to machine resolution.
template <typename F>
double first_reaching(F&& f, double lo, double hi, double target)
{
    if (f(lo) >= target) return lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (f(mid) >= target ? hi : lo) = mid;
    }
    return hi;
}

/// Largest x with f(x) <= target (f nondecreasing), to machine resolution.
template <typename F>
double last_below(F&& f, double lo, double hi, double target)
{
    if (f(hi) <= target) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (f(mid) <= target ? lo : hi) = mid;
    }
    return lo;
}

} // namespace detail

/**
 * Points (a, b) of the substrategy whose R0 equals the grade.
 *
 * The a-range where the level set crosses the rectangle is found first; points
 * sit at its 10th..90th percentiles with b solved by bisection. When that
 * range collapses (R0 independent of b), b percentiles are used and a is
 * solved instead.
 */
inline std::vector<LocusPoint> extract_locus(const Substrategy& sub, const Grade& grade, const ParamSet& baseline,
                                             int n_points = 3, double tol = default_locus_tol,
                                             const CohortPartition& partition = CohortPartition::standard())
{
    if (n_points < 1) {
        throw DomainError("n_points must be at least 1");
    }
    if (!(tol > 0.0)) {
        throw DomainError("locus tolerance must be positive");
    }
    validate(sub, partition);
    const double target = grade.r0_value;
    const double r_min = evaluate_r0(sub, sub.a_range.lo, sub.b_range.lo, baseline, partition);
    const double r_max = evaluate_r0(sub, sub.a_range.hi, sub.b_range.hi, baseline, partition);
    if (r_min > target * (1.0 + tol) || r_max < target * (1.0 - tol)) {
        throw NoLocusError("no point of '" + sub.name + "' reaches grade " + grade.name);
    }
    auto r0_at = [&](double a, double b) { return evaluate_r0(sub, a, b, baseline, partition); };
    auto percentile = [&](int i) { return n_points == 1 ? 0.5 : 0.1 + 0.8 * i / (n_points - 1); };

    const double a_lo = detail::first_reaching([&](double a) { return r0_at(a, sub.b_range.hi); }, sub.a_range.lo,
                                               sub.a_range.hi, target);
    const double a_hi = detail::last_below([&](double a) { return r0_at(a, sub.b_range.lo); }, sub.a_range.lo,
                                           sub.a_range.hi, target);

    std::vector<LocusPoint> out;
    if (a_hi - a_lo > 1e-9 * std::max(1.0, sub.a_range.hi - sub.a_range.lo)) {
        for (int i = 0; i < n_points; ++i) {
            const double a = a_lo + (a_hi - a_lo) * percentile(i);
            LocusPoint pt{a, sub.b_range.lo, 0.0};
            const double f_lo = r0_at(a, sub.b_range.lo), f_hi = r0_at(a, sub.b_range.hi);
            if (f_lo <= target && target <= f_hi) {
                pt.b = detail::bisect([&](double b) { return r0_at(a, b); }, sub.b_range.lo, sub.b_range.hi, target,
                                      tol, &pt.r0);
            } else {
                // No b works at this a: move a along the nearer b edge.
                pt.b = f_lo > target ? sub.b_range.lo : sub.b_range.hi;
                pt.a = detail::bisect([&](double x) { return r0_at(x, pt.b); }, sub.a_range.lo, sub.a_range.hi,
                                      target, tol, &pt.r0);
            }
            out.push_back(pt);
        }
    } else {
        for (int i = 0; i < n_points; ++i) {
            const double b = sub.b_range.lo + (sub.b_range.hi - sub.b_range.lo) * percentile(i);
            LocusPoint pt{sub.a_range.lo, b, 0.0};
            pt.a = detail::bisect([&](double x) { return r0_at(x, b); }, sub.a_range.lo, sub.a_range.hi, target, tol,
                                  &pt.r0);
            out.push_back(pt);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const LocusPoint& x, const LocusPoint& y) { return x.a < y.a; });
    return out;
}

struct TableCell {
    bool covered = false;
    double margin = 0.0;     // (min_r0 - grade) / grade
    bool borderline = false; // |margin| within the borderline band
    std::vector<LocusPoint> loci;
};

/// Rows are substrategies (epidemiological coverage), columns grades (social coverage).
struct ComparisonTable {
    std::vector<Substrategy> rows;
    std::vector<Grade> cols;
    std::vector<double> row_min_r0;
    std::vector<std::vector<TableCell>> cells;
    std::vector<double> row_coverage;
    std::vector<double> col_coverage;
    double total_coverage = 0.0;
    double tol = default_cover_tol;
    double period_days = 14.0;  // baseline symptomatic period, for display

    int covered_count() const
    {
        int n = 0;
        for (const auto& row : cells)
            for (const auto& c : row) n += c.covered ? 1 : 0;
        return n;
    }
};

/// Row, column and total fractions of covered cells.
inline void compute_coverage(ComparisonTable& t)
{
    const std::size_t l = t.cells.size();
    const std::size_t k = t.cols.size();
    t.row_coverage.assign(l, 0.0);
    t.col_coverage.assign(k, 0.0);
    std::size_t total = 0;
    std::vector<std::size_t> col_counts(k, 0);
    for (std::size_t i = 0; i < l; ++i) {
        std::size_t row_count = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (t.cells[i][j].covered) {
                ++row_count;
                ++col_counts[j];
            }
        }
        total += row_count;
        t.row_coverage[i] = static_cast<double>(row_count) / static_cast<double>(k);
    }
    for (std::size_t j = 0; j < k; ++j) t.col_coverage[j] = static_cast<double>(col_counts[j]) / static_cast<double>(l);
    t.total_coverage = static_cast<double>(total) / static_cast<double>(l * k);
}

/// Baseline symptomatic infectious period 1/gamma_I at age 0, in days.
inline double symptomatic_period_days(const ParamSet& baseline)
{
    const double g0 = baseline.gamma_I(0.0);
    if (!(g0 > 0.0)) {
        throw NumericError("symptomatic removal rate vanishes at age 0");
    }
    return 1.0 / g0;
}

struct TableOptions {
    double tol = default_cover_tol;
    int locus_points = 3;
    double locus_tol = default_locus_tol;
    bool with_loci = true;
};

inline ComparisonTable build_comparison_table(const std::vector<Substrategy>& subs, const std::vector<Grade>& grades,
                                              const ParamSet& baseline, const TableOptions& opts = {},
                                              const CohortPartition& partition = CohortPartition::standard())
{
    if (subs.empty()) {
        throw DomainError("comparison table needs at least one substrategy");
    }
    if (grades.empty()) {
        throw DomainError("comparison table needs at least one grade");
    }
    for (std::size_t j = 1; j < grades.size(); ++j) {
        if (!(grades[j].r0_value > grades[j - 1].r0_value)) {
            throw GradabilityError("grades must be sorted in strictly ascending order");
        }
    }
    if (!(opts.tol >= 0.0)) {
        throw DomainError("coverage tolerance must be nonnegative");
    }
    ComparisonTable t;
    t.rows = subs;
    t.cols = grades;
    t.tol = opts.tol;
    t.period_days = symptomatic_period_days(baseline);
    const std::size_t l = subs.size(), k = grades.size();
    t.row_min_r0.assign(l, 0.0);
    t.cells.assign(l, std::vector<TableCell>(k));
    parallel_for(l, [&](std::size_t i) { t.row_min_r0[i] = min_r0(subs[i], baseline, partition); });
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            TableCell& c = t.cells[i][j];
            const double g = grades[j].r0_value;
            c.covered = t.row_min_r0[i] <= g * (1.0 + opts.tol);
            c.margin = (t.row_min_r0[i] - g) / g;
            c.borderline = std::abs(c.margin) <= borderline_band;
        }
    }
    if (opts.with_loci) {
        parallel_for(l * k, [&](std::size_t idx) {
            const std::size_t i = idx / k, j = idx % k;
            TableCell& c = t.cells[i][j];
            if (c.covered) {
                c.loci = extract_locus(subs[i], grades[j], baseline, opts.locus_points, opts.locus_tol, partition);
            }
        });
    }
    compute_coverage(t);
    return t;
}

struct SweepGrid {
    std::string substrategy;
    std::vector<double> a_values;
    std::vector<double> b_values;
    std::vector<std::vector<double>> r0;  // r0[i][j] at (a_values[i], b_values[j])
    std::vector<double> contact_percent;  // a * 100
    std::vector<double> detection_days;   // b times the baseline symptomatic period
};

inline std::vector<double> uniform_grid(Interval range, int n)
{
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[i] = i + 1 == n ? range.hi : range.lo + (range.hi - range.lo) * i / (n - 1);
    return out;
}

inline SweepGrid sweep_grid(const Substrategy& sub, const ParamSet& baseline, int na, int nb,
                            const CohortPartition& partition = CohortPartition::standard())
{
    if (na < 2 || nb < 2) {
        throw DomainError("sweep grids need at least 2 points per axis");
    }
    validate(sub, partition);
    SweepGrid grid;
    grid.substrategy = sub.name;
    grid.a_values = uniform_grid(sub.a_range, na);
    grid.b_values = uniform_grid(sub.b_range, nb);
    grid.r0.assign(static_cast<std::size_t>(na), std::vector<double>(static_cast<std::size_t>(nb)));
    parallel_for(static_cast<std::size_t>(na) * nb, [&](std::size_t idx) {
        const std::size_t i = idx / nb, j = idx % nb;
        grid.r0[i][j] = evaluate_r0(sub, grid.a_values[i], grid.b_values[j], baseline, partition);
    });
    const double period = symptomatic_period_days(baseline);
    for (double a : grid.a_values) grid.contact_percent.push_back(a * 100.0);
    for (double b : grid.b_values) grid.detection_days.push_back(b * period);
    return grid;
}

// ---- formatting and export ----

/// Percentage truncated to 2 decimals with trailing zeros dropped: 2/3 -> "66.66%".
inline std::string format_percent(double fraction)
{
    const double hundredths = std::floor(fraction * 10000.0 + 1e-7);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", hundredths / 100.0);
    std::string s = buf;
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s + "%";
}

inline std::string format_fixed(double v, int decimals = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

inline double round_to(double v, int decimals = 3)
{
    const double f = std::pow(10.0, decimals);
    const double r = std::round(v * f) / f;
    return r == 0.0 ? 0.0 : r;
}

namespace detail {

inline std::string csv_quote(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string grade_header(const Grade& g) { return g.name + " (" + format_fixed(g.r0_value) + ")"; }

} // namespace detail

inline std::string table_to_markdown(const ComparisonTable& t)
{
    std::ostringstream os;
    os << "| Substrategy |";
    for (const auto& g : t.cols) os << ' ' << detail::grade_header(g) << " |";
    os << " Epidemiological coverage |\n|---|";
    for (std::size_t j = 0; j < t.cols.size(); ++j) os << ":---:|";
    os << ":---:|\n";
    bool any_borderline = false;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        os << "| " << t.rows[i].name << " |";
        for (const auto& c : t.cells[i]) {
            os << ' ' << (c.covered ? "✓" : "✗") << (c.borderline ? "*" : "") << " |";
            any_borderline = any_borderline || c.borderline;
        }
        os << ' ' << format_percent(t.row_coverage[i]) << " |\n";
    }
    os << "| Social coverage |";
    for (double c : t.col_coverage) os << ' ' << format_percent(c) << " |";
    os << ' ' << format_percent(t.total_coverage) << " |\n\n";
    os << "Total coverage: " << format_percent(t.total_coverage) << "\n";
    if (any_borderline) {
        os << "\n\\* minimum R0 within " << format_percent(borderline_band) << " of the grade\n";
    }
    bool header = false;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < t.cols.size(); ++j) {
            const auto& loci = t.cells[i][j].loci;
            if (loci.empty()) continue;
            if (!header) {
                os << "\n## Representative loci (contact %, detection day)\n\n";
                header = true;
            }
            os << "- row " << i + 1 << ", " << t.cols[j].name << ":";
            for (std::size_t p = 0; p < loci.size(); ++p) {
                os << (p ? ";" : "") << ' ' << format_fixed(loci[p].a * 100.0, 2) << "% and "
                   << format_fixed(loci[p].b * t.period_days, 2) << " days";
            }
            os << '\n';
        }
    }
    return os.str();
}

inline std::string table_to_csv(const ComparisonTable& t)
{
    std::ostringstream os;
    os << "substrategy";
    for (const auto& g : t.cols) os << ',' << g.name;
    os << ",min_r0,coverage\n";
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        os << detail::csv_quote(t.rows[i].name);
        for (const auto& c : t.cells[i]) os << ',' << (c.covered ? "1" : "0");
        os << ',' << format_fixed(t.row_min_r0[i]) << ',' << format_percent(t.row_coverage[i]) << '\n';
    }
    os << "Social coverage";
    for (double c : t.col_coverage) os << ',' << format_percent(c);
    os << ",," << format_percent(t.total_coverage) << '\n';
    return os.str();
}

inline nlohmann::json to_json(const Grade& g, bool raw = true)
{
    nlohmann::json j = {{"name", g.name}, {"r0", raw ? g.r0_value : round_to(g.r0_value)}};
    j["a"] = g.a ? nlohmann::json(*g.a) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const LocusPoint& p, double period_days, bool raw = true)
{
    auto r = [&](double v) { return raw ? v : round_to(v); };
    return {{"a", r(p.a)},
            {"b", r(p.b)},
            {"r0", r(p.r0)},
            {"contact_percent", r(p.a * 100.0)},
            {"detection_day", r(p.b * period_days)}};
}

inline nlohmann::json to_json(const ComparisonTable& t, bool raw = true)
{
    const double period_days = t.period_days;
    auto r = [&](double v) { return raw ? v : round_to(v); };
    nlohmann::json grades = nlohmann::json::array();
    for (const auto& g : t.cols) grades.push_back(to_json(g, raw));
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& c : t.cells[i]) {
            nlohmann::json loci = nlohmann::json::array();
            for (const auto& p : c.loci) loci.push_back(to_json(p, period_days, raw));
            cells.push_back({{"covered", c.covered}, {"margin", r(c.margin)}, {"borderline", c.borderline},
                             {"loci", loci}});
        }
        rows.push_back({{"substrategy", to_json(t.rows[i])},
                        {"min_r0", r(t.row_min_r0[i])},
                        {"cells", cells},
                        {"coverage", t.row_coverage[i]},
                        {"coverage_text", format_percent(t.row_coverage[i])}});
    }
    nlohmann::json col_text = nlohmann::json::array();
    for (double c : t.col_coverage) col_text.push_back(format_percent(c));
    return {{"grades", grades},
            {"rows", rows},
            {"col_coverage", t.col_coverage},
            {"col_coverage_text", col_text},
            {"total_coverage", t.total_coverage},
            {"total_coverage_text", format_percent(t.total_coverage)},
            {"tol", t.tol},
            {"borderline_band", borderline_band}};
}

inline nlohmann::json to_json(const SweepGrid& g, bool raw = true)
{
    auto r = [&](const std::vector<double>& v) {
        if (raw) return v;
        std::vector<double> out;
        for (double x : v) out.push_back(round_to(x));
        return out;
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : g.r0) rows.push_back(r(row));
    return {{"substrategy", g.substrategy},
            {"a_values", r(g.a_values)},
            {"b_values", r(g.b_values)},
            {"contact_percent", r(g.contact_percent)},
            {"detection_days", r(g.detection_days)},
            {"r0", rows}};
}

/// Matrix with a along rows and b along columns; header row holds b, first column a.
inline std::string sweep_to_csv(const SweepGrid& g, bool raw = false)
{
    auto num = [&](double v) {
        if (!raw) return format_fixed(v);
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "a\\b";
    for (double b : g.b_values) os << ',' << num(b);
    os << '\n';
    for (std::size_t i = 0; i < g.a_values.size(); ++i) {
        os << num(g.a_values[i]);
        for (double v : g.r0[i]) os << ',' << num(v);
        os << '\n';
    }
    return os.str();
}

} // namespace strata
