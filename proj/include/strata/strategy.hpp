#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "strata/age_profile.hpp"
#include "strata/errors.hpp"
#include "strata/params.hpp"

namespace strata {

/// Age cohorts [boundary(j-1), boundary(j)), j = 1..n, with boundaries in years.
class CohortPartition {
public:
    CohortPartition(std::vector<double> boundaries_years, std::vector<std::string> labels = {})
        : bounds_(std::move(boundaries_years)), labels_(std::move(labels))
    {
        if (bounds_.size() < 2 || bounds_.front() != 0.0) {
            throw DomainError("cohort partition needs boundaries starting at 0 and at least one cohort");
        }
        for (std::size_t j = 1; j < bounds_.size(); ++j) {
            if (!(bounds_[j] > bounds_[j - 1])) {
                throw DomainError("cohort boundaries must be strictly increasing");
            }
        }
        if (size() > 32) {
            throw DomainError("at most 32 cohorts are supported");
        }
        if (labels_.empty()) {
            for (int j = 1; j <= size(); ++j) labels_.push_back("cohort " + std::to_string(j));
        } else if (static_cast<int>(labels_.size()) != size()) {
            throw DomainError("one label per cohort required");
        }
    }

    /// {0, 6, 18, 24, 65, 90} years: preschool, school, university, working age, pensioners.
    static CohortPartition standard()
    {
        return CohortPartition({0, 6, 18, 24, 65, 90},
                               {"toddlers and preschoolers", "school students", "university students",
                                "working class", "pensioners"});
    }

    int size() const noexcept { return static_cast<int>(bounds_.size()) - 1; }
    double lower_years(int j) const { return bounds_.at(static_cast<std::size_t>(j - 1)); }
    double upper_years(int j) const { return bounds_.at(static_cast<std::size_t>(j)); }
    double lifespan_years() const { return bounds_.back(); }
    const std::string& label(int j) const { return labels_.at(static_cast<std::size_t>(j - 1)); }
    const std::vector<double>& boundaries_years() const noexcept { return bounds_; }

    /// Cohort index (1-based) of an age in years; throws outside [0, lifespan).
    int cohort_of(double age_years) const
    {
        if (!(age_years >= 0.0) || !(age_years < bounds_.back())) {
            throw DomainError("age " + std::to_string(age_years) + " years lies outside the partitioned lifespan");
        }
        auto it = std::upper_bound(bounds_.begin(), bounds_.end(), age_years);
        return static_cast<int>(it - bounds_.begin());
    }

    friend bool operator==(const CohortPartition&, const CohortPartition&) = default;

private:
    std::vector<double> bounds_;
    std::vector<std::string> labels_;
};

/// A subset of cohort indices {1..n}.
class CohortSet {
public:
    constexpr CohortSet() = default;
    CohortSet(std::initializer_list<int> cohorts)
    {
        for (int c : cohorts) insert(c);
    }

    static CohortSet all(int n)
    {
        CohortSet s;
        for (int j = 1; j <= n; ++j) s.insert(j);
        return s;
    }

    static CohortSet from_bits(std::uint32_t bits)
    {
        CohortSet s;
        s.bits_ = bits;
        return s;
    }

    /// Parses "1,2,3" (blank means the empty set).
    static CohortSet parse(const std::string& text)
    {
        CohortSet s;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char ch) { return std::isspace(ch); }),
                       item.end());
            if (item.empty()) continue;
            std::size_t used = 0;
            int c = 0;
            try {
                c = std::stoi(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != item.size()) {
                throw DomainError("invalid cohort index '" + item + "'");
            }
            s.insert(c);
        }
        return s;
    }

    void insert(int cohort)
    {
        if (cohort < 1 || cohort > 32) {
            throw DomainError("cohort index " + std::to_string(cohort) + " out of range");
        }
        bits_ |= std::uint32_t{1} << (cohort - 1);
    }

    bool contains(int cohort) const noexcept
    {
        return cohort >= 1 && cohort <= 32 && (bits_ >> (cohort - 1)) & 1u;
    }
    bool empty() const noexcept { return bits_ == 0; }
    int count() const noexcept { return std::popcount(bits_); }
    int max_index() const noexcept { return 32 - std::countl_zero(bits_); }
    bool is_all(int n) const { return *this == all(n); }
    std::uint32_t bits() const noexcept { return bits_; }

    std::vector<int> to_vector() const
    {
        std::vector<int> out;
        for (int j = 1; j <= 32; ++j)
            if (contains(j)) out.push_back(j);
        return out;
    }

    std::string to_string() const
    {
        std::string out = "{";
        for (int c : to_vector()) {
            if (out.size() > 1) out += ",";
            out += std::to_string(c);
        }
        return out + "}";
    }

    friend bool operator==(CohortSet, CohortSet) = default;

private:
    std::uint32_t bits_ = 0;
};

inline void check_within(CohortSet w, const CohortPartition& partition)
{
    if (w.max_index() > partition.size()) {
        throw DomainError("cohort set " + w.to_string() + " exceeds the " + std::to_string(partition.size()) +
                          " cohorts of the partition");
    }
}

/// Restriction scale (rho_W(.; a), rho_W(.; a), g_W(.; b)) on (beta_A, beta_I, gamma_I).
struct StrategicScale {
    CohortSet w_beta;
    CohortSet w_gamma;
    double a = 1.0;  // contact multiplier on W_beta, in [0,1]
    double b = 1.0;  // infectious-period multiplier on W_gamma, in (0,1]

    friend bool operator==(const StrategicScale&, const StrategicScale&) = default;
};

inline void check_intensity(double a, double b)
{
    if (!(a >= 0.0 && a <= 1.0)) {
        throw DomainError("contact multiplier a must lie in [0,1], got " + std::to_string(a));
    }
    if (!(b > 0.0 && b <= 1.0)) {
        throw DomainError("period multiplier b must lie in (0,1], got " + std::to_string(b));
    }
}

/// a on the cohorts in W, 1 elsewhere.
inline double rho(CohortSet w, double a, double age_years, const CohortPartition& partition)
{
    if (!(a >= 0.0 && a <= 1.0)) {
        throw DomainError("contact multiplier a must lie in [0,1]");
    }
    return w.contains(partition.cohort_of(age_years)) ? a : 1.0;
}

/// 1/b on the cohorts in W, 1 elsewhere.
inline double g(CohortSet w, double b, double age_years, const CohortPartition& partition)
{
    if (!(b > 0.0 && b <= 1.0)) {
        throw DomainError("period multiplier b must lie in (0,1]");
    }
    return w.contains(partition.cohort_of(age_years)) ? 1.0 / b : 1.0;
}

/// Cohort step function in chronological days; the last cohort extends past the lifespan.
inline AgeProfile cohort_step_profile(CohortSet w, double inside, const CohortPartition& partition)
{
    check_within(w, partition);
    std::vector<double> bps, values;
    for (int j = 1; j <= partition.size(); ++j) {
        bps.push_back(partition.lower_years(j) * days_per_year);
        values.push_back(w.contains(j) ? inside : 1.0);
    }
    return AgeProfile::piecewise_constant(std::move(bps), std::move(values), "dimensionless");
}

inline AgeProfile rho_profile(CohortSet w, double a, const CohortPartition& partition)
{
    check_intensity(a, 1.0);
    return cohort_step_profile(w, a, partition);
}

inline AgeProfile g_profile(CohortSet w, double b, const CohortPartition& partition)
{
    check_intensity(1.0, b);
    return cohort_step_profile(w, 1.0 / b, partition);
}

struct StrategyElement {
    StrategicScale scale;
    ParamSet applied;
};

inline std::vector<double> partition_breakpoints_days(const CohortPartition& partition)
{
    std::vector<double> out;
    for (double y : partition.boundaries_years()) out.push_back(y * days_per_year);
    return out;
}

/// Hadamard product of the scale with the baseline's (beta_A, beta_I, gamma_I).
inline StrategyElement apply_scale(const StrategicScale& scale, const ParamSet& baseline,
                                   const CohortPartition& partition)
{
    check_intensity(scale.a, scale.b);
    check_within(scale.w_beta, partition);
    check_within(scale.w_gamma, partition);
    const auto cuts = partition_breakpoints_days(partition);
    StrategyElement out{scale, baseline};
    const AgeProfile r = rho_profile(scale.w_beta, scale.a, partition);
    const AgeProfile gg = g_profile(scale.w_gamma, scale.b, partition);
    out.applied.beta_A = baseline.beta_A.refined(cuts) * r;
    out.applied.beta_I = baseline.beta_I.refined(cuts) * r;
    out.applied.gamma_I = baseline.gamma_I.refined(cuts) * gg;
    out.applied.beta_A.set_units(baseline.beta_A.units());
    out.applied.beta_I.set_units(baseline.beta_I.units());
    out.applied.gamma_I.set_units(baseline.gamma_I.units());
    return out;
}

namespace detail {

/// Sample ages (days) inside cohort j: starts and midpoints of the union mesh pieces.
inline std::vector<double> cohort_samples(const std::vector<double>& mesh, double lo, double hi)
{
    std::vector<double> out;
    for (std::size_t m = 0; m < mesh.size(); ++m) {
        const double s0 = mesh[m];
        if (s0 < lo || s0 >= hi) continue;
        const double s1 = m + 1 < mesh.size() ? std::min(mesh[m + 1], hi) : s0 + 2.0;
        out.push_back(s0);
        out.push_back(0.5 * (s0 + s1));
    }
    return out;
}

/// The single ratio applied/base over the samples, or 1 when base vanishes everywhere there.
inline double cohort_ratio(std::initializer_list<std::pair<const AgeProfile*, const AgeProfile*>> pairs,
                           const std::vector<double>& samples, const char* what)
{
    bool have = false;
    double ratio = 1.0;
    for (const auto& [applied, base] : pairs) {
        for (double s : samples) {
            const double b0 = (*base)(s);
            const double y = (*applied)(s);
            if (b0 == 0.0) {
                if (y != 0.0) {
                    throw NotInStrategyError(std::string(what) + " is nonzero where the baseline vanishes");
                }
                continue;
            }
            const double r = y / b0;
            if (!have) {
                ratio = r;
                have = true;
            } else if (std::abs(r - ratio) > 1e-9 * std::max(1.0, std::abs(ratio))) {
                throw NotInStrategyError(std::string(what) + " is not a cohort-constant multiple of the baseline");
            }
        }
    }
    return ratio;
}

} // namespace detail

/**
 * Recovers (W_beta, a, W_gamma, b) from a parameter set known to be a
 * cohort-constant rescaling of `baseline`. Unrestricted parts report a = 1
 * (W_beta empty) and b = 1 (W_gamma empty).
 */
inline StrategicScale recover_scale(const ParamSet& element, const ParamSet& baseline,
                                    const CohortPartition& partition)
{
    if (!satisfies_uniqueness_condition(baseline)) {
        throw NotInStrategyError("baseline violates the uniqueness condition; scales are not unique");
    }
    {
        ParamSet background = element;
        background.beta_A = baseline.beta_A;
        background.beta_I = baseline.beta_I;
        background.gamma_I = baseline.gamma_I;
        if (!(background == baseline)) {
            throw NotInStrategyError("background parameters differ from the baseline");
        }
    }
    std::vector<double> mesh = partition_breakpoints_days(partition);
    for (const AgeProfile* p : {&element.beta_A, &element.beta_I, &element.gamma_I, &baseline.beta_A,
                                &baseline.beta_I, &baseline.gamma_I}) {
        mesh = AgeProfile::merged_breakpoints(mesh, p->breakpoints());
    }

    const int n = partition.size();
    std::vector<double> rho_j(static_cast<std::size_t>(n)), g_j(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
        const double lo = partition.lower_years(j) * days_per_year;
        const double hi = j == n ? mesh.back() + 1.0 : partition.upper_years(j) * days_per_year;
        const auto samples = detail::cohort_samples(mesh, lo, hi);
        rho_j[j - 1] = detail::cohort_ratio({{&element.beta_A, &baseline.beta_A}, {&element.beta_I, &baseline.beta_I}},
                                            samples, "transmission");
        g_j[j - 1] = detail::cohort_ratio({{&element.gamma_I, &baseline.gamma_I}}, samples, "removal rate");
    }

    StrategicScale scale;
    auto collect = [&](const std::vector<double>& ratios, CohortSet& w, const char* what) {
        bool have = false;
        double common = 1.0;
        for (int j = 1; j <= n; ++j) {
            const double r = ratios[j - 1];
            if (r == 1.0) continue;
            if (!have) {
                common = r;
                have = true;
            } else if (std::abs(r - common) > 1e-9 * std::max(1.0, std::abs(common))) {
                throw NotInStrategyError(std::string(what) + " uses more than one intensity across cohorts");
            }
            w.insert(j);
        }
        return common;
    };
    const double a = collect(rho_j, scale.w_beta, "contact scale");
    const double inv_b = collect(g_j, scale.w_gamma, "testing scale");
    if (!(a >= 0.0 && a <= 1.0)) {
        throw NotInStrategyError("transmission is scaled up, outside the contact-reduction family");
    }
    if (!(inv_b >= 1.0)) {
        throw NotInStrategyError("removal rate is scaled down, outside the testing family");
    }
    scale.a = a;
    scale.b = 1.0 / inv_b;
    return scale;
}

inline StrategicScale recover_scale(const StrategyElement& element, const ParamSet& baseline,
                                    const CohortPartition& partition)
{
    return recover_scale(element.applied, baseline, partition);
}

/// Age-independent scales: each W is empty or the whole partition.
inline bool is_horizontal(const StrategicScale& scale, int n_cohorts)
{
    auto flat = [&](CohortSet w) { return w.empty() || w.is_all(n_cohorts); };
    return flat(scale.w_beta) && flat(scale.w_gamma);
}

inline bool is_age_based(const StrategicScale& scale, int n_cohorts) { return !is_horizontal(scale, n_cohorts); }

struct Interval {
    double lo;
    double hi;

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Earliest detection: one day of the default 14-day symptomatic period.
inline constexpr double default_b_min = 1.0 / 14.0;

/// Fixed cohort choice with a rectangle of admissible (a, b).
struct Substrategy {
    std::string name;
    CohortSet w_beta;
    CohortSet w_gamma;
    Interval a_range{0.0, 1.0};
    Interval b_range{default_b_min, 1.0};

    StrategicScale at(double a, double b) const { return {w_beta, w_gamma, a, b}; }

    friend bool operator==(const Substrategy&, const Substrategy&) = default;
};

inline void validate(const Substrategy& sub, const CohortPartition& partition)
{
    check_within(sub.w_beta, partition);
    check_within(sub.w_gamma, partition);
    if (!(sub.a_range.lo >= 0.0 && sub.a_range.lo <= sub.a_range.hi && sub.a_range.hi <= 1.0)) {
        throw ValidationError(sub.name + ".a_range", "must be a nonempty interval within [0,1]");
    }
    if (!(sub.b_range.lo > 0.0 && sub.b_range.lo <= sub.b_range.hi && sub.b_range.hi <= 1.0)) {
        throw ValidationError(sub.name + ".b_range", "must be a nonempty interval within (0,1]");
    }
}

inline std::string describe_cohorts(CohortSet w)
{
    static const char* ordinal[] = {"1st", "2nd", "3rd", "4th", "5th", "6th", "7th", "8th", "9th"};
    std::string out;
    const auto v = w.to_vector();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += v[i] <= 9 ? ordinal[v[i] - 1] : std::to_string(v[i]) + "th";
    }
    return out + (v.size() == 1 ? " cohort" : " cohorts");
}

inline Substrategy make_substrategy(CohortSet w_beta, CohortSet w_gamma)
{
    return {"Contact reduction: " + describe_cohorts(w_beta) + " / Testing: " + describe_cohorts(w_gamma), w_beta,
            w_gamma};
}

/// The sixteen age-based substrategies compared against horizontal lockdowns.
inline std::vector<Substrategy> standard_substrategies()
{
    return {
        make_substrategy({1, 2, 3}, {4, 5}), make_substrategy({4, 5}, {1, 2, 3}), make_substrategy({1}, {4, 5}),
        make_substrategy({4, 5}, {1}),       make_substrategy({2}, {4, 5}),       make_substrategy({4, 5}, {2}),
        make_substrategy({3}, {4, 5}),       make_substrategy({4, 5}, {3}),       make_substrategy({1}, {2}),
        make_substrategy({2}, {1}),          make_substrategy({4}, {5}),          make_substrategy({5}, {4}),
        make_substrategy({2}, {4}),          make_substrategy({4}, {2}),          make_substrategy({2}, {5}),
        make_substrategy({5}, {2}),
    };
}

/// Uniform contact reduction over every cohort, no testing.
inline Substrategy horizontal_lockdown(const CohortPartition& partition)
{
    return {"Horizontal lockdown", CohortSet::all(partition.size()), CohortSet{}, {0.0, 1.0}, {1.0, 1.0}};
}

inline nlohmann::json to_json(const Substrategy& s)
{
    return {{"label", s.name},
            {"w_beta", s.w_beta.to_vector()},
            {"w_gamma", s.w_gamma.to_vector()},
            {"a_range", {s.a_range.lo, s.a_range.hi}},
            {"b_range", {s.b_range.lo, s.b_range.hi}}};
}

inline CohortSet cohorts_from_json(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_array()) {
        throw ValidationError(field, "expected an array of cohort indices");
    }
    CohortSet s;
    for (const auto& v : j) {
        if (!v.is_number_integer()) {
            throw ValidationError(field, "expected integer cohort indices");
        }
        const int c = v.get<int>();
        if (c < 1 || c > 32) {
            throw ValidationError(field, "cohort index " + std::to_string(c) + " out of range");
        }
        s.insert(c);
    }
    return s;
}

inline Substrategy substrategy_from_json(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_object()) {
        throw ValidationError(field, "expected a substrategy object");
    }
    if (!j.contains("w_beta")) throw ValidationError(field + ".w_beta", "missing");
    if (!j.contains("w_gamma")) throw ValidationError(field + ".w_gamma", "missing");
    Substrategy s;
    s.w_beta = cohorts_from_json(j["w_beta"], field + ".w_beta");
    s.w_gamma = cohorts_from_json(j["w_gamma"], field + ".w_gamma");
    s.name = j.contains("label") && j["label"].is_string() ? j["label"].get<std::string>()
                                                          : make_substrategy(s.w_beta, s.w_gamma).name;
    auto range = [&](const char* key, Interval& target) {
        if (!j.contains(key)) return;
        const auto& r = j[key];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
            throw ValidationError(field + "." + key, "expected [lo, hi]");
        }
        target = {r[0].get<double>(), r[1].get<double>()};
    };
    range("a_range", s.a_range);
    range("b_range", s.b_range);
    return s;
}

/// Catalog document: {"substrategies": [{label, w_beta, w_gamma[, a_range, b_range]}, ...]}.
inline std::vector<Substrategy> load_substrategies(const nlohmann::json& doc, const CohortPartition& partition)
{
    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("substrategies")) {
            throw ValidationError("substrategies", "missing");
        }
        list = &doc["substrategies"];
    }
    if (!list->is_array()) {
        throw ValidationError("substrategies", "expected an array");
    }
    if (list->empty()) {
        throw ValidationError("substrategies", "catalog is empty");
    }
    std::vector<Substrategy> out;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const std::string field = "substrategies[" + std::to_string(i) + "]";
        Substrategy s = substrategy_from_json((*list)[i], field);
        try {
            validate(s, partition);
        } catch (const DomainError& e) {
            throw ValidationError(field, e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline nlohmann::json substrategies_to_json(const std::vector<Substrategy>& subs)
{
    nlohmann::json list = nlohmann::json::array();
    for (const auto& s : subs) list.push_back(to_json(s));
    return {{"substrategies", list}};
}

} // namespace strata
