#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "strata/age_profile.hpp"
#include "strata/errors.hpp"

namespace strata {

inline constexpr int params_schema_version = 1;

/**
 * Full model parameterization.
 *
 * (beta_A, beta_I, gamma_I) are the intervention-sensitive parameters; the
 * rest is background that strategies never touch. Profiles are functions of
 * chronological age in days. `omega` converts age into the time variable of
 * the R0 integrals: an age profile is evaluated at age s / omega at
 * integration time s (omega = 1/360 pairs one year of age with one day).
 */
struct ParamSet {
    double N0 = 80e6;           // individuals
    double mu = 4.38356e-5;     // 1/day
    double p = 1e-3;            // 1/day
    double epsilon = 0.7;
    double zeta = 1.0 / 14.0;   // 1/day
    AgeProfile k;               // 1/day
    AgeProfile q;
    double xi = 0.5;
    AgeProfile chi;             // 1/day
    double gamma_A = 1.0 / 8.0; // 1/day
    AgeProfile beta_A;          // 1/(individual day)
    AgeProfile beta_I;          // 1/(individual day)
    AgeProfile gamma_I{1.0 / 14.0, "1/day"};
    double omega = 1.0 / days_per_year;

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

/// Average daily contacts by age; ingested in years, stored in days.
struct ContactCurve {
    AgeProfile profile;
    std::string provenance;
};

/// Transmission rate c * varpi / N0, keeping c's breakpoints.
inline AgeProfile beta_from_contacts(const ContactCurve& c, double varpi, double N0)
{
    if (!(N0 > 0.0)) {
        throw DomainError("N0 must be positive");
    }
    if (!(varpi >= 0.0 && varpi <= 1.0)) {
        throw DomainError("contact effectiveness probability must lie in [0,1]");
    }
    AgeProfile beta = c.profile.scaled(varpi / N0);
    beta.set_units("1/(individual day)");
    return beta;
}

/// Removal rate for an average residence period.
inline double gamma_from_period(double period_days)
{
    if (!(period_days > 0.0)) {
        throw DomainError("residence period must be positive");
    }
    return 1.0 / period_days;
}

/// Latent rate chi / (1 - chi) applied segment-wise (endpoint-wise on linear pieces).
inline AgeProfile k_from_chi(const AgeProfile& chi)
{
    if (chi.max_value() >= 1.0) {
        throw DomainError("chi must stay below 1 for k = chi / (1 - chi)");
    }
    if (chi.min_value() <= 0.0) {
        throw DomainError("chi must be positive for k = chi / (1 - chi)");
    }
    return chi.map_endpoints([](double x) { return x / (1.0 - x); });
}

// Default data. Age breakpoints of the incubation/latent tables are in years.

inline AgeProfile default_chi()
{
    std::vector<double> years{0, 30, 40, 50, 60, 70};
    std::vector<double> medians{5.0, 5.8, 5.8, 6.5, 4.1, 7.0};
    std::vector<double> days, rates;
    for (std::size_t j = 0; j < years.size(); ++j) {
        days.push_back(years[j] * days_per_year);
        rates.push_back(1.0 / medians[j]);
    }
    return AgeProfile::piecewise_constant(days, rates, "1/day");
}

inline AgeProfile default_k()
{
    std::vector<double> years{0, 30, 40, 50, 60, 70};
    std::vector<double> periods{4.0, 4.8, 4.8, 5.5, 3.1, 6.0};
    std::vector<double> days, rates;
    for (std::size_t j = 0; j < years.size(); ++j) {
        days.push_back(years[j] * days_per_year);
        rates.push_back(1.0 / periods[j]);
    }
    return AgeProfile::piecewise_constant(days, rates, "1/day");
}

inline std::vector<double> years_to_days(std::vector<double> years)
{
    for (auto& y : years) y *= days_per_year;
    return years;
}

/// Piecewise-linear approximation of daily contacts by age (contacts/day).
inline ContactCurve default_contacts()
{
    return {AgeProfile::piecewise_linear(years_to_days({0, 6, 12, 18, 24, 45, 60, 70, 80, 90}),
                                         {15, 16, 17, 19, 26, 26, 22, 12, 8, 6}, "contacts/day"),
            "piecewise-linear approximation of average daily contacts by age (synthetic-population study)"};
}

/// Piecewise-linear approximation of the asymptomatic proportion by age.
inline AgeProfile default_asymptomatic_q()
{
    return AgeProfile::piecewise_linear(years_to_days({0, 10, 20, 30, 40, 50, 60, 70, 90}),
                                        {0.46, 0.45, 0.40, 0.35, 0.30, 0.27, 0.23, 0.20, 0.18}, "dimensionless");
}

inline constexpr double default_varpi_A = 1.0 / 8.0;
inline constexpr double default_varpi_I = 1.0 / 3.0;

inline ParamSet default_params()
{
    ParamSet ps;
    ps.k = default_k();
    ps.chi = default_chi();
    ps.q = default_asymptomatic_q();
    const ContactCurve c = default_contacts();
    ps.beta_A = beta_from_contacts(c, default_varpi_A, ps.N0);
    ps.beta_I = beta_from_contacts(c, default_varpi_I, ps.N0);
    return ps;
}

/// True when no age has beta_A, beta_I and gamma_I all equal to zero.
inline bool satisfies_uniqueness_condition(const ParamSet& ps)
{
    auto mesh = AgeProfile::merged_breakpoints(ps.beta_A.breakpoints(), ps.beta_I.breakpoints());
    mesh = AgeProfile::merged_breakpoints(mesh, ps.gamma_I.breakpoints());
    const AgeProfile parts[] = {ps.beta_A.refined(mesh), ps.beta_I.refined(mesh), ps.gamma_I.refined(mesh)};
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        // Nonnegative linear pieces vanish either everywhere on the segment or at its start only.
        const bool common_zero = std::all_of(std::begin(parts), std::end(parts),
                                             [&](const AgeProfile& f) { return f.left(j) == 0.0; });
        if (common_zero) {
            return false;
        }
    }
    return true;
}

inline void validate(const ParamSet& ps)
{
    auto require = [](bool ok, const char* field, const char* what) {
        if (!ok) {
            throw ValidationError(field, what);
        }
    };
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    require(std::isfinite(ps.N0) && ps.N0 > 0.0, "N0", "must be positive");
    require(finite_nonneg(ps.mu), "mu", "must be a nonnegative rate");
    require(finite_nonneg(ps.p), "p", "must be a nonnegative rate");
    require(unit(ps.epsilon), "epsilon", "must lie in [0,1]");
    require(finite_nonneg(ps.zeta), "zeta", "must be a nonnegative rate");
    require(unit(ps.xi), "xi", "must lie in [0,1]");
    require(finite_nonneg(ps.gamma_A), "gamma_A", "must be a nonnegative rate");
    require(std::isfinite(ps.omega) && ps.omega > 0.0, "omega", "must be positive");
    require(ps.k.min_value() >= 0.0, "k", "must be nonnegative");
    require(ps.chi.min_value() >= 0.0, "chi", "must be nonnegative");
    require(ps.q.min_value() >= 0.0 && ps.q.max_value() <= 1.0, "q", "values must lie in [0,1]");
    require(ps.beta_A.min_value() >= 0.0, "beta_A", "must be nonnegative");
    require(ps.beta_I.min_value() >= 0.0, "beta_I", "must be nonnegative");
    require(ps.gamma_I.min_value() >= 0.0, "gamma_I", "must be nonnegative");
    require(satisfies_uniqueness_condition(ps), "beta_A/beta_I/gamma_I",
            "must not vanish simultaneously at any age");
}

inline nlohmann::json params_to_json(const ParamSet& ps)
{
    nlohmann::json j;
    j["schema_version"] = params_schema_version;
    j["N0"] = ps.N0;
    j["mu"] = ps.mu;
    j["p"] = ps.p;
    j["epsilon"] = ps.epsilon;
    j["zeta"] = ps.zeta;
    j["xi"] = ps.xi;
    j["gamma_A"] = ps.gamma_A;
    j["omega"] = ps.omega;
    j["k"] = profile_to_json(ps.k);
    j["q"] = profile_to_json(ps.q);
    j["chi"] = profile_to_json(ps.chi);
    j["beta_A"] = profile_to_json(ps.beta_A);
    j["beta_I"] = profile_to_json(ps.beta_I);
    if (ps.gamma_I.is_constant() && ps.gamma_I.segment_count() == 1 && ps.gamma_I.units() == "1/day") {
        j["gamma_I"] = ps.gamma_I.left(0);
    } else {
        j["gamma_I"] = profile_to_json(ps.gamma_I);
    }
    return j;
}

/**
 * Builds a ParamSet from a configuration document; omitted fields take the
 * default values. Transmission profiles come from `beta_A`/`beta_I` when
 * given, otherwise from `contacts` (default curve when absent) scaled by
 * `varpi_A`/`varpi_I` and N0.
 */
inline ParamSet load_params(const nlohmann::json& doc)
{
    if (!doc.is_object()) {
        throw ValidationError("(document)", "expected a JSON object");
    }
    static const char* known[] = {"schema_version", "$schema", "$comment", "N0", "mu", "p", "epsilon", "zeta",
                                  "xi", "gamma_A", "gamma_I", "omega", "k", "q", "chi", "beta_A", "beta_I",
                                  "contacts", "varpi_A", "varpi_I"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known)) {
            throw ValidationError(key, "unknown parameter");
        }
    }
    if (doc.contains("schema_version")) {
        if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != params_schema_version) {
            throw ValidationError("schema_version", "unsupported schema version");
        }
    }

    ParamSet ps = default_params();
    auto number = [&](const char* key, double& target) {
        if (!doc.contains(key)) {
            return false;
        }
        if (!doc[key].is_number()) {
            throw ValidationError(key, "expected a number");
        }
        target = doc[key].get<double>();
        return true;
    };
    auto profile = [&](const char* key, AgeProfile& target) {
        if (!doc.contains(key)) {
            return false;
        }
        target = profile_from_json(doc[key], key);
        return true;
    };

    number("N0", ps.N0);
    number("mu", ps.mu);
    number("p", ps.p);
    number("epsilon", ps.epsilon);
    number("zeta", ps.zeta);
    number("xi", ps.xi);
    number("gamma_A", ps.gamma_A);
    number("omega", ps.omega);
    profile("k", ps.k);
    profile("q", ps.q);
    profile("chi", ps.chi);
    if (doc.contains("gamma_I")) {
        if (doc["gamma_I"].is_number()) {
            ps.gamma_I = AgeProfile(doc["gamma_I"].get<double>(), "1/day");
        } else {
            ps.gamma_I = profile_from_json(doc["gamma_I"], "gamma_I");
        }
    }

    double varpi_A = default_varpi_A, varpi_I = default_varpi_I;
    number("varpi_A", varpi_A);
    number("varpi_I", varpi_I);
    if (!(varpi_A >= 0.0 && varpi_A <= 1.0)) throw ValidationError("varpi_A", "must lie in [0,1]");
    if (!(varpi_I >= 0.0 && varpi_I <= 1.0)) throw ValidationError("varpi_I", "must lie in [0,1]");
    if (!(ps.N0 > 0.0)) throw ValidationError("N0", "must be positive");

    ContactCurve contacts = default_contacts();
    if (doc.contains("contacts")) {
        contacts.profile = profile_from_json(doc["contacts"], "contacts");
        contacts.provenance = "configuration";
        if (contacts.profile.min_value() < 0.0) {
            throw ValidationError("contacts", "must be nonnegative");
        }
    }
    if (!profile("beta_A", ps.beta_A)) {
        ps.beta_A = beta_from_contacts(contacts, varpi_A, ps.N0);
    }
    if (!profile("beta_I", ps.beta_I)) {
        ps.beta_I = beta_from_contacts(contacts, varpi_I, ps.N0);
    }
    validate(ps);
    return ps;
}

inline ParamSet load_params_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError(path, "cannot open parameter file");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path, std::string("malformed JSON: ") + e.what());
    }
    return load_params(doc);
}

} // namespace strata
