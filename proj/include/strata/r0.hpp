#pragma once

#include <cmath>

#include "json.hpp"
#include "strata/age_profile.hpp"
#include "strata/errors.hpp"
#include "strata/hazard.hpp"
#include "strata/params.hpp"

namespace strata {

inline constexpr double default_rel_tol = 1e-8;

struct R0Breakdown {
    double R_A = 0.0;
    double R_I = 0.0;
    double prefactor = 0.0;
    double R0 = 0.0;
};

inline nlohmann::json to_json(const R0Breakdown& r)
{
    return {{"prefactor", r.prefactor}, {"r_a", r.R_A}, {"r_i", r.R_I}, {"r0", r.R0}};
}

namespace detail {

/// The parameter profiles moved onto the integration-time axis.
struct TimeAxisProfiles {
    AgeProfile k, q, one_minus_q, chi, beta_A, beta_I, gamma_I;

    explicit TimeAxisProfiles(const ParamSet& ps)
        : k(ps.k.rescaled_ages(ps.omega)),
          q(ps.q.rescaled_ages(ps.omega)),
          one_minus_q(q.scaled(-1.0) + 1.0),
          chi(ps.chi.rescaled_ages(ps.omega)),
          beta_A(ps.beta_A.rescaled_ages(ps.omega)),
          beta_I(ps.beta_I.rescaled_ages(ps.omega)),
          gamma_I(ps.gamma_I.rescaled_ages(ps.omega))
    {
    }
};

/// The survival-weighted factors shared by R_A and R_I.
struct R0Factors {
    double latent_to_asymptomatic;   // int k q e^{-int(k+mu)}
    double latent_to_symptomatic;    // int k (1-q) e^{-int(k+mu)}
    double asymptomatic_to_symptomatic;  // int chi (1-xi) e^{-int(gamma_A xi + chi (1-xi) + mu)}
    double asymptomatic_infectivity;     // int beta_A e^{-int(gamma_A xi + chi (1-xi) + mu)}
    double symptomatic_infectivity;      // int beta_I e^{-int(gamma_I + mu)}
};

inline R0Factors r0_factors(const ParamSet& ps, double rel_tol, bool need_asymptomatic = true,
                            bool need_symptomatic = true)
{
    const TimeAxisProfiles t(ps);
    const HazardAccumulator latent{t.k, AgeProfile(ps.mu)};
    const AgeProfile chi_leaving = t.chi.scaled(1.0 - ps.xi);
    const HazardAccumulator asymptomatic{AgeProfile(ps.gamma_A * ps.xi + ps.mu), chi_leaving};
    R0Factors f{};
    f.latent_to_asymptomatic = survival_weighted_integral({t.k, t.q}, latent, rel_tol);
    if (need_asymptomatic) {
        f.asymptomatic_infectivity = survival_weighted_integral(t.beta_A, asymptomatic, rel_tol);
    }
    if (need_symptomatic) {
        f.latent_to_symptomatic = survival_weighted_integral({t.k, t.one_minus_q}, latent, rel_tol);
        f.asymptomatic_to_symptomatic = survival_weighted_integral(chi_leaving, asymptomatic, rel_tol);
        const HazardAccumulator symptomatic{t.gamma_I, AgeProfile(ps.mu)};
        f.symptomatic_infectivity = survival_weighted_integral(t.beta_I, symptomatic, rel_tol);
    }
    return f;
}

} // namespace detail

/// (mu N0 / (p + mu)) (1 + p (1 - epsilon) / (zeta epsilon + mu)).
inline double r0_prefactor(const ParamSet& ps)
{
    if (!(ps.p + ps.mu > 0.0) || !(ps.zeta * ps.epsilon + ps.mu > 0.0)) {
        throw NumericError("R0 prefactor is undefined for p + mu = 0 or zeta epsilon + mu = 0");
    }
    return ps.mu * ps.N0 / (ps.p + ps.mu) * (1.0 + ps.p * (1.0 - ps.epsilon) / (ps.zeta * ps.epsilon + ps.mu));
}

/// Asymptomatic contribution: (int k q S_E) (int beta_A S_A).
inline double compute_RA(const ParamSet& ps, double rel_tol = default_rel_tol)
{
    const auto f = detail::r0_factors(ps, rel_tol, true, false);
    return f.latent_to_asymptomatic * f.asymptomatic_infectivity;
}

/// Symptomatic contribution: [int k (1-q) S_E + (int k q S_E)(int chi (1-xi) S_A)] (int beta_I S_I).
inline double compute_RI(const ParamSet& ps, double rel_tol = default_rel_tol)
{
    const auto f = detail::r0_factors(ps, rel_tol, false, true);
    return (f.latent_to_symptomatic + f.latent_to_asymptomatic * f.asymptomatic_to_symptomatic) *
           f.symptomatic_infectivity;
}

inline R0Breakdown compute_R0(const ParamSet& ps, double rel_tol = default_rel_tol)
{
    const auto f = detail::r0_factors(ps, rel_tol);
    R0Breakdown r;
    r.R_A = f.latent_to_asymptomatic * f.asymptomatic_infectivity;
    r.R_I = (f.latent_to_symptomatic + f.latent_to_asymptomatic * f.asymptomatic_to_symptomatic) *
            f.symptomatic_infectivity;
    r.prefactor = r0_prefactor(ps);
    r.R0 = r.prefactor * (r.R_A + r.R_I);
    if (!std::isfinite(r.R0)) {
        throw NumericError("R0 is not finite");
    }
    return r;
}

/**
 * Scales beta_A and beta_I by a common factor so that R0 hits `target_R0`.
 * R0 is linear in the transmission profiles, so one step is exact.
 */
inline ParamSet calibrate_baseline(const ParamSet& ps, double target_R0, double rel_tol = default_rel_tol)
{
    if (!(target_R0 > 0.0) || !std::isfinite(target_R0)) {
        throw DomainError("calibration target must be a positive R0");
    }
    const double current = compute_R0(ps, rel_tol).R0;
    if (!(current > 0.0)) {
        throw CalibrationError("cannot calibrate: R0 of the parameter set is zero");
    }
    const double factor = target_R0 / current;
    if (factor == 1.0) {
        return ps;
    }
    ParamSet out = ps;
    out.beta_A = ps.beta_A.scaled(factor);
    out.beta_I = ps.beta_I.scaled(factor);
    return out;
}

} // namespace strata
