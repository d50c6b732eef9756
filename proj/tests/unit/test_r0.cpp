#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "strata/r0.hpp"

using namespace strata;

namespace {

struct Constants {
    double N0, mu, p, eps, zeta, k, q, xi, chi, gA, bA, bI, gI;
};

ParamSet from_constants(const Constants& c)
{
    ParamSet ps;
    ps.N0 = c.N0;
    ps.mu = c.mu;
    ps.p = c.p;
    ps.epsilon = c.eps;
    ps.zeta = c.zeta;
    ps.k = AgeProfile(c.k);
    ps.q = AgeProfile(c.q);
    ps.xi = c.xi;
    ps.chi = AgeProfile(c.chi);
    ps.gamma_A = c.gA;
    ps.beta_A = AgeProfile(c.bA);
    ps.beta_I = AgeProfile(c.bI);
    ps.gamma_I = AgeProfile(c.gI);
    return ps;
}

double closed_form(const Constants& c)
{
    const double pre = c.mu * c.N0 / (c.p + c.mu) * (1 + c.p * (1 - c.eps) / (c.zeta * c.eps + c.mu));
    const double exitA = c.gA * c.xi + c.chi * (1 - c.xi) + c.mu;
    const double toA = c.k * c.q / (c.k + c.mu);
    const double toI = c.k * (1 - c.q) / (c.k + c.mu) + toA * c.chi * (1 - c.xi) / exitA;
    return pre * (toA * c.bA / exitA + toI * c.bI / (c.gI + c.mu));
}

// Survival-weighted integral on n equal cells of [0, L] whose edges include every
// breakpoint: two-point Gauss per cell, hazard integrated exactly as a linear piece.
template <typename W, typename H>
double cellwise_survival(W&& w, H&& h, double L, int n)
{
    const double dt = L / n, g = 0.5 / std::sqrt(3.0);
    double acc = 0.0, cum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t0 = i * dt, tm = t0 + 0.5 * dt;
        const double h0 = h(t0), h1 = 2.0 * h(tm) - h0;  // left limit at the cell end
        for (double x : {tm - g * dt, tm + g * dt}) {
            const double hx = h(x);
            acc += 0.5 * dt * w(x) * std::exp(-(cum + 0.5 * (h0 + hx) * (x - t0)));
        }
        cum += 0.5 * (h0 + h1) * dt;
    }
    return acc;
}

} // namespace

TEST(R0, ConstantParametersMatchClosedForm)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Constants c{1e3 + 1e8 * u(rng), 1e-5 + 1e-3 * u(rng), 1e-2 * u(rng), u(rng), 0.01 + 0.2 * u(rng),
                          0.05 + 0.5 * u(rng), u(rng), u(rng), 0.05 + 0.5 * u(rng), 0.05 + 0.5 * u(rng),
                          1e-9 * u(rng), 1e-9 * u(rng), 0.02 + 0.3 * u(rng)};
        const double expect = closed_form(c);
        EXPECT_NEAR(compute_R0(from_constants(c)).R0, expect, 1e-9 * expect) << i;
    }
}

TEST(R0, PiecewiseParametersMatchDirectQuadrature)
{
    ParamSet ps = default_params();
    ps.omega = 1.0;  // ages and integration time coincide
    ps.k = AgeProfile::piecewise_constant({0, 3, 8}, {0.3, 0.15, 0.4});
    ps.q = AgeProfile::piecewise_linear({0, 10}, {0.6, 0.2});
    ps.chi = AgeProfile::piecewise_constant({0, 5}, {0.2, 0.1});
    ps.beta_A = AgeProfile::piecewise_linear({0, 6, 12}, {1e-8, 3e-8, 2e-8});
    ps.beta_I = ps.beta_A.scaled(2.0);
    ps.gamma_I = AgeProfile::piecewise_constant({0, 9}, {0.05, 0.2});
    const R0Breakdown r = compute_R0(ps, 1e-11);

    const double mu = ps.mu, xi = ps.xi, gA = ps.gamma_A;
    const double L = 400.0;
    const int n = 200000;
    auto hE = [&](double s) { return ps.k(s) + mu; };
    auto hA = [&](double s) { return gA * xi + ps.chi(s) * (1 - xi) + mu; };
    auto hI = [&](double s) { return ps.gamma_I(s) + mu; };
    const double EA = cellwise_survival([&](double s) { return ps.k(s) * ps.q(s); }, hE, L, n);
    const double EI = cellwise_survival([&](double s) { return ps.k(s) * (1 - ps.q(s)); }, hE, L, n);
    const double AI = cellwise_survival([&](double s) { return ps.chi(s) * (1 - xi); }, hA, L, n);
    const double bA = cellwise_survival([&](double s) { return ps.beta_A(s); }, hA, L, n);
    const double bI = cellwise_survival([&](double s) { return ps.beta_I(s); }, hI, L, n);
    EXPECT_NEAR(r.R_A, EA * bA, 1e-6 * EA * bA);
    EXPECT_NEAR(r.R_I, (EI + EA * AI) * bI, 1e-6 * (EI + EA * AI) * bI);
}

TEST(R0, OmegaOnlyRescalesTheAgeAxis)
{
    const ParamSet ps = default_params();
    ParamSet stretched = ps;
    stretched.omega = 1.0;
    for (AgeProfile* p : {&stretched.k, &stretched.q, &stretched.chi, &stretched.beta_A, &stretched.beta_I,
                          &stretched.gamma_I}) {
        *p = p->rescaled_ages(ps.omega);
    }
    EXPECT_NEAR(compute_R0(stretched).R0, compute_R0(ps).R0, 1e-9 * compute_R0(ps).R0);
}

TEST(R0, BreakdownIsConsistent)
{
    const ParamSet ps = default_params();
    const auto r = compute_R0(ps);
    EXPECT_GT(r.R_A, 0);
    EXPECT_GT(r.R_I, 0);
    EXPECT_NEAR(r.R0, r.prefactor * (r.R_A + r.R_I), 1e-15 * r.R0);
    EXPECT_NEAR(compute_RA(ps), r.R_A, 1e-15 * r.R_A);
    EXPECT_NEAR(compute_RI(ps), r.R_I, 1e-15 * r.R_I);
}

TEST(R0, PrefactorWithoutVaccinationIsN0)
{
    ParamSet ps = default_params();
    ps.p = 0.0;
    EXPECT_DOUBLE_EQ(r0_prefactor(ps), ps.N0);
    ps.mu = 0.0;
    EXPECT_THROW(r0_prefactor(ps), NumericError);
}

TEST(R0, ExtremeAsymptomaticFractions)
{
    ParamSet ps = default_params();
    ps.q = AgeProfile(0.0);
    EXPECT_EQ(compute_RA(ps), 0.0);
    ps.q = AgeProfile(1.0);
    ps.xi = 1.0;
    EXPECT_EQ(compute_RI(ps), 0.0);
}

TEST(R0, LinearInTransmission)
{
    const ParamSet ps = default_params();
    ParamSet doubled = ps;
    doubled.beta_A = ps.beta_A.scaled(2.0);
    doubled.beta_I = ps.beta_I.scaled(2.0);
    EXPECT_NEAR(compute_R0(doubled).R0, 2.0 * compute_R0(ps).R0, 1e-12 * compute_R0(ps).R0);
}

TEST(Calibration, HitsTargetAndIsIdempotent)
{
    const ParamSet cal = calibrate_baseline(default_params(), 2.854);
    EXPECT_NEAR(compute_R0(cal).R0, 2.854, 1e-9);
    const ParamSet again = calibrate_baseline(cal, 2.854);
    EXPECT_NEAR(again.beta_A(0), cal.beta_A(0), 1e-12 * cal.beta_A(0));
    const ParamSet twice = calibrate_baseline(cal, 2 * 2.854);
    EXPECT_NEAR(twice.beta_I(3600), 2 * cal.beta_I(3600), 1e-9 * cal.beta_I(3600));
}

TEST(Calibration, Errors)
{
    ParamSet ps = default_params();
    EXPECT_THROW(calibrate_baseline(ps, 0.0), DomainError);
    ps.beta_A = AgeProfile(0.0);
    ps.beta_I = AgeProfile(0.0);
    EXPECT_THROW(calibrate_baseline(ps, 2.0), CalibrationError);
}

TEST(R0, DivergentSurvivalIsReported)
{
    ParamSet ps = default_params();
    ps.mu = 0.0;
    ps.p = 0.0;
    ps.gamma_I = AgeProfile(0.0);
    EXPECT_THROW(compute_R0(ps), ConvergenceError);
}
