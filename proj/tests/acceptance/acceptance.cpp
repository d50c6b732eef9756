// Acceptance suite: one PASS/FAIL line per primary criterion; exit status 1 if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "strata/strata.hpp"

using namespace strata;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        o.pass = false;
        o.detail += " (over the " + std::to_string(static_cast<int>(budget_s)) + " s budget)";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s  %-28s %.3f s  %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
}

// Published horizontal-lockdown table, a = 0, 0.1, ..., 0.9.
constexpr std::array<double, 10> published_linearity{0, 0.285, 0.571, 0.856, 1.141, 1.427, 1.712, 1.998, 2.283, 2.569};

// Published coverage pattern (H, M, L) for the sixteen catalog rows.
constexpr std::array<std::array<int, 3>, 16> published_pattern{{{1, 1, 1}, {1, 1, 1}, {0, 1, 1}, {1, 1, 1},
                                                                {0, 1, 1}, {0, 1, 1}, {0, 0, 1}, {0, 0, 1},
                                                                {1, 1, 1}, {1, 1, 1}, {0, 0, 1}, {0, 0, 1},
                                                                {0, 1, 1}, {0, 1, 1}, {0, 0, 1}, {0, 1, 1}}};

double closed_form(const ParamSet& ps)
{
    const double k = ps.k(0), q = ps.q(0), chi = ps.chi(0), bA = ps.beta_A(0), bI = ps.beta_I(0),
                 gI = ps.gamma_I(0);
    const double pre = ps.mu * ps.N0 / (ps.p + ps.mu) * (1 + ps.p * (1 - ps.epsilon) / (ps.zeta * ps.epsilon + ps.mu));
    const double exitA = ps.gamma_A * ps.xi + chi * (1 - ps.xi) + ps.mu;
    const double toA = k * q / (k + ps.mu);
    const double toI = k * (1 - q) / (k + ps.mu) + toA * chi * (1 - ps.xi) / exitA;
    return pre * (toA * bA / exitA + toI * bI / (gI + ps.mu));
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

} // namespace

int main()
{
    const CohortPartition part = CohortPartition::standard();
    ParamSet baseline;

    criterion("baseline anchor", 1.0, [&] {
        baseline = calibrate_baseline(default_params(), 2.854);
        const auto r = compute_R0(baseline);
        const bool ok = std::abs(r.R0 - 2.854) <= 1e-6 * 2.854 && r.R_A > 0 && r.R_I > 0;
        return Outcome{ok, "R0 = " + fmt("%.9f", r.R0) + ", R_A = " + fmt("%.3e", r.R_A) + ", R_I = " +
                               fmt("%.3e", r.R_I)};
    });

    criterion("linearity table", 2.0, [&] {
        const Substrategy h = horizontal_lockdown(part);
        double worst = 0;
        for (int i = 0; i < 10; ++i) {
            const double v = evaluate_r0(h, i / 10.0, 1.0, baseline, part);
            worst = std::max(worst, std::abs(v - published_linearity[i]));
        }
        return Outcome{worst <= 1e-3, "max |R0 - table| = " + fmt("%.2e", worst)};
    });

    criterion("closed-form oracle", 10.0, [&] {
        std::mt19937_64 rng(20240521);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            ParamSet ps;
            ps.N0 = 1e4 + 1e8 * u(rng);
            ps.mu = 1e-6 + 1e-3 * u(rng);
            ps.p = 1e-2 * u(rng);
            ps.epsilon = u(rng);
            ps.zeta = 0.01 + 0.2 * u(rng);
            ps.k = AgeProfile(0.05 + u(rng));
            ps.q = AgeProfile(u(rng));
            ps.xi = u(rng);
            ps.chi = AgeProfile(0.05 + u(rng));
            ps.gamma_A = 0.02 + u(rng);
            ps.beta_A = AgeProfile(1e-8 * u(rng));
            ps.beta_I = AgeProfile(1e-8 * (0.01 + u(rng)));
            ps.gamma_I = AgeProfile(0.02 + u(rng));
            const double expect = closed_form(ps);
            worst = std::max(worst, std::abs(compute_R0(ps).R0 - expect) / expect);
        }
        return Outcome{worst <= 1e-7, "max relative error " + fmt("%.2e", worst) + " over 1000 sets"};
    });

    criterion("monotonicity", 60.0, [&] {
        int violations = 0, checked = 0;
        for (const auto& sub : standard_substrategies()) {
            const auto g = sweep_grid(sub, baseline, 16, 16, part);
            for (std::size_t i = 0; i < 16; ++i) {
                for (std::size_t j = 0; j < 16; ++j) {
                    if (i + 1 < 16) {
                        ++checked;
                        violations += g.r0[i + 1][j] < g.r0[i][j];
                    }
                    if (j + 1 < 16) {
                        ++checked;
                        violations += g.r0[i][j + 1] < g.r0[i][j];
                    }
                }
            }
        }
        return Outcome{violations == 0,
                       std::to_string(violations) + " decreasing steps out of " + std::to_string(checked)};
    });

    ComparisonTable table;
    criterion("coverage matrix", 300.0, [&] {
        const auto grades = build_gradation({0.2, 0.5, 0.8}, baseline, part);
        table = build_comparison_table(standard_substrategies(), grades, baseline, {}, part);
        int matches = 0, unflagged = 0;
        std::string flips;
        for (std::size_t i = 0; i < 16; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                const auto& c = table.cells[i][j];
                if (c.covered == (published_pattern[i][j] == 1)) {
                    ++matches;
                } else {
                    flips += " r" + std::to_string(i + 1) + table.cols[j].name;
                    unflagged += c.borderline ? 0 : 1;
                }
            }
        }
        const std::string cols = format_percent(table.col_coverage[0]) + "/" + format_percent(table.col_coverage[1]) +
                                 "/" + format_percent(table.col_coverage[2]);
        const bool ok = matches >= 44 && unflagged == 0 && cols == "31.25%/68.75%/100%" &&
                        format_percent(table.total_coverage) == "66.66%";
        return Outcome{ok, std::to_string(matches) + "/48 cells match, columns " + cols + ", total " +
                               format_percent(table.total_coverage) + (flips.empty() ? "" : ", flips:" + flips)};
    });

    criterion("locus self-consistency", 300.0, [&] {
        int points = 0, bad = 0, cells = 0;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            for (std::size_t j = 0; j < table.cols.size(); ++j) {
                const auto& c = table.cells[i][j];
                if (!c.covered) continue;
                ++cells;
                bad += c.loci.size() == 3 ? 0 : 1;
                const double g = table.cols[j].r0_value;
                for (const auto& p : c.loci) {
                    ++points;
                    const auto applied = apply_scale(table.rows[i].at(p.a, p.b), baseline, part).applied;
                    bad += std::abs(compute_R0(applied).R0 - g) <= 1e-3 * g ? 0 : 1;
                }
            }
        }
        return Outcome{cells > 0 && bad == 0, std::to_string(points) + " points over " + std::to_string(cells) +
                                                  " covered cells, " + std::to_string(bad) + " off target"};
    });

    criterion("scale round-trip", 60.0, [&] {
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<unsigned> bits(0, 31);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int bad = 0;
        double worst = 0;
        for (int i = 0; i < 500; ++i) {
            StrategicScale s{CohortSet::from_bits(bits(rng)), CohortSet::from_bits(bits(rng)), u(rng), 1.0 - u(rng)};
            if (s.w_beta.empty()) s.a = 1.0;
            if (s.w_gamma.empty()) s.b = 1.0;
            const auto back = recover_scale(apply_scale(s, baseline, part), baseline, part);
            const double err = std::max(std::abs(back.a - s.a), std::abs(back.b - s.b));
            worst = std::max(worst, err);
            bad += (back.w_beta == s.w_beta && back.w_gamma == s.w_gamma && err <= 1e-12) ? 0 : 1;
        }
        return Outcome{bad == 0, std::to_string(bad) + "/500 mismatches, max |d(a,b)| = " + fmt("%.1e", worst)};
    });

    std::printf("%s\n", failures == 0 ? "all primary criteria passed" : "some primary criteria failed");
    return failures == 0 ? 0 : 1;
}
