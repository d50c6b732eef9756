#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

#include "strata/age_profile.hpp"
#include "strata/errors.hpp"

namespace strata {

/**
 * Cumulative integral H(s) = int_0^s h(tau) dtau of a piecewise-linear hazard.
 *
 * H is stored exactly at the hazard's breakpoints; in between it is the
 * quadratic antiderivative of the linear piece, so evaluation carries no
 * quadrature error.
 */
class HazardAccumulator {
public:
    explicit HazardAccumulator(AgeProfile hazard) : hazard_(std::move(hazard)) { accumulate(); }

    /// Hazard equal to the sum of `terms`.
    explicit HazardAccumulator(std::span<const AgeProfile> terms) : hazard_(sum(terms)) { accumulate(); }

    HazardAccumulator(std::initializer_list<AgeProfile> terms)
        : HazardAccumulator(std::span<const AgeProfile>(terms.begin(), terms.size()))
    {
    }

    const AgeProfile& integrand() const noexcept { return hazard_; }

    double operator()(double s) const
    {
        if (!(s >= 0.0)) {
            throw DomainError("cumulative hazard requested at negative time " + std::to_string(s));
        }
        const std::size_t j = hazard_.segment_index(s);
        return cumulative_[j] + increment(j, s - hazard_.breakpoint(j));
    }

    /// H at the start of hazard segment j.
    double at_segment_start(std::size_t j) const { return cumulative_[j]; }

    /// int_{b_j}^{b_j + dx} h, with b_j the start of segment j and dx within the segment.
    double increment(std::size_t j, double dx) const
    {
        const double l = hazard_.left(j);
        if (hazard_.segment_is_flat(j)) {
            return l * dx;
        }
        const double width = hazard_.segment_end(j) - hazard_.breakpoint(j);
        const double slope = (hazard_.right(j) - l) / width;
        return dx * (l + 0.5 * slope * dx);
    }

private:
    static AgeProfile sum(std::span<const AgeProfile> terms)
    {
        AgeProfile total(0.0);
        for (const auto& t : terms) {
            total = total + t;
        }
        return total;
    }

    void accumulate()
    {
        cumulative_.assign(hazard_.segment_count(), 0.0);
        for (std::size_t j = 0; j + 1 < hazard_.segment_count(); ++j) {
            cumulative_[j + 1] = cumulative_[j] + increment(j, hazard_.segment_end(j) - hazard_.breakpoint(j));
        }
    }

    AgeProfile hazard_;
    std::vector<double> cumulative_;
};

inline double cumulative_hazard(const HazardAccumulator& acc, double s) { return acc(s); }

namespace detail {

template <std::size_t N>
struct GaussLegendreRule {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussLegendreRule()
    {
        // Newton iteration on P_N from the Chebyshev initial guesses.
        for (std::size_t i = 0; i < (N + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(N) + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (std::size_t k = 2; k <= N; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                    p0 = p1;
                    p1 = p2;
                }
                dp = static_cast<double>(N) * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) {
                    break;
                }
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[N - 1 - i] = x;
            weights[N - 1 - i] = w;
        }
    }
};

template <std::size_t N>
const GaussLegendreRule<N>& gauss_legendre()
{
    static const GaussLegendreRule<N> rule;
    return rule;
}

/// A product of linear factors times exp(-H) restricted to one mesh segment.
struct SegmentIntegrand {
    double origin;              // segment start
    double h0;                  // H(origin)
    double rate;                // hazard at origin
    double rate_slope;          // d hazard / ds
    std::vector<double> value;  // each factor at origin
    std::vector<double> slope;  // each factor's slope

    double operator()(double s) const
    {
        const double dx = s - origin;
        double w = 1.0;
        for (std::size_t f = 0; f < value.size(); ++f) {
            w *= value[f] + slope[f] * dx;
        }
        return w * std::exp(-(h0 + dx * (rate + 0.5 * rate_slope * dx)));
    }
};

template <std::size_t N>
double gauss(const SegmentIntegrand& f, double a, double b)
{
    const auto& rule = gauss_legendre<N>();
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return acc * half;
}

inline double adaptive_gauss(const SegmentIntegrand& f, double a, double b, double rel_tol, int depth)
{
    const double fine = gauss<16>(f, a, b);
    const double coarse = gauss<8>(f, a, b);
    if (std::abs(fine - coarse) <= rel_tol * std::abs(fine) || std::abs(fine - coarse) < 1e-300 || depth >= 40) {
        return fine;
    }
    const double mid = 0.5 * (a + b);
    return adaptive_gauss(f, a, mid, rel_tol, depth + 1) + adaptive_gauss(f, mid, b, rel_tol, depth + 1);
}

} // namespace detail

/// Survival level below which the remaining tail of an integral is dropped.
inline constexpr double survival_cutoff = 1e-12;

/**
 * int_0^inf w(s) exp(-H(s)) ds, where w is the product of `weight_factors`.
 *
 * Integrates over the union mesh of all factor and hazard breakpoints.
 * Segments on which every factor and the hazard are constant use the exact
 * exponential antiderivative; others use adaptive composite Gauss-Legendre
 * (16 nodes, with an 8-node embedded error estimate), pre-split so that the
 * hazard grows by at most one unit per piece. Integration stops at the first
 * mesh point where survival drops below `survival_cutoff`; the unbounded last
 * segment, where everything is constant, is integrated in closed form.
 */
inline double survival_weighted_integral(std::span<const AgeProfile> weight_factors, const HazardAccumulator& acc,
                                         double rel_tol)
{
    if (!(rel_tol > 0.0)) {
        throw DomainError("rel_tol must be positive");
    }
    for (const auto& w : weight_factors) {
        if (w.min_value() < 0.0) {
            throw DomainError("survival weight must be nonnegative");
        }
        if (w.is_zero()) {
            return 0.0;
        }
    }
    const AgeProfile& hazard = acc.integrand();
    std::vector<double> mesh(hazard.breakpoints().begin(), hazard.breakpoints().end());
    for (const auto& w : weight_factors) {
        mesh = AgeProfile::merged_breakpoints(mesh, w.breakpoints());
    }

    const std::size_t nf = weight_factors.size();
    detail::SegmentIntegrand f{0.0, 0.0, 0.0, 0.0, std::vector<double>(nf), std::vector<double>(nf)};
    double total = 0.0;
    for (std::size_t m = 0; m < mesh.size(); ++m) {
        const double s0 = mesh[m];
        const bool last = m + 1 == mesh.size();
        const double s1 = last ? 0.0 : mesh[m + 1];
        const std::size_t hj = hazard.segment_index(s0);
        f.origin = s0;
        f.h0 = acc.at_segment_start(hj) + acc.increment(hj, s0 - hazard.breakpoint(hj));
        if (std::exp(-f.h0) < survival_cutoff) {
            break;
        }
        f.rate = hazard.value_in(hj, s0);
        f.rate_slope = hazard.segment_is_flat(hj)
                           ? 0.0
                           : (hazard.right(hj) - hazard.left(hj)) / (hazard.segment_end(hj) - hazard.breakpoint(hj));
        bool flat = f.rate_slope == 0.0;
        double w0 = 1.0;
        for (std::size_t k = 0; k < nf; ++k) {
            const AgeProfile& w = weight_factors[k];
            const std::size_t wj = w.segment_index(s0);
            f.value[k] = w.value_in(wj, s0);
            f.slope[k] = w.segment_is_flat(wj) ? 0.0 : (w.right(wj) - w.left(wj)) / (w.segment_end(wj) - w.breakpoint(wj));
            flat = flat && f.slope[k] == 0.0;
            w0 *= f.value[k];
        }

        if (last) {
            if (w0 == 0.0) {
                break;
            }
            if (!(f.rate > 0.0)) {
                throw ConvergenceError("hazard vanishes on the unbounded tail; survival integral diverges");
            }
            total += w0 * std::exp(-f.h0) / f.rate;
            break;
        }
        if (flat) {
            const double len = s1 - s0;
            const double mass = f.rate > 0.0 ? -std::expm1(-f.rate * len) / f.rate : len;
            total += w0 * std::exp(-f.h0) * mass;
            continue;
        }
        const double dh = acc.increment(hj, s1 - hazard.breakpoint(hj)) - acc.increment(hj, s0 - hazard.breakpoint(hj));
        const auto pieces = static_cast<std::size_t>(std::clamp(std::ceil(dh), 1.0, 4096.0));
        const double step = (s1 - s0) / static_cast<double>(pieces);
        for (std::size_t p = 0; p < pieces; ++p) {
            const double a = s0 + step * static_cast<double>(p);
            const double b = p + 1 == pieces ? s1 : a + step;
            total += detail::adaptive_gauss(f, a, b, rel_tol, 0);
        }
    }
    if (!std::isfinite(total)) {
        throw ConvergenceError("survival integral is not finite");
    }
    return total;
}

inline double survival_weighted_integral(const AgeProfile& weight, const HazardAccumulator& acc, double rel_tol)
{
    return survival_weighted_integral(std::span<const AgeProfile>(&weight, 1), acc, rel_tol);
}

inline double survival_weighted_integral(std::initializer_list<AgeProfile> weight_factors,
                                         const HazardAccumulator& acc, double rel_tol)
{
    return survival_weighted_integral(std::span<const AgeProfile>(weight_factors.begin(), weight_factors.size()),
                                      acc, rel_tol);
}

} // namespace strata
