#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "strata/errors.hpp"

namespace strata {

/// Length of a year in days wherever ages are given in years.
inline constexpr double days_per_year = 360.0;

/**
 * A real function of age on [0, inf), piecewise linear over ascending breakpoints.
 *
 * Segment j covers [breakpoint(j), breakpoint(j+1)) and runs linearly from
 * left(j) to right(j); the last segment is constant and extends to infinity.
 * Evaluation is right-continuous, so a breakpoint takes the value of the
 * segment it opens. Piecewise-constant profiles are the special case
 * left(j) == right(j).
 */
class AgeProfile {
public:
    AgeProfile() : AgeProfile(0.0) {}

    explicit AgeProfile(double value, std::string units = {})
        : breaks_{0.0}, left_{value}, right_{value}, units_(std::move(units))
    {
        check_finite();
    }

    static AgeProfile piecewise_constant(std::vector<double> breakpoints, std::vector<double> values,
                                         std::string units = {})
    {
        if (values.size() != breakpoints.size()) {
            throw DomainError("piecewise-constant profile needs one value per breakpoint");
        }
        auto right = values;
        return AgeProfile(std::move(breakpoints), std::move(values), std::move(right), std::move(units));
    }

    /// Linear interpolation between (breakpoint, value) pairs, constant after the last one.
    static AgeProfile piecewise_linear(std::vector<double> breakpoints, std::vector<double> values,
                                       std::string units = {})
    {
        if (values.size() != breakpoints.size()) {
            throw DomainError("piecewise-linear profile needs one value per breakpoint");
        }
        std::vector<double> right(values.size());
        for (std::size_t j = 0; j + 1 < values.size(); ++j) {
            right[j] = values[j + 1];
        }
        right.back() = values.back();
        return AgeProfile(std::move(breakpoints), std::move(values), std::move(right), std::move(units));
    }

    static AgeProfile from_segments(std::vector<double> breakpoints, std::vector<double> left,
                                    std::vector<double> right, std::string units = {})
    {
        return AgeProfile(std::move(breakpoints), std::move(left), std::move(right), std::move(units));
    }

    double operator()(double age) const
    {
        if (!(age >= 0.0)) {
            throw DomainError("profile evaluated at negative age " + std::to_string(age));
        }
        return value_in(segment_index(age), age);
    }

    std::size_t segment_count() const noexcept { return breaks_.size(); }
    std::span<const double> breakpoints() const noexcept { return breaks_; }
    double breakpoint(std::size_t j) const { return breaks_[j]; }
    double segment_end(std::size_t j) const
    {
        return j + 1 < breaks_.size() ? breaks_[j + 1] : std::numeric_limits<double>::infinity();
    }
    double left(std::size_t j) const { return left_[j]; }
    double right(std::size_t j) const { return right_[j]; }
    bool segment_is_flat(std::size_t j) const { return left_[j] == right_[j]; }

    const std::string& units() const noexcept { return units_; }
    void set_units(std::string units) { units_ = std::move(units); }

    std::size_t segment_index(double age) const
    {
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), age);
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - breaks_.begin()) - 1));
    }

    /// Value of segment j's linear piece at `age` (no bounds check against the segment).
    double value_in(std::size_t j, double age) const
    {
        if (left_[j] == right_[j]) {
            return left_[j];
        }
        const double t = (age - breaks_[j]) / (breaks_[j + 1] - breaks_[j]);
        return left_[j] + (right_[j] - left_[j]) * t;
    }

    bool is_piecewise_constant() const
    {
        return std::equal(left_.begin(), left_.end(), right_.begin());
    }

    bool is_continuous() const
    {
        for (std::size_t j = 0; j + 1 < breaks_.size(); ++j) {
            if (right_[j] != left_[j + 1]) {
                return false;
            }
        }
        return true;
    }

    bool is_constant() const
    {
        return std::all_of(left_.begin(), left_.end(), [&](double v) { return v == left_[0]; }) &&
               std::all_of(right_.begin(), right_.end(), [&](double v) { return v == left_[0]; });
    }

    bool is_zero() const { return is_constant() && left_[0] == 0.0; }

    double min_value() const
    {
        return std::min(*std::min_element(left_.begin(), left_.end()),
                        *std::min_element(right_.begin(), right_.end()));
    }

    double max_value() const
    {
        return std::max(*std::max_element(left_.begin(), left_.end()),
                        *std::max_element(right_.begin(), right_.end()));
    }

    AgeProfile scaled(double factor) const
    {
        AgeProfile out = *this;
        for (auto& v : out.left_) v *= factor;
        for (auto& v : out.right_) v *= factor;
        out.check_finite();
        return out;
    }

    /// Same values on a stretched age axis: the result at age x equals this profile at x / factor.
    AgeProfile rescaled_ages(double factor) const
    {
        if (!(factor > 0.0) || !std::isfinite(factor)) {
            throw DomainError("age rescaling factor must be positive and finite");
        }
        AgeProfile out = *this;
        for (auto& b : out.breaks_) b *= factor;
        return out;
    }

    /// Equivalent profile with `extra` inserted as additional breakpoints.
    AgeProfile refined(std::span<const double> extra) const
    {
        std::vector<double> mesh = merged_breakpoints(breaks_, extra);
        if (mesh.size() == breaks_.size()) {
            return *this;
        }
        std::vector<double> left(mesh.size()), right(mesh.size());
        for (std::size_t m = 0; m < mesh.size(); ++m) {
            const std::size_t j = segment_index(mesh[m]);
            left[m] = value_in(j, mesh[m]);
            if (m + 1 < mesh.size()) {
                const double end = mesh[m + 1];
                // right limit of the sub-segment stays on segment j
                right[m] = (end == segment_end(j)) ? right_[j] : value_in(j, end);
            } else {
                right[m] = left[m];
            }
        }
        return AgeProfile(std::move(mesh), std::move(left), std::move(right), units_);
    }

    /// Applies `f` to each segment's end values. Exact for piecewise-constant profiles.
    template <typename F>
    AgeProfile map_endpoints(F&& f) const
    {
        AgeProfile out = *this;
        for (auto& v : out.left_) v = f(v);
        for (auto& v : out.right_) v = f(v);
        out.check_finite();
        return out;
    }

    friend AgeProfile operator+(const AgeProfile& x, const AgeProfile& y)
    {
        return combine(x, y, [](double u, double v) { return u + v; });
    }

    friend AgeProfile operator+(const AgeProfile& x, double c) { return x + AgeProfile(c); }
    friend AgeProfile operator*(double c, const AgeProfile& x) { return x.scaled(c); }
    friend AgeProfile operator*(const AgeProfile& x, double c) { return x.scaled(c); }

    /// Pointwise product; at least one factor must be flat on every common segment.
    friend AgeProfile operator*(const AgeProfile& x, const AgeProfile& y)
    {
        const auto mesh = merged_breakpoints(x.breaks_, y.breaks_);
        const AgeProfile xr = x.refined(mesh);
        const AgeProfile yr = y.refined(mesh);
        std::vector<double> left(mesh.size()), right(mesh.size());
        for (std::size_t j = 0; j < mesh.size(); ++j) {
            if (!xr.segment_is_flat(j) && !yr.segment_is_flat(j)) {
                throw DomainError("product of two non-constant linear segments is not piecewise linear");
            }
            left[j] = xr.left_[j] * yr.left_[j];
            right[j] = xr.right_[j] * yr.right_[j];
        }
        return AgeProfile(mesh, std::move(left), std::move(right), x.units_);
    }

    friend bool operator==(const AgeProfile& x, const AgeProfile& y)
    {
        return x.breaks_ == y.breaks_ && x.left_ == y.left_ && x.right_ == y.right_ && x.units_ == y.units_;
    }

    static std::vector<double> merged_breakpoints(std::span<const double> a, std::span<const double> b)
    {
        std::vector<double> out;
        out.reserve(a.size() + b.size());
        std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    AgeProfile(std::vector<double> breaks, std::vector<double> left, std::vector<double> right, std::string units)
        : breaks_(std::move(breaks)), left_(std::move(left)), right_(std::move(right)), units_(std::move(units))
    {
        if (breaks_.empty() || left_.size() != breaks_.size() || right_.size() != breaks_.size()) {
            throw DomainError("profile needs matching, non-empty breakpoint and value lists");
        }
        if (breaks_.front() != 0.0) {
            throw DomainError("first profile breakpoint must be 0");
        }
        for (std::size_t j = 1; j < breaks_.size(); ++j) {
            if (!(breaks_[j] > breaks_[j - 1]) || !std::isfinite(breaks_[j])) {
                throw DomainError("profile breakpoints must be finite and strictly increasing");
            }
        }
        if (right_.back() != left_.back()) {
            throw DomainError("last profile segment must be constant");
        }
        check_finite();
    }

    void check_finite() const
    {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(left_.begin(), left_.end(), finite) || !std::all_of(right_.begin(), right_.end(), finite)) {
            throw DomainError("profile values must be finite");
        }
    }

    template <typename Op>
    static AgeProfile combine(const AgeProfile& x, const AgeProfile& y, Op op)
    {
        const auto mesh = merged_breakpoints(x.breaks_, y.breaks_);
        const AgeProfile xr = x.refined(mesh);
        const AgeProfile yr = y.refined(mesh);
        std::vector<double> left(mesh.size()), right(mesh.size());
        for (std::size_t j = 0; j < mesh.size(); ++j) {
            left[j] = op(xr.left_[j], yr.left_[j]);
            right[j] = op(xr.right_[j], yr.right_[j]);
        }
        return AgeProfile(mesh, std::move(left), std::move(right), x.units_);
    }

    std::vector<double> breaks_;
    std::vector<double> left_;
    std::vector<double> right_;
    std::string units_;
};

inline double eval_profile(const AgeProfile& profile, double age_days) { return profile(age_days); }

// JSON form: {"breakpoints_days": [...], "kind": "constant"|"linear", "values": [...], "units": "..."}.
// Profiles with jumps inside linear pieces use kind "segments" with "left_values"/"right_values".
// "breakpoints_years" is accepted on input and converted with the 360-day year.

inline nlohmann::json profile_to_json(const AgeProfile& p)
{
    nlohmann::json j;
    std::vector<double> bps(p.breakpoints().begin(), p.breakpoints().end());
    j["breakpoints_days"] = bps;
    std::vector<double> left(p.segment_count()), right(p.segment_count());
    for (std::size_t s = 0; s < p.segment_count(); ++s) {
        left[s] = p.left(s);
        right[s] = p.right(s);
    }
    if (p.is_piecewise_constant()) {
        j["kind"] = "constant";
        j["values"] = left;
    } else if (p.is_continuous()) {
        j["kind"] = "linear";
        j["values"] = left;
    } else {
        j["kind"] = "segments";
        j["left_values"] = left;
        j["right_values"] = right;
    }
    if (!p.units().empty()) {
        j["units"] = p.units();
    }
    return j;
}

inline AgeProfile profile_from_json(const nlohmann::json& j, const std::string& field = "profile")
{
    if (!j.is_object()) {
        throw ValidationError(field, "expected a profile object");
    }
    auto numbers = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_array()) {
            throw ValidationError(field + "." + key, "expected an array of numbers");
        }
        std::vector<double> out;
        for (const auto& v : j.at(key)) {
            if (!v.is_number()) {
                throw ValidationError(field + "." + key, "expected an array of numbers");
            }
            out.push_back(v.get<double>());
        }
        return out;
    };
    for (const auto& [key, value] : j.items()) {
        static const char* known[] = {"breakpoints_days", "breakpoints_years", "kind", "values",
                                      "left_values", "right_values", "units", "$comment"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known)) {
            throw ValidationError(field + "." + key, "unknown profile key");
        }
    }
    std::vector<double> bps;
    if (j.contains("breakpoints_days")) {
        bps = numbers("breakpoints_days");
    } else if (j.contains("breakpoints_years")) {
        bps = numbers("breakpoints_years");
        for (auto& b : bps) b *= days_per_year;
    } else {
        throw ValidationError(field + ".breakpoints_days", "missing");
    }
    const std::string kind = j.value("kind", std::string("constant"));
    const std::string units = j.value("units", std::string());
    try {
        if (kind == "constant") {
            return AgeProfile::piecewise_constant(bps, numbers("values"), units);
        }
        if (kind == "linear") {
            return AgeProfile::piecewise_linear(bps, numbers("values"), units);
        }
        if (kind == "segments") {
            return AgeProfile::from_segments(bps, numbers("left_values"), numbers("right_values"), units);
        }
    } catch (const DomainError& e) {
        throw ValidationError(field, e.what());
    }
    throw ValidationError(field + ".kind", "must be \"constant\", \"linear\" or \"segments\"");
}

} // namespace strata
