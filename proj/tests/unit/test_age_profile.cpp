#include <gtest/gtest.h>

#include <random>

#include "strata/age_profile.hpp"
#include "strata/params.hpp"

using namespace strata;

TEST(AgeProfile, PiecewiseConstantIsRightContinuous)
{
    const auto p = AgeProfile::piecewise_constant({0, 10, 20}, {1, 2, 3});
    EXPECT_DOUBLE_EQ(p(0), 1);
    EXPECT_DOUBLE_EQ(p(9.999), 1);
    EXPECT_DOUBLE_EQ(p(10), 2);
    EXPECT_DOUBLE_EQ(p(20), 3);
    EXPECT_DOUBLE_EQ(p(1e9), 3);
    EXPECT_TRUE(p.is_piecewise_constant());
    EXPECT_FALSE(p.is_continuous());
}

TEST(AgeProfile, PiecewiseLinearInterpolatesAndHoldsLastValue)
{
    const auto p = AgeProfile::piecewise_linear({0, 10, 30}, {0, 10, 0});
    EXPECT_DOUBLE_EQ(p(5), 5);
    EXPECT_DOUBLE_EQ(p(20), 5);
    EXPECT_DOUBLE_EQ(p(30), 0);
    EXPECT_DOUBLE_EQ(p(100), 0);
    EXPECT_TRUE(p.is_continuous());
    EXPECT_DOUBLE_EQ(p.max_value(), 10);
    EXPECT_DOUBLE_EQ(p.min_value(), 0);
}

TEST(AgeProfile, RejectsMalformedInput)
{
    EXPECT_THROW(AgeProfile::piecewise_constant({1, 2}, {1, 2}), DomainError);
    EXPECT_THROW(AgeProfile::piecewise_constant({0, 2, 2}, {1, 2, 3}), DomainError);
    EXPECT_THROW(AgeProfile::piecewise_constant({0, 2}, {1}), DomainError);
    EXPECT_THROW(AgeProfile::from_segments({0, 2}, {1, 2}, {1, 3}), DomainError);
    EXPECT_THROW(AgeProfile(std::nan("")), DomainError);
    EXPECT_THROW(AgeProfile(1.0)(-1.0), DomainError);
}

TEST(AgeProfile, DefaultTablesAtKnownAges)
{
    EXPECT_DOUBLE_EQ(default_chi()(35 * 360.0), 1 / 5.8);
    EXPECT_DOUBLE_EQ(default_k()(30 * 360.0), 1 / 4.8);
    EXPECT_DOUBLE_EQ(default_k()(29.99 * 360.0), 1 / 4.0);
    EXPECT_DOUBLE_EQ(default_k()(100 * 360.0), 1 / 6.0);
}

TEST(AgeProfile, SumAndProductArePointwise)
{
    const auto x = AgeProfile::piecewise_linear({0, 5, 12}, {1, 3, 2});
    const auto y = AgeProfile::piecewise_constant({0, 7, 9}, {2, 0.5, 4});
    const auto sum = x + y;
    const auto prod = x * y;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> age(0, 20);
    for (int i = 0; i < 200; ++i) {
        const double s = age(rng);
        EXPECT_NEAR(sum(s), x(s) + y(s), 1e-12) << s;
        EXPECT_NEAR(prod(s), x(s) * y(s), 1e-12) << s;
    }
    EXPECT_NEAR((x + 2.5)(3.0), x(3.0) + 2.5, 1e-12);
    EXPECT_NEAR((x * 3.0)(3.0), 3.0 * x(3.0), 1e-12);
}

TEST(AgeProfile, ProductOfTwoSlopesIsRejected)
{
    const auto x = AgeProfile::piecewise_linear({0, 5}, {0, 1});
    EXPECT_THROW(x * x, DomainError);
}

TEST(AgeProfile, RescaledAgesStretchTheAxis)
{
    const auto p = AgeProfile::piecewise_linear({0, 360, 720}, {1, 2, 4});
    const auto r = p.rescaled_ages(1.0 / 360.0);
    for (double s : {0.0, 0.25, 1.0, 1.5, 2.0, 7.0}) {
        EXPECT_NEAR(r(s), p(s * 360.0), 1e-12) << s;
    }
}

TEST(AgeProfile, RefinedKeepsValues)
{
    const auto p = AgeProfile::piecewise_linear({0, 10}, {0, 10});
    const std::vector<double> extra{2.5, 20};
    const auto r = p.refined(extra);
    EXPECT_EQ(r.segment_count(), 4u);
    for (double s : {0.0, 1.0, 2.5, 6.0, 10.0, 15.0, 25.0}) EXPECT_NEAR(r(s), p(s), 1e-12);
}

TEST(AgeProfileJson, RoundTripsAllKinds)
{
    for (const auto& p : {default_chi(), default_asymptomatic_q(), AgeProfile(0.3, "x"),
                          AgeProfile::from_segments({0, 1, 2}, {1, 2, 5}, {2, 3, 5})}) {
        EXPECT_EQ(profile_from_json(profile_to_json(p)), p);
    }
}

TEST(AgeProfileJson, YearsAreConvertedTo360DayYears)
{
    const nlohmann::json j = {{"breakpoints_years", {0, 30}}, {"kind", "constant"}, {"values", {1, 2}}};
    const auto p = profile_from_json(j, "k");
    EXPECT_DOUBLE_EQ(p.breakpoint(1), 30 * 360.0);
}

TEST(AgeProfileJson, ErrorsNameTheField)
{
    const nlohmann::json j = {{"breakpoints_days", {0, 30}}, {"kind", "constant"}, {"vals", {1, 2}}};
    try {
        profile_from_json(j, "chi");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "chi.vals");
    }
    const nlohmann::json bad = {{"breakpoints_days", {0, 30}}, {"kind", "constant"}, {"values", {1}}};
    try {
        profile_from_json(bad, "chi");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "chi");
    }
}
