#include <gtest/gtest.h>

#include <fstream>

#include "strata/params.hpp"
#include "strata/strategy.hpp"

using namespace strata;

namespace {

nlohmann::json read_json(const std::string& name)
{
    std::ifstream in(std::string(STRATA_DATA_DIR) + "/" + name);
    return nlohmann::json::parse(in);
}

std::string failing_field(const nlohmann::json& doc)
{
    try {
        load_params(doc);
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "(none)";
}

} // namespace

TEST(Params, KFromChiShiftsMediansByOneDay)
{
    const auto k = k_from_chi(AgeProfile(1 / 5.0));
    EXPECT_NEAR(k(0), 1 / 4.0, 1e-15);
    const auto derived = k_from_chi(default_chi());
    const auto table = default_k();
    for (double y : {0, 29, 30, 45, 55, 65, 80}) {
        EXPECT_NEAR(derived(y * 360), table(y * 360), 1e-15) << y;
    }
    EXPECT_THROW(k_from_chi(AgeProfile(1.0)), DomainError);
    EXPECT_THROW(k_from_chi(AgeProfile(0.0)), DomainError);
}

TEST(Params, BetaFromContacts)
{
    const ContactCurve c{AgeProfile::piecewise_linear({0, 3600}, {10, 20}), "test"};
    const auto beta = beta_from_contacts(c, 0.25, 1000);
    EXPECT_DOUBLE_EQ(beta(1800), 15 * 0.25 / 1000);
    EXPECT_THROW(beta_from_contacts(c, 1.5, 1000), DomainError);
    EXPECT_THROW(beta_from_contacts(c, 0.5, 0), DomainError);
}

TEST(Params, GammaFromPeriod)
{
    EXPECT_DOUBLE_EQ(gamma_from_period(14), 1 / 14.0);
    EXPECT_THROW(gamma_from_period(0), DomainError);
}

TEST(Params, EmptyDocumentGivesDefaults) { EXPECT_EQ(load_params(nlohmann::json::object()), default_params()); }

TEST(Params, OverridesApply)
{
    const auto ps = load_params({{"epsilon", 0.5}, {"gamma_I", 0.1}});
    EXPECT_EQ(ps.epsilon, 0.5);
    EXPECT_EQ(ps.gamma_I(0), 0.1);
    EXPECT_EQ(ps.k, default_k());
}

TEST(Params, ErrorsNameTheField)
{
    EXPECT_EQ(failing_field({{"epsilon", 1.5}}), "epsilon");
    EXPECT_EQ(failing_field({{"mu", -1}}), "mu");
    EXPECT_EQ(failing_field({{"epsilon", "high"}}), "epsilon");
    EXPECT_EQ(failing_field({{"bogus", 1}}), "bogus");
    EXPECT_EQ(failing_field({{"schema_version", 2}}), "schema_version");
    EXPECT_EQ(failing_field({{"q", {{"breakpoints_days", {0}}, {"values", {1.5}}}}}), "q");
    EXPECT_EQ(failing_field({{"varpi_A", 2}}), "varpi_A");
    EXPECT_EQ(failing_field(nlohmann::json::array()), "(document)");
}

TEST(Params, JsonRoundTrip)
{
    ParamSet ps = default_params();
    ps.gamma_I = AgeProfile::piecewise_constant({0, 3600}, {0.1, 0.05}, "1/day");
    EXPECT_EQ(load_params(params_to_json(ps)), ps);
    EXPECT_EQ(load_params(params_to_json(default_params())), default_params());
}

TEST(Params, UniquenessCondition)
{
    ParamSet ps = default_params();
    EXPECT_TRUE(satisfies_uniqueness_condition(ps));
    ps.beta_A = AgeProfile::piecewise_constant({0, 100}, {0, 1});
    ps.beta_I = ps.beta_A;
    ps.gamma_I = ps.beta_A;
    EXPECT_FALSE(satisfies_uniqueness_condition(ps));
    EXPECT_THROW(validate(ps), ValidationError);
}

TEST(BundledData, ParamsFileMatchesDefaults) { EXPECT_EQ(load_params(read_json("params_default.json")), default_params()); }

TEST(BundledData, CurveFilesMatchDefaults)
{
    EXPECT_EQ(profile_from_json(read_json("contacts_default.json"), "contacts"), default_contacts().profile);
    EXPECT_EQ(profile_from_json(read_json("asymptomatic_q_default.json"), "q"), default_asymptomatic_q());
}

TEST(BundledData, SubstrategyCatalogMatchesDefaults)
{
    EXPECT_EQ(load_substrategies(read_json("substrategies.json"), CohortPartition::standard()),
              standard_substrategies());
}
