#include <gtest/gtest.h>

#include <cstdlib>

#include "deonpol/oracle.hpp"
#include "deonpol/pctl/parser.hpp"
#include "deonpol/workbench.hpp"
#include "support/random_models.hpp"

using namespace deonpol;

TEST(Oracle, FourStateReachOptimum) {
    auto m = workbench::builtin_mdp1();
    auto rep = brute_force(m, *pctl::parse("P>=0.4 [ F s3 ]"));
    EXPECT_EQ(rep.total_count, 4u);
    ASSERT_EQ(rep.optimal_policies.size(), 1u);
    EXPECT_EQ(format_policy(m, rep.optimal_policies[0]), "a1,a2,a4,a4");
    EXPECT_NEAR(rep.optimal_value, 71.051, 1e-3);
    for (double x : rep.x_at_optimum) EXPECT_NEAR(x, 1.0, 1e-9);
}

TEST(Oracle, GridModelTiesAreAllReported) {
    auto m = workbench::builtin_mdp2();
    auto rep = brute_force(m, *pctl::parse("P>=0.85 [ !hazard U goal2 ]"));
    EXPECT_EQ(fmt_fixed(rep.optimal_value, 2), "168.42");
    ASSERT_EQ(rep.optimal_policies.size(), 2u);
    std::vector<std::string> names;
    for (const auto& p : rep.optimal_policies) names.push_back(format_policy(m, p));
    std::sort(names.begin(), names.end());
    EXPECT_EQ(names[0], "south,south,stuck,stuck,west,north");
    EXPECT_EQ(names[1], "south,south,stuck,stuck,west,west");
    EXPECT_EQ(fmt_vector(rep.x_at_optimum), "[0.90, 0.00, 1.00, 1.00, 1.00, 1.00]");
}

TEST(Oracle, ThreadCountDoesNotChangeResult) {
    Rng rng(41);
    for (int i = 0; i < 50; ++i) {
        auto m = testkit::random_mdp(rng, {6, 3});
        auto f = pctl::parse("P>=0 [ safe U goal ]");
        OracleOptions one{kDefaultPolicyCap, true, 1}, many{kDefaultPolicyCap, true, 4};
        auto a = brute_force(m, *f, one), b = brute_force(m, *f, many);
        EXPECT_EQ(a.optimal_policies, b.optimal_policies);
        EXPECT_EQ(a.optimal_value, b.optimal_value);
        EXPECT_EQ(a.feasible_count, b.feasible_count);
        ASSERT_EQ(a.feasible.size(), b.feasible.size());
        for (std::size_t k = 0; k < a.feasible.size(); ++k) EXPECT_EQ(a.feasible[k].policy, b.feasible[k].policy);
    }
}

TEST(Oracle, TrivialConstraintGivesUnconstrainedOptimum) {
    Rng rng(42);
    for (int i = 0; i < 100; ++i) {
        auto m = testkit::random_mdp(rng);
        auto rep = brute_force(m, *pctl::parse("true"));
        auto [v, pi] = value_iteration(m, 1e-12);
        EXPECT_NEAR(rep.optimal_value, v[m.initial()], 1e-6);
        EXPECT_EQ(rep.feasible_count, m.policy_count());
    }
}

TEST(Oracle, CapAndInfeasibility) {
    auto m = workbench::builtin_mdp1();
    EXPECT_THROW(brute_force(m, *pctl::parse("true"), {3, false, 1}), CapExceeded);
    EXPECT_THROW(brute_force(m, *pctl::parse("P>=0.99 [ !s3 U s2 ]")), InfeasibleConstraint);
}

TEST(Oracle, CapFromEnvironment) {
    ::unsetenv("DEONPOL_MAX_POLICIES");
    EXPECT_EQ(policy_cap_from_env(), kDefaultPolicyCap);
    ::setenv("DEONPOL_MAX_POLICIES", "12", 1);
    EXPECT_EQ(policy_cap_from_env(), 12u);
    ::setenv("DEONPOL_MAX_POLICIES", "twelve", 1);
    EXPECT_THROW(policy_cap_from_env(), InputError);
    ::unsetenv("DEONPOL_MAX_POLICIES");
}

TEST(Oracle, EnumerationVisitsEachPolicyOnce) {
    auto m = workbench::builtin_mdp2();
    std::set<Policy> seen;
    for_each_policy(m, [&](std::size_t, const Policy& p) {
        validate_policy(m, p);
        seen.insert(p);
    });
    EXPECT_EQ(seen.size(), m.policy_count());
}
