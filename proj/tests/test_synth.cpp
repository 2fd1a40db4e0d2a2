#include <gtest/gtest.h>

#include <sstream>

#include "deonpol/oracle.hpp"
#include "deonpol/pctl/parser.hpp"
#include "deonpol/synth.hpp"
#include "deonpol/workbench.hpp"
#include "support/random_models.hpp"

using namespace deonpol;

namespace {

SynthConfig eps(double e, std::uint64_t seed = 0) {
    SynthConfig c;
    c.epsilon = e;
    c.rng_seed = seed;
    return c;
}

/// Random formula P>=lambda [ safe U goal ] with lambda a fraction of the best probability.
std::optional<ReachConstraint> random_constraint(Rng& rng, const Mdp& m) {
    ReachConstraint c{0.0, m.states_with("safe"), m.states_with("goal")};
    double best = pctl::pmax(m, c.phi, c.psi).probs[m.initial()];
    if (best <= 0.0) return std::nullopt;
    c.lambda = best * rng.uniform();
    return c;
}

}  // namespace

TEST(Synth, ReachOnFourStateModel) {
    auto m = workbench::builtin_mdp1();
    auto f = pctl::parse("P>=0.4 [ F s3 ]");
    auto r = run(m, *f, eps(0), parse_policy(m, "a1,a3,a1,a4"));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(format_policy(m, r.policy), "a1,a2,a4,a4");
    EXPECT_EQ(r.steps(), 9u);
    EXPECT_EQ(r.passes, 2u);
    EXPECT_NEAR(r.value[0], 71.051, 1e-3);
    for (double xi : r.x) EXPECT_NEAR(xi, 1.0, 1e-9);
    auto changes = change_sequence(r.trace);
    ASSERT_EQ(changes.size(), 2u);
    EXPECT_EQ(changes[0], (PolicyChange{1, m.action_index("a3"), m.action_index("a2")}));
    EXPECT_EQ(changes[1], (PolicyChange{2, m.action_index("a1"), m.action_index("a4")}));
}

TEST(Synth, InitialisationUsesMaximalProbability) {
    auto m = workbench::builtin_mdp1();
    auto pi = initialize_feasible(m, *pctl::parse("P>=0.4 [ F s3 ]"));
    EXPECT_EQ(pctl::solve_reach(m, pi, pctl::all_states(4), m.states_with("s3"))[0], 1.0);
    EXPECT_THROW(initialize_feasible(m, *pctl::parse("P>=0.99 [ !s3 U s2 ]")), InfeasibleConstraint);
}

TEST(Synth, RejectsUnsupportedShapes) {
    auto m = workbench::builtin_mdp1();
    EXPECT_THROW(extract_constraint(m, *pctl::parse("s1")), FormulaError);
    EXPECT_THROW(extract_constraint(m, *pctl::parse("P<=0.4 [ F s3 ]")), FormulaError);
    EXPECT_THROW(extract_constraint(m, *pctl::parse("P>0.4 [ F s3 ]")), FormulaError);
    EXPECT_THROW(extract_constraint(m, *pctl::parse("P>=0.4 [ F<=3 s3 ]")), FormulaError);
    EXPECT_THROW(extract_constraint(m, *pctl::parse("P>=0.4 [ X s3 ]")), FormulaError);
    EXPECT_THROW(run(m, *pctl::parse("P>=0.4 [ F s3 ]"), eps(1.0)), InputError);
    EXPECT_THROW(run(m, *pctl::parse("P>=0.4 [ F s3 ]"), eps(-0.1)), InputError);
    EXPECT_THROW(run(m, *pctl::parse("P>=0.5 [ F s3 ]"), eps(0), parse_policy(m, "a1,a3,a1,a4")),
                 InfeasibleConstraint);
}

TEST(Synth, TraceCsvLayout) {
    auto m = workbench::builtin_mdp1();
    auto r = run(m, *pctl::parse("P>=0.4 [ F s3 ]"), eps(0), parse_policy(m, "a1,a3,a1,a4"));
    std::ostringstream os;
    write_trace_csv(os, m, r.trace);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "step,visited_state,s0,s1,s2,s3,V_init,x_s0,x_s1,x_s2,x_s3,changed");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "0,-,");
    std::size_t rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, r.steps());
}

TEST(Synth, InvariantsOnRandomModels) {
    Rng rng(31);
    int tested = 0;
    while (tested < 150) {
        auto m = testkit::random_mdp(rng);
        auto c = random_constraint(rng, m);
        if (!c) continue;
        ++tested;
        const double e = (tested % 3 == 0) ? 0.3 : 0.0;
        auto r = run(m, *c, eps(e, tested));
        const std::size_t init = m.initial();
        double prev = r.trace.front().v_init;
        for (const auto& rec : r.trace) {
            EXPECT_GE(pctl::solve_reach(m, rec.policy, c->phi, c->psi)[init], c->lambda - 1e-9);
            if (e == 0.0) {
                EXPECT_GE(rec.v_init, prev - 1e-9);
                prev = rec.v_init;
            }
        }
        if (e == 0.0) {
            EXPECT_TRUE(r.converged);
            EXPECT_LE(r.passes, m.policy_count() + 1);
        }
        auto ex = evaluate_exact(m, r.policy);
        for (std::size_t s = 0; s < m.size(); ++s) EXPECT_NEAR(r.value[s], ex[s], 1e-6);
    }
}

TEST(Synth, ValidActionsAlwaysKeepIncumbent) {
    Rng rng(32);
    for (int i = 0; i < 200; ++i) {
        auto m = testkit::random_mdp(rng);
        auto c = random_constraint(rng, m);
        if (!c) continue;
        auto pi = initialize_feasible(m, *c);
        auto s_no = pctl::prob0(m, c->phi, c->psi);
        auto x = pctl::solve_reach(m, pi, c->phi, c->psi);
        for (std::size_t s = 0; s < m.size(); ++s) {
            auto acts = valid_actions(m, *c, s_no, pi, x, s);
            EXPECT_NE(std::find(acts.begin(), acts.end(), pi[s]), acts.end());
            for (auto a : acts) {
                Policy sw = pi;
                sw.actions[s] = a;
                EXPECT_TRUE(feasible_at_initial(m, *c, sw));
            }
        }
    }
}

TEST(Synth, SameSeedSameTrace) {
    auto m = workbench::builtin_mdp2();
    auto f = pctl::parse("P>=0.85 [ !hazard U goal2 ]");
    for (std::uint64_t seed : {0u, 5u, 99u}) {
        auto a = run(m, *f, eps(0.5, seed)), b = run(m, *f, eps(0.5, seed));
        std::ostringstream oa, ob;
        write_trace_csv(oa, m, a.trace);
        write_trace_csv(ob, m, b.trace);
        EXPECT_EQ(oa.str(), ob.str());
    }
}

TEST(Synth, ExplorationCanLeaveLocalOptimum) {
    auto m = workbench::builtin_mdp2();
    auto f = pctl::parse("P>=0.3 [ F s2 ]");
    auto greedy = run(m, *f, eps(0));
    auto oracle = brute_force(m, *f);
    EXPECT_LT(greedy.value[0], oracle.optimal_value - 1.0);
    bool escaped = false;
    for (std::uint64_t seed = 0; seed < 200 && !escaped; ++seed) {
        auto r = run(m, *f, eps(0.3, seed));
        escaped = r.converged && std::abs(r.value[0] - oracle.optimal_value) < 1e-6;
    }
    EXPECT_TRUE(escaped);
}
