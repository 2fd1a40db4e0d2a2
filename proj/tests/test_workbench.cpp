#include <gtest/gtest.h>

#include <sstream>

#include "deonpol/oracle.hpp"
#include "deonpol/pctl/parser.hpp"
#include "deonpol/workbench.hpp"

using namespace deonpol;
using namespace deonpol::workbench;

TEST(Workbench, CalibrationRecoversDiscount) {
    auto m = builtin_mdp1();
    auto pi = parse_policy(m, "a1,a2,a4,a4");
    double target = evaluate_exact(m, pi)[0];
    EXPECT_NEAR(calibrate_gamma(m, pi, target), kBuiltinGamma, 1e-6);
    EXPECT_NEAR(calibrate_gamma(m, pi, 71.05), kBuiltinGamma, 1e-4);
}

TEST(Workbench, CalibrationEdgeCases) {
    auto m = builtin_mdp1();
    auto pi = parse_policy(m, "a1,a2,a4,a4");
    // V is at least r(s0) = 5 for any discount, so a target of 1 is never reached.
    EXPECT_THROW(calibrate_gamma(m, pi, 1.0), NoBracket);
    double at_lo = evaluate_exact(m.with_gamma(0.25), pi)[0];
    EXPECT_DOUBLE_EQ(calibrate_gamma(m, pi, at_lo, 0.25, 0.95), 0.25);
}

TEST(Workbench, TableOneStructure) {
    auto rep = reproduce_table(1);
    EXPECT_TRUE(rep.structural_match);
    EXPECT_EQ(rep.result.steps(), 9u);
    EXPECT_FALSE(rep.searched);
    std::ostringstream os;
    write_table_report(os, rep);
    EXPECT_NE(os.str().find("table 1"), std::string::npos);
}

TEST(Workbench, TableThreeSeedSearch) {
    auto rep = reproduce_table(3);
    EXPECT_TRUE(rep.searched);
    EXPECT_TRUE(rep.structural_match);
    EXPECT_EQ(fmt_fixed(rep.result.value[0], 2), "168.42");
    // A second search lands on the same seed.
    EXPECT_EQ(reproduce_table(3).seed, rep.seed);
}

TEST(Workbench, UnknownTable) { EXPECT_THROW(published_table(4), InputError); }

TEST(Workbench, SweepIsReplayable) {
    SweepConfig cfg{builtin_mdp2(), "P>=0.3 [ F s2 ]", {0.0, 0.3, 0.9}, 15, 5, 10, 3};
    auto rep = sweep(cfg);
    ASSERT_EQ(rep.rows.size(), 3u);
    auto formula = pctl::parse(cfg.formula);
    for (const auto& row : rep.rows) {
        EXPECT_EQ(row.global + row.local + row.not_converged, cfg.trials);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            SynthConfig sc;
            sc.epsilon = row.epsilon;
            sc.rng_seed = row.seeds[t];
            sc.max_outer_iterations = cfg.max_outer_iterations;
            auto r = run(cfg.mdp, *formula, sc);
            EXPECT_EQ(classify(r, 0, rep.optimum), row.outcomes[t]);
        }
    }
    // Greedy runs are deterministic, so every trial agrees.
    EXPECT_TRUE(rep.rows[0].global == cfg.trials || rep.rows[0].local == cfg.trials);
}

TEST(Workbench, SweepCsvIsThreadIndependent) {
    SweepConfig a{builtin_mdp2(), "P>=0.85 [ !hazard U goal2 ]", {0.0, 0.5}, 12, 0, 10, 1};
    SweepConfig b = a;
    b.threads = 4;
    std::ostringstream oa, ob;
    write_sweep_csv(oa, sweep(a));
    write_sweep_csv(ob, sweep(b));
    EXPECT_EQ(oa.str(), ob.str());
    EXPECT_EQ(oa.str().substr(0, oa.str().find('\n')), "epsilon,global,local,not_converged");
}

TEST(Workbench, SweepRejectsBadGrid) {
    SweepConfig cfg{builtin_mdp2(), "P>=0.3 [ F s2 ]", {1.0}, 5, 0, 10, 1};
    EXPECT_THROW(sweep(cfg), InputError);
}
