#include <gtest/gtest.h>

#include <sstream>

#include "deonpol/stit.hpp"
#include "deonpol/workbench.hpp"
#include "support/random_models.hpp"

using namespace deonpol;
using namespace deonpol::stit;

namespace {

/// Finite-horizon Q by backward recursion: r(s) + gamma * E[best with r-1 steps left].
std::vector<std::vector<double>> finite_q(const Mdp& m, std::size_t r, std::vector<double>* best_out = nullptr) {
    std::vector<double> best(m.size());
    for (std::size_t s = 0; s < m.size(); ++s) best[s] = m.reward(s);
    std::vector<std::vector<double>> q(m.size(), std::vector<double>(m.num_actions(), 0.0));
    for (std::size_t k = 1; k <= r; ++k) {
        std::vector<double> next(m.size(), -1e300);
        for (std::size_t s = 0; s < m.size(); ++s) {
            for (const auto& row : m.rows(s)) {
                double acc = 0.0;
                for (const auto& t : row.successors) acc += t.prob * best[t.to];
                q[s][row.action] = m.reward(s) + m.gamma() * acc;
                next[s] = std::max(next[s], q[s][row.action]);
            }
        }
        best = std::move(next);
    }
    if (best_out) *best_out = best;
    return q;
}

}  // namespace

TEST(Stit, UnrollShape) {
    auto m = workbench::builtin_mdp1();
    for (std::size_t h = 1; h <= 5; ++h) {
        auto tree = unroll(m, h);
        EXPECT_EQ(tree.size(), count_moments(m, h));
        EXPECT_LT(max_token_mass_error(tree), 1e-12);
        EXPECT_LT(max_cylinder_mass_error(tree), 1e-12);
        for (const auto& mo : tree.moments) {
            EXPECT_LE(mo.depth, h);
            EXPECT_EQ(tree.is_leaf(mo.id), mo.depth == h);
        }
    }
    EXPECT_THROW(unroll(m, 30, 1000), CapExceeded);
    EXPECT_THROW(unroll(m, 0), DomainError);
}

TEST(Stit, HistoryProbabilityIsProductOfEdges) {
    auto m = workbench::builtin_mdp1();
    auto tree = unroll(m, 3);
    for (std::size_t id = 0; id < tree.size(); ++id) {
        auto path = path_from_root(tree, id);
        double p = 1.0;
        for (std::size_t i = 1; i < path.size(); ++i) p *= tree.moments[path[i]].incoming;
        EXPECT_DOUBLE_EQ(history_probability(tree, tree.root, path), p);
    }
    EXPECT_THROW(history_probability(tree, 0, HistoryPrefix{0, 0}), DomainError);
    EXPECT_THROW(history_probability(tree, 1, HistoryPrefix{0}), DomainError);
}

TEST(Stit, DepthOneQualities) {
    auto m = workbench::builtin_mdp1();
    auto tree = unroll(m, 1);
    auto v = discounted_value(m);
    const auto& toks = tree.choices[tree.root];
    ASSERT_EQ(toks.size(), 1u);
    // s0 under a1: 5 + 0.9 * (0.4 * 5 + 0.6 * 10).
    EXPECT_NEAR(quality(tree, tree.root, 0, v), 5.0 + 0.9 * (0.4 * 5.0 + 0.6 * 10.0), 1e-12);
}

TEST(Stit, UniformRewardGivesUniformQuality) {
    Rng rng(51);
    for (int i = 0; i < 20; ++i) {
        auto base = testkit::random_mdp(rng, {4, 2});
        std::vector<std::vector<ActionRow>> rows;
        for (std::size_t s = 0; s < base.size(); ++s) rows.emplace_back(base.rows(s).begin(), base.rows(s).end());
        std::vector<std::vector<std::string>> labels;
        for (std::size_t s = 0; s < base.size(); ++s) labels.push_back(base.labels(s));
        const double c = 2.5;
        Mdp m(base.state_names(), 0, base.atoms(), labels, base.action_names(), rows,
              std::vector<double>(base.size(), c), base.gamma());
        const std::size_t h = 3;
        auto tree = unroll(m, h);
        double expect = c * (1.0 - std::pow(m.gamma(), h + 1)) / (1.0 - m.gamma());
        for (const auto& qs : all_qualities(tree, discounted_value(m)))
            for (double q : qs) EXPECT_NEAR(q, expect, 1e-9);
    }
}

TEST(Stit, ExplicitTreeAgreesWithBackwardRecursion) {
    Rng rng(52);
    for (int i = 0; i < 30; ++i) {
        auto m = testkit::random_mdp(rng, {3, 3});
        const std::size_t h = 4;
        auto tree = unroll(m, h);
        auto v = discounted_value(m);
        auto qs = all_qualities(tree, v);
        for (std::size_t id = 0; id < tree.size(); ++id) {
            const auto& mo = tree.moments[id];
            if (tree.is_leaf(id)) continue;
            auto prefix = path_from_root(tree, id);
            prefix.pop_back();
            double before = prefix.empty() ? 0.0 : v(tree, prefix);
            double scale = std::pow(m.gamma(), static_cast<double>(mo.depth));
            auto q = finite_q(m, h - mo.depth);
            for (std::size_t k = 0; k < tree.choices[id].size(); ++k) {
                double expect = before + scale * q[mo.state][tree.choices[id][k].action];
                EXPECT_NEAR(qs[id][k], expect, 1e-9);
            }
        }
    }
}

TEST(Stit, RootQualityWithinTruncationBoundOfBellmanQ) {
    Rng rng(53);
    for (int i = 0; i < 30; ++i) {
        auto m = testkit::random_mdp(rng, {3, 3});
        auto [vstar, pi] = value_iteration(m, 1e-12);
        for (std::size_t h = 1; h <= 5; ++h) {
            auto tree = unroll(m, h);
            auto qs = all_qualities(tree, discounted_value(m));
            for (std::size_t k = 0; k < qs[tree.root].size(); ++k) {
                auto a = tree.choices[tree.root][k].action;
                double bellman = q_value(m, vstar, m.initial(), a);
                EXPECT_LE(std::abs(qs[tree.root][k] - bellman), truncation_bound(m, h) + 1e-9);
            }
        }
    }
}

TEST(Stit, MemoisedCorrespondenceMatchesExplicitTree) {
    Rng rng(54);
    for (int i = 0; i < 30; ++i) {
        auto m = testkit::random_mdp(rng, {3, 3});
        const std::size_t h = 5;
        auto rep = verify_correspondence(m, h);
        std::vector<std::size_t> optimal;
        auto gaps = q_gaps(m, &optimal);
        auto tree = unroll(m, h);
        auto qs = all_qualities(tree, discounted_value(m));
        double checked = 0.0;
        std::size_t mismatches = 0;
        for (std::size_t id = 0; id < tree.size(); ++id) {
            const auto& mo = tree.moments[id];
            if (tree.is_leaf(id) || tree.choices[id].size() < 2 || !(gaps[mo.state] > 1e-6)) continue;
            if (2.0 * truncation_bound(m, h - mo.depth) >= gaps[mo.state] - 1e-6) continue;
            std::size_t arg = 0;
            for (std::size_t k = 1; k < qs[id].size(); ++k)
                if (qs[id][k] > qs[id][arg]) arg = k;
            checked += 1.0;
            if (tree.choices[id][arg].action != optimal[mo.state]) ++mismatches;
        }
        EXPECT_DOUBLE_EQ(rep.moments_checked, checked);
        EXPECT_EQ(rep.violations.empty(), mismatches == 0);
        EXPECT_TRUE(rep.violations.empty());
    }
}

TEST(Stit, BuiltinsCorrespondAtGapHorizon) {
    for (const auto& m : {workbench::builtin_mdp1(), workbench::builtin_mdp2()}) {
        auto h = horizon_for_gap(m, 1e-6);
        auto rep = verify_correspondence(m, h);
        EXPECT_GT(rep.checked, 0u);
        EXPECT_TRUE(rep.violations.empty());
        EXPECT_LT(rep.max_mass_error, 1e-12);
    }
}

TEST(Stit, Renderings) {
    auto m = workbench::builtin_mdp1();
    auto tree = unroll(m, 1);
    std::ostringstream text, dot;
    write_text(text, m, tree);
    write_dot(dot, m, tree);
    EXPECT_EQ(text.str().substr(0, 8), "m0 [s0]\n");
    EXPECT_NE(dot.str().find("m0 -> m1 [label=\"a1 0.4\"]"), std::string::npos);
}
