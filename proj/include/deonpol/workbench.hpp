#pragma once

/// Built-in models, gamma calibration, table reproduction and epsilon sweeps.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "deonpol/errors.hpp"
#include "deonpol/format.hpp"
#include "deonpol/mdp.hpp"
#include "deonpol/oracle.hpp"
#include "deonpol/pctl/parser.hpp"
#include "deonpol/synth.hpp"

namespace deonpol::workbench {

/// Discount shared by both built-in models; calibrate_gamma recovers it from V* = 71.05.
inline constexpr double kBuiltinGamma = 0.9;

/**
 * Four-state model with rewards 5, 10, 7, 3.
 *
 * The transition arrows are a reconstruction: they are chosen so that the published
 * optima, reachability vectors and improvement sequence come out as reported.
 */
inline Mdp builtin_mdp1() {
    MdpBuilder b;
    for (auto a : {"a1", "a2", "a3", "a4"}) b.action(a);
    for (auto a : {"s0", "s1", "s2", "s3"}) b.atom(a);
    b.state("s0", 5, {"s0"}).state("s1", 10, {"s1"}).state("s2", 7, {"s2"}).state("s3", 3, {"s3"});
    b.initial("s0").gamma(kBuiltinGamma);
    b.transition("s0", "a1", "s0", 0.4).transition("s0", "a1", "s1", 0.6);
    b.transition("s1", "a2", "s0", 0.3).transition("s1", "a2", "s1", 0.5).transition("s1", "a2", "s3", 0.2);
    b.transition("s1", "a3", "s0", 0.2).transition("s1", "a3", "s1", 0.4);
    b.transition("s1", "a3", "s2", 0.224).transition("s1", "a3", "s3", 0.176);
    b.transition("s2", "a1", "s2", 1.0);
    b.transition("s2", "a4", "s0", 0.9).transition("s2", "a4", "s2", 0.1);
    b.transition("s3", "a4", "s0", 0.4).transition("s3", "a4", "s1", 0.1);
    b.transition("s3", "a4", "s2", 0.4).transition("s3", "a4", "s3", 0.1);
    return b.build();
}

/// Six-state grid-like model with rewards 1, 2, 3, 20, 0, 0; hazard at s1, goal2 at s2 and s3.
inline Mdp builtin_mdp2() {
    MdpBuilder b;
    for (auto a : {"east", "west", "south", "north", "stuck"}) b.action(a);
    for (auto a : {"hazard", "goal2", "s0", "s1", "s2", "s3", "s4", "s5"}) b.atom(a);
    b.state("s0", 1, {"s0"})
        .state("s1", 2, {"s1", "hazard"})
        .state("s2", 3, {"s2", "goal2"})
        .state("s3", 20, {"s3", "goal2"})
        .state("s4", 0, {"s4"})
        .state("s5", 0, {"s5"});
    b.initial("s0").gamma(kBuiltinGamma);
    b.transition("s0", "east", "s1", 0.6).transition("s0", "east", "s0", 0.4);
    b.transition("s0", "south", "s3", 0.8).transition("s0", "south", "s4", 0.1).transition("s0", "south", "s1", 0.1);
    b.transition("s1", "east", "s2", 1.0);
    b.transition("s1", "south", "s4", 0.5).transition("s1", "south", "s2", 0.5);
    b.transition("s2", "stuck", "s2", 1.0);
    b.transition("s3", "stuck", "s3", 1.0);
    b.transition("s4", "east", "s5", 1.0);
    b.transition("s4", "west", "s3", 0.6).transition("s4", "west", "s4", 0.4);
    b.transition("s5", "west", "s4", 1.0);
    b.transition("s5", "north", "s2", 0.9).transition("s5", "north", "s5", 0.1);
    return b.build();
}

inline std::optional<Mdp> builtin(const std::string& name) {
    if (name == "mdp1") return builtin_mdp1();
    if (name == "mdp2") return builtin_mdp2();
    return std::nullopt;
}

/// Bisection on gamma until V(s_init) is within `accuracy` of the target.
inline double calibrate_gamma(const Mdp& mdp, const Policy& pi, double target, double lo = 1e-6,
                              double hi = 1.0 - 1e-6, double accuracy = 1e-6) {
    auto f = [&](double g) { return evaluate_exact(mdp.with_gamma(g), pi)[mdp.initial()] - target; };
    double flo = f(lo), fhi = f(hi);
    if (std::abs(flo) < accuracy) return lo;
    if (std::abs(fhi) < accuracy) return hi;
    if ((flo < 0) == (fhi < 0))
        throw NoBracket("target " + fmt_sig(target) + " not bracketed: V ranges over [" + fmt_sig(flo + target) + ", " +
                        fmt_sig(fhi + target) + "]");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (std::abs(fm) < accuracy || hi - lo < 1e-15) return mid;
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Published tables

struct NamedChange {
    std::string state, from, to;
    double v_after;
};

struct PublishedTable {
    int id = 0;
    std::string model;
    std::string formula;
    std::vector<std::string> initial_policy;
    double initial_value = 0.0;
    double epsilon = 0.0;
    std::vector<NamedChange> changes;
    std::vector<std::string> final_policy;
    double final_value = 0.0;
    /// Total rows including the initial one, when the table shows a complete run.
    std::optional<std::size_t> rows;
};

inline PublishedTable published_table(int id) {
    switch (id) {
        case 1:
            return {1, "mdp1", "P>=0.4 [ F s3 ]", {"a1", "a3", "a1", "a4"}, 69.98, 0.0,
                    {{"s1", "a3", "a2", 70.39}, {"s2", "a1", "a4", 71.05}}, {"a1", "a2", "a4", "a4"}, 71.05, 9};
        case 2:
            return {2, "mdp2", "P>=0.3 [ F s2 ]", {"east", "south", "stuck", "stuck", "east", "west"}, 14.64, 0.0,
                    {{"s1", "south", "east", 26.03}, {"s5", "west", "north", 26.03}},
                    {"east", "east", "stuck", "stuck", "east", "north"}, 26.03, std::nullopt};
        case 3:
            return {3, "mdp2", "P>=0.85 [ !hazard U goal2 ]", {"south", "east", "stuck", "stuck", "east", "north"}, 149.71,
                    0.4,
                    {{"s1", "east", "south", 149.53}, {"s4", "east", "west", 168.42}, {"s5", "north", "west", 168.42}},
                    {"south", "south", "stuck", "stuck", "west", "west"}, 168.42, std::nullopt};
        default: break;
    }
    throw InputError("unknown table " + std::to_string(id) + " (expected 1, 2 or 3)");
}

struct TableReproduction {
    PublishedTable published;
    SynthResult result;
    std::uint64_t seed = 0;
    /// Whether a seed search was needed (tables run with epsilon > 0).
    bool searched = false;
    /// Same changed states and actions in the same order.
    bool structural_match = false;
    /// Human-readable differences; empty means the table is reproduced at 2 decimals.
    std::vector<std::string> diff;
};

namespace detail {

inline bool same_2dp(double a, double b) { return fmt_fixed(a, 2) == fmt_fixed(b, 2); }

inline std::vector<NamedChange> named_changes(const Mdp& mdp, const SynthResult& r) {
    std::vector<NamedChange> out;
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        if (!r.trace[i].changed) continue;
        auto s = *r.trace[i].visited_state;
        out.push_back({mdp.state_name(s), mdp.action_name(r.trace[i - 1].policy[s]),
                       mdp.action_name(r.trace[i].policy[s]), r.trace[i].v_init});
    }
    return out;
}

inline bool same_structure(const std::vector<NamedChange>& a, const std::vector<NamedChange>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].state != b[i].state || a[i].from != b[i].from || a[i].to != b[i].to) return false;
    }
    return true;
}

}  // namespace detail

/**
 * Runs the table's instance from its published initial policy and diffs the outcome.
 * Tables with epsilon > 0 search seeds 0, 1, ... for one whose draws realise the
 * published change sequence and final policy.
 */
inline TableReproduction reproduce_table(int id, std::uint64_t seed_limit = 100000) {
    TableReproduction rep;
    rep.published = published_table(id);
    const auto& pub = rep.published;
    Mdp mdp = *builtin(pub.model);
    auto formula = pctl::parse(pub.formula);
    Policy start = policy_from_names(mdp, pub.initial_policy);
    Policy target = policy_from_names(mdp, pub.final_policy);

    SynthConfig cfg;
    cfg.epsilon = pub.epsilon;
    if (pub.epsilon > 0.0) {
        rep.searched = true;
        bool found = false;
        for (std::uint64_t seed = 0; seed < seed_limit && !found; ++seed) {
            cfg.rng_seed = seed;
            auto r = run(mdp, *formula, cfg, start);
            if (r.converged && r.policy == target && detail::same_structure(detail::named_changes(mdp, r), pub.changes)) {
                rep.seed = seed;
                rep.result = std::move(r);
                found = true;
            }
        }
        if (!found) {
            cfg.rng_seed = 0;
            rep.result = run(mdp, *formula, cfg, start);
            rep.diff.push_back("no seed below " + std::to_string(seed_limit) + " realises the published sequence; showing seed 0");
        }
    } else {
        rep.result = run(mdp, *formula, cfg, start);
    }

    const auto& r = rep.result;
    auto actual = detail::named_changes(mdp, r);
    rep.structural_match = detail::same_structure(actual, pub.changes);
    if (!detail::same_2dp(r.trace.front().v_init, pub.initial_value))
        rep.diff.push_back("initial V(s0): published " + fmt_fixed(pub.initial_value, 2) + ", got " +
                           fmt_fixed(r.trace.front().v_init, 2));
    const std::size_t common = std::min(actual.size(), pub.changes.size());
    for (std::size_t i = 0; i < common; ++i) {
        const auto &p = pub.changes[i], &a = actual[i];
        if (p.state != a.state || p.from != a.from || p.to != a.to) {
            rep.diff.push_back("change " + std::to_string(i + 1) + ": published " + p.state + ": " + p.from + "->" + p.to +
                               ", got " + a.state + ": " + a.from + "->" + a.to);
        } else if (!detail::same_2dp(p.v_after, a.v_after)) {
            rep.diff.push_back("change " + std::to_string(i + 1) + " (" + p.state + "): published V(s0) " +
                               fmt_fixed(p.v_after, 2) + ", got " + fmt_fixed(a.v_after, 2));
        }
    }
    for (std::size_t i = common; i < pub.changes.size(); ++i) {
        const auto& p = pub.changes[i];
        rep.diff.push_back("missing change " + std::to_string(i + 1) + ": " + p.state + ": " + p.from + "->" + p.to);
    }
    for (std::size_t i = common; i < actual.size(); ++i) {
        const auto& a = actual[i];
        rep.diff.push_back("extra change " + std::to_string(i + 1) + ": " + a.state + ": " + a.from + "->" + a.to);
    }
    if (r.policy != target)
        rep.diff.push_back("final policy: published " + format_policy(mdp, target) + ", got " + format_policy(mdp, r.policy));
    if (!detail::same_2dp(r.value[mdp.initial()], pub.final_value))
        rep.diff.push_back("final V(s0): published " + fmt_fixed(pub.final_value, 2) + ", got " +
                           fmt_fixed(r.value[mdp.initial()], 2));
    if (pub.rows && r.steps() != *pub.rows)
        rep.diff.push_back("rows: published " + std::to_string(*pub.rows) + ", got " + std::to_string(r.steps()));
    return rep;
}

/// Text rendering of a reproduction: the trace at 2 decimals followed by the diff.
inline void write_table_report(std::ostream& os, const TableReproduction& rep) {
    Mdp mdp = *builtin(rep.published.model);
    os << "table " << rep.published.id << ": " << rep.published.formula << " on " << rep.published.model
       << ", epsilon " << fmt_sig(rep.published.epsilon);
    if (rep.searched) os << ", seed " << rep.seed;
    os << "\n";
    for (const auto& row : rep.result.trace) {
        os << (row.visited_state ? mdp.state_name(*row.visited_state) : std::string("pi0"));
        for (std::size_t s = 0; s < mdp.size(); ++s)
            os << ' ' << mdp.action_name(row.policy[s]) << (row.changed && row.visited_state == s ? "*" : "");
        os << "  V=" << fmt_fixed(row.v_init, 2) << "  x=" << fmt_vector(row.x) << "\n";
    }
    os << "structural match: " << (rep.structural_match ? "yes" : "no") << "\n";
    if (rep.diff.empty()) {
        os << "diff: none\n";
    } else {
        for (const auto& d : rep.diff) os << "diff: " << d << "\n";
    }
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
    Mdp mdp;
    std::string formula;
    std::vector<double> epsilons{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::size_t trials = 100;
    std::uint64_t base_seed = 0;
    /// A run without a stable pass inside this budget counts as not converged.
    std::size_t max_outer_iterations = 10;
    unsigned threads = 0;
};

struct SweepRow {
    double epsilon = 0.0;
    std::size_t global = 0, local = 0, not_converged = 0;
    /// Seed per trial, in trial order.
    std::vector<std::uint64_t> seeds;
    std::vector<Outcome> outcomes;
};

struct SweepReport {
    double optimum = 0.0;
    std::vector<SweepRow> rows;
};

/// Converged runs within 1e-6 of the optimum are global, other converged runs local.
inline Outcome classify(const SynthResult& r, std::size_t init, double optimum) {
    if (!r.converged) return Outcome::Unknown;
    return std::abs(r.value[init] - optimum) <= kTieTolerance ? Outcome::Global : Outcome::Local;
}

inline SweepReport sweep(const SweepConfig& cfg) {
    for (double e : cfg.epsilons) {
        if (!(e >= 0.0 && e < 1.0)) throw InputError("epsilon grid values must lie in [0,1)");
    }
    if (cfg.trials == 0) throw InputError("trials must be at least 1");
    auto formula = pctl::parse(cfg.formula);
    auto oracle = brute_force(cfg.mdp, *formula);
    auto constraint = extract_constraint(cfg.mdp, *formula);
    const std::size_t init = cfg.mdp.initial();

    SweepReport rep;
    rep.optimum = oracle.optimal_value;
    const std::size_t jobs = cfg.epsilons.size() * cfg.trials;
    std::vector<Outcome> outcomes(jobs);
    auto job = [&](std::size_t j) {
        SynthConfig sc;
        sc.epsilon = cfg.epsilons[j / cfg.trials];
        sc.rng_seed = cfg.base_seed + j % cfg.trials;
        sc.max_outer_iterations = cfg.max_outer_iterations;
        auto r = run(cfg.mdp, constraint, sc);
        outcomes[j] = classify(r, init, rep.optimum);
    };
    unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    if (workers <= 1) {
        for (std::size_t j = 0; j < jobs; ++j) job(j);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t j = w; j < jobs; j += workers) job(j);
            });
    }
    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
        SweepRow row;
        row.epsilon = cfg.epsilons[e];
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            Outcome o = outcomes[e * cfg.trials + t];
            row.seeds.push_back(cfg.base_seed + t);
            row.outcomes.push_back(o);
            if (o == Outcome::Global) {
                ++row.global;
            } else if (o == Outcome::Local) {
                ++row.local;
            } else {
                ++row.not_converged;
            }
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
    os << "epsilon,global,local,not_converged\n";
    for (const auto& r : rep.rows)
        os << fmt_sig(r.epsilon) << ',' << r.global << ',' << r.local << ',' << r.not_converged << '\n';
}

}  // namespace deonpol::workbench
