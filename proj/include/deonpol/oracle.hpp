#pragma once

/// Exhaustive search over deterministic policies for the constrained optimum.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "deonpol/errors.hpp"
#include "deonpol/mdp.hpp"
#include "deonpol/pctl/checker.hpp"
#include "deonpol/pctl/formula.hpp"

namespace deonpol {

inline constexpr std::size_t kDefaultPolicyCap = 10'000'000;

/// Tolerance for grouping tied optima.
inline constexpr double kTieTolerance = 1e-6;

struct FeasiblePolicy {
    Policy policy;
    double value;
};

struct OracleReport {
    std::vector<Policy> optimal_policies;
    double optimal_value = -std::numeric_limits<double>::infinity();
    /// Reachability vector of the first optimum when the formula is a top-level until.
    pctl::ProbVector x_at_optimum;
    std::size_t feasible_count = 0;
    std::size_t total_count = 0;
    /// Filled only on request.
    std::vector<FeasiblePolicy> feasible;
};

/// Cap from DEONPOL_MAX_POLICIES when set to a positive integer, the default otherwise.
inline std::size_t policy_cap_from_env() {
    if (const char* env = std::getenv("DEONPOL_MAX_POLICIES")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        throw InputError(std::string("DEONPOL_MAX_POLICIES must be a positive integer, got '") + env + "'");
    }
    return kDefaultPolicyCap;
}

/// Policy with mixed-radix index k; state 0 is the least significant digit.
inline Policy policy_at(const Mdp& mdp, std::size_t k) {
    Policy pi;
    pi.actions.resize(mdp.size());
    for (std::size_t s = 0; s < mdp.size(); ++s) {
        auto rows = mdp.rows(s);
        pi.actions[s] = rows[k % rows.size()].action;
        k /= rows.size();
    }
    return pi;
}

/// Calls f(index, policy) for every policy in enumeration order.
template <class F>
void for_each_policy(const Mdp& mdp, F&& f) {
    const std::size_t total = mdp.policy_count();
    for (std::size_t k = 0; k < total; ++k) f(k, policy_at(mdp, k));
}

struct OracleOptions {
    std::size_t cap = kDefaultPolicyCap;
    bool collect_feasible = false;
    /// 0 picks the hardware concurrency.
    unsigned threads = 0;
};

inline OracleReport brute_force(const Mdp& mdp, const pctl::StateFormula& f, const OracleOptions& opt = {}) {
    const std::size_t total = mdp.policy_count();
    if (total > opt.cap)
        throw CapExceeded("model has " + (total == std::numeric_limits<std::size_t>::max() ? std::string("too many")
                                                                                          : std::to_string(total)) +
                          " policies, above the cap of " + std::to_string(opt.cap));
    pctl::detail::check_atoms(mdp, f);

    // Inner subformulas never depend on the candidate policy when they are propositional,
    // but nested Prob nodes do, so feasibility is decided with the full policy-aware check.
    auto feasible = [&](const Policy& pi) -> bool { return pctl::sat(mdp, f, pi)[mdp.initial()]; };

    unsigned workers = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, total / 64)));

    struct Partial {
        double best = -std::numeric_limits<double>::infinity();
        std::vector<FeasiblePolicy> near_best;  // within the tie band of this chunk's best
        std::vector<FeasiblePolicy> all;
        std::size_t feasible = 0;
    };
    std::vector<Partial> parts(workers);
    auto work = [&](unsigned w) {
        const std::size_t lo = total * w / workers, hi = total * (w + 1) / workers;
        Partial& p = parts[w];
        for (std::size_t k = lo; k < hi; ++k) {
            Policy pi = policy_at(mdp, k);
            if (!feasible(pi)) continue;
            ++p.feasible;
            double v = evaluate_exact(mdp, pi)[mdp.initial()];
            if (opt.collect_feasible) p.all.push_back({pi, v});
            if (v > p.best) {
                p.best = v;
                std::erase_if(p.near_best, [&](const FeasiblePolicy& fp) { return fp.value < v - kTieTolerance; });
            }
            if (v >= p.best - kTieTolerance) p.near_best.push_back({std::move(pi), v});
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    OracleReport rep;
    rep.total_count = total;
    for (const auto& p : parts) {
        rep.feasible_count += p.feasible;
        rep.optimal_value = std::max(rep.optimal_value, p.best);
        if (opt.collect_feasible) rep.feasible.insert(rep.feasible.end(), p.all.begin(), p.all.end());
    }
    if (rep.feasible_count == 0)
        throw InfeasibleConstraint("no policy satisfies " + pctl::to_string(f) + " at '" +
                                   mdp.state_name(mdp.initial()) + "'");
    // Chunks are in index order, so the merged tie list is too.
    for (const auto& p : parts) {
        for (const auto& fp : p.near_best) {
            if (fp.value >= rep.optimal_value - kTieTolerance) rep.optimal_policies.push_back(fp.policy);
        }
    }
    if (f.kind == pctl::StateFormula::Kind::Prob && f.path->kind == pctl::PathFormula::Kind::Until) {
        const Policy& best = rep.optimal_policies.front();
        rep.x_at_optimum = pctl::solve_reach(mdp, best, pctl::sat(mdp, *f.path->left, best),
                                             pctl::sat(mdp, *f.path->right, best));
    }
    return rep;
}

}  // namespace deonpol
