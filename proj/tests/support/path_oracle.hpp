#pragma once

// Reference reachability computed forwards from path measures, sharing no code with the checker.

#include <cmath>
#include <vector>

#include "deonpol/mdp.hpp"

namespace deonpol::testkit {

struct PathOracle {
    std::vector<double> prob;
    StateSet yes, no;
    /// Probability mass still undecided when propagation stopped.
    double residual = 0.0;
};

namespace detail {

/// Forward reachability from s along edges leaving states where `open` holds.
inline std::vector<bool> forward(const MarkovChain& c, std::size_t s, const StateSet& open) {
    std::vector<bool> seen(c.size(), false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        if (!open[u]) continue;
        for (const auto& t : c.row(u)) {
            if (!seen[t.to]) {
                seen[t.to] = true;
                stack.push_back(t.to);
            }
        }
    }
    return seen;
}

}  // namespace detail

/**
 * Sums cylinder-set measures of phi-paths that hit psi, grouping prefixes by their last
 * state. Prefixes entering a state that can never see psi are discarded (absorbing
 * analysis), so the undecided mass shrinks geometrically; propagation stops once it is
 * below `residual_target` or after `max_horizon` steps.
 */
inline PathOracle enumerate_until(const MarkovChain& c, const StateSet& phi, const StateSet& psi,
                                  std::size_t max_horizon = 1'000'000, double residual_target = 1e-12) {
    const std::size_t n = c.size();
    StateSet open(n);
    for (std::size_t s = 0; s < n; ++s) open[s] = phi[s] && !psi[s];

    PathOracle out;
    out.yes.assign(n, false);
    out.no.assign(n, false);
    for (std::size_t s = 0; s < n; ++s) {
        auto reach = detail::forward(c, s, open);
        bool hits = false, fails = false, stuck = false;
        for (std::size_t t = 0; t < n; ++t) {
            if (!reach[t]) continue;
            if (psi[t]) hits = true;
            if (!phi[t] && !psi[t]) fails = true;
        }
        for (std::size_t t = 0; t < n && !stuck; ++t) {
            if (!reach[t] || !open[t]) continue;
            auto from_t = detail::forward(c, t, open);
            bool ok = false;
            for (std::size_t u = 0; u < n; ++u) ok = ok || (from_t[u] && psi[u]);
            stuck = !ok;
        }
        out.no[s] = !hits;
        out.yes[s] = psi[s] || (hits && !fails && !stuck);
    }

    out.prob.assign(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        if (psi[s]) {
            out.prob[s] = 1.0;
            continue;
        }
        if (!open[s] || out.no[s]) continue;
        std::vector<double> mass(n, 0.0);
        mass[s] = 1.0;
        double success = 0.0, pending = 1.0;
        for (std::size_t h = 0; h < max_horizon && pending > residual_target; ++h) {
            std::vector<double> next(n, 0.0);
            for (std::size_t u = 0; u < n; ++u) {
                if (mass[u] == 0.0) continue;
                for (const auto& t : c.row(u)) {
                    double m = mass[u] * t.prob;
                    if (psi[t.to]) {
                        success += m;
                    } else if (open[t.to] && !out.no[t.to]) {
                        next[t.to] += m;
                    }
                }
            }
            mass = std::move(next);
            pending = 0.0;
            for (double m : mass) pending += m;
        }
        out.prob[s] = success;
        out.residual = std::max(out.residual, pending);
    }
    return out;
}

/// Literal depth-first enumeration of every path up to `horizon` steps (exponential; small cases only).
inline double enumerate_paths_dfs(const MarkovChain& c, const StateSet& phi, const StateSet& psi, std::size_t s,
                                  std::size_t horizon) {
    if (psi[s]) return 1.0;
    if (!phi[s] || horizon == 0) return 0.0;
    double acc = 0.0;
    for (const auto& t : c.row(s)) acc += t.prob * enumerate_paths_dfs(c, phi, psi, t.to, horizon - 1);
    return acc;
}

}  // namespace deonpol::testkit
