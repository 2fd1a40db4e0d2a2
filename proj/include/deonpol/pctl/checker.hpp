#pragma once

/// PCTL model checking over MDPs and policy-induced chains.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "deonpol/errors.hpp"
#include "deonpol/mdp.hpp"
#include "deonpol/pctl/formula.hpp"

namespace deonpol::pctl {

using ProbVector = std::vector<double>;

inline StateSet set_complement(const StateSet& a) {
    StateSet out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = !a[i];
    return out;
}

inline StateSet all_states(std::size_t n) { return StateSet(n, true); }

/**
 * States from which no action sequence reaches satPsi through satPhi.
 * Least fixed point of backward reachability, then complemented. Existential over
 * actions: pass mdp.restricted(pi) for the per-policy variant.
 */
inline StateSet prob0(const Mdp& mdp, const StateSet& phi, const StateSet& psi) {
    const std::size_t n = mdp.size();
    StateSet reach = psi;
    for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (reach[s] || !phi[s]) continue;
            for (const auto& r : mdp.rows(s)) {
                if (std::any_of(r.successors.begin(), r.successors.end(), [&](const Successor& x) { return reach[x.to]; })) {
                    reach[s] = grew = true;
                    break;
                }
            }
        }
    }
    return set_complement(reach);
}

/**
 * States where some policy satisfies phi U psi with probability 1.
 *
 * Nested fixed point: the outer set shrinks to states that can stay inside it while
 * still reaching psi. On a one-action model this is exactly "cannot reach s_no through
 * phi-and-not-psi states", i.e. the failure-set expansion from s_no complemented.
 */
inline StateSet prob1(const Mdp& mdp, const StateSet& phi, const StateSet& psi, const StateSet& s_no) {
    const std::size_t n = mdp.size();
    StateSet outer = set_complement(s_no);
    for (bool shrunk = true; shrunk;) {
        StateSet inner = psi;
        for (bool grew = true; grew;) {
            grew = false;
            for (std::size_t s = 0; s < n; ++s) {
                if (inner[s] || !outer[s] || !phi[s]) continue;
                for (const auto& r : mdp.rows(s)) {
                    bool stays = std::all_of(r.successors.begin(), r.successors.end(),
                                             [&](const Successor& x) { return outer[x.to]; });
                    bool progresses = std::any_of(r.successors.begin(), r.successors.end(),
                                                  [&](const Successor& x) { return inner[x.to]; });
                    if (stays && progresses) {
                        inner[s] = grew = true;
                        break;
                    }
                }
            }
        }
        for (std::size_t s = 0; s < n; ++s) inner[s] = inner[s] && outer[s];
        shrunk = inner != outer;
        outer = std::move(inner);
    }
    return outer;
}

inline StateSet prob0(const MarkovChain& c, const StateSet& phi, const StateSet& psi) {
    return prob0(c.as_mdp(), phi, psi);
}
inline StateSet prob1(const MarkovChain& c, const StateSet& phi, const StateSet& psi, const StateSet& s_no) {
    return prob1(c.as_mdp(), phi, psi, s_no);
}

/// Probability of phi U psi on a one-action model; direct solve on the undetermined states.
inline ProbVector solve_reach_chain(const Mdp& chain, const StateSet& phi, const StateSet& psi) {
    const std::size_t n = chain.size();
    StateSet s_no = prob0(chain, phi, psi);
    StateSet s_yes = prob1(chain, phi, psi, s_no);
    ProbVector x(n, 0.0);
    std::vector<std::size_t> idx(n, n), unknown;
    for (std::size_t s = 0; s < n; ++s) {
        if (s_yes[s]) {
            x[s] = 1.0;
        } else if (!s_no[s]) {
            idx[s] = unknown.size();
            unknown.push_back(s);
        }
    }
    if (unknown.empty()) return x;
    const auto m = static_cast<Eigen::Index>(unknown.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto s = unknown[static_cast<std::size_t>(i)];
        for (const auto& t : chain.rows(s).front().successors) {
            if (s_yes[t.to]) {
                b(i) += t.prob;
            } else if (idx[t.to] != n) {
                a(i, static_cast<Eigen::Index>(idx[t.to])) -= t.prob;
            }
        }
    }
    Eigen::VectorXd sol = a.partialPivLu().solve(b);
    for (Eigen::Index i = 0; i < m; ++i) x[unknown[static_cast<std::size_t>(i)]] = std::clamp(sol(i), 0.0, 1.0);
    return x;
}

/// Probability of phi U psi from every state under a fixed policy.
inline ProbVector solve_reach(const Mdp& mdp, const Policy& pi, const StateSet& phi, const StateSet& psi) {
    return solve_reach_chain(mdp.restricted(pi), phi, psi);
}

inline ProbVector solve_reach(const MarkovChain& c, const StateSet& phi, const StateSet& psi) {
    return solve_reach_chain(c.as_mdp(), phi, psi);
}

/// Y(s,a) = sum_s' T(s,a,s') x(s').
inline double one_step(const Mdp& mdp, std::size_t s, std::size_t a, const ProbVector& x) {
    double acc = 0.0;
    for (const auto& t : mdp.successors(s, a)) acc += t.prob * x[t.to];
    return acc;
}

struct PmaxResult {
    ProbVector probs;
    Policy policy;
};

/**
 * Pointwise maximal probability of phi U psi, with a policy attaining it.
 *
 * Value iteration runs after the qualitative precomputation. A greedy argmax alone can
 * idle inside an end component (every action looks optimal), so the returned policy
 * picks, among value-optimal actions, one that moves closer to psi in a backward sweep.
 * Ties fall to declaration order.
 */
inline PmaxResult pmax(const Mdp& mdp, const StateSet& phi, const StateSet& psi) {
    const std::size_t n = mdp.size();
    StateSet s_no = prob0(mdp, phi, psi);
    StateSet s_yes = prob1(mdp, phi, psi, s_no);
    ProbVector x(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) x[s] = s_yes[s] ? 1.0 : 0.0;
    for (std::size_t it = 0; it < 10'000'000; ++it) {
        double diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (s_yes[s] || s_no[s]) continue;
            double best = 0.0;
            for (const auto& r : mdp.rows(s)) best = std::max(best, one_step(mdp, s, r.action, x));
            diff = std::max(diff, std::abs(best - x[s]));
            x[s] = best;
        }
        if (diff < 1e-13) break;
    }

    Policy pi = first_action_policy(mdp);
    StateSet done(n, false);
    for (std::size_t s = 0; s < n; ++s) {
        // Targets, dead states and probability-zero states need no routing.
        if (psi[s] || !phi[s] || s_no[s]) done[s] = true;
    }
    StateSet reached = psi;
    for (bool progress = true; progress;) {
        progress = false;
        StateSet next = reached;
        for (std::size_t s = 0; s < n; ++s) {
            if (done[s]) continue;
            for (const auto& r : mdp.rows(s)) {
                if (std::abs(one_step(mdp, s, r.action, x) - x[s]) > 1e-9) continue;
                if (std::any_of(r.successors.begin(), r.successors.end(), [&](const Successor& t) { return reached[t.to]; })) {
                    pi.actions[s] = r.action;
                    done[s] = next[s] = progress = true;
                    break;
                }
            }
        }
        reached = std::move(next);
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (done[s]) continue;
        for (const auto& r : mdp.rows(s)) {
            if (std::abs(one_step(mdp, s, r.action, x) - x[s]) <= 1e-9) {
                pi.actions[s] = r.action;
                break;
            }
        }
    }
    return {std::move(x), std::move(pi)};
}

/// Pointwise minimal probability of phi U psi over all policies.
inline ProbVector pmin(const Mdp& mdp, const StateSet& phi, const StateSet& psi) {
    const std::size_t n = mdp.size();
    // States forced to reach psi with positive probability whatever the policy does.
    StateSet forced = psi;
    for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (forced[s] || !phi[s]) continue;
            bool all = std::all_of(mdp.rows(s).begin(), mdp.rows(s).end(), [&](const ActionRow& r) {
                return std::any_of(r.successors.begin(), r.successors.end(), [&](const Successor& t) { return forced[t.to]; });
            });
            if (all) forced[s] = grew = true;
        }
    }
    ProbVector x(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) x[s] = psi[s] ? 1.0 : 0.0;
    for (std::size_t it = 0; it < 10'000'000; ++it) {
        double diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (psi[s] || !forced[s]) continue;
            double best = 1.0;
            for (const auto& r : mdp.rows(s)) best = std::min(best, one_step(mdp, s, r.action, x));
            diff = std::max(diff, std::abs(best - x[s]));
            x[s] = best;
        }
        if (diff < 1e-13) break;
    }
    return x;
}

enum class Optimum { Min, Max };

/// phi U<=n psi, optimised over actions at every step (a single action yields the chain value).
inline ProbVector bounded_until_opt(const Mdp& mdp, const StateSet& phi, const StateSet& psi, std::size_t steps,
                                    Optimum dir) {
    const std::size_t n = mdp.size();
    ProbVector x(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) x[s] = psi[s] ? 1.0 : 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        ProbVector next(n, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            if (psi[s]) {
                next[s] = 1.0;
            } else if (phi[s]) {
                double v = dir == Optimum::Max ? 0.0 : 1.0;
                for (const auto& r : mdp.rows(s)) {
                    double y = one_step(mdp, s, r.action, x);
                    v = dir == Optimum::Max ? std::max(v, y) : std::min(v, y);
                }
                next[s] = v;
            }
        }
        x = std::move(next);
    }
    return x;
}

inline ProbVector next_opt(const Mdp& mdp, const StateSet& phi, Optimum dir) {
    const std::size_t n = mdp.size();
    ProbVector ind(n, 0.0), x(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) ind[s] = phi[s] ? 1.0 : 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double v = dir == Optimum::Max ? 0.0 : 1.0;
        for (const auto& r : mdp.rows(s)) {
            double y = one_step(mdp, s, r.action, ind);
            v = dir == Optimum::Max ? std::max(v, y) : std::min(v, y);
        }
        x[s] = v;
    }
    return x;
}

inline ProbVector check_bounded(const Mdp& mdp, const Policy& pi, const StateSet& phi, const StateSet& psi,
                                std::size_t steps) {
    return bounded_until_opt(mdp.restricted(pi), phi, psi, steps, Optimum::Max);
}

inline ProbVector check_next(const Mdp& mdp, const Policy& pi, const StateSet& phi) {
    return next_opt(mdp.restricted(pi), phi, Optimum::Max);
}

/// How Prob nodes are decided when no policy is fixed.
enum class Resolution {
    /// Satisfied iff every policy's probability lies in the bound.
    Universal,
    /// Every policy agrees on membership, otherwise AmbiguousFormula.
    Unambiguous,
};

namespace detail {

inline void check_atoms(const Mdp& mdp, const StateFormula& f) {
    using K = StateFormula::Kind;
    switch (f.kind) {
        case K::True: return;
        case K::Atom:
            if (!mdp.has_atom(f.atom)) throw FormulaError("undeclared atom '" + f.atom + "'");
            return;
        case K::Not: check_atoms(mdp, *f.left); return;
        case K::And:
            check_atoms(mdp, *f.left);
            check_atoms(mdp, *f.right);
            return;
        case K::Prob:
            if (f.path->left) check_atoms(mdp, *f.path->left);
            check_atoms(mdp, *f.path->right);
            return;
    }
}

}  // namespace detail

StateSet sat(const Mdp& mdp, const StateFormula& f, const std::optional<Policy>& pi,
             Resolution mode = Resolution::Universal);

/// Min and max probability of a path formula; equal when a policy is fixed.
inline std::pair<ProbVector, ProbVector> path_probabilities(const Mdp& mdp, const PathFormula& p,
                                                            const std::optional<Policy>& pi, Resolution mode) {
    StateSet right = sat(mdp, *p.right, pi, mode);
    if (pi) {
        switch (p.kind) {
            case PathFormula::Kind::Next: {
                auto x = check_next(mdp, *pi, right);
                return {x, x};
            }
            case PathFormula::Kind::Until: {
                auto x = solve_reach(mdp, *pi, sat(mdp, *p.left, pi, mode), right);
                return {x, x};
            }
            case PathFormula::Kind::BoundedUntil: {
                auto x = check_bounded(mdp, *pi, sat(mdp, *p.left, pi, mode), right, p.steps);
                return {x, x};
            }
        }
    }
    switch (p.kind) {
        case PathFormula::Kind::Next: return {next_opt(mdp, right, Optimum::Min), next_opt(mdp, right, Optimum::Max)};
        case PathFormula::Kind::Until: {
            StateSet left = sat(mdp, *p.left, pi, mode);
            return {pmin(mdp, left, right), pmax(mdp, left, right).probs};
        }
        case PathFormula::Kind::BoundedUntil: {
            StateSet left = sat(mdp, *p.left, pi, mode);
            return {bounded_until_opt(mdp, left, right, p.steps, Optimum::Min),
                    bounded_until_opt(mdp, left, right, p.steps, Optimum::Max)};
        }
    }
    return {};
}

/**
 * States satisfying f. With a policy, Prob nodes are evaluated on the induced chain.
 * Without one, the [pmin, pmax] range is compared against the bound per `mode`.
 */
inline StateSet sat(const Mdp& mdp, const StateFormula& f, const std::optional<Policy>& pi, Resolution mode) {
    detail::check_atoms(mdp, f);
    const std::size_t n = mdp.size();
    using K = StateFormula::Kind;
    switch (f.kind) {
        case K::True: return all_states(n);
        case K::Atom: return mdp.states_with(f.atom);
        case K::Not: return set_complement(sat(mdp, *f.left, pi, mode));
        case K::And: {
            StateSet a = sat(mdp, *f.left, pi, mode), b = sat(mdp, *f.right, pi, mode);
            for (std::size_t s = 0; s < n; ++s) a[s] = a[s] && b[s];
            return a;
        }
        case K::Prob: {
            auto [lo, hi] = path_probabilities(mdp, *f.path, pi, mode);
            StateSet out(n, false);
            for (std::size_t s = 0; s < n; ++s) {
                bool in_lo = f.bound.contains(lo[s]), in_hi = f.bound.contains(hi[s]);
                if (mode == Resolution::Unambiguous && !pi) {
                    // The range [lo, hi] either sits inside J or misses it entirely.
                    bool disjoint = !in_lo && !in_hi && (hi[s] < f.bound.lower || lo[s] > f.bound.upper);
                    if (!(in_lo && in_hi) && !disjoint)
                        throw AmbiguousFormula("subformula " + to_string(f) + " at state '" + mdp.state_name(s) +
                                               "' depends on the policy");
                }
                out[s] = in_lo && in_hi;
            }
            return out;
        }
    }
    return StateSet(n, false);
}

inline StateSet sat(const Mdp& mdp, const StateFormula& f) { return sat(mdp, f, std::nullopt); }

}  // namespace deonpol::pctl
