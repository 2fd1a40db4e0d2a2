#pragma once

/**
 * Bounded unrolling of an MDP into a branching-time choice structure.
 *
 * Each node (moment) carries an MDP state. Its children are grouped into tokens, one
 * per available action, and a token holds the successor moments that action can lead
 * to. Histories are root-to-leaf paths; their probability is the product of incoming
 * transition probabilities, with the agent's token choices conditioned on.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "deonpol/errors.hpp"
#include "deonpol/format.hpp"
#include "deonpol/mdp.hpp"

namespace deonpol::stit {

inline constexpr std::size_t kDefaultMomentCap = 2'000'000;

struct Moment {
    std::size_t id = 0;
    std::size_t state = 0;
    std::size_t depth = 0;
    /// Root has parent == id.
    std::size_t parent = 0;
    /// Token of the parent this moment belongs to.
    std::size_t parent_token = 0;
    double incoming = 1.0;
};

struct Token {
    /// Action type label.
    std::size_t action = 0;
    std::vector<std::size_t> children;
};

struct StitTree {
    std::vector<Moment> moments;
    /// choices[m] partitions the children of m.
    std::vector<std::vector<Token>> choices;
    std::size_t root = 0;
    std::size_t horizon = 0;

    bool is_leaf(std::size_t m) const { return choices[m].empty(); }
    std::size_t size() const { return moments.size(); }
};

/// Ordered moments from some moment down to a leaf.
using HistoryPrefix = std::vector<std::size_t>;

/// Moments an unrolling to `horizon` would create.
inline std::size_t count_moments(const Mdp& mdp, std::size_t horizon) {
    // counts[s] = moments below (and including) a moment at state s with r steps left
    std::vector<double> counts(mdp.size(), 1.0);
    for (std::size_t r = 1; r <= horizon; ++r) {
        std::vector<double> next(mdp.size(), 1.0);
        for (std::size_t s = 0; s < mdp.size(); ++s) {
            for (const auto& row : mdp.rows(s))
                for (const auto& t : row.successors) next[s] += counts[t.to];
        }
        counts = std::move(next);
    }
    double c = counts[mdp.initial()];
    return c > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(c);
}

inline StitTree unroll(const Mdp& mdp, std::size_t horizon, std::size_t cap = kDefaultMomentCap) {
    if (horizon == 0) throw DomainError("horizon must be at least 1");
    const std::size_t need = count_moments(mdp, horizon);
    if (need > cap)
        throw CapExceeded("unrolling to horizon " + std::to_string(horizon) + " needs " + std::to_string(need) +
                          " moments, above the cap of " + std::to_string(cap));
    StitTree tree;
    tree.horizon = horizon;
    tree.moments.reserve(need);
    tree.choices.reserve(need);
    tree.moments.push_back({0, mdp.initial(), 0, 0, 0, 1.0});
    tree.choices.emplace_back();
    // Breadth-first; ids grow with depth.
    for (std::size_t m = 0; m < tree.moments.size(); ++m) {
        const Moment cur = tree.moments[m];
        if (cur.depth == horizon) continue;
        for (const auto& row : mdp.rows(cur.state)) {
            Token tok{row.action, {}};
            const std::size_t token_index = tree.choices[m].size();
            for (const auto& t : row.successors) {
                const std::size_t id = tree.moments.size();
                tree.moments.push_back({id, t.to, cur.depth + 1, m, token_index, t.prob});
                tree.choices.emplace_back();
                tok.children.push_back(id);
            }
            tree.choices[m].push_back(std::move(tok));
        }
    }
    return tree;
}

/// Cylinder measure of the prefix given the token choices along it.
inline double history_probability(const StitTree& tree, std::size_t m, const HistoryPrefix& prefix) {
    if (prefix.empty()) throw DomainError("empty history prefix");
    if (prefix.front() != m) throw DomainError("prefix does not start at the given moment");
    double p = 1.0;
    for (std::size_t i = 1; i < prefix.size(); ++i) {
        const auto& mo = tree.moments.at(prefix[i]);
        if (mo.parent != prefix[i - 1] || prefix[i] == tree.root)
            throw DomainError("prefix is not a parent/child chain");
        p *= mo.incoming;
    }
    return p;
}

/// Root-to-m path.
inline HistoryPrefix path_from_root(const StitTree& tree, std::size_t m) {
    HistoryPrefix out;
    for (std::size_t cur = m;; cur = tree.moments[cur].parent) {
        out.push_back(cur);
        if (cur == tree.root) break;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

/// Value of a complete history, given as its root-to-leaf moment path.
using HistoryValue = std::function<double(const StitTree&, const HistoryPrefix&)>;

/// Discounted reward of the visited states.
inline HistoryValue discounted_value(const Mdp& mdp) {
    return [rewards = mdp.rewards(), gamma = mdp.gamma()](const StitTree& tree, const HistoryPrefix& h) {
        double acc = 0.0, g = 1.0;
        for (auto m : h) {
            acc += g * rewards[tree.moments[m].state];
            g *= gamma;
        }
        return acc;
    };
}

namespace detail {

/// Best token quality at m, or the history value at a leaf.
inline double best_below(const StitTree& tree, std::size_t m, const HistoryValue& value, std::vector<double>& memo,
                         std::vector<char>& known);

inline double token_quality(const StitTree& tree, std::size_t m, std::size_t k, const HistoryValue& value,
                            std::vector<double>& memo, std::vector<char>& known) {
    double q = 0.0;
    for (auto c : tree.choices[m][k].children) q += tree.moments[c].incoming * best_below(tree, c, value, memo, known);
    return q;
}

inline double best_below(const StitTree& tree, std::size_t m, const HistoryValue& value, std::vector<double>& memo,
                         std::vector<char>& known) {
    if (known[m]) return memo[m];
    double v;
    if (tree.is_leaf(m)) {
        v = value(tree, path_from_root(tree, m));
    } else {
        v = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < tree.choices[m].size(); ++k)
            v = std::max(v, token_quality(tree, m, k, value, memo, known));
    }
    memo[m] = v;
    known[m] = 1;
    return v;
}

}  // namespace detail

/**
 * Quality of token k at moment m: the probability-weighted best quality one step down,
 * bottoming out in history values at the horizon.
 */
inline double quality(const StitTree& tree, std::size_t m, std::size_t k, const HistoryValue& value) {
    if (k >= tree.choices.at(m).size()) throw DomainError("token index out of range");
    std::vector<double> memo(tree.size(), 0.0);
    std::vector<char> known(tree.size(), 0);
    return detail::token_quality(tree, m, k, value, memo, known);
}

/// Qualities of every token at every moment, sharing one memo.
inline std::vector<std::vector<double>> all_qualities(const StitTree& tree, const HistoryValue& value) {
    std::vector<double> memo(tree.size(), 0.0);
    std::vector<char> known(tree.size(), 0);
    std::vector<std::vector<double>> out(tree.size());
    for (std::size_t m = tree.size(); m-- > 0;) {
        for (std::size_t k = 0; k < tree.choices[m].size(); ++k)
            out[m].push_back(detail::token_quality(tree, m, k, value, memo, known));
    }
    return out;
}

/// Largest deviation from 1 of a token's total child mass, over all tokens.
inline double max_token_mass_error(const StitTree& tree) {
    double worst = 0.0;
    for (const auto& toks : tree.choices) {
        for (const auto& k : toks) {
            double mass = 0.0;
            for (auto c : k.children) mass += tree.moments[c].incoming;
            worst = std::max(worst, std::abs(mass - 1.0));
        }
    }
    return worst;
}

/**
 * Total cylinder measure of the leaves below each moment when every moment follows its
 * first token; returns the largest deviation from 1.
 */
inline double max_cylinder_mass_error(const StitTree& tree) {
    std::vector<double> mass(tree.size(), 1.0);
    double worst = 0.0;
    for (std::size_t m = tree.size(); m-- > 0;) {
        if (tree.is_leaf(m)) continue;
        for (const auto& tok : tree.choices[m]) {
            double total = 0.0;
            for (auto c : tok.children) total += tree.moments[c].incoming * mass[c];
            worst = std::max(worst, std::abs(total - 1.0));
        }
        double first = 0.0;
        for (auto c : tree.choices[m].front().children) first += tree.moments[c].incoming * mass[c];
        mass[m] = first;
    }
    return worst;
}

struct Violation {
    std::size_t depth;
    std::size_t state;
    std::size_t expected_action;
    std::size_t stit_action;
};

struct CorrespondenceReport {
    std::size_t horizon = 0;
    /// (state, depth) classes compared; every moment in a class shares the same subtree shape.
    std::size_t checked = 0;
    /// No unique optimal action beyond the tolerance, or a single action.
    std::size_t skipped_gap = 0;
    /// Too close to the horizon for the truncated qualities to pin down the argmax.
    std::size_t skipped_horizon = 0;
    /// Moments represented by the checked classes.
    double moments_checked = 0.0;
    double max_mass_error = 0.0;
    std::vector<Violation> violations;
};

/// Gap between the best and second-best Bellman Q-value per state (infinite with one action).
inline std::vector<double> q_gaps(const Mdp& mdp, std::vector<std::size_t>* best_action = nullptr) {
    auto [v, pi] = value_iteration(mdp, 1e-12);
    std::vector<double> gaps(mdp.size(), std::numeric_limits<double>::infinity());
    if (best_action) *best_action = pi.actions;
    for (std::size_t s = 0; s < mdp.size(); ++s) {
        double best = -std::numeric_limits<double>::infinity(), second = best;
        for (const auto& r : mdp.rows(s)) {
            double q = q_value(mdp, v, s, r.action);
            if (q > best) {
                second = best;
                best = q;
            } else if (q > second) {
                second = q;
            }
        }
        if (mdp.rows(s).size() > 1) gaps[s] = best - second;
    }
    return gaps;
}

/// Truncation error bound on token qualities with r steps below the moment.
inline double truncation_bound(const Mdp& mdp, std::size_t r) {
    double rmax = 0.0;
    for (double x : mdp.rewards()) rmax = std::max(rmax, std::abs(x));
    return std::pow(mdp.gamma(), static_cast<double>(r + 1)) * rmax / (1.0 - mdp.gamma());
}

/// Smallest horizon at which the root argmax is pinned down for every gapped state.
inline std::size_t horizon_for_gap(const Mdp& mdp, double tolerance) {
    auto gaps = q_gaps(mdp);
    double min_gap = std::numeric_limits<double>::infinity();
    for (double g : gaps) {
        if (g > tolerance) min_gap = std::min(min_gap, g);
    }
    if (!std::isfinite(min_gap)) return 1;
    std::size_t h = 1;
    while (2.0 * truncation_bound(mdp, h) >= min_gap && h < 100000) ++h;
    return h;
}

/**
 * Compares quality-maximising tokens against Bellman-optimal actions.
 *
 * The subtree below a moment depends only on its state and remaining depth, and history
 * values are the root prefix plus a discounted suffix, so token qualities are evaluated
 * once per (state, depth) class. This is the explicit-tree recursion with shared subtrees;
 * tests check both agree on small horizons.
 */
inline CorrespondenceReport verify_correspondence(const Mdp& mdp, std::size_t horizon, double tolerance = 1e-6) {
    if (horizon == 0) throw DomainError("horizon must be at least 1");
    const std::size_t n = mdp.size();
    CorrespondenceReport rep;
    rep.horizon = horizon;
    std::vector<std::size_t> optimal;
    auto gaps = q_gaps(mdp, &optimal);

    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& r : mdp.rows(s)) {
            double mass = 0.0;
            for (const auto& t : r.successors) mass += t.prob;
            rep.max_mass_error = std::max(rep.max_mass_error, std::abs(mass - 1.0));
        }
    }

    // suffix[r][s]: best expected discounted reward of a moment at s with r steps left.
    std::vector<std::vector<double>> suffix(horizon + 1, std::vector<double>(n));
    for (std::size_t s = 0; s < n; ++s) suffix[0][s] = mdp.reward(s);
    auto token_q = [&](std::size_t r, std::size_t s, std::size_t a) {
        double acc = 0.0;
        for (const auto& t : mdp.successors(s, a)) acc += t.prob * suffix[r - 1][t.to];
        return mdp.reward(s) + mdp.gamma() * acc;
    };
    for (std::size_t r = 1; r <= horizon; ++r) {
        for (std::size_t s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& row : mdp.rows(s)) best = std::max(best, token_q(r, s, row.action));
            suffix[r][s] = best;
        }
    }

    // Number of moments per (depth, state) class.
    std::vector<double> count(n, 0.0);
    count[mdp.initial()] = 1.0;
    for (std::size_t d = 0; d < horizon; ++d) {
        const std::size_t r = horizon - d;
        std::vector<double> next(n, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            if (count[s] == 0.0) continue;
            for (const auto& row : mdp.rows(s))
                for (const auto& t : row.successors) next[t.to] += count[s];
            if (mdp.rows(s).size() < 2 || !(gaps[s] > tolerance)) {
                ++rep.skipped_gap;
                continue;
            }
            if (2.0 * truncation_bound(mdp, r) >= gaps[s] - tolerance) {
                ++rep.skipped_horizon;
                continue;
            }
            std::size_t arg = mdp.rows(s).front().action;
            double best = token_q(r, s, arg);
            for (const auto& row : mdp.rows(s)) {
                double q = token_q(r, s, row.action);
                if (q > best) {
                    best = q;
                    arg = row.action;
                }
            }
            ++rep.checked;
            rep.moments_checked += count[s];
            if (arg != optimal[s]) rep.violations.push_back({d, s, optimal[s], arg});
        }
        count = std::move(next);
    }
    return rep;
}

/// Indented text rendering; one line per moment.
inline void write_text(std::ostream& os, const Mdp& mdp, const StitTree& tree) {
    std::function<void(std::size_t, const std::string&)> rec = [&](std::size_t m, const std::string& indent) {
        const auto& mo = tree.moments[m];
        os << indent << "m" << m << " [" << mdp.state_name(mo.state) << "]";
        if (m != tree.root) os << " p=" << fmt_sig(mo.incoming);
        os << "\n";
        for (const auto& tok : tree.choices[m]) {
            os << indent << "  " << mdp.action_name(tok.action) << ":\n";
            for (auto c : tok.children) rec(c, indent + "    ");
        }
    };
    rec(tree.root, "");
}

/// Graphviz rendering: moments as nodes, tokens as clusters of edges labelled by action.
inline void write_dot(std::ostream& os, const Mdp& mdp, const StitTree& tree) {
    os << "digraph stit {\n  rankdir=TB;\n";
    for (const auto& mo : tree.moments)
        os << "  m" << mo.id << " [label=\"" << mdp.state_name(mo.state) << "\"];\n";
    for (std::size_t m = 0; m < tree.size(); ++m) {
        for (std::size_t k = 0; k < tree.choices[m].size(); ++k) {
            const auto& tok = tree.choices[m][k];
            for (auto c : tok.children)
                os << "  m" << m << " -> m" << c << " [label=\"" << mdp.action_name(tok.action) << " "
                   << fmt_sig(tree.moments[c].incoming) << "\"];\n";
        }
    }
    os << "}\n";
}

}  // namespace deonpol::stit
