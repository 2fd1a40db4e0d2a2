#pragma once

/// Core data model: MDPs, induced Markov chains, deterministic policies and value computation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "deonpol/errors.hpp"

namespace deonpol {

/// Absolute tolerance for probability sums and generic float comparisons.
inline constexpr double kTolerance = 1e-9;

/// Membership vector indexed by state.
using StateSet = std::vector<bool>;

struct Successor {
    std::size_t to;
    double prob;
};

/// One available action at a state with its outgoing distribution.
struct ActionRow {
    std::size_t action;
    std::vector<Successor> successors;
};

/// Deterministic policy: one action index per state.
struct Policy {
    std::vector<std::size_t> actions;

    std::size_t operator[](std::size_t s) const { return actions[s]; }
    std::size_t size() const { return actions.size(); }
    friend bool operator==(const Policy&, const Policy&) = default;
    friend auto operator<=>(const Policy&, const Policy&) = default;
};

struct ValueFunction {
    std::vector<double> values;
    double tolerance = kTolerance;

    double operator[](std::size_t s) const { return values[s]; }
    std::size_t size() const { return values.size(); }
};

/**
 * Finite MDP with labelled states and state rewards.
 *
 * Unavailable actions are simply absent from a state's row list, so A(s) is derived.
 * Rows at each state are kept sorted by action declaration index, which is the
 * tie-breaking order used throughout the library. Immutable after construction.
 */
class Mdp {
public:
    Mdp(std::vector<std::string> states, std::size_t initial, std::vector<std::string> atoms,
        std::vector<std::vector<std::string>> labels, std::vector<std::string> actions,
        std::vector<std::vector<ActionRow>> rows, std::vector<double> rewards, double gamma)
        : states_(std::move(states)),
          initial_(initial),
          atoms_(std::move(atoms)),
          actions_(std::move(actions)),
          rows_(std::move(rows)),
          rewards_(std::move(rewards)),
          gamma_(gamma) {
        const std::size_t n = states_.size();
        if (n == 0) throw ModelError("model has no states");
        if (initial_ >= n) throw ModelError("initial state out of range");
        if (labels.size() != n || rows_.size() != n || rewards_.size() != n)
            throw ModelError("per-state vectors disagree in length");
        if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw ModelError("discount must lie in (0,1)");
        for (std::size_t i = 0; i < n; ++i) {
            if (!state_index_.emplace(states_[i], i).second)
                throw ModelError("duplicate state '" + states_[i] + "'");
        }
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (!atom_index_.emplace(atoms_[i], i).second)
                throw ModelError("duplicate atom '" + atoms_[i] + "'");
        }
        for (std::size_t i = 0; i < actions_.size(); ++i) {
            if (!action_index_.emplace(actions_[i], i).second)
                throw ModelError("duplicate action '" + actions_[i] + "'");
        }
        label_sets_.assign(n, {});
        for (std::size_t s = 0; s < n; ++s) {
            for (const auto& a : labels[s]) {
                auto it = atom_index_.find(a);
                if (it == atom_index_.end())
                    throw ModelError("label '" + a + "' on state '" + states_[s] + "' is not a declared atom");
                label_sets_[s].insert(it->second);
            }
            if (!std::isfinite(rewards_[s])) throw ModelError("non-finite reward at '" + states_[s] + "'");
            auto& r = rows_[s];
            if (r.empty()) throw ModelError("state '" + states_[s] + "' has no available action");
            std::sort(r.begin(), r.end(), [](const ActionRow& x, const ActionRow& y) { return x.action < y.action; });
            for (std::size_t k = 0; k < r.size(); ++k) {
                if (r[k].action >= actions_.size()) throw ModelError("action index out of range");
                if (k > 0 && r[k].action == r[k - 1].action)
                    throw ModelError("duplicate action '" + actions_[r[k].action] + "' at '" + states_[s] + "'");
                double sum = 0.0;
                for (const auto& succ : r[k].successors) {
                    if (succ.to >= n) throw ModelError("successor out of range");
                    if (!(succ.prob >= 0.0 && succ.prob <= 1.0))
                        throw ModelError("probability outside [0,1] at '" + states_[s] + "'");
                    sum += succ.prob;
                }
                if (std::abs(sum - 1.0) > kTolerance)
                    throw ModelError("probabilities of ('" + states_[s] + "', '" + actions_[r[k].action] +
                                     "') sum to " + std::to_string(sum));
                auto& succs = r[k].successors;
                std::erase_if(succs, [](const Successor& x) { return x.prob == 0.0; });
                std::sort(succs.begin(), succs.end(), [](const Successor& x, const Successor& y) { return x.to < y.to; });
                for (std::size_t j = 1; j < succs.size(); ++j) {
                    if (succs[j].to == succs[j - 1].to) throw ModelError("duplicate successor at '" + states_[s] + "'");
                }
            }
        }
    }

    std::size_t size() const noexcept { return states_.size(); }
    std::size_t initial() const noexcept { return initial_; }
    double gamma() const noexcept { return gamma_; }
    double reward(std::size_t s) const { return rewards_[s]; }
    const std::vector<double>& rewards() const noexcept { return rewards_; }

    const std::vector<std::string>& state_names() const noexcept { return states_; }
    const std::string& state_name(std::size_t s) const { return states_[s]; }
    std::optional<std::size_t> find_state(const std::string& name) const {
        auto it = state_index_.find(name);
        if (it == state_index_.end()) return std::nullopt;
        return it->second;
    }
    std::size_t state_index(const std::string& name) const {
        if (auto s = find_state(name)) return *s;
        throw ModelError("unknown state '" + name + "'");
    }

    const std::vector<std::string>& atoms() const noexcept { return atoms_; }
    bool has_atom(const std::string& name) const { return atom_index_.count(name) != 0; }
    bool holds(std::size_t s, const std::string& atom) const {
        auto it = atom_index_.find(atom);
        return it != atom_index_.end() && label_sets_[s].count(it->second) != 0;
    }
    std::vector<std::string> labels(std::size_t s) const {
        std::vector<std::string> out;
        for (auto a : label_sets_[s]) out.push_back(atoms_[a]);
        return out;
    }

    const std::vector<std::string>& action_names() const noexcept { return actions_; }
    const std::string& action_name(std::size_t a) const { return actions_[a]; }
    std::size_t num_actions() const noexcept { return actions_.size(); }
    std::optional<std::size_t> find_action(const std::string& name) const {
        auto it = action_index_.find(name);
        if (it == action_index_.end()) return std::nullopt;
        return it->second;
    }
    std::size_t action_index(const std::string& name) const {
        if (auto a = find_action(name)) return *a;
        throw ModelError("unknown action '" + name + "'");
    }

    /// Available actions at s, sorted by declaration index.
    std::span<const ActionRow> rows(std::size_t s) const { return rows_[s]; }
    const ActionRow* row(std::size_t s, std::size_t a) const {
        for (const auto& r : rows_[s]) {
            if (r.action == a) return &r;
        }
        return nullptr;
    }
    bool available(std::size_t s, std::size_t a) const { return row(s, a) != nullptr; }
    const std::vector<Successor>& successors(std::size_t s, std::size_t a) const {
        if (const auto* r = row(s, a)) return r->successors;
        throw InvalidPolicy("action '" + (a < actions_.size() ? actions_[a] : std::to_string(a)) +
                            "' unavailable at state '" + states_[s] + "'");
    }
    double prob(std::size_t s, std::size_t a, std::size_t t) const {
        for (const auto& x : successors(s, a)) {
            if (x.to == t) return x.prob;
        }
        return 0.0;
    }
    /// Product of |A(s)|, saturating at the maximum of std::size_t.
    std::size_t policy_count() const noexcept {
        std::size_t total = 1;
        for (const auto& r : rows_) {
            if (total > static_cast<std::size_t>(-1) / r.size()) return static_cast<std::size_t>(-1);
            total *= r.size();
        }
        return total;
    }

    Mdp with_gamma(double g) const {
        Mdp copy = *this;
        if (!(g > 0.0 && g < 1.0)) throw ModelError("discount must lie in (0,1)");
        copy.gamma_ = g;
        return copy;
    }

    /// Same model with only the policy's action kept at each state.
    Mdp restricted(const Policy& pi) const;

    StateSet states_with(const std::string& atom) const {
        StateSet out(size(), false);
        for (std::size_t s = 0; s < size(); ++s) out[s] = holds(s, atom);
        return out;
    }

private:
    std::vector<std::string> states_;
    std::size_t initial_;
    std::vector<std::string> atoms_;
    std::vector<std::string> actions_;
    std::vector<std::vector<ActionRow>> rows_;
    std::vector<double> rewards_;
    double gamma_;
    std::vector<std::set<std::size_t>> label_sets_;
    std::map<std::string, std::size_t> state_index_, atom_index_, action_index_;
};

/// Incremental construction by name; declaration order fixes indices.
class MdpBuilder {
public:
    MdpBuilder& state(const std::string& name, double reward, std::vector<std::string> labels = {}) {
        if (state_pos_.count(name)) throw ModelError("duplicate state '" + name + "'");
        state_pos_[name] = states_.size();
        states_.push_back(name);
        rewards_.push_back(reward);
        labels_.push_back(std::move(labels));
        rows_.emplace_back();
        return *this;
    }
    MdpBuilder& atom(const std::string& name) {
        atoms_.push_back(name);
        return *this;
    }
    MdpBuilder& action(const std::string& name) {
        if (action_pos_.count(name)) throw ModelError("duplicate action '" + name + "'");
        action_pos_[name] = actions_.size();
        actions_.push_back(name);
        return *this;
    }
    MdpBuilder& initial(const std::string& name) {
        initial_ = name;
        return *this;
    }
    MdpBuilder& gamma(double g) {
        gamma_ = g;
        return *this;
    }
    MdpBuilder& transition(const std::string& from, const std::string& act, const std::string& to, double p) {
        auto s = lookup(state_pos_, from, "state");
        auto a = lookup(action_pos_, act, "action");
        auto t = lookup(state_pos_, to, "state");
        auto& rows = rows_[s];
        auto it = std::find_if(rows.begin(), rows.end(), [a](const ActionRow& r) { return r.action == a; });
        if (it == rows.end()) {
            rows.push_back({a, {}});
            it = std::prev(rows.end());
        }
        for (const auto& x : it->successors) {
            if (x.to == t) throw ModelError("duplicate transition " + from + " --" + act + "--> " + to);
        }
        it->successors.push_back({t, p});
        return *this;
    }
    Mdp build() const {
        std::size_t init = 0;
        if (!initial_.empty()) init = lookup(state_pos_, initial_, "state");
        return Mdp(states_, init, atoms_, labels_, actions_, rows_, rewards_, gamma_);
    }

private:
    static std::size_t lookup(const std::map<std::string, std::size_t>& m, const std::string& k, const char* what) {
        auto it = m.find(k);
        if (it == m.end()) throw ModelError(std::string("unknown ") + what + " '" + k + "'");
        return it->second;
    }

    std::vector<std::string> states_, atoms_, actions_;
    std::vector<double> rewards_;
    std::vector<std::vector<std::string>> labels_;
    std::vector<std::vector<ActionRow>> rows_;
    std::map<std::string, std::size_t> state_pos_, action_pos_;
    std::string initial_;
    double gamma_ = 0.9;
};

/// Markov chain: one distribution per state.
class MarkovChain {
public:
    MarkovChain(std::vector<std::string> states, std::size_t initial, std::vector<std::string> atoms,
                std::vector<std::vector<std::string>> labels, std::vector<std::vector<Successor>> rows)
        : states_(std::move(states)),
          initial_(initial),
          atoms_(std::move(atoms)),
          labels_(std::move(labels)),
          rows_(std::move(rows)) {
        if (rows_.size() != states_.size() || labels_.size() != states_.size())
            throw ModelError("chain vectors disagree in length");
        for (const auto& r : rows_) {
            double sum = 0.0;
            for (const auto& x : r) {
                if (x.to >= states_.size() || x.prob < 0.0 || x.prob > 1.0) throw ModelError("bad chain entry");
                sum += x.prob;
            }
            if (std::abs(sum - 1.0) > kTolerance) throw ModelError("chain row does not sum to 1");
        }
    }

    std::size_t size() const noexcept { return states_.size(); }
    std::size_t initial() const noexcept { return initial_; }
    const std::vector<std::string>& state_names() const noexcept { return states_; }
    const std::vector<std::string>& atoms() const noexcept { return atoms_; }
    const std::vector<std::string>& labels(std::size_t s) const { return labels_[s]; }
    const std::vector<Successor>& row(std::size_t s) const { return rows_[s]; }
    double prob(std::size_t s, std::size_t t) const {
        for (const auto& x : rows_[s]) {
            if (x.to == t) return x.prob;
        }
        return 0.0;
    }

    /// View as a one-action MDP so the MDP algorithms apply verbatim.
    Mdp as_mdp(double gamma = 0.9) const {
        std::vector<std::vector<ActionRow>> rows;
        for (const auto& r : rows_) rows.push_back({ActionRow{0, r}});
        return Mdp(states_, initial_, atoms_, labels_, {"step"}, std::move(rows),
                   std::vector<double>(size(), 0.0), gamma);
    }

private:
    std::vector<std::string> states_;
    std::size_t initial_;
    std::vector<std::string> atoms_;
    std::vector<std::vector<std::string>> labels_;
    std::vector<std::vector<Successor>> rows_;
};

inline void validate_policy(const Mdp& mdp, const Policy& pi) {
    if (pi.size() != mdp.size())
        throw InvalidPolicy("policy covers " + std::to_string(pi.size()) + " states, model has " +
                            std::to_string(mdp.size()));
    for (std::size_t s = 0; s < mdp.size(); ++s) {
        if (!mdp.available(s, pi[s]))
            throw InvalidPolicy("action " +
                                (pi[s] < mdp.num_actions() ? "'" + mdp.action_name(pi[s]) + "'" : std::to_string(pi[s])) +
                                " unavailable at state '" + mdp.state_name(s) + "'");
    }
}

inline Mdp Mdp::restricted(const Policy& pi) const {
    validate_policy(*this, pi);
    Mdp copy = *this;
    for (std::size_t s = 0; s < size(); ++s) copy.rows_[s] = {*row(s, pi[s])};
    return copy;
}

/// Parses a comma-separated list of action names, one per state in index order.
inline Policy parse_policy(const Mdp& mdp, const std::string& text) {
    Policy pi;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        std::string tok = text.substr(start, end - start);
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        auto a = mdp.find_action(tok);
        if (!a) throw InvalidPolicy("unknown action '" + tok + "' in policy");
        pi.actions.push_back(*a);
        start = end + 1;
    }
    validate_policy(mdp, pi);
    return pi;
}

inline Policy policy_from_names(const Mdp& mdp, const std::vector<std::string>& names) {
    Policy pi;
    for (const auto& n : names) pi.actions.push_back(mdp.action_index(n));
    validate_policy(mdp, pi);
    return pi;
}

inline std::string format_policy(const Mdp& mdp, const Policy& pi) {
    std::string out;
    for (std::size_t s = 0; s < pi.size(); ++s) {
        if (s) out += ',';
        out += mdp.action_name(pi[s]);
    }
    return out;
}

inline Policy first_action_policy(const Mdp& mdp) {
    Policy pi;
    for (std::size_t s = 0; s < mdp.size(); ++s) pi.actions.push_back(mdp.rows(s).front().action);
    return pi;
}

inline MarkovChain induce_chain(const Mdp& mdp, const Policy& pi) {
    validate_policy(mdp, pi);
    std::vector<std::vector<std::string>> labels;
    std::vector<std::vector<Successor>> rows;
    for (std::size_t s = 0; s < mdp.size(); ++s) {
        labels.push_back(mdp.labels(s));
        rows.push_back(mdp.successors(s, pi[s]));
    }
    return MarkovChain(mdp.state_names(), mdp.initial(), mdp.atoms(), std::move(labels), std::move(rows));
}

/// R(s) + gamma * sum_s' T(s,a,s') v(s').
inline double q_value(const Mdp& mdp, const std::vector<double>& v, std::size_t s, std::size_t a) {
    double acc = 0.0;
    for (const auto& x : mdp.successors(s, a)) acc += x.prob * v[x.to];
    return mdp.reward(s) + mdp.gamma() * acc;
}

inline double q_value(const Mdp& mdp, const ValueFunction& v, std::size_t s, std::size_t a) {
    return q_value(mdp, v.values, s, a);
}

/**
 * Iterative policy evaluation from the zero vector. Stops once the sup-norm step d
 * satisfies d * gamma / (1 - gamma) < delta, which bounds the distance to the fixed
 * point by delta.
 */
inline ValueFunction policy_evaluation(const Mdp& mdp, const Policy& pi, double delta = kTolerance) {
    validate_policy(mdp, pi);
    if (!(delta > 0.0)) throw DomainError("tolerance must be positive");
    const std::size_t n = mdp.size();
    std::vector<double> v(n, 0.0), next(n, 0.0);
    for (;;) {
        double diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            next[s] = q_value(mdp, v, s, pi[s]);
            diff = std::max(diff, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (diff * mdp.gamma() < delta * (1.0 - mdp.gamma())) break;
    }
    return {std::move(v), delta};
}

/// Direct solve of (I - gamma P_pi) V = R. Used where exact comparisons matter.
inline std::vector<double> evaluate_exact(const Mdp& mdp, const Policy& pi) {
    validate_policy(mdp, pi);
    const auto n = static_cast<Eigen::Index>(mdp.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        b(s) = mdp.reward(static_cast<std::size_t>(s));
        for (const auto& x : mdp.successors(static_cast<std::size_t>(s), pi[static_cast<std::size_t>(s)]))
            a(s, static_cast<Eigen::Index>(x.to)) -= mdp.gamma() * x.prob;
    }
    Eigen::VectorXd v = a.partialPivLu().solve(b);
    return {v.data(), v.data() + n};
}

/// Unconstrained Bellman optimum with a greedy policy (ties to the lowest action index).
inline std::pair<ValueFunction, Policy> value_iteration(const Mdp& mdp, double delta = kTolerance) {
    const std::size_t n = mdp.size();
    std::vector<double> v(n, 0.0), next(n, 0.0);
    for (;;) {
        double diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& r : mdp.rows(s)) best = std::max(best, q_value(mdp, v, s, r.action));
            next[s] = best;
            diff = std::max(diff, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (diff < delta) break;
    }
    Policy pi;
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t best_a = mdp.rows(s).front().action;
        double best_q = q_value(mdp, v, s, best_a);
        for (const auto& r : mdp.rows(s)) {
            double q = q_value(mdp, v, s, r.action);
            if (q > best_q + 1e-12) {
                best_q = q;
                best_a = r.action;
            }
        }
        pi.actions.push_back(best_a);
    }
    return {ValueFunction{std::move(v), delta}, std::move(pi)};
}

}  // namespace deonpol
