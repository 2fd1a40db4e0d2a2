#pragma once

/**
 * Constrained policy improvement.
 *
 * Starting from a feasible policy, each pass visits states in index order and swaps
 * the action at one state at a time, only ever choosing among actions that keep the
 * reachability constraint satisfied at the initial state. With epsilon = 0 a swap is
 * kept only when it raises V(s_init); with epsilon > 0 the chosen action is applied
 * regardless, which lets runs leave local optima.
 */

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "deonpol/errors.hpp"
#include "deonpol/format.hpp"
#include "deonpol/mdp.hpp"
#include "deonpol/pctl/checker.hpp"
#include "deonpol/pctl/formula.hpp"
#include "deonpol/rng.hpp"

namespace deonpol {

/// Minimum gain in V(s_init) for a swap to count as an improvement at epsilon = 0.
inline constexpr double kImprovementTolerance = 1e-9;

/// Lower-bounded unbounded-until constraint P>=lambda [ phi U psi ].
struct ReachConstraint {
    double lambda = 0.0;
    StateSet phi, psi;
};

/// Validates the shape and resolves phi and psi to state sets.
inline ReachConstraint extract_constraint(const Mdp& mdp, const pctl::StateFormula& f) {
    using pctl::StateFormula;
    if (f.kind != StateFormula::Kind::Prob)
        throw FormulaError("synthesis needs a formula of the form P>=lambda [ phi U psi ], got " + pctl::to_string(f));
    if (!f.bound.is_lower_closed_only())
        throw FormulaError("synthesis supports lower bounds P>=lambda only, got P" + pctl::bound_to_string(f.bound));
    if (f.path->kind != pctl::PathFormula::Kind::Until)
        throw FormulaError("synthesis supports unbounded until (or F) only");
    ReachConstraint c;
    c.lambda = f.bound.lower;
    c.phi = pctl::sat(mdp, *f.path->left, std::nullopt, pctl::Resolution::Unambiguous);
    c.psi = pctl::sat(mdp, *f.path->right, std::nullopt, pctl::Resolution::Unambiguous);
    return c;
}

inline bool feasible_at_initial(const Mdp& mdp, const ReachConstraint& c, const Policy& pi) {
    return pctl::solve_reach(mdp, pi, c.phi, c.psi)[mdp.initial()] >= c.lambda - kTolerance;
}

struct SynthConfig {
    double epsilon = 0.0;
    std::uint64_t rng_seed = 0;
    std::size_t max_outer_iterations = 1000;
    double value_tolerance = kTolerance;
};

struct TraceRecord {
    std::size_t step = 0;
    /// Empty for the initial record.
    std::optional<std::size_t> visited_state;
    /// Policy after this visit.
    Policy policy;
    /// V(s_init) after this visit.
    double v_init = 0.0;
    /// Reachability vector computed before the update.
    pctl::ProbVector x;
    bool changed = false;
    /// The threshold filter left nothing and only the incumbent action remained.
    bool incumbent_only = false;
};

using IterationTrace = std::vector<TraceRecord>;

enum class Outcome { Unknown, Global, Local };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Global: return "global";
        case Outcome::Local: return "local";
        case Outcome::Unknown: break;
    }
    return "unknown";
}

struct SynthResult {
    Policy policy;
    ValueFunction value;
    pctl::ProbVector x;
    IterationTrace trace;
    bool converged = false;
    std::size_t passes = 0;
    Outcome outcome = Outcome::Unknown;

    /// Trace rows including the initial one; a run over n states that converges on its first pass has n + 1.
    std::size_t steps() const { return trace.size(); }
};

/// Initial feasible policy: the maximiser of the reachability probability.
inline Policy initialize_feasible(const Mdp& mdp, const ReachConstraint& c) {
    auto res = pctl::pmax(mdp, c.phi, c.psi);
    double best = res.probs[mdp.initial()];
    if (best < c.lambda - kTolerance)
        throw InfeasibleConstraint("constraint infeasible: maximal probability at '" + mdp.state_name(mdp.initial()) +
                                   "' is " + fmt_sig(best) + " < " + fmt_sig(c.lambda));
    return res.policy;
}

inline Policy initialize_feasible(const Mdp& mdp, const pctl::StateFormula& f) {
    return initialize_feasible(mdp, extract_constraint(mdp, f));
}

/**
 * Constraint-preserving actions at s.
 *
 * Outside s_no this is {a : Y(s,a) >= lambda}, otherwise every action. Two additions keep
 * the set well defined: the incumbent is always included (it is feasible by induction),
 * and any other action is dropped if swapping it in would break feasibility at s_init,
 * which the threshold filter alone does not rule out.
 */
inline std::vector<std::size_t> valid_actions(const Mdp& mdp, const ReachConstraint& c, const StateSet& s_no,
                                              const Policy& pi, const pctl::ProbVector& x, std::size_t s,
                                              bool* incumbent_only = nullptr) {
    std::vector<std::size_t> out;
    bool literal_empty = true;
    for (const auto& r : mdp.rows(s)) {
        bool keep = s_no[s] || pctl::one_step(mdp, s, r.action, x) >= c.lambda - kTolerance;
        if (keep) literal_empty = false;
        if (r.action == pi[s]) {
            out.push_back(r.action);
            continue;
        }
        if (!keep) continue;
        Policy swapped = pi;
        swapped.actions[s] = r.action;
        if (feasible_at_initial(mdp, c, swapped)) out.push_back(r.action);
    }
    if (incumbent_only) *incumbent_only = literal_empty;
    return out;
}

struct PassResult {
    Policy policy;
    IterationTrace records;
    bool changed = false;
};

/// One sweep over all states in index order.
inline PassResult improvement_pass(const Mdp& mdp, const ReachConstraint& c, Policy pi, const SynthConfig& cfg,
                                   Rng& rng, std::size_t first_step = 1) {
    const StateSet s_no = pctl::prob0(mdp, c.phi, c.psi);
    const std::size_t init = mdp.initial();
    PassResult out;
    for (std::size_t s = 0; s < mdp.size(); ++s) {
        std::vector<double> v = evaluate_exact(mdp, pi);
        pctl::ProbVector x = pctl::solve_reach(mdp, pi, c.phi, c.psi);
        TraceRecord rec;
        rec.step = first_step + s;
        rec.visited_state = s;
        rec.x = x;
        auto candidates = valid_actions(mdp, c, s_no, pi, x, s, &rec.incumbent_only);
        if (candidates.empty())
            throw ConstraintMaintenanceFailure("no constraint-preserving action at '" + mdp.state_name(s) + "'");

        // Exactly one draw per visit decides explore versus exploit.
        const double u = rng.uniform();
        std::size_t chosen;
        if (cfg.epsilon > 0.0 && u < cfg.epsilon) {
            chosen = candidates[rng.below(candidates.size())];
        } else {
            chosen = candidates.front();
            double best = q_value(mdp, v, s, chosen);
            for (auto a : candidates) {
                double q = q_value(mdp, v, s, a);
                if (q > best + 1e-12) {
                    best = q;
                    chosen = a;
                }
            }
        }

        double v_init = v[init];
        if (chosen != pi[s]) {
            Policy swapped = pi;
            swapped.actions[s] = chosen;
            std::vector<double> v_swap = evaluate_exact(mdp, swapped);
            if (cfg.epsilon > 0.0 || v_swap[init] > v[init] + kImprovementTolerance) {
                pi = std::move(swapped);
                v_init = v_swap[init];
                rec.changed = true;
                out.changed = true;
            }
        }
        rec.policy = pi;
        rec.v_init = v_init;
        out.records.push_back(std::move(rec));
    }
    out.policy = std::move(pi);
    return out;
}

/// Repeats passes until one full pass changes nothing, or the pass budget runs out.
inline SynthResult run(const Mdp& mdp, const ReachConstraint& c, const SynthConfig& cfg,
                       const std::optional<Policy>& initial = std::nullopt) {
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) throw InputError("epsilon must lie in [0,1)");
    if (cfg.max_outer_iterations == 0) throw InputError("max_outer_iterations must be positive");
    Policy pi;
    if (initial) {
        validate_policy(mdp, *initial);
        if (!feasible_at_initial(mdp, c, *initial))
            throw InfeasibleConstraint("initial policy violates the constraint at '" + mdp.state_name(mdp.initial()) + "'");
        pi = *initial;
    } else {
        pi = initialize_feasible(mdp, c);
    }

    SynthResult res;
    Rng rng(cfg.rng_seed);
    TraceRecord first;
    first.policy = pi;
    first.v_init = evaluate_exact(mdp, pi)[mdp.initial()];
    first.x = pctl::solve_reach(mdp, pi, c.phi, c.psi);
    res.trace.push_back(std::move(first));

    for (std::size_t pass = 0; pass < cfg.max_outer_iterations; ++pass) {
        auto pr = improvement_pass(mdp, c, pi, cfg, rng, res.trace.size());
        ++res.passes;
        pi = std::move(pr.policy);
        for (auto& r : pr.records) res.trace.push_back(std::move(r));
        if (!pr.changed) {
            res.converged = true;
            break;
        }
    }
    res.policy = pi;
    res.value = policy_evaluation(mdp, pi, cfg.value_tolerance);
    res.x = pctl::solve_reach(mdp, pi, c.phi, c.psi);
    return res;
}

inline SynthResult run(const Mdp& mdp, const pctl::StateFormula& f, const SynthConfig& cfg,
                       const std::optional<Policy>& initial = std::nullopt) {
    return run(mdp, extract_constraint(mdp, f), cfg, initial);
}

/// One accepted swap: state, previous action, new action.
struct PolicyChange {
    std::size_t state;
    std::size_t from;
    std::size_t to;
    friend bool operator==(const PolicyChange&, const PolicyChange&) = default;
};

/// Accepted swaps in trace order.
inline std::vector<PolicyChange> change_sequence(const IterationTrace& trace) {
    std::vector<PolicyChange> out;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (!trace[i].changed) continue;
        auto s = *trace[i].visited_state;
        out.push_back({s, trace[i - 1].policy[s], trace[i].policy[s]});
    }
    return out;
}

/// CSV: step, visited_state, one action column per state, V_init, x_<state> columns, changed.
inline void write_trace_csv(std::ostream& os, const Mdp& mdp, const IterationTrace& trace) {
    os << "step,visited_state";
    for (const auto& name : mdp.state_names()) os << ',' << name;
    os << ",V_init";
    for (const auto& name : mdp.state_names()) os << ",x_" << name;
    os << ",changed\n";
    for (const auto& r : trace) {
        os << r.step << ',' << (r.visited_state ? mdp.state_name(*r.visited_state) : std::string("-"));
        for (std::size_t s = 0; s < mdp.size(); ++s) os << ',' << mdp.action_name(r.policy[s]);
        os << ',' << fmt_sig(r.v_init);
        for (double xi : r.x) os << ',' << fmt_sig(xi);
        os << ',' << (r.changed ? 1 : 0) << '\n';
    }
}

}  // namespace deonpol
