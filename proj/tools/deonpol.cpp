// Command-line front end: check, synth, oracle, sweep, stit, reproduce.
//
// Exit codes: 0 success, 1 domain error, 2 usage or parse error.
// Diagnostics go to stderr prefixed with "E:".

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "deonpol/deonpol.hpp"

namespace fs = std::filesystem;
using namespace deonpol;

namespace {

struct Options {
    std::string model;
    std::string formula;
    std::string policy;
    std::string out;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::size_t max_outer = 1000;
    std::size_t sweep_max_outer = 10;
    std::size_t trials = 100;
    std::vector<double> epsilons{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::size_t horizon = 3;
    std::size_t verify_horizon = 0;
    double tolerance = 1e-6;
    std::string format = "text";
    int table = 1;
    unsigned threads = 0;
    bool all_feasible = false;
};

Mdp resolve_model(const std::string& spec) {
    if (auto m = workbench::builtin(spec)) return *m;
    return load_mdp(spec);
}

/// Writes `content` to out/name when an output directory was given.
void emit_file(const Options& o, const std::string& name, const std::string& content) {
    if (o.out.empty()) return;
    fs::create_directories(o.out);
    const fs::path path = fs::path(o.out) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw DomainError("failed writing '" + path.string() + "'");
}

std::string state_list(const Mdp& mdp, const StateSet& set) {
    std::string out = "{";
    bool first = true;
    for (std::size_t s = 0; s < set.size(); ++s) {
        if (!set[s]) continue;
        if (!first) out += ", ";
        out += mdp.state_name(s);
        first = false;
    }
    return out + "}";
}

int cmd_check(const Options& o) {
    Mdp mdp = resolve_model(o.model);
    auto f = pctl::parse(o.formula);
    std::optional<Policy> pi;
    if (!o.policy.empty()) pi = parse_policy(mdp, o.policy);
    auto sat = pctl::sat(mdp, *f, pi);
    std::ostringstream os;
    os << "formula: " << pctl::to_string(*f) << "\n";
    if (pi) os << "policy: " << format_policy(mdp, *pi) << "\n";
    const bool prob = f->kind == pctl::StateFormula::Kind::Prob;
    std::vector<double> lo, hi;
    if (prob) std::tie(lo, hi) = pctl::path_probabilities(mdp, *f->path, pi, pctl::Resolution::Universal);
    os << "state,sat" << (prob ? (pi ? ",prob" : ",pmin,pmax") : "") << "\n";
    for (std::size_t s = 0; s < mdp.size(); ++s) {
        os << mdp.state_name(s) << ',' << (sat[s] ? "yes" : "no");
        if (prob) {
            os << ',' << fmt_sig(lo[s]);
            if (!pi) os << ',' << fmt_sig(hi[s]);
        }
        os << "\n";
    }
    os << "satisfying: " << state_list(mdp, sat) << "\n";
    std::cout << os.str();
    emit_file(o, "check.csv", os.str());
    return 0;
}

int cmd_synth(const Options& o) {
    Mdp mdp = resolve_model(o.model);
    auto f = pctl::parse(o.formula);
    SynthConfig cfg;
    cfg.epsilon = o.epsilon;
    cfg.rng_seed = o.seed;
    cfg.max_outer_iterations = o.max_outer;
    std::optional<Policy> start;
    if (!o.policy.empty()) start = parse_policy(mdp, o.policy);
    auto t0 = std::chrono::steady_clock::now();
    auto r = run(mdp, *f, cfg, start);
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream res;
    res << "formula: " << pctl::to_string(*f) << "\n"
        << "epsilon: " << fmt_sig(o.epsilon) << "\nseed: " << o.seed << "\n"
        << "converged: " << (r.converged ? "true" : "false") << "\n"
        << "passes: " << r.passes << "\nsteps: " << r.steps() << "\n"
        << "initial policy: " << format_policy(mdp, r.trace.front().policy) << "\n"
        << "final policy: " << format_policy(mdp, r.policy) << "\n"
        << "V(" << mdp.state_name(mdp.initial()) << "): " << fmt_sig(r.value[mdp.initial()]) << "\n"
        << "V: " << fmt_vector(r.value.values) << "\n"
        << "x: " << fmt_vector(r.x) << "\n";
    std::cout << res.str();
    std::cerr << "wall-clock: " << fmt_sig(secs, 3) << " s\n";
    std::ostringstream csv;
    write_trace_csv(csv, mdp, r.trace);
    emit_file(o, "result.txt", res.str());
    emit_file(o, "trace.csv", csv.str());
    return 0;
}

int cmd_oracle(const Options& o) {
    Mdp mdp = resolve_model(o.model);
    auto f = pctl::parse(o.formula);
    OracleOptions opt;
    opt.cap = policy_cap_from_env();
    opt.collect_feasible = o.all_feasible;
    opt.threads = o.threads;
    auto rep = brute_force(mdp, *f, opt);
    std::ostringstream os;
    os << "formula: " << pctl::to_string(*f) << "\n"
       << "policies: " << rep.total_count << "\nfeasible: " << rep.feasible_count << "\n"
       << "optimal value: " << fmt_fixed(rep.optimal_value, 2) << " (" << fmt_sig(rep.optimal_value) << ")\n";
    for (const auto& p : rep.optimal_policies) os << "optimal policy: " << format_policy(mdp, p) << "\n";
    if (!rep.x_at_optimum.empty()) os << "x: " << fmt_vector(rep.x_at_optimum) << "\n";
    std::cout << os.str();
    emit_file(o, "oracle.txt", os.str());
    if (o.all_feasible) {
        std::ostringstream csv;
        csv << "policy,value\n";
        for (const auto& fp : rep.feasible) csv << '"' << format_policy(mdp, fp.policy) << "\"," << fmt_sig(fp.value) << "\n";
        emit_file(o, "feasible.csv", csv.str());
    }
    return 0;
}

int cmd_sweep(const Options& o) {
    workbench::SweepConfig cfg{resolve_model(o.model), o.formula};
    cfg.epsilons = o.epsilons;
    cfg.trials = o.trials;
    cfg.base_seed = o.seed;
    cfg.max_outer_iterations = o.sweep_max_outer;
    cfg.threads = o.threads;
    auto rep = workbench::sweep(cfg);
    std::ostringstream csv;
    workbench::write_sweep_csv(csv, rep);
    std::cout << "optimum: " << fmt_sig(rep.optimum) << "\n" << csv.str();
    emit_file(o, "sweep.csv", csv.str());
    return 0;
}

int cmd_stit(const Options& o) {
    Mdp mdp = resolve_model(o.model);
    auto tree = stit::unroll(mdp, o.horizon);
    std::ostringstream treeout;
    if (o.format == "dot") {
        stit::write_dot(treeout, mdp, tree);
    } else {
        stit::write_text(treeout, mdp, tree);
    }
    const std::size_t vh = o.verify_horizon ? o.verify_horizon : stit::horizon_for_gap(mdp, o.tolerance);
    auto rep = stit::verify_correspondence(mdp, vh, o.tolerance);
    std::ostringstream os;
    os << "moments: " << tree.size() << " (horizon " << o.horizon << ")\n"
       << "cylinder mass error: " << fmt_sig(stit::max_cylinder_mass_error(tree)) << "\n"
       << "correspondence horizon: " << rep.horizon << "\n"
       << "classes checked: " << rep.checked << "\n"
       << "skipped (no gap): " << rep.skipped_gap << "\n"
       << "skipped (near horizon): " << rep.skipped_horizon << "\n"
       << "violations: " << rep.violations.size() << "\n";
    for (const auto& v : rep.violations)
        os << "violation: depth " << v.depth << " state " << mdp.state_name(v.state) << " expected "
           << mdp.action_name(v.expected_action) << " got " << mdp.action_name(v.stit_action) << "\n";
    if (o.out.empty()) std::cout << treeout.str();
    std::cout << os.str();
    emit_file(o, o.format == "dot" ? "tree.dot" : "tree.txt", treeout.str());
    emit_file(o, "correspondence.txt", os.str());
    return rep.violations.empty() ? 0 : 1;
}

int cmd_reproduce(const Options& o) {
    auto rep = workbench::reproduce_table(o.table);
    std::ostringstream os;
    workbench::write_table_report(os, rep);
    std::cout << os.str();
    Mdp mdp = *workbench::builtin(rep.published.model);
    std::ostringstream csv;
    write_trace_csv(csv, mdp, rep.result.trace);
    emit_file(o, "trace.csv", csv.str());
    emit_file(o, "diff.txt", os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained policy synthesis for MDPs under PCTL reachability constraints"};
    app.require_subcommand(1);
    Options o;

    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--model,-m", o.model, "model file, or builtin mdp1 | mdp2")->required();
    };
    auto add_formula = [&](CLI::App* sub) {
        sub->add_option("--formula,-f", o.formula, "PCTL formula, e.g. \"P>=0.4 [ F s3 ]\"")->required();
    };
    auto add_out = [&](CLI::App* sub) { sub->add_option("--out,-o", o.out, "output directory"); };

    auto* check = app.add_subcommand("check", "label states with a formula");
    add_model(check);
    add_formula(check);
    check->add_option("--policy", o.policy, "comma-separated action per state");
    add_out(check);

    auto* synth = app.add_subcommand("synth", "run the constrained improvement algorithm");
    add_model(synth);
    add_formula(synth);
    synth->add_option("--epsilon,-e", o.epsilon, "exploration rate in [0,1)")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--seed,-s", o.seed, "random seed");
    synth->add_option("--max-outer", o.max_outer, "pass budget")->check(CLI::PositiveNumber);
    synth->add_option("--policy", o.policy, "initial policy, comma-separated (default: probability maximiser)");
    add_out(synth);

    auto* oracle = app.add_subcommand("oracle", "enumerate all policies for the constrained optimum");
    add_model(oracle);
    add_formula(oracle);
    oracle->add_flag("--all-feasible", o.all_feasible, "also write feasible.csv");
    oracle->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    add_out(oracle);

    auto* sweep = app.add_subcommand("sweep", "count global/local/unconverged runs per epsilon");
    add_model(sweep);
    add_formula(sweep);
    sweep->add_option("--epsilons", o.epsilons, "epsilon grid")->delimiter(',');
    sweep->add_option("--trials", o.trials, "trials per epsilon")->check(CLI::PositiveNumber);
    sweep->add_option("--seed,-s", o.seed, "base seed; trial i uses seed + i");
    sweep->add_option("--max-outer", o.sweep_max_outer, "pass budget per run")->check(CLI::PositiveNumber);
    sweep->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    add_out(sweep);

    auto* stit = app.add_subcommand("stit", "unroll into a choice tree and check the optimal-action correspondence");
    add_model(stit);
    stit->add_option("--horizon", o.horizon, "depth of the exported tree")->check(CLI::PositiveNumber);
    stit->add_option("--verify-horizon", o.verify_horizon, "depth for the correspondence check (default: from the gap bound)");
    stit->add_option("--tolerance", o.tolerance, "minimum Q-value gap that counts as a unique optimum");
    stit->add_option("--format", o.format, "tree export format")->check(CLI::IsMember({"text", "dot"}));
    add_out(stit);

    auto* repro = app.add_subcommand("reproduce", "rerun a published improvement table and diff it");
    repro->add_option("--table,-t", o.table, "table number")->required()->check(CLI::Range(1, 3));
    add_out(repro);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "E: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*check) return cmd_check(o);
        if (*synth) return cmd_synth(o);
        if (*oracle) return cmd_oracle(o);
        if (*sweep) return cmd_sweep(o);
        if (*stit) return cmd_stit(o);
        if (*repro) return cmd_reproduce(o);
    } catch (const InputError& e) {
        std::cerr << "E: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "E: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "E: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
