#pragma once

/**
 * JSON model files.
 *
 *   { "states": ["s0", ...], "initial": "s0", "atoms": ["goal", ...],
 *     "labels": {"s0": ["goal"]}, "actions": ["a", ...],
 *     "transitions": [{"from": "s0", "action": "a", "to": "s1", "prob": 0.5}, ...],
 *     "rewards": {"s0": 1.0}, "gamma": 0.9 }
 *
 * State order in the file fixes state indices. Missing labels or rewards default to
 * empty and 0.
 */

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "deonpol/errors.hpp"
#include "deonpol/mdp.hpp"

namespace deonpol {

inline Mdp mdp_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ModelError("model must be a JSON object");
        for (const char* key : {"states", "initial", "actions", "transitions", "gamma"}) {
            if (!j.contains(key)) throw ModelError(std::string("model is missing '") + key + "'");
        }
        MdpBuilder b;
        for (const auto& a : j.at("actions")) b.action(a.get<std::string>());
        if (j.contains("atoms")) {
            for (const auto& a : j.at("atoms")) b.atom(a.get<std::string>());
        }
        const auto labels = j.value("labels", nlohmann::json::object());
        const auto rewards = j.value("rewards", nlohmann::json::object());
        if (!labels.is_object() || !rewards.is_object()) throw ModelError("'labels' and 'rewards' must be objects");
        for (const auto& s : j.at("states")) {
            const auto name = s.get<std::string>();
            std::vector<std::string> ls;
            if (labels.contains(name)) ls = labels.at(name).get<std::vector<std::string>>();
            b.state(name, rewards.contains(name) ? rewards.at(name).get<double>() : 0.0, std::move(ls));
        }
        for (const auto& [name, _] : labels.items()) {
            bool known = false;
            for (const auto& s : j.at("states")) known = known || s.get<std::string>() == name;
            if (!known) throw ModelError("labels refer to unknown state '" + name + "'");
        }
        for (const auto& [name, _] : rewards.items()) {
            bool known = false;
            for (const auto& s : j.at("states")) known = known || s.get<std::string>() == name;
            if (!known) throw ModelError("rewards refer to unknown state '" + name + "'");
        }
        b.initial(j.at("initial").get<std::string>());
        b.gamma(j.at("gamma").get<double>());
        for (const auto& t : j.at("transitions")) {
            b.transition(t.at("from").get<std::string>(), t.at("action").get<std::string>(), t.at("to").get<std::string>(),
                         t.at("prob").get<double>());
        }
        return b.build();
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model: ") + e.what());
    }
}

inline Mdp parse_mdp(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("invalid JSON: ") + e.what());
    }
    return mdp_from_json(j);
}

inline Mdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    return parse_mdp(in);
}

inline nlohmann::json mdp_to_json(const Mdp& mdp) {
    nlohmann::json j;
    j["states"] = mdp.state_names();
    j["initial"] = mdp.state_name(mdp.initial());
    j["atoms"] = mdp.atoms();
    j["actions"] = mdp.action_names();
    nlohmann::json labels = nlohmann::json::object(), rewards = nlohmann::json::object();
    nlohmann::json trans = nlohmann::json::array();
    for (std::size_t s = 0; s < mdp.size(); ++s) {
        const auto& name = mdp.state_name(s);
        auto ls = mdp.labels(s);
        if (!ls.empty()) labels[name] = ls;
        rewards[name] = mdp.reward(s);
        for (const auto& r : mdp.rows(s)) {
            for (const auto& t : r.successors)
                trans.push_back({{"from", name}, {"action", mdp.action_name(r.action)}, {"to", mdp.state_name(t.to)},
                                 {"prob", t.prob}});
        }
    }
    j["labels"] = labels;
    j["rewards"] = rewards;
    j["transitions"] = trans;
    j["gamma"] = mdp.gamma();
    return j;
}

}  // namespace deonpol
