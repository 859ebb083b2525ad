#pragma once
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnull/error.hpp"

namespace dnull {

struct RunConfig {
    std::string command;
    std::string preset;
    std::map<std::string, double> params;
    bool has_table = false;
    std::vector<double> tab_l, tab_rho, tab_kn, tab_kt;
    int grid_n = 0;      // radial nodes (0 -> command default)
    int lattice_n = 0;   // points per axis for lattice scans
    std::vector<int> order_study;
    std::map<std::string, double> tolerances;
    std::map<std::string, double> schedule;  // solver schedule overrides
    std::string out_dir;
    unsigned long long seed = 0;
    nlohmann::ordered_json echo;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
    double tol(const std::string& key, double fallback) const {
        auto it = tolerances.find(key);
        return it == tolerances.end() ? fallback : it->second;
    }
    double sched(const std::string& key, double fallback) const {
        auto it = schedule.find(key);
        return it == schedule.end() ? fallback : it->second;
    }
};

inline const std::set<std::string>& known_presets() {
    static const std::set<std::string> presets = {
        "minkowski-t0",  "minkowski-boost", "minkowski-graph",        "schwarzschild-t0",
        "schwarzschild-tilted", "flat",     "flat-umbilic",           "dec-bump",
        "minkowski-graph-radial", "random-analytic", "flat-shell",    "schwarzschild-shell",
    };
    return presets;
}

inline const std::set<std::string>& known_commands() {
    static const std::set<std::string> cmds = {
        "verify-minkowski", "verify-identity",      "verify-stern",  "verify-charged",
        "verify-schwarzschild", "flow-spherical",   "solve-a0",      "riemannian-identity",
    };
    return cmds;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");

    RunConfig cfg;
    cfg.echo = j;
    static const std::set<std::string> top_keys = {"command", "dataset", "grid",    "tolerances",
                                                   "schedule", "out",    "seed"};
    for (auto& [key, _] : j.items())
        if (!top_keys.count(key))
            throw Error(ErrorCode::ValidationError, "unknown config key '" + key + "'");

    if (j.contains("command")) {
        cfg.command = j["command"].get<std::string>();
        if (!known_commands().count(cfg.command))
            throw Error(ErrorCode::ValidationError, "command: unknown command '" + cfg.command + "'");
    }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (!d.is_object()) throw Error(ErrorCode::ValidationError, "dataset: must be an object");
        static const std::set<std::string> ds_keys = {"preset", "params", "table"};
        for (auto& [key, _] : d.items())
            if (!ds_keys.count(key))
                throw Error(ErrorCode::ValidationError, "unknown dataset key '" + key + "'");
        if (d.contains("preset")) {
            cfg.preset = d["preset"].get<std::string>();
            if (!known_presets().count(cfg.preset))
                throw Error(ErrorCode::ValidationError, "dataset: unknown preset '" + cfg.preset + "'");
        }
        if (d.contains("params")) {
            for (auto& [key, value] : d["params"].items()) {
                if (!value.is_number())
                    throw Error(ErrorCode::ValidationError, "params." + key + ": must be numeric");
                cfg.params[key] = value.get<double>();
            }
        }
        if (d.contains("table")) {
            const auto& t = d["table"];
            static const std::set<std::string> tab_keys = {"l", "rho", "kn", "kt"};
            for (auto& [key, _] : t.items())
                if (!tab_keys.count(key))
                    throw Error(ErrorCode::ValidationError, "unknown table key '" + key + "'");
            auto col = [&](const char* name) {
                if (!t.contains(name))
                    throw Error(ErrorCode::ValidationError, std::string("table.") + name + " missing");
                return t[name].get<std::vector<double>>();
            };
            cfg.tab_l = col("l");
            cfg.tab_rho = col("rho");
            cfg.tab_kn = col("kn");
            cfg.tab_kt = col("kt");
            if (cfg.tab_l.size() < 3 || cfg.tab_rho.size() != cfg.tab_l.size() ||
                cfg.tab_kn.size() != cfg.tab_l.size() || cfg.tab_kt.size() != cfg.tab_l.size())
                throw Error(ErrorCode::ValidationError, "table: columns must share length >= 3");
            cfg.has_table = true;
        }
        if (cfg.preset.empty() && !cfg.has_table)
            throw Error(ErrorCode::ValidationError, "dataset: needs a preset or a table");
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        static const std::set<std::string> grid_keys = {"n", "lattice", "order_study"};
        for (auto& [key, _] : g.items())
            if (!grid_keys.count(key))
                throw Error(ErrorCode::ValidationError, "unknown grid key '" + key + "'");
        if (g.contains("n")) {
            cfg.grid_n = g["n"].get<int>();
            if (cfg.grid_n < 3) throw Error(ErrorCode::ValidationError, "grid.n: must be >= 3");
        }
        if (g.contains("lattice")) {
            cfg.lattice_n = g["lattice"].get<int>();
            if (cfg.lattice_n < 1) throw Error(ErrorCode::ValidationError, "grid.lattice: must be >= 1");
        }
        if (g.contains("order_study")) cfg.order_study = g["order_study"].get<std::vector<int>>();
    }
    if (j.contains("tolerances")) {
        for (auto& [key, value] : j["tolerances"].items()) {
            const double v = value.get<double>();
            if (!(v > 0.0))
                throw Error(ErrorCode::ValidationError, "tolerances." + key + ": must be positive");
            cfg.tolerances[key] = v;
        }
    }
    if (j.contains("schedule")) {
        for (auto& [key, value] : j["schedule"].items()) cfg.schedule[key] = value.get<double>();
    }
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<unsigned long long>();
    return cfg;
}

}  // namespace dnull
