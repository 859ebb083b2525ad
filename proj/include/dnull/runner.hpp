#pragma once
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dnull/commands.hpp"
#include "dnull/version.hpp"

namespace dnull {

inline int run_cli(const std::string& command, const std::string& config_path,
                   const std::string& out_override, int grid_override, long long seed_override,
                   std::ostream& log = std::cout);

// A config file holding a JSON array is a sweep: each entry runs in order with
// artifacts under case-indexed subdirectories; the worst exit code wins.
inline int run_sweep(const std::string& command, const std::string& text,
                     const std::string& out_override, int grid_override, long long seed_override,
                     std::ostream& log) {
    nlohmann::ordered_json arr;
    try {
        arr = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    }
    int worst = 0;
    for (size_t i = 0; i < arr.size(); ++i) {
        char tag[16];
        std::snprintf(tag, sizeof(tag), "case-%04zu", i);
        const std::string dir = (out_override.empty() ? std::string("dnull-out") : out_override) +
                                "/" + tag;
        std::string tmp = std::filesystem::temp_directory_path() / (std::string("dnull-sweep-") + tag);
        {
            std::ofstream out(tmp, std::ios::binary);
            out << arr[i].dump();
        }
        const int rc = run_cli(command, tmp, dir, grid_override, seed_override, log);
        worst = std::max(worst, rc);
    }
    return worst;
}

// Exit-code contract: 0 pass, 1 fail (tolerance or module error), 2 config error.
inline int run_cli(const std::string& command, const std::string& config_path,
                   const std::string& out_override, int grid_override, long long seed_override,
                   std::ostream& log) {
    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorCode::IoError, "cannot read config file " + config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            const std::string text = ss.str();
            const size_t first = text.find_first_not_of(" \t\r\n");
            if (first != std::string::npos && text[first] == '[')
                return run_sweep(command, text, out_override, grid_override, seed_override, log);
            cfg = parse_config(text);
        }
        if (grid_override > 0) cfg.grid_n = grid_override;
        if (seed_override >= 0) cfg.seed = static_cast<unsigned long long>(seed_override);
        if (!cfg.command.empty() && cfg.command != command)
            throw Error(ErrorCode::ValidationError, "config command '" + cfg.command +
                                                        "' does not match CLI command '" + command + "'");
    } catch (const Error& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    }

    std::string out_dir = "dnull-out";
    if (const char* env = std::getenv("DNULL_OUT_DIR")) out_dir = env;
    if (!cfg.out_dir.empty()) out_dir = cfg.out_dir;
    if (!out_override.empty()) out_dir = out_override;

    RunReport rep;
    try {
        rep = run_command(cfg, command);
    } catch (const Error& e) {
        // config-class contracts (bad schedules, mismatched presets) are exit 2
        // wherever they surface; anything else is a failed run
        if (e.code() == ErrorCode::ValidationError || e.code() == ErrorCode::ParseError) {
            log << "config error: " << e.what() << "\n";
            return 2;
        }
        rep.command = command;
        rep.status = RunStatus::Fail;
        rep.failure_note = e.what();
        rep.config_echo = cfg.echo.is_null() ? ojson::object() : cfg.echo;
        try {
            emit_report(rep, out_dir, kVersion);
        } catch (...) {
        }
        log << command << ": fail (" << e.what() << ")\n";
        return 1;
    }

    try {
        emit_report(rep, out_dir, kVersion);
    } catch (const Error& e) {
        log << "io error: " << e.what() << "\n";
        return 1;
    }
    log << command << ": " << status_name(rep.status);
    if (rep.status != RunStatus::Pass) log << " (" << rep.failure_note << ")";
    log << "  [" << out_dir << "/summary.json]\n";
    return rep.status == RunStatus::Pass ? 0 : 1;
}

}  // namespace dnull
