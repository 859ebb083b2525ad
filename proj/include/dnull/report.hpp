#pragma once
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnull/error.hpp"

namespace dnull {

using ojson = nlohmann::ordered_json;

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline void write_csv(const CsvTable& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
    for (size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_g17(row[i]);
        out << "\n";
    }
}

enum class RunStatus { Pass, Fail, Skipped };

inline const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Pass: return "pass";
        case RunStatus::Fail: return "fail";
        case RunStatus::Skipped: return "skipped";
    }
    return "unknown";
}

struct MetricCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    // "le": value <= threshold passes; "ge": value >= threshold passes
    std::string direction = "le";
    bool passed = false;
};

struct RunReport {
    std::string command;
    ojson config_echo;
    RunStatus status = RunStatus::Pass;
    std::vector<MetricCheck> metrics;
    std::vector<CsvTable> tables;
    std::string failure_note;
    ojson details;

    MetricCheck& add_metric(const std::string& name, double value, double threshold,
                            const std::string& direction = "le") {
        MetricCheck m;
        m.name = name;
        m.value = value;
        m.threshold = threshold;
        m.direction = direction;
        m.passed = direction == "le" ? (value <= threshold) : (value >= threshold);
        if (!m.passed) {
            status = RunStatus::Fail;
            if (!failure_note.empty()) failure_note += "; ";
            failure_note += name;
        }
        metrics.push_back(m);
        return metrics.back();
    }
};

inline std::vector<std::string> emit_report(const RunReport& rep, const std::string& dir,
                                            const std::string& version) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir);
    std::vector<std::string> files;

    ojson summary;
    summary["tool"] = "dnull";
    summary["version"] = version;
    summary["command"] = rep.command;
    summary["status"] = status_name(rep.status);
    if (!rep.failure_note.empty()) summary["failed_metrics"] = rep.failure_note;
    ojson metrics = ojson::array();
    for (const auto& m : rep.metrics) {
        ojson jm;
        jm["name"] = m.name;
        jm["value"] = format_g17(m.value);
        jm["threshold"] = format_g17(m.threshold);
        jm["direction"] = m.direction;
        jm["passed"] = m.passed;
        metrics.push_back(jm);
    }
    summary["metrics"] = metrics;
    if (!rep.details.is_null()) summary["details"] = rep.details;
    ojson artifacts = ojson::array();
    for (const auto& t : rep.tables) artifacts.push_back(t.name + ".csv");
    summary["tables"] = artifacts;
    summary["config"] = rep.config_echo;

    const std::string spath = dir + "/summary.json";
    {
        std::ofstream out(spath, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot open " + spath);
        out << summary.dump(2) << "\n";
    }
    files.push_back(spath);
    for (const auto& t : rep.tables) {
        const std::string path = dir + "/" + t.name + ".csv";
        write_csv(t, path);
        files.push_back(path);
    }
    return files;
}

}  // namespace dnull
