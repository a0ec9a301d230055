#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "chainopt/errors.hpp"
#include "chainopt/harness.hpp"
#include "chainopt/instance.hpp"
#include "chainopt/solver.hpp"

namespace chainopt {

inline constexpr const char* kReportSchema = "chainopt-report/1";
inline constexpr const char* kRunConfigSchema = "chainopt-run/1";
inline constexpr const char* kSummarySchema = "chainopt-summary/1";
inline constexpr const char* kTimingSchema = "chainopt-timing/1";

/// Shortest decimal form that parses back to the same double. Locale-free.
inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

/// FNV-1a over a byte string; used to fingerprint instances in run logs.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf, 16);
}

/// Hash of the canonical (re-serialized) instance JSON, independent of the
/// formatting of the file it was loaded from.
inline std::string instance_hash(const Instance& inst) {
    return hex64(fnv1a64(to_json(inst).dump()));
}

// ---------------------------------------------------------------------------
// CSV helpers. Comma separation, dot decimal, header row; fields containing
// commas, quotes or newlines are double-quoted.

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::string selection_string(const std::vector<std::uint8_t>& z) {
    std::string s;
    s.reserve(z.size());
    for (std::uint8_t bit : z) s += bit ? '1' : '0';
    return s;
}

// ---------------------------------------------------------------------------
// Solver report. `include_timing` gates every wall-clock field: iteration-
// budget artifacts must be byte-identical across runs, so measured times are
// written only for wall-clock budgets (they always go to the timing sidecar).

inline nlohmann::json report_to_json(const SolverReport& report, bool include_timing) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["algorithm"] = report.algorithm;
    j["seed"] = report.seed;
    j["iterations"] = report.iterations;
    j["best_utility"] = report.best_utility;
    j["elapsed_seconds"] = include_timing ? report.elapsed_seconds : 0.0;
    j["best"] = {{"m", report.best.m},
                 {"theta", report.best.theta},
                 {"z", std::vector<int>(report.best.z.begin(), report.best.z.end())}};
    return j;
}

inline constexpr const char* kReportCsvHeader =
    "algorithm,seed,iterations,best_utility,elapsed_seconds,m,theta,z";

inline std::string report_csv_row(const SolverReport& report, bool include_timing) {
    std::string row;
    row += report.algorithm;
    row += ',' + std::to_string(report.seed);
    row += ',' + std::to_string(report.iterations);
    row += ',' + format_double(report.best_utility);
    row += ',' + format_double(include_timing ? report.elapsed_seconds : 0.0);
    row += ',' + std::to_string(report.best.m);
    row += ',' + std::to_string(report.best.theta);
    row += ',' + selection_string(report.best.z);
    return row;
}

inline std::string report_csv(const SolverReport& report, bool include_timing) {
    return std::string(kReportCsvHeader) + '\n' + report_csv_row(report, include_timing) + '\n';
}

inline std::string trace_csv(const SolverReport& report, bool include_timing) {
    std::string out = "iteration,best_utility,elapsed_ms\n";
    for (const TracePoint& p : report.trace) {
        out += std::to_string(p.iteration);
        out += ',' + format_double(p.best_utility);
        out += ',' + format_double(include_timing ? p.elapsed_ms : 0.0);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trial batches.

inline nlohmann::json budget_to_json(const Budget& b) {
    if (b.kind == Budget::Kind::iterations)
        return {{"type", "iterations"}, {"value", b.iterations}};
    return {{"type", "seconds"}, {"value", b.seconds}};
}

inline nlohmann::json weights_to_json(const Weights& w) {
    return {{"beta1", w.beta1}, {"beta2", w.beta2}, {"beta3", w.beta3}};
}

inline std::string trials_csv(const TrialResults& results, bool include_timing) {
    std::string out = "algorithm,trial,seed,best_utility,iterations,elapsed_seconds,m,theta,status,error\n";
    for (const TrialRow& row : results.rows) {
        out += row.algorithm;
        out += ',' + std::to_string(row.trial);
        out += ',' + std::to_string(row.seed);
        out += ',' + format_double(row.failed ? 0.0 : row.best_utility);
        out += ',' + std::to_string(row.iterations);
        out += ',' + format_double(include_timing ? row.elapsed_seconds : 0.0);
        out += ',' + std::to_string(row.m);
        out += ',' + std::to_string(row.theta);
        out += row.failed ? ",failed," : ",ok,";
        out += csv_escape(row.error);
        out += '\n';
    }
    return out;
}

inline nlohmann::json stats_to_json(const std::vector<std::pair<std::string, SummaryStats>>& stats) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, s] : stats) {
        j[name] = {{"min", s.min},   {"q1", s.q1},         {"median", s.median},
                   {"q3", s.q3},     {"max", s.max},       {"mean", s.mean},
                   {"variance", s.variance}, {"count", s.count}};
    }
    return j;
}

inline nlohmann::json cdf_summary_json(const std::vector<RelDiffCdf>& cdfs) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& cdf : cdfs) {
        j[cdf.algorithm] = {{"fraction_geq_zero", cdf.fraction_geq_zero},
                            {"pairs", cdf.pairs},
                            {"division_by_zero_excluded", cdf.division_by_zero_excluded}};
    }
    return j;
}

inline std::string cdf_csv(const RelDiffCdf& cdf) {
    std::string out = "x,F\n";
    for (const CdfPoint& p : cdf.points) {
        out += format_double(p.x);
        out += ',' + format_double(p.F);
        out += '\n';
    }
    return out;
}

inline std::string sweep_runs_csv(const SweepResults& sweep) {
    const auto& algos = sweep.trials.meta.algorithms;
    std::string out = "run,seed,beta1,beta2,beta3";
    for (const auto& name : algos) out += ",utility_" + name;
    out += '\n';
    const int n_algos = static_cast<int>(algos.size());
    for (const SweepRun& run : sweep.runs) {
        out += std::to_string(run.run);
        out += ',' + std::to_string(run.seed);
        out += ',' + format_double(run.weights.beta1);
        out += ',' + format_double(run.weights.beta2);
        out += ',' + format_double(run.weights.beta3);
        for (int a = 0; a < n_algos; ++a) {
            const TrialRow& row = sweep.trials.rows[static_cast<std::size_t>(run.run) * n_algos + a];
            out += ',';
            out += row.failed ? "failed" : format_double(row.best_utility);
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Timing sidecar: always carries the measured wall-clock values, and is the
// one artifact excluded from the byte-identical reproducibility contract.

inline nlohmann::json timing_json(const TrialResults& results) {
    nlohmann::json rows = nlohmann::json::array();
    for (const TrialRow& row : results.rows)
        rows.push_back({{"algorithm", row.algorithm},
                        {"trial", row.trial},
                        {"elapsed_seconds", row.elapsed_seconds}});
    return {{"schema", kTimingSchema}, {"rows", rows}};
}

inline nlohmann::json timing_json(const SolverReport& report) {
    return {{"schema", kTimingSchema},
            {"rows", nlohmann::json::array({{{"algorithm", report.algorithm},
                                             {"trial", 0},
                                             {"elapsed_seconds", report.elapsed_seconds}}})}};
}

// ---------------------------------------------------------------------------
// Atomic file writing: content lands under the final name completely or not
// at all (write to a sibling temp file, then rename).

inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("rename failed for: " + path.string());
    }
}

} // namespace chainopt
