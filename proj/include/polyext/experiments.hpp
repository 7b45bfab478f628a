#pragma once

// Monte Carlo experiment drivers. Every driver returns a RunRecord with one row per
// replica (per configuration for the moment battery) and aggregate statistics computed
// from those rows only, so the CSV alone is enough to audit a run.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "polyext/config.hpp"
#include "polyext/oracles.hpp"

namespace polyext::experiments {

inline constexpr int kCsvFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

struct RunRecord {
    struct Row {
        std::int64_t N = 0;
        std::int64_t replica_id = 0;
        std::vector<std::string> text;
        std::vector<double> values;
    };

    std::string experiment;
    config::ExperimentConfig config;
    std::vector<std::string> text_columns;
    std::vector<std::string> columns;
    std::vector<Row> rows;
    std::vector<std::pair<std::string, double>> aggregates;
    double wall_clock_seconds = 0.0;

    std::vector<double> column(const std::string& name, std::int64_t N) const;
    // Throws ValidationError when absent.
    double aggregate(const std::string& name) const;
    void add(const std::string& name, double v) { aggregates.emplace_back(name, v); }
};

// Header: experiment,N,beta_hat,M,seed,replica_id, then text columns, then numeric columns (%.17g).
std::string to_csv(const RunRecord& rec);
std::string to_manifest(const RunRecord& rec, const std::string& csv_name = "");
// Writes <prefix>.csv and <prefix>.manifest.json atomically.
void write_outputs(const RunRecord& rec, const std::string& prefix);

// Build-time version string (git describe), "unknown" outside a checkout.
const char* code_version();

RunRecord run_extremes(const config::ExperimentConfig& cfg);
RunRecord run_gaussian_limit(const config::ExperimentConfig& cfg);
RunRecord run_lower_tail(const config::ExperimentConfig& cfg);
RunRecord run_moment_identity(const config::ExperimentConfig& cfg);
RunRecord run_brw(const config::ExperimentConfig& cfg);
RunRecord run_ew_cov(const config::ExperimentConfig& cfg);
RunRecord run_domination(const config::ExperimentConfig& cfg);
RunRecord run_truncation(const config::ExperimentConfig& cfg);
RunRecord run_ptop(const config::ExperimentConfig& cfg);
// Exact E[Z_N^2] by the difference-walk DP for each N, with window-doubling certificates.
RunRecord run_second_moment(const config::ExperimentConfig& cfg, double window_constant = 2.0);

// Replica-moment configurations used by run_moment_identity (all with beta <= 1).
std::vector<oracles::ReplicaConfig> moment_battery();

// Exact moment of a battery entry: enumeration when q (t - s + 1) <= 12, else the q = 2 DP.
struct ExactMoment {
    double value = 0.0;
    std::string method;
};
ExactMoment exact_moment(const oracles::ReplicaConfig& cfg);

// BRW edge standard deviation at relative depth u for a profile name.
double brw_profile(const std::string& profile, double u, double profile_beta_hat);

// Paired one-sided test that sample b (larger N) lies closer to target than sample a,
// in the direction of the observed gap of a. Returns the p-value.
double toward_target_p(const std::vector<double>& a, const std::vector<double>& b, double target);

}  // namespace polyext::experiments
