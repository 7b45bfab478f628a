#pragma once

// Flat "key = value" run configuration. Lines starting with '#' are comments.
// Every key has a type and a default; unknown keys and bad values are all reported at once.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "polyext/polymer.hpp"

namespace polyext::config {

struct ExperimentConfig {
    std::string experiment;  // set by the caller (CLI subcommand), echoed into outputs

    std::int64_t n = 1024;
    std::vector<std::int64_t> ns;  // list of N for trend runs; empty means {n}
    double beta_hat = 0.5;
    std::int64_t m_scales = 8;
    std::int64_t replicas = 100;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: POLYEXT_THREADS, then hardware concurrency
    double window_c = 1.0;
    polymer::WallMode wall_mode = polymer::WallMode::start;
    std::string out;

    // lower tail
    std::int64_t tail_points = 12;
    // branching random walk
    std::int64_t depth = 20;
    std::int64_t branching = 2;
    std::string profile = "constant";  // constant | sigma | zero
    double profile_beta_hat = 0.9;
    // Edwards-Wilkinson covariance: psi(x) = psi_amplitude * exp(-psi_scale |x|^2)
    double psi_scale = 1.0;
    double psi_amplitude = 1.0;
    double ew_h = 0.125;
    // domination diagnostic
    double domination_l = 4.0;
    double hat_delta = 0.125;
    std::int64_t levels = 0;  // 0: all scales
    // point-to-point moments
    std::int64_t moment_p = 2;

    std::vector<std::int64_t> sizes() const;
    polymer::SweepOptions sweep_options() const;
    // Throws ValidationError listing every violated constraint.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

// Sets one key from its text form. Throws ValidationError for unknown keys or malformed values.
void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// All keys with their current values in text form, in a fixed order.
std::vector<std::pair<std::string, std::string>> to_pairs(const ExperimentConfig& cfg);
std::string to_text(const ExperimentConfig& cfg);

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);

}  // namespace polyext::config
