#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace twospine::cli {

enum ExitCode : int { kPass = 0, kVerificationFailed = 1, kInvalidInput = 2 };

// Every key an experiment manifest may carry. Unset fields fall back to the
// per-command defaults.
struct ExperimentConfig {
    nlohmann::json offspring;  // null: binary
    std::optional<std::size_t> n;
    std::vector<std::size_t> n_schedule;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> survivors;
    std::optional<std::size_t> mc_n;
    std::optional<std::vector<double>> lambda_grid;
    std::optional<std::size_t> grid_size;
    std::optional<double> lambda_max;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::optional<double> tolerance;
    std::optional<double> mc_sigmas;
    std::string out_dir = ".";
    std::optional<int> order;
    std::optional<std::size_t> functionals;
    nlohmann::json law;  // null: exponential with mean 1
    std::string sampler = "plain";
    bool keep_trees = false;
    std::optional<double> enumeration_cap;
};

// Applies a JSON manifest onto cfg; unknown keys or wrong types throw
// ConfigError.
void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j);

// Entry point shared by the executable and the tests. args excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twospine::cli
