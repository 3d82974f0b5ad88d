#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bubblecast/marma.hpp"
#include "bubblecast/mdn.hpp"

namespace bubblecast::experiment {

/// Batch pipeline configuration; JSON-serializable, CLI flags override
/// individual fields. See the README for the schema.
struct ExperimentConfig {
    std::string dgp_preset = "MAR01";
    double alpha = 1.4;
    bool use_custom_spec = false;
    marma::MarmaSpec custom_spec;

    std::size_t n_train = 5000;
    std::size_t n_cal = 5000;
    std::size_t n_test = 500;
    std::vector<std::size_t> horizons = {1, 2, 5};
    std::size_t grid_size = 5000;
    std::size_t y_grid = 1024;
    std::vector<std::string> methods = {"mdn", "nw", "oracle"};
    double delta = 0.05;
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir;  // empty: BUBBLECAST_OUTPUT_DIR, then "out"
    std::size_t threads = 1;
    std::size_t burn_in = marma::DEFAULT_BURN_IN;
    double moment_trunc_lo = 0.01;
    double moment_trunc_hi = 0.99;
    std::string series_file;  // forecast/evaluate a supplied series
    bool recalibrate = true;

    mdn::MdnConfig mdn;

    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
    std::string to_json() const;
    std::string config_hash() const;

    marma::MarmaSpec resolve_spec() const;
    std::string resolved_output_dir() const;
    void validate() const;
};

/// The closed-form oracle exists only for the Cauchy purely noncausal
/// MAR(0,1) case.
bool oracle_available(const marma::MarmaSpec& spec);

/// Indices of local modes of a tabulated density with prominence at least
/// min_prominence_ratio of the global maximum.
std::vector<std::size_t> find_modes(const std::vector<double>& pdf_values,
                                    double min_prominence_ratio = 0.01);

// Pipeline stages. Each writes files under <output_dir>/seed<S>/ plus a
// shared manifest, and throws config_error / data_error / numeric_error on
// failure (the CLI maps these to exit codes 2/3/4).
void cmd_simulate(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_forecast(const ExperimentConfig& cfg);
void cmd_evaluate(const ExperimentConfig& cfg);

}  // namespace bubblecast::experiment
