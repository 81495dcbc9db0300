#pragma once

// Experiment configuration: a small TOML-subset reader and the validated
// config object every command consumes. Validation collects every problem
// and reports them all at once.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lethe/softmax.hpp"
#include "lethe/tfidf.hpp"
#include "lethe/unlearn.hpp"

namespace lethe {

// Raised for malformed or invalid configuration; the message lists one
// problem per line.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigValue {
    enum class Kind { boolean, integer, real, string, number_array, string_array };
    Kind kind = Kind::string;
    bool b = false;
    std::int64_t i = 0;
    double d = 0.0;
    std::string s;
    std::vector<double> numbers;
    std::vector<std::string> strings;
    int line = 0;
};

// Parses the TOML subset used here: [section] headers, `key = value` lines,
// `#` comments, scalars (quoted string, true/false, int, float) and
// single-line homogeneous arrays. Keys flatten to "section.key". Throws
// ConfigError with 1-based line numbers.
std::map<std::string, ConfigValue> parse_toml_subset(const std::string& text);

struct ExperimentConfig {
    std::string dataset;
    std::string format = "jsonl";  // or "csv"
    std::string output_dir = "out";
    std::vector<std::string> classes;  // label names to delete
    std::vector<Method> methods = {Method::hessian, Method::golden, Method::relabel};
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    double test_fraction = 0.2;
    double val_fraction = 0.1;
    PipelineConfig pipeline;
    TrainConfig train;
    double cg_tol = 1e-4;
    int cg_max_iter = 200;
    int shadows = 10;
    double attacker_C = 1000.0;
    std::vector<double> sigma_grid = {};  // empty = default_sigma_grid()
    std::vector<double> tau_grid = {0.5, 0.55, 0.6, 0.65};
    std::vector<double> c_grid = {0.1, 1.0, 10.0, 100.0};
    int bench_repeats = 3;
    int workers = 0;  // 0 = one per hardware thread
};

// {0} followed by 24 log-spaced points from 1e-3 to 1e3.
std::vector<double> default_sigma_grid();

// Builds an ExperimentConfig from parsed values; appends one message per
// problem (unknown key, wrong type, bad value) to `errors`.
ExperimentConfig config_from_values(const std::map<std::string, ConfigValue>& values,
                                    std::vector<std::string>& errors);

// Reads, parses, and validates a config file. check_dataset additionally
// requires the dataset path to exist. Throws ConfigError listing every
// offending key.
ExperimentConfig load_config(const std::string& path, bool check_dataset = true);

// Re-validates semantic constraints after command-line overrides; throws
// ConfigError listing every violation.
void validate_config(const ExperimentConfig& config, bool check_dataset = true);

// Canonical JSON rendering of the effective config, used for provenance
// hashing and recorded next to every report row.
std::string canonical_config_json(const ExperimentConfig& config);

}  // namespace lethe
