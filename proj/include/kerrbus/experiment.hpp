#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace kerrbus {

enum class ExperimentKind {
    Detector,
    Source,
    Parity,
    ParityLossy,
    Cnot,
    BellMeas,
    Fusion,
    OracleCheck,
    Sweep,
};

ExperimentKind experiment_from_name(const std::string& name);
std::string experiment_name(ExperimentKind kind);

struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

/// Flat configuration shared by every experiment; unused fields are ignored
/// by experiments that do not need them.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Detector;
    double alpha = 600.0;
    double theta = 0.01;
    double eta = 0.0;
    double alphaA = 1.0;
    double xi = M_PI_2;
    std::uint64_t trials = 10000;
    std::uint64_t seed = 0;
    std::string measurement = "photon";  // photon | homodyne
    std::string input = "balanced";      // parity: balanced|odd ; bellmeas: bell|random
    std::string inner = "detector";      // sweep inner experiment
    std::vector<SweepAxis> sweeps;
    std::string out;  // CSV path; empty writes CSV to stdout
};

/// Throws std::invalid_argument with a message naming the offending key.
void validate(const ExperimentConfig& cfg);

/// Flat `key = value` file, one entry per line, '#' comments.
std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path);
/// Applies one key/value pair; throws naming the key on bad input.
void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Parses "key=v1,v2,..." into a sweep axis.
SweepAxis parse_sweep_axis(const std::string& spec);

/// Runs the configured experiment, writing the CSV to `csv` and the
/// analytic-vs-empirical summary to `summary`. Returns the process exit
/// status (nonzero when an oracle check fails).
int run_experiment(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary);

}  // namespace kerrbus
