#pragma once

// Implementation of the blindcrb subcommands. Each returns a process exit
// code: 0 for successful runs (including unbounded CRB rows), 1 for oracle
// failures, 2 for invalid input.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "blindcrb/channel.hpp"
#include "blindcrb/fim.hpp"

namespace blindcrb::cli {

inline constexpr const char* kSeedEnv = "BLINDCRB_SEED";

/// Default seed: $BLINDCRB_SEED when set, else 1.
std::uint64_t default_seed();

struct ModelOptions {
    std::string channel_path;
    std::string model = "deterministic";
    std::optional<std::string> field;  ///< promote a real channel to complex
    Index burst = 20;
    double sigma_a2 = 1.0;
    std::optional<double> sigma_v2;
    std::optional<double> snr_db;
    std::uint64_t seed = 1;

    Model parsed_model() const;
    /// Loads the channel and applies --field.
    Channel load() const;
    /// sigma_v2 from --sigma-v2, else --snr-db, else 0.1.
    double noise(const Channel& ch) const;
    std::string describe() const;
};

int cmd_analyze(const ModelOptions& opt, std::ostream& out);

struct CrbOptions {
    ModelOptions model;
    std::vector<std::string> constraints{"norm+phase"};
};
int cmd_crb(const CrbOptions& opt, std::ostream& out);

int cmd_sweep_known(const ModelOptions& opt, std::ostream& out);

struct FimCheckOptions {
    ModelOptions model;
    Index trials = 10000;
    /// Negative control: evaluate the analytic FIM at this sigma_v2 instead.
    std::optional<double> analytic_sigma_v2;
    bool entries = false;  ///< emit every entry, not just the summary
};
int cmd_fim_check(const FimCheckOptions& opt, std::ostream& out);

/// Experiment file (JSON):
///   {"channel": "h1.json", "model": "deterministic", "burst": 100,
///    "sigma_a2": 1.0, "snr_db": [10, 20, 30] | "sigma_v2": [...],
///    "trials": 500, "seed": 1, "estimator": "als"|"none",
///    "adjustments": ["NO", "LS", "LIN"], "als_iters": 100}
/// A relative channel path is resolved against the experiment file.
struct MseOptions {
    std::string experiment_path;
    std::optional<std::uint64_t> seed;  ///< overrides the file
    std::optional<Index> trials;
};
int cmd_mse(const MseOptions& opt, std::ostream& out);

}  // namespace blindcrb::cli
