#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "agd/core.hpp"
#include "agd/models.hpp"
#include "agd/optim.hpp"

namespace agd::config {

enum class ProblemKind { TestFn, Mlp, Regret };

struct DatasetConfig {
    std::string generator = "two_moons";
    std::uint64_t n = 1000;
    double noise = 0.1;
    bool operator==(const DatasetConfig&) const = default;
};

struct ProblemConfig {
    ProblemKind kind = ProblemKind::TestFn;
    // testfn
    std::string name = "quad_skew";
    std::optional<ParamVector> start;
    // mlp
    models::MlpSpec mlp;
    DatasetConfig dataset;
    std::uint64_t batch_size = 32;
    // regret
    std::uint64_t dim = 2;
    std::uint64_t horizon = 10000;
    bool operator==(const ProblemConfig&) const = default;
};

struct ExperimentConfig {
    ProblemConfig problem;
    OptimizerKind optimizer = OptimizerKind::Agd;
    HyperParams hp;
    std::optional<std::uint64_t> steps;
    std::optional<std::uint64_t> epochs;
    std::uint64_t seed = 0;
    std::string output = "out";
    std::optional<std::uint64_t> snapshot_every;
    std::optional<double> tol;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Strict JSON decoding: unknown keys, wrong types and out-of-range values
/// raise ConfigError naming the dotted field path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::ordered_json to_json(const ExperimentConfig& c);

HyperParams parse_optimizer(const nlohmann::json& j, OptimizerKind& kind, const std::string& where);
nlohmann::ordered_json optimizer_to_json(OptimizerKind kind, const HyperParams& hp);

// Checks cross-field constraints (steps vs epochs, problem sizes, hyperparameters).
void validate(const ExperimentConfig& c);

// Effective step count: `steps`, or epochs x batches-per-epoch for MLP
// problems, or the horizon for regret problems.
std::uint64_t effective_steps(const ExperimentConfig& c);
std::uint64_t effective_snapshot_every(const ExperimentConfig& c);

// Overwrites a dotted field path (e.g. "optimizer.delta") in the JSON form of
// `base` and re-parses strictly, so unrecognized paths are rejected.
ExperimentConfig with_override(const ExperimentConfig& base, const std::string& path,
                               const nlohmann::json& value);

std::string to_string(ProblemKind k);

}  // namespace agd::config
