#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "agd/core.hpp"

namespace agd::models {

/// Row-major examples with their targets.
///
/// Classification targets hold the class index as a double in a single
/// column; regression targets hold one column per output.
struct Dataset {
    std::string generator;
    std::uint64_t seed = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t target_cols = 1;
    std::vector<double> inputs;
    std::vector<double> targets;

    std::span<const double> input(std::size_t i) const {
        return {inputs.data() + i * cols, cols};
    }
    std::span<const double> target(std::size_t i) const {
        return {targets.data() + i * target_cols, target_cols};
    }
    bool operator==(const Dataset&) const = default;
};

/// Two interleaved half circles of radius 1: class 0 on (cos t, sin t), class 1
/// on (1 - cos t, 0.5 - sin t) for t evenly spaced on [0, pi], plus isotropic
/// Gaussian noise. Class 0 receives the extra point when n is odd.
Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed);

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

enum class Activation { Tanh, ReLU };
enum class Loss { SoftmaxCrossEntropy, Logistic, SquaredError };

struct MlpSpec {
    std::size_t in_dim = 2;
    std::size_t hidden_dim = 16;
    std::size_t out_dim = 2;
    Activation activation = Activation::Tanh;
    Loss loss = Loss::SoftmaxCrossEntropy;

    std::size_t param_count() const {
        return in_dim * hidden_dim + hidden_dim + hidden_dim * out_dim + out_dim;
    }
    bool operator==(const MlpSpec&) const = default;
};

struct LossGrad {
    double loss = 0.0;
    GradVector grad;
};

// Glorot-uniform weights, zero biases.
ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed);

// Mean loss over the rows in `batch` and its exact gradient. Parameters are
// laid out as W1 (hidden x in), b1, W2 (out x hidden), b2, all row-major.
LossGrad mlp_loss_grad(const MlpSpec& spec, std::span<const double> params, const Dataset& ds,
                       std::span<const std::size_t> batch);

// Fraction of rows classified correctly. Only for the classification losses.
double mlp_accuracy(const MlpSpec& spec, std::span<const double> params, const Dataset& ds);

// Binary logistic regression: params = (weights..., bias), labels 0/1.
LossGrad logreg_loss_grad(std::span<const double> params, const Dataset& ds,
                          std::span<const std::size_t> batch);

/// Deterministic shuffled minibatches.
///
/// Epoch e is a Fisher-Yates permutation drawn from Rng(seed, e), so any batch
/// can be recomputed from (seed, batch index) alone. The last batch of an
/// epoch is short when batch_size does not divide n.
class MinibatchStream {
public:
    MinibatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);

    std::size_t batches_per_epoch() const { return batches_per_epoch_; }
    std::vector<std::size_t> epoch_permutation(std::uint64_t epoch) const;
    // Batch by global index (0-based, epochs concatenated).
    std::vector<std::size_t> batch(std::uint64_t index) const;
    std::vector<std::size_t> next();

private:
    std::size_t n_;
    std::size_t batch_size_;
    std::uint64_t seed_;
    std::size_t batches_per_epoch_;
    std::uint64_t cursor_ = 0;
    mutable std::map<std::uint64_t, std::vector<std::size_t>> cache_;
};

Activation parse_activation(const std::string& s);
Loss parse_loss(const std::string& s);
std::string to_string(Activation a);
std::string to_string(Loss l);

}  // namespace agd::models
