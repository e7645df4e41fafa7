#include "agd/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "agd/io.hpp"
#include "agd/rng.hpp"

namespace agd::models {

Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
    if (n < 2) throw ConfigError("dataset.n", "two-moons needs at least 2 points");
    if (!(noise >= 0.0)) throw ConfigError("dataset.noise", "must be non-negative");
    Dataset ds;
    ds.generator = "two_moons";
    ds.seed = seed;
    ds.rows = n;
    ds.cols = 2;
    ds.target_cols = 1;
    ds.inputs.reserve(2 * n);
    ds.targets.reserve(n);

    const std::size_t n0 = (n + 1) / 2;
    const std::size_t n1 = n - n0;
    auto angle = [](std::size_t i, std::size_t k) {
        return k <= 1 ? 0.0
                      : std::numbers::pi * static_cast<double>(i) / static_cast<double>(k - 1);
    };
    Rng rng(seed, 0x6d6f6f6e);
    for (std::size_t i = 0; i < n0; ++i) {
        const double a = angle(i, n0);
        ds.inputs.push_back(std::cos(a));
        ds.inputs.push_back(std::sin(a));
        ds.targets.push_back(0.0);
    }
    for (std::size_t i = 0; i < n1; ++i) {
        const double a = angle(i, n1);
        ds.inputs.push_back(1.0 - std::cos(a));
        ds.inputs.push_back(0.5 - std::sin(a));
        ds.targets.push_back(1.0);
    }
    if (noise > 0.0)
        for (double& x : ds.inputs) x += noise * rng.normal();
    return ds;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::string out;
    for (std::size_t j = 0; j < ds.cols; ++j) out += "x" + std::to_string(j) + ",";
    for (std::size_t j = 0; j < ds.target_cols; ++j)
        out += "y" + std::to_string(j) + (j + 1 < ds.target_cols ? "," : "\n");
    for (std::size_t i = 0; i < ds.rows; ++i) {
        for (double x : ds.input(i)) out += io::format_double(x) + ",";
        const auto y = ds.target(i);
        for (std::size_t j = 0; j < y.size(); ++j)
            out += io::format_double(y[j]) + (j + 1 < y.size() ? "," : "\n");
    }
    io::write_file_atomic(path, out);
}

namespace {

struct Layout {
    std::size_t w1, b1, w2, b2;
};

Layout layout(const MlpSpec& s) {
    const std::size_t w1 = 0;
    const std::size_t b1 = w1 + s.hidden_dim * s.in_dim;
    const std::size_t w2 = b1 + s.hidden_dim;
    const std::size_t b2 = w2 + s.out_dim * s.hidden_dim;
    return {w1, b1, w2, b2};
}

void check_spec(const MlpSpec& spec, std::span<const double> params, const Dataset& ds) {
    if (spec.in_dim == 0 || spec.hidden_dim == 0 || spec.out_dim == 0)
        throw ShapeError("mlp: all layer sizes must be positive");
    if (params.size() != spec.param_count())
        throw ShapeError("mlp: expected " + std::to_string(spec.param_count()) +
                         " parameters, got " + std::to_string(params.size()));
    if (ds.cols != spec.in_dim) throw ShapeError("mlp: dataset width does not match in_dim");
    switch (spec.loss) {
    case Loss::SoftmaxCrossEntropy:
        if (ds.target_cols != 1) throw ShapeError("mlp: softmax targets must be class indices");
        break;
    case Loss::Logistic:
        if (spec.out_dim != 1 || ds.target_cols != 1)
            throw ShapeError("mlp: logistic loss needs out_dim 1 and one target column");
        break;
    case Loss::SquaredError:
        if (ds.target_cols != spec.out_dim)
            throw ShapeError("mlp: squared-error targets must have out_dim columns");
        break;
    }
}

double activate(Activation a, double z) { return a == Activation::Tanh ? std::tanh(z) : std::max(z, 0.0); }

// Derivative expressed through the activation output h (tanh) or input z (ReLU).
double activate_grad(Activation a, double z, double h) {
    return a == Activation::Tanh ? 1.0 - h * h : (z > 0.0 ? 1.0 : 0.0);
}

// Forward pass for one example; fills hidden pre/post activations and outputs.
void forward(const MlpSpec& s, std::span<const double> p, std::span<const double> x,
             std::vector<double>& z1, std::vector<double>& h, std::vector<double>& out) {
    const Layout L = layout(s);
    for (std::size_t j = 0; j < s.hidden_dim; ++j) {
        double acc = p[L.b1 + j];
        for (std::size_t k = 0; k < s.in_dim; ++k) acc += p[L.w1 + j * s.in_dim + k] * x[k];
        z1[j] = acc;
        h[j] = activate(s.activation, acc);
    }
    for (std::size_t o = 0; o < s.out_dim; ++o) {
        double acc = p[L.b2 + o];
        for (std::size_t j = 0; j < s.hidden_dim; ++j) acc += p[L.w2 + o * s.hidden_dim + j] * h[j];
        out[o] = acc;
    }
}

std::size_t class_label(double y, std::size_t classes) {
    if (!(y >= 0.0) || y != std::floor(y) || static_cast<std::size_t>(y) >= classes)
        throw ShapeError("class label out of range");
    return static_cast<std::size_t>(y);
}

// Loss for one example; writes dL/d(out) into `dout`.
double output_loss(const MlpSpec& s, std::span<const double> out, std::span<const double> y,
                   std::vector<double>& dout) {
    switch (s.loss) {
    case Loss::SoftmaxCrossEntropy: {
        const std::size_t label = class_label(y[0], s.out_dim);
        const double mx = *std::max_element(out.begin(), out.end());
        double denom = 0.0;
        for (double o : out) denom += std::exp(o - mx);
        const double log_z = mx + std::log(denom);
        for (std::size_t o = 0; o < s.out_dim; ++o)
            dout[o] = std::exp(out[o] - log_z) - (o == label ? 1.0 : 0.0);
        return log_z - out[label];
    }
    case Loss::Logistic: {
        const double z = out[0];
        const double t = y[0];
        // log(1 + e^z) - t z in overflow-safe form.
        const double loss = std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
        const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        dout[0] = sig - t;
        return loss;
    }
    case Loss::SquaredError: {
        double loss = 0.0;
        for (std::size_t o = 0; o < s.out_dim; ++o) {
            const double r = out[o] - y[o];
            dout[o] = r;
            loss += 0.5 * r * r;
        }
        return loss;
    }
    }
    return 0.0;
}

}  // namespace

ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed) {
    ParamVector p(spec.param_count(), 0.0);
    const Layout L = layout(spec);
    Rng rng(seed, 0x696e6974);
    const double a1 = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.hidden_dim));
    const double a2 = std::sqrt(6.0 / static_cast<double>(spec.hidden_dim + spec.out_dim));
    for (std::size_t i = L.w1; i < L.b1; ++i) p[i] = rng.uniform(-a1, a1);
    for (std::size_t i = L.w2; i < L.b2; ++i) p[i] = rng.uniform(-a2, a2);
    return p;
}

LossGrad mlp_loss_grad(const MlpSpec& spec, std::span<const double> params, const Dataset& ds,
                       std::span<const std::size_t> batch) {
    check_spec(spec, params, ds);
    if (batch.empty()) throw ShapeError("mlp: empty batch");
    const Layout L = layout(spec);
    LossGrad r;
    r.grad.assign(params.size(), 0.0);
    std::vector<double> z1(spec.hidden_dim), h(spec.hidden_dim), out(spec.out_dim),
        dout(spec.out_dim), dh(spec.hidden_dim);

    for (std::size_t row : batch) {
        if (row >= ds.rows) throw ShapeError("mlp: batch index out of range");
        const auto x = ds.input(row);
        forward(spec, params, x, z1, h, out);
        r.loss += output_loss(spec, out, ds.target(row), dout);

        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t o = 0; o < spec.out_dim; ++o) {
            r.grad[L.b2 + o] += dout[o];
            for (std::size_t j = 0; j < spec.hidden_dim; ++j) {
                r.grad[L.w2 + o * spec.hidden_dim + j] += dout[o] * h[j];
                dh[j] += dout[o] * params[L.w2 + o * spec.hidden_dim + j];
            }
        }
        for (std::size_t j = 0; j < spec.hidden_dim; ++j) {
            const double dz = dh[j] * activate_grad(spec.activation, z1[j], h[j]);
            r.grad[L.b1 + j] += dz;
            for (std::size_t k = 0; k < spec.in_dim; ++k) r.grad[L.w1 + j * spec.in_dim + k] += dz * x[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    r.loss *= inv;
    for (double& g : r.grad) g *= inv;
    return r;
}

double mlp_accuracy(const MlpSpec& spec, std::span<const double> params, const Dataset& ds) {
    check_spec(spec, params, ds);
    if (spec.loss == Loss::SquaredError) throw ConfigError("loss", "accuracy needs a classification loss");
    std::vector<double> z1(spec.hidden_dim), h(spec.hidden_dim), out(spec.out_dim);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.rows; ++i) {
        forward(spec, params, ds.input(i), z1, h, out);
        std::size_t predicted;
        if (spec.loss == Loss::Logistic)
            predicted = out[0] > 0.0 ? 1 : 0;
        else
            predicted = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
        if (static_cast<double>(predicted) == ds.target(i)[0]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.rows);
}

LossGrad logreg_loss_grad(std::span<const double> params, const Dataset& ds,
                          std::span<const std::size_t> batch) {
    if (params.size() != ds.cols + 1) throw ShapeError("logreg: expected cols + 1 parameters");
    if (ds.target_cols != 1) throw ShapeError("logreg: expected one label column");
    if (batch.empty()) throw ShapeError("logreg: empty batch");
    LossGrad r;
    r.grad.assign(params.size(), 0.0);
    for (std::size_t row : batch) {
        if (row >= ds.rows) throw ShapeError("logreg: batch index out of range");
        const auto x = ds.input(row);
        const double t = ds.target(row)[0];
        double z = params[ds.cols];
        for (std::size_t k = 0; k < ds.cols; ++k) z += params[k] * x[k];
        r.loss += std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
        const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        const double d = sig - t;
        for (std::size_t k = 0; k < ds.cols; ++k) r.grad[k] += d * x[k];
        r.grad[ds.cols] += d;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    r.loss *= inv;
    for (double& g : r.grad) g *= inv;
    return r;
}

MinibatchStream::MinibatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
    if (batch_size == 0 || batch_size > n)
        throw ConfigError("batch_size", "must satisfy 1 <= batch_size <= n");
    batches_per_epoch_ = (n + batch_size - 1) / batch_size;
}

std::vector<std::size_t> MinibatchStream::epoch_permutation(std::uint64_t epoch) const {
    if (auto it = cache_.find(epoch); it != cache_.end()) return it->second;
    std::vector<std::size_t> perm(n_);
    for (std::size_t i = 0; i < n_; ++i) perm[i] = i;
    Rng rng(seed_, epoch);
    for (std::size_t i = n_; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    if (cache_.size() > 2) cache_.clear();
    cache_.emplace(epoch, perm);
    return perm;
}

std::vector<std::size_t> MinibatchStream::batch(std::uint64_t index) const {
    const std::uint64_t epoch = index / batches_per_epoch_;
    const std::size_t k = static_cast<std::size_t>(index % batches_per_epoch_);
    const auto perm = epoch_permutation(epoch);
    const std::size_t begin = k * batch_size_;
    const std::size_t end = std::min(begin + batch_size_, n_);
    return {perm.begin() + static_cast<std::ptrdiff_t>(begin),
            perm.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::vector<std::size_t> MinibatchStream::next() { return batch(cursor_++); }

Activation parse_activation(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::ReLU;
    throw ConfigError("activation", "unknown activation '" + s + "'");
}

Loss parse_loss(const std::string& s) {
    if (s == "softmax_ce") return Loss::SoftmaxCrossEntropy;
    if (s == "logistic") return Loss::Logistic;
    if (s == "squared_error") return Loss::SquaredError;
    throw ConfigError("loss", "unknown loss '" + s + "'");
}

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

std::string to_string(Loss l) {
    switch (l) {
    case Loss::SoftmaxCrossEntropy: return "softmax_ce";
    case Loss::Logistic: return "logistic";
    case Loss::SquaredError: return "squared_error";
    }
    return "unknown";
}

}  // namespace agd::models
