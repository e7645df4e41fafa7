#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "agd/core.hpp"
#include "agd/models.hpp"
#include "agd/testfns.hpp"

namespace agd {

// An objective consumed by the experiment loops. `evaluate(w, t)` returns the
// loss and gradient used by optimizer step t (1-based); stochastic problems
// select their minibatch from t, so runs are reproducible.
class Problem {
public:
    virtual ~Problem() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual ParamVector initial_params() const = 0;
    virtual models::LossGrad evaluate(std::span<const double> w, std::uint64_t t) const = 0;
    // Called after every optimizer step; constrained problems project here.
    virtual void project(std::span<double>) const {}
    virtual std::optional<ParamVector> optimum() const { return std::nullopt; }
};

class TestFnProblem final : public Problem {
public:
    explicit TestFnProblem(testfns::TestFunction fn, std::optional<ParamVector> start = std::nullopt);
    std::string name() const override { return fn_.name; }
    std::size_t dim() const override { return fn_.dim; }
    ParamVector initial_params() const override { return start_; }
    models::LossGrad evaluate(std::span<const double> w, std::uint64_t t) const override;
    std::optional<ParamVector> optimum() const override { return fn_.optimum; }
    const testfns::TestFunction& function() const { return fn_; }

private:
    testfns::TestFunction fn_;
    ParamVector start_;
};

class MlpProblem final : public Problem {
public:
    MlpProblem(models::MlpSpec spec, models::Dataset data, std::size_t batch_size,
               std::uint64_t seed);
    std::string name() const override { return "mlp_" + data_.generator; }
    std::size_t dim() const override { return spec_.param_count(); }
    ParamVector initial_params() const override { return init_; }
    models::LossGrad evaluate(std::span<const double> w, std::uint64_t t) const override;

    double full_loss(std::span<const double> w) const;
    double accuracy(std::span<const double> w) const;
    std::size_t batches_per_epoch() const { return stream_.batches_per_epoch(); }
    const models::MlpSpec& spec() const { return spec_; }
    const models::Dataset& data() const { return data_; }

private:
    models::MlpSpec spec_;
    models::Dataset data_;
    models::MinibatchStream stream_;
    ParamVector init_;
};

}  // namespace agd
