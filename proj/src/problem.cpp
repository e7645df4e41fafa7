#include "agd/problem.hpp"

#include <numeric>

namespace agd {

TestFnProblem::TestFnProblem(testfns::TestFunction fn, std::optional<ParamVector> start)
    : fn_(std::move(fn)), start_(start ? *start : fn_.default_start) {
    check_same_length(start_.size(), fn_.dim, "start point");
}

models::LossGrad TestFnProblem::evaluate(std::span<const double> w, std::uint64_t) const {
    auto e = fn_.eval(w);
    return {e.value, std::move(e.grad)};
}

MlpProblem::MlpProblem(models::MlpSpec spec, models::Dataset data, std::size_t batch_size,
                       std::uint64_t seed)
    : spec_(spec),
      data_(std::move(data)),
      stream_(data_.rows, batch_size, seed),
      init_(models::mlp_init(spec_, seed)) {}

models::LossGrad MlpProblem::evaluate(std::span<const double> w, std::uint64_t t) const {
    if (t == 0) throw InvalidStepError("mlp problem: step index must be >= 1");
    const auto batch = stream_.batch(t - 1);
    return models::mlp_loss_grad(spec_, w, data_, batch);
}

double MlpProblem::full_loss(std::span<const double> w) const {
    std::vector<std::size_t> all(data_.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return models::mlp_loss_grad(spec_, w, data_, all).loss;
}

double MlpProblem::accuracy(std::span<const double> w) const {
    return models::mlp_accuracy(spec_, w, data_);
}

}  // namespace agd
