#include "agd/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agd {

void validate(const HyperParams& hp) {
    if (!(hp.alpha > 0.0) || !std::isfinite(hp.alpha))
        throw ConfigError("alpha", "must be a finite positive number");
    if (!(hp.beta1 >= 0.0 && hp.beta1 < 1.0))
        throw ConfigError("beta1", "must lie in [0, 1)");
    if (!(hp.beta2 >= 0.0 && hp.beta2 < 1.0))
        throw ConfigError("beta2", "must lie in [0, 1)");
    if (!(hp.delta > 0.0) || !std::isfinite(hp.delta))
        throw ConfigError("delta", "must be a finite positive number");
    if (!(hp.weight_decay >= 0.0) || !std::isfinite(hp.weight_decay))
        throw ConfigError("weight_decay", "must be a finite non-negative number");
    for (const auto& m : hp.milestones) {
        if (m.step == 0) throw ConfigError("milestones", "milestone step must be >= 1");
        if (!(m.factor > 0.0) || !std::isfinite(m.factor))
            throw ConfigError("milestones", "milestone factor must be positive");
    }
}

double schedule_lr(const StepSchedule& sched, std::uint64_t t) {
    if (t == 0) throw InvalidStepError("schedule_lr: step index must be >= 1");
    switch (sched.kind) {
    case LrScheduleKind::Constant:
        return sched.base;
    case LrScheduleKind::InverseSqrt:
        return sched.base / std::sqrt(static_cast<double>(t));
    case LrScheduleKind::Milestones: {
        double lr = sched.base;
        for (const auto& m : sched.milestones)
            if (m.step <= t) lr *= m.factor;
        return lr;
    }
    }
    return sched.base;
}

double schedule_beta1(const HyperParams& hp, std::uint64_t t) {
    if (t == 0) throw InvalidStepError("schedule_beta1: step index must be >= 1");
    switch (hp.beta1_schedule) {
    case Beta1ScheduleKind::Constant:
        return hp.beta1;
    case Beta1ScheduleKind::OverSqrtT:
        return hp.beta1 / std::sqrt(static_cast<double>(t));
    case Beta1ScheduleKind::OverT:
        return hp.beta1 / static_cast<double>(t);
    }
    return hp.beta1;
}

int BhatHistogram::bin_of(double value) {
    if (!(value >= std::pow(10.0, kLowExp))) return 0;
    if (value >= std::pow(10.0, kHighExp)) return kBins + 1;
    const int bin = static_cast<int>(std::floor(std::log10(value) - kLowExp));
    return 1 + std::clamp(bin, 0, kBins - 1);
}

void BhatHistogram::add(double value) { ++counts[static_cast<std::size_t>(bin_of(value))]; }

std::uint64_t BhatHistogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double BhatHistogram::lower_edge(int i) {
    if (i <= 0) return 0.0;
    return std::pow(10.0, kLowExp + static_cast<double>(i - 1));
}

void check_same_length(std::size_t params, std::size_t grads, const char* what) {
    if (params != grads)
        throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(params) +
                         " vs " + std::to_string(grads) + ")");
}

void check_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw NumericError(std::string(what) + ": non-finite entry at coordinate " +
                                   std::to_string(i),
                               static_cast<std::ptrdiff_t>(i));
    }
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace agd
