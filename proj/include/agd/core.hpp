#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace agd {

using ParamVector = std::vector<double>;
using GradVector = std::vector<double>;

// Error taxonomy. All errors raised by the library derive from agd::Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    NumericError(const std::string& what, std::ptrdiff_t coordinate = -1)
        : Error(what), coordinate_(coordinate) {}
    std::ptrdiff_t coordinate() const noexcept { return coordinate_; }

private:
    std::ptrdiff_t coordinate_;
};

// Invalid hyperparameters or experiment settings. `field` names the offender.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InvalidStepError : public Error {
public:
    using Error::Error;
};

enum class LrScheduleKind { Constant, InverseSqrt, Milestones };
enum class Beta1ScheduleKind { Constant, OverSqrtT, OverT };

struct Milestone {
    std::uint64_t step = 0;
    double factor = 1.0;
    bool operator==(const Milestone&) const = default;
};

struct StepSchedule {
    double base = 1e-3;
    LrScheduleKind kind = LrScheduleKind::Constant;
    std::vector<Milestone> milestones;
    bool operator==(const StepSchedule&) const = default;
};

/// Hyperparameters shared by every optimizer.
///
/// `delta` is AGD's auto-switch threshold; the additive-stabilizer optimizers
/// (Adam, AdamW, AdaBelief) read it as epsilon. SGD reads `beta1` as its
/// momentum coefficient.
struct HyperParams {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double delta = 1e-8;
    double weight_decay = 0.0;
    LrScheduleKind lr_schedule = LrScheduleKind::Constant;
    std::vector<Milestone> milestones;
    Beta1ScheduleKind beta1_schedule = Beta1ScheduleKind::Constant;
    // AdaBelief only: add epsilon inside the second-moment EMA, as the
    // published reference implementation does.
    bool adabelief_eps_in_ema = true;

    bool operator==(const HyperParams&) const = default;

    StepSchedule lr() const { return {alpha, lr_schedule, milestones}; }
};

/// Throws ConfigError naming the first out-of-range field.
void validate(const HyperParams& hp);

double schedule_lr(const StepSchedule& sched, std::uint64_t t);
double schedule_beta1(const HyperParams& hp, std::uint64_t t);

// Log10-binned histogram of bias-corrected second-moment roots.
// 18 bins cover [1e-16, 1e2); index 0 is underflow, index 19 overflow.
struct BhatHistogram {
    static constexpr int kBins = 18;
    static constexpr double kLowExp = -16.0;
    static constexpr double kHighExp = 2.0;
    std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(kBins + 2, 0);

    void add(double value);
    std::uint64_t total() const;
    // Lower edge of counted bin `i` (1..kBins); underflow has edge 0.
    static double lower_edge(int i);
    static int bin_of(double value);
    bool operator==(const BhatHistogram&) const = default;
};

struct StepDiagnostics {
    double truncation_fraction = 0.0;
    BhatHistogram bhat_histogram;
    double step_norm = 0.0;
    double effective_lr_min = 0.0;
    double effective_lr_max = 0.0;
    // Per-coordinate bias-corrected second-moment root for this step.
    std::vector<double> bhat;
    bool operator==(const StepDiagnostics&) const = default;
};

void check_same_length(std::size_t params, std::size_t grads, const char* what);
void check_finite(std::span<const double> v, const char* what);

double l2_norm(std::span<const double> v);

}  // namespace agd
