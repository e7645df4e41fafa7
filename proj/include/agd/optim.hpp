#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agd/core.hpp"

namespace agd {

enum class OptimizerKind { Sgd, Adam, AdamW, AdaBelief, Agd, AgdAmsgrad };

std::string_view optimizer_name(OptimizerKind kind);
/// Accepts "sgd", "adam", "adamw", "adabelief", "agd", "agd_amsgrad".
OptimizerKind parse_optimizer(std::string_view name);

struct SgdState {
    std::vector<double> buffer;
    std::uint64_t t = 0;
    bool operator==(const SgdState&) const = default;
};

struct AdamLikeState {
    enum class Variant { Adam, AdamW, AdaBelief };
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    // Running product of the scheduled beta1 values, used for bias correction
    // when a beta1 schedule is active.
    double beta1_prod = 1.0;
    Variant variant = Variant::Adam;
    bool operator==(const AdamLikeState&) const = default;
};

struct AgdState {
    std::vector<double> m;
    std::vector<double> b;
    // m_{t-1} / (1 - beta1^{t-1}), kept from the previous step.
    std::vector<double> prev_corrected;
    std::uint64_t t = 0;
    double beta1_prod = 1.0;
    bool amsgrad = false;
    bool operator==(const AgdState&) const = default;
};

using OptimizerState = std::variant<SgdState, AdamLikeState, AgdState>;

OptimizerState make_state(OptimizerKind kind, std::size_t n);
OptimizerKind state_kind(const OptimizerState& state);
std::uint64_t state_step(const OptimizerState& state);

template <typename State>
struct Stepped {
    State state;
    ParamVector params;
    StepDiagnostics diag;
};

using StepResult = Stepped<OptimizerState>;

// Pure stepping contract: returns the successor state and parameters and
// leaves the inputs untouched. `t` must equal the state's step counter + 1.
// Weight decay (when hp.weight_decay > 0) is decoupled, w <- w - lr_t*lambda*w
// applied before the update, for every optimizer except plain Adam, which
// folds lambda*w into the gradient (classic L2).
StepResult optimizer_step(const OptimizerState& state, const ParamVector& w,
                          const GradVector& g, std::uint64_t t, const HyperParams& hp);

// In-place variant used by the experiment loops.
StepDiagnostics step_in_place(OptimizerState& state, std::span<double> w,
                              std::span<const double> g, std::uint64_t t, const HyperParams& hp);

Stepped<AgdState> agd_step(const AgdState& state, const ParamVector& w, const GradVector& g,
                           std::uint64_t t, const HyperParams& hp);
Stepped<AdamLikeState> adam_step(const AdamLikeState& state, const ParamVector& w,
                                 const GradVector& g, std::uint64_t t, const HyperParams& hp);
Stepped<AdamLikeState> adabelief_step(const AdamLikeState& state, const ParamVector& w,
                                      const GradVector& g, std::uint64_t t, const HyperParams& hp);
Stepped<SgdState> sgd_momentum_step(const SgdState& state, const ParamVector& w,
                                    const GradVector& g, std::uint64_t t, const HyperParams& hp);

/// Gradient difference of adjacent bias-corrected EMAs.
///
/// At t == 1 returns m_1 / (1 - beta1); afterwards
/// m_t / (1 - beta1^t) - prev_corrected. `prev_corrected` is ignored at t == 1.
std::vector<double> agd_compute_s(std::span<const double> m_t,
                                  std::span<const double> prev_corrected, std::uint64_t t,
                                  double beta1_t);

// Bias-correction denominator 1 - prod_{i<=t} beta1_i. With a constant
// schedule this is 1 - beta1^t computed directly from pow.
double beta1_correction(const HyperParams& hp, std::uint64_t t, double beta1_prod);

// Fraction of entries strictly below delta; the tie goes to the adaptive branch.
double truncation_fraction_from_bhat(std::span<const double> bhat, double delta);

}  // namespace agd
