#include "agd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace agd {

namespace {

void check_step_index(std::uint64_t state_t, std::uint64_t t) {
    if (t == 0 || t != state_t + 1)
        throw InvalidStepError("step index " + std::to_string(t) + " does not follow state step " +
                               std::to_string(state_t));
}

void check_inputs(std::size_t state_n, std::span<const double> w, std::span<const double> g) {
    check_same_length(w.size(), g.size(), "params/grad");
    check_same_length(w.size(), state_n, "params/state");
    if (w.empty()) throw ShapeError("parameter vector must be non-empty");
    check_finite(w, "params");
    check_finite(g, "grad");
}

void apply_decoupled_decay(std::span<double> w, double lr, double lambda) {
    if (lambda <= 0.0) return;
    const double shrink = lr * lambda;
    for (double& x : w) x -= shrink * x;
}

// Fills step_norm, effective-lr extrema and histogram from per-coordinate data.
void finish_diag(StepDiagnostics& diag, std::span<const double> before, std::span<const double> after,
                 double lr_min, double lr_max) {
    double s = 0.0;
    for (std::size_t i = 0; i < after.size(); ++i) {
        const double d = after[i] - before[i];
        s += d * d;
    }
    diag.step_norm = std::sqrt(s);
    diag.effective_lr_min = lr_min;
    diag.effective_lr_max = lr_max;
    for (double v : diag.bhat) diag.bhat_histogram.add(v);
}

StepDiagnostics agd_in_place(AgdState& st, std::span<double> w, std::span<const double> g,
                             std::uint64_t t, const HyperParams& hp) {
    check_inputs(st.m.size(), w, g);
    check_step_index(st.t, t);
    const std::size_t n = w.size();
    const std::vector<double> before(w.begin(), w.end());

    const double lr = schedule_lr(hp.lr(), t);
    const double beta1_t = schedule_beta1(hp, t);
    apply_decoupled_decay(w, lr, hp.weight_decay);

    const double prod = st.beta1_prod * beta1_t;
    const double corr1 = beta1_correction(hp, t, prod);
    const double corr2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
    const double sqrt_corr2 = std::sqrt(corr2);
    const double floor = hp.delta * sqrt_corr2;
    const double adaptive_scale = lr * sqrt_corr2 / corr1;
    const double sgd_scale = lr / (corr1 * hp.delta);

    StepDiagnostics diag;
    diag.bhat.resize(n);
    std::size_t truncated = 0;
    double lr_min = std::numeric_limits<double>::infinity();
    double lr_max = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double m = beta1_t * st.m[i] + (1.0 - beta1_t) * g[i];
        const double corrected = m / corr1;
        const double s = (t == 1) ? corrected : corrected - st.prev_corrected[i];
        double b = hp.beta2 * st.b[i] + (1.0 - hp.beta2) * s * s;
        if (st.amsgrad) b = std::max(b, st.b[i]);
        const double root_b = std::sqrt(b);

        double step;
        double eff;
        if (root_b < floor) {
            ++truncated;
            eff = sgd_scale;
            step = sgd_scale * m;
        } else {
            eff = adaptive_scale / root_b;
            step = adaptive_scale * m / root_b;
        }
        if (!std::isfinite(step) || !std::isfinite(b))
            throw NumericError("agd: non-finite update at coordinate " + std::to_string(i),
                               static_cast<std::ptrdiff_t>(i));

        w[i] -= step;
        st.m[i] = m;
        st.b[i] = b;
        st.prev_corrected[i] = corrected;
        diag.bhat[i] = std::sqrt(b / corr2);
        lr_min = std::min(lr_min, eff);
        lr_max = std::max(lr_max, eff);
    }
    st.t = t;
    st.beta1_prod = prod;
    check_finite(w, "agd params");
    diag.truncation_fraction = static_cast<double>(truncated) / static_cast<double>(n);
    finish_diag(diag, before, w, lr_min, lr_max);
    return diag;
}

StepDiagnostics adam_like_in_place(AdamLikeState& st, std::span<double> w,
                                   std::span<const double> g, std::uint64_t t,
                                   const HyperParams& hp) {
    check_inputs(st.m.size(), w, g);
    check_step_index(st.t, t);
    const std::size_t n = w.size();
    const std::vector<double> before(w.begin(), w.end());
    const bool belief = st.variant == AdamLikeState::Variant::AdaBelief;
    const bool coupled = st.variant == AdamLikeState::Variant::Adam;

    const double lr = schedule_lr(hp.lr(), t);
    const double beta1_t = schedule_beta1(hp, t);
    const double eps = hp.delta;
    if (!coupled) apply_decoupled_decay(w, lr, hp.weight_decay);

    const double prod = st.beta1_prod * beta1_t;
    const double corr1 = beta1_correction(hp, t, prod);
    const double sqrt_corr2 = std::sqrt(1.0 - std::pow(hp.beta2, static_cast<double>(t)));

    StepDiagnostics diag;
    diag.bhat.resize(n);
    std::size_t truncated = 0;
    double lr_min = std::numeric_limits<double>::infinity();
    double lr_max = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double grad = coupled ? g[i] + hp.weight_decay * before[i] : g[i];
        const double m = beta1_t * st.m[i] + (1.0 - beta1_t) * grad;
        double v;
        if (belief) {
            const double innovation = grad - m;
            v = hp.beta2 * st.v[i] + (1.0 - hp.beta2) * innovation * innovation;
            if (hp.adabelief_eps_in_ema) v += eps;
        } else {
            v = hp.beta2 * st.v[i] + (1.0 - hp.beta2) * grad * grad;
        }
        const double vhat_root = std::sqrt(v) / sqrt_corr2;
        const double denom = vhat_root + eps;
        const double step = lr * (m / corr1) / denom;
        if (!std::isfinite(step) || !std::isfinite(v))
            throw NumericError("adam: non-finite update at coordinate " + std::to_string(i),
                               static_cast<std::ptrdiff_t>(i));
        w[i] -= step;
        st.m[i] = m;
        st.v[i] = v;
        diag.bhat[i] = vhat_root;
        if (vhat_root < eps) ++truncated;
        const double eff = lr / (corr1 * denom);
        lr_min = std::min(lr_min, eff);
        lr_max = std::max(lr_max, eff);
    }
    st.t = t;
    st.beta1_prod = prod;
    check_finite(w, "adam params");
    diag.truncation_fraction = static_cast<double>(truncated) / static_cast<double>(n);
    finish_diag(diag, before, w, lr_min, lr_max);
    return diag;
}

StepDiagnostics sgd_in_place(SgdState& st, std::span<double> w, std::span<const double> g,
                             std::uint64_t t, const HyperParams& hp) {
    check_inputs(st.buffer.size(), w, g);
    check_step_index(st.t, t);
    const std::vector<double> before(w.begin(), w.end());
    const double lr = schedule_lr(hp.lr(), t);
    const double mu = hp.beta1;
    apply_decoupled_decay(w, lr, hp.weight_decay);
    for (std::size_t i = 0; i < w.size(); ++i) {
        st.buffer[i] = mu * st.buffer[i] + g[i];
        w[i] -= lr * st.buffer[i];
    }
    check_finite(w, "sgd params");
    st.t = t;
    StepDiagnostics diag;
    // B_t is the identity: every coordinate is on the SGD branch.
    diag.truncation_fraction = 1.0;
    diag.bhat.assign(w.size(), 0.0);
    finish_diag(diag, before, w, lr, lr);
    return diag;
}

}  // namespace

std::string_view optimizer_name(OptimizerKind kind) {
    switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::AdamW: return "adamw";
    case OptimizerKind::AdaBelief: return "adabelief";
    case OptimizerKind::Agd: return "agd";
    case OptimizerKind::AgdAmsgrad: return "agd_amsgrad";
    }
    return "unknown";
}

OptimizerKind parse_optimizer(std::string_view name) {
    for (auto k : {OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::AdamW,
                   OptimizerKind::AdaBelief, OptimizerKind::Agd, OptimizerKind::AgdAmsgrad}) {
        if (optimizer_name(k) == name) return k;
    }
    throw ConfigError("optimizer", "unknown optimizer '" + std::string(name) + "'");
}

OptimizerState make_state(OptimizerKind kind, std::size_t n) {
    switch (kind) {
    case OptimizerKind::Sgd:
        return SgdState{std::vector<double>(n, 0.0), 0};
    case OptimizerKind::Adam:
    case OptimizerKind::AdamW:
    case OptimizerKind::AdaBelief: {
        AdamLikeState st;
        st.m.assign(n, 0.0);
        st.v.assign(n, 0.0);
        st.variant = kind == OptimizerKind::Adam    ? AdamLikeState::Variant::Adam
                     : kind == OptimizerKind::AdamW ? AdamLikeState::Variant::AdamW
                                                    : AdamLikeState::Variant::AdaBelief;
        return st;
    }
    case OptimizerKind::Agd:
    case OptimizerKind::AgdAmsgrad: {
        AgdState st;
        st.m.assign(n, 0.0);
        st.b.assign(n, 0.0);
        st.prev_corrected.assign(n, 0.0);
        st.amsgrad = kind == OptimizerKind::AgdAmsgrad;
        return st;
    }
    }
    throw ConfigError("optimizer", "unhandled optimizer kind");
}

OptimizerKind state_kind(const OptimizerState& state) {
    struct Visitor {
        OptimizerKind operator()(const SgdState&) const { return OptimizerKind::Sgd; }
        OptimizerKind operator()(const AgdState& s) const {
            return s.amsgrad ? OptimizerKind::AgdAmsgrad : OptimizerKind::Agd;
        }
        OptimizerKind operator()(const AdamLikeState& s) const {
            switch (s.variant) {
            case AdamLikeState::Variant::Adam: return OptimizerKind::Adam;
            case AdamLikeState::Variant::AdamW: return OptimizerKind::AdamW;
            case AdamLikeState::Variant::AdaBelief: return OptimizerKind::AdaBelief;
            }
            return OptimizerKind::Adam;
        }
    };
    return std::visit(Visitor{}, state);
}

std::uint64_t state_step(const OptimizerState& state) {
    return std::visit([](const auto& s) { return s.t; }, state);
}

double beta1_correction(const HyperParams& hp, std::uint64_t t, double beta1_prod) {
    const double corr = hp.beta1_schedule == Beta1ScheduleKind::Constant
                            ? 1.0 - std::pow(hp.beta1, static_cast<double>(t))
                            : 1.0 - beta1_prod;
    if (!(corr > 0.0)) throw NumericError("bias correction 1 - beta1^t is not positive");
    return corr;
}

std::vector<double> agd_compute_s(std::span<const double> m_t,
                                  std::span<const double> prev_corrected, std::uint64_t t,
                                  double beta1_t) {
    if (t == 0) throw InvalidStepError("agd_compute_s: step index must be >= 1");
    if (!(beta1_t < 1.0)) throw NumericError("agd_compute_s: beta1 must be < 1");
    const double corr = 1.0 - std::pow(beta1_t, static_cast<double>(t));
    std::vector<double> s(m_t.size());
    if (t > 1) check_same_length(m_t.size(), prev_corrected.size(), "agd_compute_s");
    for (std::size_t i = 0; i < m_t.size(); ++i) {
        const double corrected = m_t[i] / corr;
        s[i] = (t == 1) ? corrected : corrected - prev_corrected[i];
    }
    return s;
}

double truncation_fraction_from_bhat(std::span<const double> bhat, double delta) {
    if (bhat.empty()) return 0.0;
    std::size_t k = 0;
    for (double v : bhat)
        if (v < delta) ++k;
    return static_cast<double>(k) / static_cast<double>(bhat.size());
}

StepDiagnostics step_in_place(OptimizerState& state, std::span<double> w,
                              std::span<const double> g, std::uint64_t t, const HyperParams& hp) {
    validate(hp);
    struct Visitor {
        std::span<double> w;
        std::span<const double> g;
        std::uint64_t t;
        const HyperParams& hp;
        StepDiagnostics operator()(SgdState& s) const { return sgd_in_place(s, w, g, t, hp); }
        StepDiagnostics operator()(AdamLikeState& s) const {
            return adam_like_in_place(s, w, g, t, hp);
        }
        StepDiagnostics operator()(AgdState& s) const { return agd_in_place(s, w, g, t, hp); }
    };
    return std::visit(Visitor{w, g, t, hp}, state);
}

StepResult optimizer_step(const OptimizerState& state, const ParamVector& w, const GradVector& g,
                          std::uint64_t t, const HyperParams& hp) {
    StepResult out{state, w, {}};
    out.diag = step_in_place(out.state, out.params, g, t, hp);
    return out;
}

Stepped<AgdState> agd_step(const AgdState& state, const ParamVector& w, const GradVector& g,
                           std::uint64_t t, const HyperParams& hp) {
    validate(hp);
    Stepped<AgdState> out{state, w, {}};
    out.diag = agd_in_place(out.state, out.params, g, t, hp);
    return out;
}

Stepped<AdamLikeState> adam_step(const AdamLikeState& state, const ParamVector& w,
                                 const GradVector& g, std::uint64_t t, const HyperParams& hp) {
    validate(hp);
    Stepped<AdamLikeState> out{state, w, {}};
    if (out.state.variant == AdamLikeState::Variant::AdaBelief)
        throw ConfigError("optimizer", "adam_step called with an AdaBelief state");
    out.diag = adam_like_in_place(out.state, out.params, g, t, hp);
    return out;
}

Stepped<AdamLikeState> adabelief_step(const AdamLikeState& state, const ParamVector& w,
                                      const GradVector& g, std::uint64_t t,
                                      const HyperParams& hp) {
    validate(hp);
    Stepped<AdamLikeState> out{state, w, {}};
    out.state.variant = AdamLikeState::Variant::AdaBelief;
    out.diag = adam_like_in_place(out.state, out.params, g, t, hp);
    return out;
}

Stepped<SgdState> sgd_momentum_step(const SgdState& state, const ParamVector& w,
                                    const GradVector& g, std::uint64_t t, const HyperParams& hp) {
    validate(hp);
    Stepped<SgdState> out{state, w, {}};
    out.diag = sgd_in_place(out.state, out.params, g, t, hp);
    return out;
}

}  // namespace agd
