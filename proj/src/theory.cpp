#include "agd/theory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "agd/rng.hpp"

namespace agd::theory {

namespace {

// Neumaier compensated sum.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

struct Moments {
    CompensatedSum s1;
    CompensatedSum s2;
};

constexpr std::uint64_t kChunk = 1 << 14;

// 1 - b^t without cancellation for b close to 1.
double one_minus_pow(double b, double t) {
    if (b == 0.0) return 1.0;
    return -std::expm1(t * std::log(b));
}

}  // namespace

double analytic_variance_ratio(double beta1, std::uint64_t t) {
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "must lie in (0, 1)");
    if (t == 0) throw InvalidStepError("variance ratio: t must be >= 1");
    const double bt = std::pow(beta1, static_cast<double>(t));
    return (1.0 + bt) * (1.0 - beta1) / ((1.0 - bt) * (1.0 + beta1));
}

std::vector<VarianceEstimate> variance_ratio_mc_grid(const std::vector<double>& beta1s,
                                                     const std::vector<std::uint64_t>& ts,
                                                     std::uint64_t samples, std::uint64_t seed) {
    for (double b : beta1s)
        if (!(b > 0.0 && b < 1.0)) throw ConfigError("beta1", "must lie in (0, 1)");
    if (samples < 2) throw ConfigError("samples", "need at least 2 replicas");
    if (ts.empty() || beta1s.empty()) return {};
    std::vector<std::uint64_t> sorted_ts = ts;
    std::sort(sorted_ts.begin(), sorted_ts.end());
    sorted_ts.erase(std::unique(sorted_ts.begin(), sorted_ts.end()), sorted_ts.end());
    if (sorted_ts.front() == 0) throw InvalidStepError("variance ratio: t must be >= 1");
    const std::uint64_t t_max = sorted_ts.back();
    const std::size_t nb = beta1s.size();
    const std::size_t nt = sorted_ts.size();

    std::vector<double> corr(nb * nt);
    for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t k = 0; k < nt; ++k)
            corr[b * nt + k] = 1.0 - std::pow(beta1s[b], static_cast<double>(sorted_ts[k]));

    const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
    std::vector<std::vector<Moments>> partial(chunks, std::vector<Moments>(nb * nt));
    std::atomic<std::uint64_t> next{0};

    auto worker = [&] {
        std::vector<double> m(nb);
        for (std::uint64_t c = next++; c < chunks; c = next++) {
            Rng rng(seed, c);
            auto& acc = partial[c];
            const std::uint64_t begin = c * kChunk;
            const std::uint64_t end = std::min(samples, begin + kChunk);
            for (std::uint64_t r = begin; r < end; ++r) {
                std::fill(m.begin(), m.end(), 0.0);
                std::size_t k = 0;
                for (std::uint64_t t = 1; t <= t_max; ++t) {
                    const double g = rng.normal();
                    for (std::size_t b = 0; b < nb; ++b) m[b] = beta1s[b] * m[b] + (1.0 - beta1s[b]) * g;
                    if (t == sorted_ts[k]) {
                        for (std::size_t b = 0; b < nb; ++b) {
                            const double x = m[b] / corr[b * nt + k];
                            acc[b * nt + k].s1.add(x);
                            acc[b * nt + k].s2.add(x * x);
                        }
                        ++k;
                    }
                }
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                            static_cast<unsigned>(chunks)));
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    std::vector<VarianceEstimate> out;
    const double n = static_cast<double>(samples);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t k = 0; k < nt; ++k) {
            CompensatedSum s1, s2;
            for (const auto& chunk : partial) {
                s1.add(chunk[b * nt + k].s1.value());
                s2.add(chunk[b * nt + k].s2.value());
            }
            const double mean = s1.value() / n;
            const double var = (s2.value() - n * mean * mean) / (n - 1.0);
            out.push_back({beta1s[b], sorted_ts[k], var,
                           analytic_variance_ratio(beta1s[b], sorted_ts[k]), samples});
        }
    }
    return out;
}

VarianceEstimate variance_ratio_mc(double beta1, std::uint64_t t, std::uint64_t samples,
                                   std::uint64_t seed) {
    return variance_ratio_mc_grid({beta1}, {t}, samples, seed).front();
}

std::vector<double> alpha_hat_series(double alpha, const HyperParams& hp, std::uint64_t T) {
    if (!(alpha > 0.0)) throw ConfigError("alpha", "must be positive");
    if (!(hp.beta2 >= 0.0 && hp.beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
    if (!(hp.beta1 >= 0.0 && hp.beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
    std::vector<double> out;
    out.reserve(T);
    for (std::uint64_t t = 1; t <= T; ++t) {
        const double td = static_cast<double>(t);
        const double lr = alpha / std::sqrt(td);
        const double b1 = schedule_beta1(hp, t);
        out.push_back(lr * std::sqrt(one_minus_pow(hp.beta2, td)) / one_minus_pow(b1, td));
    }
    return out;
}

RegretExperiment make_regret_experiment(std::size_t dim, std::uint64_t horizon, std::uint64_t seed) {
    if (dim == 0 || horizon == 0) throw ConfigError("regret", "dim and horizon must be positive");
    RegretExperiment e;
    e.dim = dim;
    e.horizon = horizon;
    e.centers.resize(dim * horizon);
    Rng rng(seed, 0x72656772);
    for (double& c : e.centers) c = rng.uniform(-1.0, 1.0);
    e.box_lo.assign(dim, 0.0);
    e.box_hi.assign(dim, 0.0);
    e.w_star.assign(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        double lo = e.centers[i];
        double hi = e.centers[i];
        CompensatedSum mean;
        for (std::uint64_t t = 0; t < horizon; ++t) {
            const double c = e.centers[t * dim + i];
            lo = std::min(lo, c);
            hi = std::max(hi, c);
            mean.add(c);
        }
        e.box_lo[i] = lo - 1.0;
        e.box_hi[i] = hi + 1.0;
        e.w_star[i] = mean.value() / static_cast<double>(horizon);
    }
    e.start = e.box_hi;
    return e;
}

RegretExperiment make_constant_regret_experiment(const ParamVector& c, std::uint64_t horizon) {
    RegretExperiment e;
    e.dim = c.size();
    e.horizon = horizon;
    e.centers.reserve(c.size() * horizon);
    for (std::uint64_t t = 0; t < horizon; ++t) e.centers.insert(e.centers.end(), c.begin(), c.end());
    for (double x : c) {
        e.box_lo.push_back(x - 1.0);
        e.box_hi.push_back(x + 1.0);
    }
    e.w_star = c;
    e.start = c;
    return e;
}

void project_box(std::span<double> w, std::span<const double> lo, std::span<const double> hi) {
    check_same_length(w.size(), lo.size(), "box");
    check_same_length(w.size(), hi.size(), "box");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::clamp(w[i], lo[i], hi[i]);
}

models::LossGrad RegretProblem::evaluate(std::span<const double> w, std::uint64_t t) const {
    if (t == 0 || t > exp_.horizon) throw InvalidStepError("regret problem: step outside the horizon");
    const auto c = exp_.center(t);
    models::LossGrad r;
    r.grad.resize(exp_.dim);
    for (std::size_t i = 0; i < exp_.dim; ++i) {
        r.grad[i] = w[i] - c[i];
        r.loss += 0.5 * r.grad[i] * r.grad[i];
    }
    return r;
}

void RegretProblem::project(std::span<double> w) const { project_box(w, exp_.box_lo, exp_.box_hi); }

HyperParams regret_hyperparams(double alpha) {
    HyperParams hp;
    hp.alpha = alpha;
    hp.lr_schedule = LrScheduleKind::InverseSqrt;
    hp.beta1 = 0.9;
    hp.beta1_schedule = Beta1ScheduleKind::OverT;
    hp.beta2 = 0.999;
    hp.delta = 1e-2;
    return hp;
}

RegretResult online_regret(const RegretExperiment& exp, OptimizerKind kind, const HyperParams& hp) {
    validate(hp);
    for (std::size_t i = 0; i < exp.dim; ++i)
        if (!(exp.w_star[i] >= exp.box_lo[i] && exp.w_star[i] <= exp.box_hi[i]))
            throw ConfigError("regret.w_star", "offline minimizer lies outside the box");
    ParamVector w = exp.start;
    project_box(w, exp.box_lo, exp.box_hi);
    OptimizerState state = make_state(kind, exp.dim);
    RegretResult r;
    r.regret.reserve(exp.horizon);
    std::vector<double> g(exp.dim);
    double cum = 0.0;
    for (std::uint64_t t = 1; t <= exp.horizon; ++t) {
        const auto c = exp.center(t);
        double loss = 0.0;
        double best = 0.0;
        for (std::size_t i = 0; i < exp.dim; ++i) {
            g[i] = w[i] - c[i];
            loss += 0.5 * g[i] * g[i];
            const double d = exp.w_star[i] - c[i];
            best += 0.5 * d * d;
        }
        cum += loss - best;
        r.regret.push_back(cum);
        step_in_place(state, w, g, t, hp);
        project_box(w, exp.box_lo, exp.box_hi);
    }
    r.slope = final_decade_slope(r.regret);
    return r;
}

double final_decade_slope(const std::vector<double>& regret) {
    const std::size_t T = regret.size();
    if (T < 10) return 0.0;
    const std::size_t first = std::max<std::size_t>(1, T / 10);
    // 64 log-spaced sample points keep the fit from being dominated by the
    // densely populated upper end.
    constexpr int kPoints = 64;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    const double l0 = std::log(static_cast<double>(first));
    const double l1 = std::log(static_cast<double>(T));
    for (int k = 0; k < kPoints; ++k) {
        const double lt = l0 + (l1 - l0) * k / (kPoints - 1);
        auto idx = static_cast<std::size_t>(std::llround(std::exp(lt)));
        idx = std::clamp<std::size_t>(idx, first, T);
        const double x = std::log(static_cast<double>(idx));
        const double y = std::log(std::max(regret[idx - 1], 1.0));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    const double n = count;
    const double den = n * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

double second_moment_bound_check(const std::vector<GradVector>& stream, const HyperParams& hp, double G,
                          bool amsgrad) {
    validate(hp);
    if (stream.empty()) return 0.0;
    const std::size_t n = stream.front().size();
    const double bound =
        static_cast<double>(n) * (2.0 * G + hp.delta) / ((1.0 - hp.beta1) * (1.0 - hp.beta1));
    OptimizerState state = make_state(amsgrad ? OptimizerKind::AgdAmsgrad : OptimizerKind::Agd, n);
    ParamVector w(n, 0.0);
    double worst = 0.0;
    for (std::uint64_t t = 1; t <= stream.size(); ++t) {
        step_in_place(state, w, stream[t - 1], t, hp);
        const auto& b = std::get<AgdState>(state).b;
        const double floor = hp.delta * std::sqrt(one_minus_pow(hp.beta2, static_cast<double>(t)));
        double sum = 0.0;
        for (double bi : b) sum += std::max(std::sqrt(bi), floor);
        worst = std::max(worst, sum / bound);
    }
    return worst;
}

std::vector<GradVector> bounded_gradient_stream(std::size_t n, std::size_t steps, double G,
                                                std::uint64_t seed) {
    Rng rng(seed, 0x6c336d33);
    const bool signs = (seed & 1) != 0;
    std::vector<GradVector> out(steps, GradVector(n));
    for (auto& g : out)
        for (double& x : g) x = signs ? (rng.uniform() < 0.5 ? -G : G) : rng.uniform(-G, G);
    return out;
}

std::string to_string(ClaimStatus s) {
    switch (s) {
    case ClaimStatus::Pass: return "pass";
    case ClaimStatus::Fail: return "fail";
    case ClaimStatus::Inconclusive: return "inconclusive";
    }
    return "fail";
}

nlohmann::ordered_json ClaimReport::to_json() const {
    nlohmann::ordered_json j;
    j["claim"] = claim;
    j["parameters"] = parameters;
    j["observed"] = observed;
    j["bound"] = bound;
    j["pass"] = status == ClaimStatus::Pass;
    j["status"] = to_string(status);
    return j;
}

ClaimStatus variance_verdict(double relative_error, std::uint64_t samples, double tol) {
    // Relative standard error of a Gaussian sample variance.
    const double se = std::sqrt(2.0 / (static_cast<double>(samples) - 1.0));
    if (4.0 * se > tol) return ClaimStatus::Inconclusive;
    return relative_error < tol ? ClaimStatus::Pass : ClaimStatus::Fail;
}

std::vector<ClaimReport> run_verify(const VerifyOptions& opts) {
    validate(opts.hp);
    if (opts.mc_samples < 2) throw ConfigError("mc_samples", "need at least 2 replicas");
    std::vector<ClaimReport> reports;
    auto pass_if = [](bool ok) { return ok ? ClaimStatus::Pass : ClaimStatus::Fail; };

    // Variance identity.
    const std::vector<double> betas = {0.5, 0.9, 0.99};
    const std::vector<std::uint64_t> ts = {2, 10, 100};
    for (const auto& e : variance_ratio_mc_grid(betas, ts, opts.mc_samples, opts.seed)) {
        ClaimReport r;
        r.claim = "variance_identity";
        r.parameters = {{"beta1", e.beta1}, {"t", e.t}, {"samples", e.samples},
                        {"analytic", e.analytic}, {"empirical", e.empirical}};
        r.observed = e.relative_error();
        r.bound = opts.variance_tol;
        r.status = variance_verdict(r.observed, e.samples, opts.variance_tol);
        reports.push_back(std::move(r));
    }
    {
        double worst = 0.0;
        for (double b : {0.1, 0.5, 0.9, 0.99, 0.999})
            for (std::uint64_t t = 2; t <= 1000; ++t) worst = std::max(worst, analytic_variance_ratio(b, t));
        reports.push_back({"variance_ratio_below_one",
                           {{"beta1", {0.1, 0.5, 0.9, 0.99, 0.999}}, {"t_range", {2, 1000}}},
                           worst, 1.0, pass_if(worst < 1.0)});
    }

    // Effective step size over 4 beta1 schedules x 5 beta2 values.
    {
        double worst = 0.0;
        struct Sched {
            double beta1;
            Beta1ScheduleKind kind;
        };
        const Sched scheds[] = {{0.9, Beta1ScheduleKind::Constant},
                                {0.5, Beta1ScheduleKind::Constant},
                                {0.9, Beta1ScheduleKind::OverSqrtT},
                                {0.9, Beta1ScheduleKind::OverT}};
        for (const auto& s : scheds) {
            for (double b2 : {0.0, 0.9, 0.99, 0.999, 0.9999}) {
                HyperParams hp;
                hp.beta1 = s.beta1;
                hp.beta1_schedule = s.kind;
                hp.beta2 = b2;
                const auto a = alpha_hat_series(1.0, hp, 100000);
                for (std::size_t i = 1; i < a.size(); ++i) worst = std::max(worst, a[i] / a[i - 1]);
            }
        }
        reports.push_back({"alpha_hat_decreasing",
                           {{"combinations", 20}, {"T", 100000}},
                           worst, 1.0, pass_if(worst < 1.0)});
    }

    // Second-moment norm bound over 1000 bounded streams.
    {
        const double G = 5.0;
        double worst = 0.0;
        for (std::uint64_t k = 0; k < 1000; ++k)
            worst = std::max(worst, second_moment_bound_check(bounded_gradient_stream(4, 500, G, opts.seed + k),
                                                       opts.hp, G));
        reports.push_back({"v_norm_bound",
                           {{"runs", 1000}, {"n", 4}, {"G", G}, {"steps", 500},
                            {"beta1", opts.hp.beta1}, {"beta2", opts.hp.beta2}, {"delta", opts.hp.delta}},
                           worst, 1.0, pass_if(worst < 1.0)});
    }

    // AMSGrad condition keeps b non-decreasing.
    {
        const std::size_t n = 8;
        Rng rng(opts.seed, 0x616d73);
        OptimizerState state = make_state(OptimizerKind::AgdAmsgrad, n);
        ParamVector w(n, 0.0);
        GradVector g(n);
        std::uint64_t violations = 0;
        std::vector<double> prev(n, 0.0);
        for (std::uint64_t t = 1; t <= 10000; ++t) {
            for (double& x : g) x = rng.normal() * (1.0 + 4.0 * rng.uniform());
            step_in_place(state, w, g, t, opts.hp);
            const auto& b = std::get<AgdState>(state).b;
            for (std::size_t i = 0; i < n; ++i)
                if (b[i] < prev[i]) ++violations;
            prev = b;
        }
        reports.push_back({"amsgrad_b_nondecreasing", {{"steps", 10000}, {"n", n}},
                           static_cast<double>(violations), 0.0, pass_if(violations == 0)});
    }

    // Regret order in the convex online setting.
    {
        const auto exp = make_regret_experiment(2, 10000, opts.seed);
        const auto hp = regret_hyperparams();
        const auto res = online_regret(exp, OptimizerKind::AgdAmsgrad, hp);
        nlohmann::ordered_json params = {{"dim", 2}, {"T", 10000}, {"alpha", hp.alpha},
                                         {"beta1", "0.9/t"}, {"beta2", hp.beta2}, {"delta", hp.delta}};
        reports.push_back({"regret_loglog_slope", params, res.slope, 0.6, pass_if(res.slope <= 0.6)});
        const double final_regret = res.regret.back();
        reports.push_back({"regret_nonnegative", params, final_regret, 0.0,
                           pass_if(final_regret >= 0.0)});
    }
    return reports;
}

}  // namespace agd::theory
