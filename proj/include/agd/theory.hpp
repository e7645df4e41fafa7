#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "agd/core.hpp"
#include "agd/optim.hpp"
#include "agd/problem.hpp"

namespace agd::theory {

// Var[m_t / (1 - beta1^t)] / Var[g] for uncorrelated stationary gradients.
double analytic_variance_ratio(double beta1, std::uint64_t t);

struct VarianceEstimate {
    double beta1 = 0.0;
    std::uint64_t t = 0;
    double empirical = 0.0;
    double analytic = 0.0;
    std::uint64_t samples = 0;
    double relative_error() const { return std::abs(empirical - analytic) / analytic; }
};

/// Monte-Carlo estimate of the variance ratio from `samples` independent
/// replicas of a unit-variance Gaussian gradient stream. Replicas are split
/// into fixed-size chunks keyed by (seed, chunk) and reduced in chunk order
/// with compensated sums, so the result does not depend on thread count.
VarianceEstimate variance_ratio_mc(double beta1, std::uint64_t t, std::uint64_t samples,
                                   std::uint64_t seed);

// Same estimator for a grid, sharing one set of gradient draws per replica.
std::vector<VarianceEstimate> variance_ratio_mc_grid(const std::vector<double>& beta1s,
                                                     const std::vector<std::uint64_t>& ts,
                                                     std::uint64_t samples, std::uint64_t seed);

/// Effective step sizes alpha_t * sqrt(1 - beta2^t) / (1 - beta1_t^t) with
/// alpha_t = alpha / sqrt(t) and beta1_t from hp.beta1_schedule, for t = 1..T.
std::vector<double> alpha_hat_series(double alpha, const HyperParams& hp, std::uint64_t T);

/// Online convex problem with losses f_t(w) = 0.5 ||w - c_t||^2 over a box.
struct RegretExperiment {
    std::size_t dim = 2;
    std::uint64_t horizon = 0;
    std::vector<double> centers;  // horizon x dim, row-major
    std::vector<double> box_lo;
    std::vector<double> box_hi;
    ParamVector w_star;  // offline minimizer of the summed losses
    ParamVector start;

    std::span<const double> center(std::uint64_t t) const {  // t is 1-based
        return {centers.data() + (t - 1) * dim, dim};
    }
};

// Centers uniform in [-1, 1]^dim; the box contains all centers with margin 1;
// w_star is the center mean; the start is the box's upper corner.
RegretExperiment make_regret_experiment(std::size_t dim, std::uint64_t horizon, std::uint64_t seed);

// Every loss equal to f(w) = 0.5 ||w - c||^2 and the start at c.
RegretExperiment make_constant_regret_experiment(const ParamVector& c, std::uint64_t horizon);

// Exposes a regret experiment to the generic experiment loop; iterates are
// projected onto the box after every step.
class RegretProblem final : public Problem {
public:
    explicit RegretProblem(RegretExperiment exp) : exp_(std::move(exp)) {}
    std::string name() const override { return "regret"; }
    std::size_t dim() const override { return exp_.dim; }
    ParamVector initial_params() const override { return exp_.start; }
    models::LossGrad evaluate(std::span<const double> w, std::uint64_t t) const override;
    void project(std::span<double> w) const override;
    const RegretExperiment& experiment() const { return exp_; }

private:
    RegretExperiment exp_;
};

void project_box(std::span<double> w, std::span<const double> lo, std::span<const double> hi);

struct RegretResult {
    std::vector<double> regret;  // regret[T-1] = sum_{t<=T} f_t(w_t) - f_t(w*)
    double slope = 0.0;          // log-log slope over the final decade
};

// Theory-mode hyperparameters for the regret run: alpha_t = alpha/sqrt(t),
// beta1_t = beta1/t.
HyperParams regret_hyperparams(double alpha = 0.5);

/// Runs `kind` (AGD with the AMSGrad condition in the theory setting) on the
/// stream, projecting every iterate onto the box.
RegretResult online_regret(const RegretExperiment& exp, OptimizerKind kind, const HyperParams& hp);

// Least-squares slope of log(max(r, 1)) against log T over T in [horizon/10, horizon].
double final_decade_slope(const std::vector<double>& regret);

/// max_t sum_i v_{t,i} / (n (2G + delta) / (1 - beta1)^2) where
/// v_t = max(sqrt(b_t), delta sqrt(1 - beta2^t)) along an AGD run on `stream`.
double second_moment_bound_check(const std::vector<GradVector>& stream, const HyperParams& hp, double G,
                          bool amsgrad = false);

// Uniform entries in [-G, G]; half the streams use random signs of magnitude G.
std::vector<GradVector> bounded_gradient_stream(std::size_t n, std::size_t steps, double G,
                                                std::uint64_t seed);

enum class ClaimStatus { Pass, Fail, Inconclusive };
std::string to_string(ClaimStatus s);

struct ClaimReport {
    std::string claim;
    nlohmann::ordered_json parameters;
    double observed = 0.0;
    double bound = 0.0;
    ClaimStatus status = ClaimStatus::Fail;
    nlohmann::ordered_json to_json() const;
};

struct VerifyOptions {
    std::uint64_t mc_samples = 1000000;
    std::uint64_t seed = 2024;
    // beta2 / delta used by the step-size, second-moment and AMSGrad checks.
    HyperParams hp;
    double variance_tol = 0.02;
};

// Variance check verdict: inconclusive when 4 standard errors of the sample
// variance exceed the tolerance.
ClaimStatus variance_verdict(double relative_error, std::uint64_t samples, double tol);

/// Runs the full suite: variance identity, variance ratio < 1, effective
/// step-size monotonicity, second-moment bound, AMSGrad monotonicity, and
/// regret order. Throws ConfigError on invalid options before running anything.
std::vector<ClaimReport> run_verify(const VerifyOptions& opts);

}  // namespace agd::theory
