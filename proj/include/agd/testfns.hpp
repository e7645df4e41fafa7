#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "agd/core.hpp"

namespace agd::testfns {

struct FnEval {
    double value = 0.0;
    std::vector<double> grad;
    std::vector<double> hess_diag;
};

FnEval beale(std::span<const double> p);
FnEval rosenbrock(std::span<const double> p);
FnEval quad_skew(std::span<const double> p);

// Full row-major Hessians of the 2-D functions.
std::vector<double> beale_hessian(std::span<const double> p);
std::vector<double> rosenbrock_hessian(std::span<const double> p);
std::vector<double> quad_skew_hessian(std::span<const double> p);

struct TestFunction {
    std::string name;
    std::size_t dim = 2;
    std::function<FnEval(std::span<const double>)> eval;
    std::function<std::vector<double>(std::span<const double>)> hessian;
    ParamVector optimum;
    double fmin = 0.0;
    ParamVector default_start;
};

TestFunction make_beale();
TestFunction make_rosenbrock();
TestFunction make_quad_skew();

/// Looks up "beale", "rosenbrock" or "quad_skew"; throws ConfigError otherwise.
TestFunction by_name(const std::string& name);
std::vector<std::string> names();

struct PairResidual {
    std::size_t index = 0;  // pair (index-1, index)
    double relative_residual = 0.0;
};

struct GradDiffReport {
    std::vector<PairResidual> pairs;
    std::size_t skipped_pairs = 0;
    double max_relative_residual = 0.0;
};

// Compares grad f(w_t) - grad f(w_{t-1}) with H(w_t) (w_t - w_{t-1}) for
// each consecutive pair. Residuals are relative to |H dw|. Pairs with a
// zero-length step are skipped and counted.
GradDiffReport hessian_diag_vs_gradient_difference(const TestFunction& fn,
                                                   std::span<const ParamVector> points);

}  // namespace agd::testfns
