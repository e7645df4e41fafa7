#include "agd/testfns.hpp"

#include <algorithm>
#include <cmath>

namespace agd::testfns {

namespace {

void check_dim(std::span<const double> p, const char* name) {
    if (p.size() != 2) throw ShapeError(std::string(name) + ": expects a 2-vector");
}

// Beale residuals r_k = c_k - x + x*y^k and their partials.
struct BealeTerms {
    double r[3];
    double dx[3];
    double dy[3];
    double dxy[3];
    double dyy[3];
};

BealeTerms beale_terms(double x, double y) {
    const double y2 = y * y;
    const double y3 = y2 * y;
    return BealeTerms{
        {1.5 - x + x * y, 2.25 - x + x * y2, 2.625 - x + x * y3},
        {y - 1.0, y2 - 1.0, y3 - 1.0},
        {x, 2.0 * x * y, 3.0 * x * y2},
        {1.0, 2.0 * y, 3.0 * y2},
        {0.0, 2.0 * x, 6.0 * x * y},
    };
}

}  // namespace

FnEval beale(std::span<const double> p) {
    check_dim(p, "beale");
    const BealeTerms t = beale_terms(p[0], p[1]);
    FnEval e;
    e.grad.assign(2, 0.0);
    e.hess_diag.assign(2, 0.0);
    for (int k = 0; k < 3; ++k) {
        e.value += t.r[k] * t.r[k];
        e.grad[0] += 2.0 * t.r[k] * t.dx[k];
        e.grad[1] += 2.0 * t.r[k] * t.dy[k];
        e.hess_diag[0] += 2.0 * t.dx[k] * t.dx[k];
        e.hess_diag[1] += 2.0 * (t.dy[k] * t.dy[k] + t.r[k] * t.dyy[k]);
    }
    return e;
}

std::vector<double> beale_hessian(std::span<const double> p) {
    check_dim(p, "beale");
    const BealeTerms t = beale_terms(p[0], p[1]);
    const FnEval e = beale(p);
    double hxy = 0.0;
    for (int k = 0; k < 3; ++k) hxy += 2.0 * (t.dx[k] * t.dy[k] + t.r[k] * t.dxy[k]);
    return {e.hess_diag[0], hxy, hxy, e.hess_diag[1]};
}

FnEval rosenbrock(std::span<const double> p) {
    check_dim(p, "rosenbrock");
    const double x = p[0];
    const double y = p[1];
    const double a = 1.0 - x;
    const double b = y - x * x;
    FnEval e;
    e.value = a * a + 100.0 * b * b;
    e.grad = {-2.0 * a - 400.0 * x * b, 200.0 * b};
    e.hess_diag = {2.0 - 400.0 * y + 1200.0 * x * x, 200.0};
    return e;
}

std::vector<double> rosenbrock_hessian(std::span<const double> p) {
    const FnEval e = rosenbrock(p);
    const double hxy = -400.0 * p[0];
    return {e.hess_diag[0], hxy, hxy, e.hess_diag[1]};
}

FnEval quad_skew(std::span<const double> p) {
    check_dim(p, "quad_skew");
    const double u = p[0] + p[1];
    const double v = p[0] - p[1];
    FnEval e;
    e.value = u * u + v * v / 10.0;
    e.grad = {2.0 * u + v / 5.0, 2.0 * u - v / 5.0};
    e.hess_diag = {2.2, 2.2};
    return e;
}

std::vector<double> quad_skew_hessian(std::span<const double> p) {
    check_dim(p, "quad_skew");
    return {2.2, 1.8, 1.8, 2.2};
}

TestFunction make_beale() {
    return {"beale", 2, beale, beale_hessian, {3.0, 0.5}, 0.0, {1.0, 1.5}};
}

TestFunction make_rosenbrock() {
    return {"rosenbrock", 2, rosenbrock, rosenbrock_hessian, {1.0, 1.0}, 0.0, {-1.5, 2.0}};
}

TestFunction make_quad_skew() {
    return {"quad_skew", 2, quad_skew, quad_skew_hessian, {0.0, 0.0}, 0.0, {1.0, 1.0}};
}

std::vector<std::string> names() { return {"beale", "rosenbrock", "quad_skew"}; }

TestFunction by_name(const std::string& name) {
    if (name == "beale") return make_beale();
    if (name == "rosenbrock") return make_rosenbrock();
    if (name == "quad_skew") return make_quad_skew();
    throw ConfigError("problem.name", "unknown test function '" + name + "'");
}

GradDiffReport hessian_diag_vs_gradient_difference(const TestFunction& fn,
                                                   std::span<const ParamVector> points) {
    GradDiffReport report;
    for (std::size_t k = 1; k < points.size(); ++k) {
        const ParamVector& prev = points[k - 1];
        const ParamVector& cur = points[k];
        check_same_length(prev.size(), fn.dim, "trajectory point");
        check_same_length(cur.size(), fn.dim, "trajectory point");
        std::vector<double> dw(fn.dim);
        for (std::size_t i = 0; i < fn.dim; ++i) dw[i] = cur[i] - prev[i];
        if (l2_norm(dw) == 0.0) {
            ++report.skipped_pairs;
            continue;
        }
        const auto g_cur = fn.eval(cur).grad;
        const auto g_prev = fn.eval(prev).grad;
        const auto h = fn.hessian(cur);
        std::vector<double> predicted(fn.dim, 0.0);
        std::vector<double> residual(fn.dim, 0.0);
        for (std::size_t i = 0; i < fn.dim; ++i) {
            for (std::size_t j = 0; j < fn.dim; ++j) predicted[i] += h[i * fn.dim + j] * dw[j];
            residual[i] = (g_cur[i] - g_prev[i]) - predicted[i];
        }
        const double scale = l2_norm(predicted);
        const double rel = scale > 0.0 ? l2_norm(residual) / scale : l2_norm(residual);
        report.pairs.push_back({k, rel});
        report.max_relative_residual = std::max(report.max_relative_residual, rel);
    }
    return report;
}

}  // namespace agd::testfns
