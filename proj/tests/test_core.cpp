#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "agd/core.hpp"
#include "agd/optim.hpp"
#include "agd/rng.hpp"
#include "test_util.hpp"

using namespace agd;
using agd::testing::ulp_distance;

namespace {

constexpr OptimizerKind kAll[] = {OptimizerKind::Sgd,       OptimizerKind::Adam,
                                  OptimizerKind::AdamW,     OptimizerKind::AdaBelief,
                                  OptimizerKind::Agd,       OptimizerKind::AgdAmsgrad};

std::vector<std::uint64_t> log_grid(std::uint64_t hi, int per_decade) {
    std::vector<std::uint64_t> ts;
    std::uint64_t last = 0;
    for (int k = 0;; ++k) {
        const auto t = static_cast<std::uint64_t>(std::llround(std::pow(10.0, double(k) / per_decade)));
        if (t > hi) break;
        if (t != last) ts.push_back(t);
        last = t;
    }
    return ts;
}

}  // namespace

TEST_CASE("learning-rate schedules") {
    CHECK(schedule_lr({1.0, LrScheduleKind::InverseSqrt, {}}, 4) == 0.5);
    CHECK(schedule_lr({1e-3, LrScheduleKind::Constant, {}}, 999) == 1e-3);
    const StepSchedule ms{0.1, LrScheduleKind::Milestones, {{30, 0.1}, {60, 0.1}}};
    CHECK(schedule_lr(ms, 45) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(schedule_lr(ms, 29) == 0.1);
    CHECK(schedule_lr(ms, 60) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK_THROWS_AS(schedule_lr(ms, 0), InvalidStepError);
}

TEST_CASE("beta1 schedules") {
    HyperParams hp;
    hp.beta1_schedule = Beta1ScheduleKind::OverSqrtT;
    CHECK(schedule_beta1(hp, 1) == 0.9);
    hp.beta1_schedule = Beta1ScheduleKind::OverT;
    CHECK(schedule_beta1(hp, 9) == doctest::Approx(0.1).epsilon(1e-15));
    hp.beta1_schedule = Beta1ScheduleKind::Constant;
    CHECK(schedule_beta1(hp, 1000000) == 0.9);
    CHECK_THROWS_AS(schedule_beta1(hp, 0), InvalidStepError);
}

TEST_CASE("beta1 schedules are non-increasing on a log grid up to 1e6") {
    const auto ts = log_grid(1000000, 20);
    REQUIRE(ts.size() > 100);
    for (auto kind : {Beta1ScheduleKind::Constant, Beta1ScheduleKind::OverSqrtT, Beta1ScheduleKind::OverT}) {
        for (double b : {0.0, 0.5, 0.9, 0.999}) {
            HyperParams hp;
            hp.beta1 = b;
            hp.beta1_schedule = kind;
            for (std::size_t i = 1; i < ts.size(); ++i)
                REQUIRE(schedule_beta1(hp, ts[i]) <= schedule_beta1(hp, ts[i - 1]));
        }
    }
}

TEST_CASE("hyperparameter validation names the field") {
    auto field_of = [](HyperParams hp) -> std::string {
        try {
            validate(hp);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return "";
    };
    HyperParams hp;
    CHECK(field_of(hp) == "");
    hp.delta = 0.0;
    CHECK(field_of(hp) == "delta");
    hp = {};
    hp.beta2 = 1.0;
    CHECK(field_of(hp) == "beta2");
    hp = {};
    hp.beta1 = -0.1;
    CHECK(field_of(hp) == "beta1");
    hp = {};
    hp.alpha = std::numeric_limits<double>::infinity();
    CHECK(field_of(hp) == "alpha");
    hp = {};
    hp.weight_decay = -1.0;
    CHECK(field_of(hp) == "weight_decay");
}

TEST_CASE("histogram binning") {
    CHECK(BhatHistogram::bin_of(0.0) == 0);
    CHECK(BhatHistogram::bin_of(1e-17) == 0);
    CHECK(BhatHistogram::bin_of(1e-16) == 1);
    CHECK(BhatHistogram::bin_of(0.5) == 16);
    CHECK(BhatHistogram::bin_of(1.0) == 17);
    CHECK(BhatHistogram::bin_of(99.0) == 18);
    CHECK(BhatHistogram::bin_of(100.0) == 19);
    CHECK(BhatHistogram::bin_of(std::numeric_limits<double>::quiet_NaN()) == 0);
    BhatHistogram h;
    for (double v : {0.0, 1e-9, 1e-3, 5.0, 1e5}) h.add(v);
    CHECK(h.total() == 5);
    CHECK(BhatHistogram::lower_edge(1) == 1e-16);
    CHECK(BhatHistogram::lower_edge(17) == 1.0);
}

TEST_CASE("zero gradient on a fresh state leaves parameters unchanged") {
    for (auto kind : kAll) {
        CAPTURE(optimizer_name(kind));
        const ParamVector w{0.3, -1.2, 4.0};
        const auto r = optimizer_step(make_state(kind, 3), w, {0.0, 0.0, 0.0}, 1, HyperParams{});
        CHECK(r.params == w);
        CHECK(state_step(r.state) == 1);
    }
}

TEST_CASE("SGD first step is -alpha * g") {
    HyperParams hp;
    hp.alpha = 0.1;
    hp.beta1 = 0.9;
    const auto r = optimizer_step(make_state(OptimizerKind::Sgd, 1), {0.0}, {1.0}, 1, hp);
    CHECK(r.params[0] == doctest::Approx(-0.1).epsilon(1e-15));
}

TEST_CASE("AGD first update has magnitude exactly alpha") {
    Rng rng(11, 0);
    for (int trial = 0; trial < 200; ++trial) {
        HyperParams hp;
        hp.alpha = rng.uniform(1e-4, 1.0);
        hp.beta1 = rng.uniform(0.0, 0.99);
        hp.beta2 = rng.uniform(0.0, 0.9999);
        hp.delta = std::pow(10.0, rng.uniform(-10.0, -3.0));
        const std::size_t n = 1 + rng.below(6);
        ParamVector w(n);
        GradVector g(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double mag = std::pow(10.0, rng.uniform(-2.0, 3.0));
            g[i] = rng.uniform() < 0.5 ? -mag : mag;
        }
        for (auto kind : {OptimizerKind::Agd, OptimizerKind::AgdAmsgrad}) {
            const auto r = optimizer_step(make_state(kind, n), w, g, 1, hp);
            for (std::size_t i = 0; i < n; ++i) {
                // w starts at 0, so the new parameters are the update itself.
                const double dw = r.params[i];
                CHECK(ulp_distance(std::abs(dw), hp.alpha) <= 4);
                CHECK(std::signbit(dw) != std::signbit(g[i]));
            }
        }
    }
}

TEST_CASE("stepping contract errors") {
    for (auto kind : kAll) {
        CAPTURE(optimizer_name(kind));
        const auto st = make_state(kind, 2);
        CHECK_THROWS_AS(optimizer_step(st, {0.0, 0.0}, {1.0}, 1, HyperParams{}), ShapeError);
        CHECK_THROWS_AS(optimizer_step(st, {0.0, 0.0}, {1.0, 1.0}, 2, HyperParams{}), InvalidStepError);
        CHECK_THROWS_AS(optimizer_step(st, {0.0, 0.0}, {1.0, 1.0}, 0, HyperParams{}), InvalidStepError);
        try {
            optimizer_step(st, {0.0, 0.0}, {1.0, std::nan("")}, 1, HyperParams{});
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(e.coordinate() == 1);
        }
        HyperParams bad;
        bad.delta = 0.0;
        CHECK_THROWS_AS(optimizer_step(st, {0.0, 0.0}, {1.0, 1.0}, 1, bad), ConfigError);
    }
}

TEST_CASE("stepping is deterministic and pure") {
    Rng rng(5, 1);
    for (auto kind : kAll) {
        auto st = make_state(kind, 3);
        ParamVector w{1.0, -2.0, 0.5};
        for (std::uint64_t t = 1; t <= 50; ++t) {
            GradVector g{rng.normal(), rng.normal(), rng.normal()};
            const auto before = st;
            const auto a = optimizer_step(st, w, g, t, HyperParams{});
            const auto b = optimizer_step(st, w, g, t, HyperParams{});
            REQUIRE(st == before);
            REQUIRE(a.params == b.params);
            REQUIRE(a.state == b.state);
            REQUIRE(a.diag == b.diag);
            st = a.state;
            w = a.params;
        }
    }
}

TEST_CASE("outputs stay finite for finite inputs") {
    Rng rng(99, 2);
    for (auto kind : kAll) {
        for (int run = 0; run < 20; ++run) {
            HyperParams hp;
            hp.alpha = std::pow(10.0, rng.uniform(-4.0, 0.0));
            hp.delta = std::pow(10.0, rng.uniform(-12.0, 0.0));
            auto st = make_state(kind, 4);
            ParamVector w(4, 0.0);
            for (std::uint64_t t = 1; t <= 100; ++t) {
                GradVector g(4);
                for (auto& x : g) x = rng.normal() * std::pow(10.0, rng.uniform(-6.0, 3.0));
                const auto r = optimizer_step(st, w, g, t, hp);
                for (double x : r.params) REQUIRE(std::isfinite(x));
                st = r.state;
                w = r.params;
            }
        }
    }
}

TEST_CASE("weight decay with zero gradient decays geometrically") {
    HyperParams hp;
    hp.alpha = 0.01;
    hp.weight_decay = 0.5;
    for (auto kind : {OptimizerKind::Sgd, OptimizerKind::AdamW, OptimizerKind::AdaBelief,
                      OptimizerKind::Agd, OptimizerKind::AgdAmsgrad}) {
        CAPTURE(optimizer_name(kind));
        auto st = make_state(kind, 2);
        ParamVector w{2.0, -3.0};
        for (std::uint64_t t = 1; t <= 200; ++t) {
            const auto r = optimizer_step(st, w, {0.0, 0.0}, t, hp);
            for (std::size_t i = 0; i < 2; ++i)
                REQUIRE(r.params[i] == doctest::Approx((1.0 - hp.alpha * hp.weight_decay) * w[i]).epsilon(1e-14));
            st = r.state;
            w = r.params;
        }
    }
}

TEST_CASE("vector helpers") {
    CHECK(l2_norm(std::vector<double>{3.0, 4.0}) == 5.0);
    CHECK_NOTHROW(check_same_length(2, 2, "x"));
    CHECK_THROWS_AS(check_same_length(2, 3, "x"), ShapeError);
    CHECK_THROWS_AS(check_finite(std::vector<double>{1.0, INFINITY}, "x"), NumericError);
}
