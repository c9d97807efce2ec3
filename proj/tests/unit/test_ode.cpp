#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "selfsim/ode.hpp"

using namespace selfsim;

namespace {

const Rhs expo = [](double, const Vec& u, Vec& du) { du[0] = u[0]; };
const Rhs oscillator = [](double, const Vec& u, Vec& du) {
    du[0] = u[1];
    du[1] = -u[0];
};

double fixed_step_endpoint_error(double h) {
    SystemState s{0.0, {1.0}};
    const long n = std::lround(2.0 / h);
    for (long i = 0; i < n; ++i) s = step(expo, s, h).state;
    return std::abs(s.u[0] - std::exp(2.0));
}

}  // namespace

TEST_CASE("step: constant solution is exact") {
    const Rhs zero = [](double, const Vec&, Vec& du) { du[0] = 0.0; };
    auto r = step(zero, {0.0, {1.0}}, 0.5);
    CHECK(r.state.u[0] == 1.0);
    CHECK(r.error[0] == 0.0);
    CHECK(!r.diverged);
}

TEST_CASE("step: exponential within 1e-6 of closed form") {
    auto r = step(expo, {0.0, {1.0}}, 0.1);
    CHECK(std::abs(r.state.u[0] - std::exp(0.1)) < 1e-6);
    CHECK(std::abs(r.error[0]) < 1e-6);
}

TEST_CASE("step: overflow path sets the diverged flag") {
    const Rhs cubic = [](double, const Vec& u, Vec& du) { du[0] = -u[0] * u[0] * u[0]; };
    auto r = step(cubic, {0.0, {1e200}}, 0.1);
    CHECK(r.diverged);
}

TEST_CASE("step: rejects non-positive h") {
    CHECK_THROWS_AS(step(expo, {0.0, {1.0}}, 0.0), std::invalid_argument);
}

TEST_CASE("integrate: harmonic oscillator returns after one period") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg.max_step = 0.2;
    auto traj = integrate(oscillator, {0.0, {1.0, 0.0}}, 2 * std::numbers::pi, cfg);
    REQUIRE(traj.reason == StopReason::reached_end);
    CHECK(std::abs(traj.back().u[0] - 1.0) < 1e-8);
    CHECK(std::abs(traj.back().u[1]) < 1e-8);
}

TEST_CASE("integrate: event at ln 2 on exponential growth") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-14;
    EventSpec ev{[](const SystemState& s) { return s.u[0] - 1.0; },
                 EventDirection::rising, true};
    auto traj = integrate(expo, {0.0, {0.5}}, 5.0, cfg, {&ev, 1});
    REQUIRE(traj.reason == StopReason::event);
    REQUIRE(traj.events.size() == 1);
    CHECK(std::abs(traj.events[0].y - std::log(2.0)) < 1e-8);
    CHECK(std::abs(traj.y_back() - std::log(2.0)) < 1e-8);
}

TEST_CASE("integrate: empty span is an error") {
    IntegratorConfig cfg;
    CHECK_THROWS_AS(integrate(expo, {1.0, {1.0}}, 1.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(integrate(expo, {1.0, {1.0}}, 0.5, cfg), std::invalid_argument);
}

TEST_CASE("integrate: step limit reported") {
    IntegratorConfig cfg;
    cfg.max_steps = 5;
    cfg.max_step = 1e-3;
    cfg.initial_step = 1e-3;
    auto traj = integrate(expo, {0.0, {1.0}}, 10.0, cfg);
    CHECK(traj.reason == StopReason::step_limit);
    CHECK(traj.samples.size() >= 2);
}

TEST_CASE("integrate: divergence cap terminates with reason diverged") {
    const Rhs quad = [](double, const Vec& u, Vec& du) { du[0] = u[0] * u[0]; };
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-8;
    cfg.abs_tol = 1e-10;
    cfg.max_step = 1e-3;
    auto traj = integrate(quad, {0.0, {10.0}}, 1.0, cfg);
    CHECK(traj.reason == StopReason::diverged);
    CHECK(std::abs(traj.back().u[0]) > kDivergenceCap);
}

TEST_CASE("observed convergence order matches the nominal order within 0.3") {
    const double e1 = fixed_step_endpoint_error(0.02);
    const double e2 = fixed_step_endpoint_error(0.01);
    const double order = std::log2(e1 / e2);
    CHECK(std::abs(order - 5.0) < 0.3);
}

TEST_CASE("halving tolerances reduces the end-point error") {
    auto run = [](double rt) {
        IntegratorConfig cfg;
        cfg.rel_tol = rt;
        cfg.abs_tol = rt * 1e-2;
        cfg.max_step = 0.5;
        auto traj = integrate(expo, {0.0, {1.0}}, 2.0, cfg);
        return std::abs(traj.back().u[0] - std::exp(2.0));
    };
    CHECK(run(1e-6) > run(1e-9));
    CHECK(run(1e-9) > run(1e-12));
}

TEST_CASE("event locations are insensitive to max_step") {
    IntegratorConfig a, b;
    a.rel_tol = b.rel_tol = 1e-10;
    a.abs_tol = b.abs_tol = 1e-14;
    a.max_step = 0.5;
    b.max_step = 0.02;
    b.initial_step = 1e-5;
    EventSpec ev{[](const SystemState& s) { return s.u[0] - 1.0; },
                 EventDirection::rising, true};
    auto ta = integrate(expo, {0.0, {0.5}}, 5.0, a, {&ev, 1});
    auto tb = integrate(expo, {0.0, {0.5}}, 5.0, b, {&ev, 1});
    REQUIRE(ta.events.size() == 1);
    REQUIRE(tb.events.size() == 1);
    const double tol = 10 * a.rel_tol * std::log(2.0);
    CHECK(std::abs(ta.events[0].y - tb.events[0].y) < tol);
}

TEST_CASE("trajectory samples strictly increase and replay is bit-identical") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    auto t1 = integrate(oscillator, {0.0, {1.0, 0.0}}, 7.0, cfg);
    auto t2 = integrate(oscillator, {0.0, {1.0, 0.0}}, 7.0, cfg);
    REQUIRE(t1.samples.size() == t2.samples.size());
    for (std::size_t i = 0; i < t1.samples.size(); ++i) {
        if (i > 0) CHECK(t1.samples[i].y > t1.samples[i - 1].y);
        CHECK(t1.samples[i].y == t2.samples[i].y);
        CHECK(t1.samples[i].u[0] == t2.samples[i].u[0]);
        CHECK(t1.samples[i].u[1] == t2.samples[i].u[1]);
    }
}

TEST_CASE("dense output interpolates the oscillator to local accuracy") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg.max_step = 0.05;
    auto traj = integrate(oscillator, {0.0, {1.0, 0.0}}, 6.0, cfg);
    double worst = 0.0;
    for (double y = 0.0; y <= 6.0; y += 0.0137)
        worst = std::max(worst, std::abs(traj.at(y).u[0] - std::cos(y)));
    CHECK(worst < 1e-7);
}

TEST_CASE("config validation") {
    IntegratorConfig cfg;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.initial_step = 1.0;
    cfg.max_step = 0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.max_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
