#include <doctest.h>

#include <cmath>
#include <numbers>

#include "selfsim/diagnostics.hpp"

using namespace selfsim;

namespace {
constexpr double pi = std::numbers::pi;

Trajectory constant_trajectory(double value, double y0, double y1, int n) {
    Trajectory t;
    for (int i = 0; i < n; ++i) {
        const double y = y0 + (y1 - y0) * i / (n - 1);
        t.samples.push_back({y, {value, 0.0}, {0.0, 0.0}});
    }
    t.reason = StopReason::reached_end;
    return t;
}
}  // namespace

TEST_CASE("coefficients: paper spot values") {
    // beta vanishes at the equator for d = 7
    CHECK(coefficients({FlowKind::harmonic_map, 7.0}, 1.0, pi / 2).beta ==
          doctest::Approx(0.0).epsilon(1e-15));
    // alpha root at sqrt(2d-10)
    CHECK(coefficients({FlowKind::harmonic_map, 7.0}, 2.0, 0.3).alpha ==
          doctest::Approx(0.0).epsilon(1e-15));
    CHECK(alpha_root({FlowKind::harmonic_map, 7.0}) == doctest::Approx(2.0));
    // Yang-Mills witnesses
    CHECK(coefficients({FlowKind::yang_mills, 10.0}, 1.0, 1.0).beta == 0.0);
    CHECK(coefficients({FlowKind::yang_mills, 10.0}, 1.0, 0.0).beta ==
          doctest::Approx(24.0));
    CHECK_THROWS_AS(coefficients({FlowKind::harmonic_map, 3.0}, -1.0, 0.0),
                    std::invalid_argument);
}

TEST_CASE("coefficients: sign structure at the worst-case value") {
    // hm: min over f of beta is at f = pi/2 where beta = d - 7
    CHECK(coefficients({FlowKind::harmonic_map, 6.0}, 1.0, pi / 2).beta ==
          doctest::Approx(-1.0));
    CHECK(coefficients({FlowKind::harmonic_map, 7.5}, 1.0, pi / 2).beta ==
          doctest::Approx(0.5));
    // ym: min at g = 1 where beta = d - 10
    CHECK(coefficients({FlowKind::yang_mills, 9.0}, 1.0, 1.0).beta ==
          doctest::Approx(-1.0));
}

TEST_CASE("h_profile: near the origin h ~ a y^3 and equator data give h = 0") {
    ModelParams p{FlowKind::harmonic_map, 3.0};
    auto cfg = default_shooter_config(p);
    const double a = 1.0;
    Trajectory traj = launch_forward(p, a, cfg);
    auto hp = h_profile(traj, p, 501);
    // first sample sits at the launch point
    const auto& s0 = hp.samples.front();
    CHECK(s0.h == doctest::Approx(a * s0.y * s0.y * s0.y).epsilon(1e-4));
    CHECK(s0.hp == doctest::Approx(3 * a * s0.y * s0.y).epsilon(1e-3));

    // sin(pi) is ~1e-16 rather than exactly zero in floating point
    auto flat = h_profile(constant_trajectory(pi / 2, 0.5, 10.0, 64), p, 101);
    for (const auto& s : flat.samples) {
        CHECK(s.h == 0.0);
        CHECK(std::abs(s.hp) < 1e-12);
        CHECK(std::abs(s.hpp) < 1e-12);
    }
}

TEST_CASE("h_profile: finite-difference h'' agrees with the h-equation value") {
    ModelParams p{FlowKind::yang_mills, 6.0};
    auto cfg = default_shooter_config(p);
    Trajectory traj = launch_forward(p, 1.5, cfg);
    auto hp = h_profile(traj, p, 4001);
    const auto& s = hp.samples;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const double dy = s[i + 1].y - s[i].y;
        const double fd = (s[i + 1].hp - s[i - 1].hp) / (2 * dy);
        if (s[i].y < 0.3 || std::abs(s[i].h) > 1e4) continue;  // FD needs dy << y
        worst = std::max(worst, std::abs(fd - s[i].hpp) / (1 + std::abs(s[i].hpp)));
    }
    CHECK(worst < 1e-3);  // O(step^2) agreement of the two routes
}

TEST_CASE("equator tangency derivatives: the d=7 contradiction quadruple") {
    ModelParams p{FlowKind::harmonic_map, 7.0};
    const double y0 = 2.0, h0 = 0.7;
    const auto q = equator_tangency_derivatives(p, y0, h0);
    CHECK(q[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(q[1] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(q[2] == doctest::Approx(24 * h0 * h0 * h0 / std::pow(y0, 8)).epsilon(1e-12));
    CHECK(q[2] > 0);
    // away from d = 7, beta > 0 already forces h'' > 0 at the tangency
    const auto q8 = equator_tangency_derivatives({FlowKind::harmonic_map, 8.0}, y0, h0);
    CHECK(q8[0] > 0);
    // Yang-Mills analogue at d = 10: h'''' = 6 (d-2) h^3 / y^8
    const auto qym = equator_tangency_derivatives({FlowKind::yang_mills, 10.0}, y0, h0);
    CHECK(qym[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(qym[2] == doctest::Approx(48 * h0 * h0 * h0 / std::pow(y0, 8)).epsilon(1e-12));
}

TEST_CASE("monotonicity certificate: positive for d >= 7, sign change at n=2") {
    ModelParams p8{FlowKind::harmonic_map, 8.0};
    auto cfg = default_shooter_config(p8);
    auto rep = monotonicity_certificate(p8, 1.0, cfg);
    CHECK(rep.hp_positive);
    CHECK(rep.conclusive);
    CHECK(rep.increasing_beyond_alpha_root);
    CHECK(std::isnan(rep.first_vanish_y));

    ModelParams p10{FlowKind::yang_mills, 10.0};
    auto rep10 = monotonicity_certificate(p10, 1.0, default_shooter_config(p10));
    CHECK(rep10.hp_positive);

    // d = 3: the first shrinker parameter keeps h' > 0 (its tail limit is
    // positive), while the second one's h must come back down.
    ModelParams p3{FlowKind::harmonic_map, 3.0};
    auto cfg3 = default_shooter_config(p3);
    // Beyond y ~ 8 the double-precision parameter cannot pin the profile
    // tail (e^{y^2/4} mode), so the sign pattern is read off at moderate y.
    cfg3.y_end = 8.0;
    auto rep_a1 = monotonicity_certificate(p3, 2.7387531258832185, cfg3);
    CHECK(rep_a1.hp_positive);
    auto rep_a2 = monotonicity_certificate(p3, 29.276442685522333, cfg3);
    CHECK(!rep_a2.hp_positive);
    CHECK(std::isfinite(rep_a2.first_vanish_y));
}

TEST_CASE("energy: zero map and equator map closed forms") {
    ModelParams p{FlowKind::harmonic_map, 3.0};
    auto zero = profile_energy(constant_trajectory(0.0, 0.0, 12.0, 481), p, 0.0);
    CHECK(std::abs(zero.value) < 1e-12);

    for (double d : {3.0, 5.0, 7.0, 9.0}) {
        ModelParams pd{FlowKind::harmonic_map, d};
        auto eq = profile_energy(constant_trajectory(pi / 2, 0.0, 12.0, 481), pd, pi / 2);
        const double closed = (d - 1) * std::pow(2.0, d - 3) * std::tgamma((d - 2) / 2);
        CHECK(std::abs(eq.value - closed) / closed < 1e-7);
    }
    CHECK_THROWS_AS(profile_energy(constant_trajectory(1.0, 0.0, 12.0, 16),
                                   {FlowKind::yang_mills, 5.0}, 1.0),
                    UnsupportedModelError);
}

TEST_CASE("energy: first shrinker lies below the equator energy") {
    ModelParams p{FlowKind::harmonic_map, 3.0};
    auto cfg = default_shooter_config(p);
    auto sol = refine(p, cfg, 2.5, 3.0, 1e-10);
    auto en = profile_energy(sol.profile, p, sol.b);
    CHECK(en.value == doctest::Approx(3.23156156715).epsilon(1e-6));  // frozen
    CHECK(en.value < 2 * std::sqrt(pi));
}

TEST_CASE("energy: reflection invariance") {
    ModelParams p{FlowKind::harmonic_map, 3.0};
    auto cfg = default_shooter_config(p);
    auto sol = refine(p, cfg, 2.5, 3.0, 1e-10);
    Trajectory mirrored = sol.profile;
    for (auto& s : mirrored.samples) {
        s.u[0] = pi - s.u[0];
        s.u[1] = -s.u[1];
        s.du[0] = -s.du[0];
        s.du[1] = -s.du[1];
    }
    const double e1 = profile_energy(sol.profile, p, sol.b).value;
    const double e2 = profile_energy(mirrored, p, pi - sol.b).value;
    CHECK(std::abs(e1 - e2) < 1e-9 * (1 + std::abs(e1)));
}

TEST_CASE("equator discriminant") {
    CHECK(equator_discriminant(6.0).value == doctest::Approx(-4.0));
    CHECK(equator_discriminant(6.0).oscillatory);
    CHECK(equator_discriminant(7.0).value == doctest::Approx(1.0));
    CHECK(!equator_discriminant(7.0).oscillatory);
    // the threshold value 4 + 2 sqrt(2) evaluates to an exact zero
    const double dc = 4 + 2 * std::sqrt(2.0);
    CHECK(equator_discriminant(dc).value == 0.0);
    for (int d = 3; d <= 12; ++d)
        CHECK(equator_discriminant(d).value == doctest::Approx(d * d - 8 * d + 8));
}

TEST_CASE("morse index: counts around the d = 7 transition") {
    SpectrumGrid grid;   // 2000 nodes on [1e-3, 20]
    CHECK(morse_index(7.0, grid).negative_count == 1);
    CHECK(morse_index(6.9, grid).negative_count == 2);
    CHECK(morse_index(7.5, grid).negative_count == 1);
    auto rep = morse_index(7.0, grid);
    CHECK(rep.smallest[0] < 0);
    CHECK(rep.smallest[1] > 0);
}

TEST_CASE("morse index: d = 6 count grows under refinement") {
    const int c1 = morse_index(6.0, {1e-2, 20.0, 1000}).negative_count;
    const int c2 = morse_index(6.0, {1e-5, 20.0, 23000}).negative_count;
    const int c3 = morse_index(6.0, {1e-8, 20.0, 530000}).negative_count;
    CHECK(c1 < c2);
    CHECK(c2 < c3);
}

TEST_CASE("morse index: count non-increasing in d at fixed discretization") {
    SpectrumGrid grid;
    int prev = 1000;
    for (double d = 6.5; d <= 8.01; d += 0.25) {
        const int c = morse_index(d, grid).negative_count;
        CHECK(c <= prev);
        prev = c;
    }
}

TEST_CASE("morse index: validation") {
    CHECK_THROWS_AS(morse_index(2.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(morse_index(7.0, {0.0, 20.0, 100}), std::invalid_argument);
    CHECK_THROWS_AS(morse_index(7.0, {1e-3, 20.0, 4}), std::invalid_argument);
}

TEST_CASE("quadrature helpers") {
    auto q = adaptive_simpson([](double x) { return std::sin(x); }, 0.0, pi, 1e-10);
    CHECK(q.value == doctest::Approx(2.0).epsilon(1e-9));
    // Gamma(1/2, 0) = sqrt(pi); Gamma(1, x) = exp(-x)
    CHECK(upper_incomplete_gamma(0.5, 0.0) == doctest::Approx(std::sqrt(pi)));
    CHECK(upper_incomplete_gamma(1.0, 2.5) == doctest::Approx(std::exp(-2.5)));
}

TEST_CASE("integral form: consistency along a trajectory") {
    ModelParams p{FlowKind::harmonic_map, 3.0};
    auto cfg = default_shooter_config(p);
    cfg.integ.max_step = 0.01;
    Trajectory traj = launch_forward(p, 2.0, cfg);
    CHECK(integral_form_residual(p, traj) < 1e-8);
    CHECK_THROWS_AS(integral_form_residual({FlowKind::yang_mills, 5.0}, traj),
                    UnsupportedModelError);
}
