#include "selfsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace selfsim {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

CoefficientPair coefficients(const ModelParams& p, double y, double value) {
    if (!(y >= 0)) throw std::invalid_argument("coefficients: y must be >= 0");
    if (p.kind == FlowKind::harmonic_map)
        return {0.5 * y * (y * y - 2 * p.d + 10),
                p.d - 7 + (p.d - 1) * (1 + std::cos(2 * value))};
    return {0.5 * y * (y * y - 2 * p.d + 14),
            p.d - 10 + 3 * (p.d - 2) * (1 - value) * (1 - value)};
}

double alpha_root(const ModelParams& p) {
    const double r2 = p.kind == FlowKind::harmonic_map ? 2 * p.d - 10 : 2 * p.d - 14;
    return r2 > 0 ? std::sqrt(r2) : 0.0;
}

namespace {

double h_of(const SystemState& s) { return s.y * s.y * s.y * s.u[1]; }

double hp_of(const ModelParams& p, const SystemState& s) {
    const double vpp = second_derivative(p, s.y, s.u[0], s.u[1]);
    return s.y * s.y * s.y * vpp + 3 * s.y * s.y * s.u[1];
}

}  // namespace

HProfile h_profile(const Trajectory& traj, const ModelParams& p, int n_samples) {
    if (n_samples < 2) throw std::invalid_argument("h_profile: n_samples >= 2");
    HProfile out;
    out.samples.reserve(n_samples);
    const double y0 = traj.y_front(), y1 = traj.y_back();
    for (int i = 0; i < n_samples; ++i) {
        const double y = y0 + (y1 - y0) * i / (n_samples - 1);
        const SystemState s = traj.at(y);
        const double h = h_of(s);
        const double hp = hp_of(p, s);
        const auto [alpha, beta] = coefficients(p, s.y, s.u[0]);
        out.samples.push_back({s.y, h, hp, (alpha * hp + beta * h) / (s.y * s.y)});
    }
    return out;
}

std::array<double, 3> equator_tangency_derivatives(const ModelParams& p, double y,
                                                   double h) {
    // At the forced point: value = equator, h' = 0, v' = h / y^3.
    const double eq = equator_value(p);
    const double vp = h / (y * y * y);
    const double vpp = second_derivative(p, y, eq, vp);
    const auto [alpha, beta] = coefficients(p, y, eq);
    const double alpha_p = p.kind == FlowKind::harmonic_map
                               ? 0.5 * (3 * y * y - 2 * p.d + 10)
                               : 0.5 * (3 * y * y - 2 * p.d + 14);
    const double alpha_pp = 3 * y;
    // beta' and beta'' via the chain rule through the profile value.
    double beta_p, beta_pp;
    if (p.kind == FlowKind::harmonic_map) {
        beta_p = -2 * (p.d - 1) * std::sin(2 * eq) * vp;
        beta_pp = -2 * (p.d - 1) *
                  (2 * std::cos(2 * eq) * vp * vp + std::sin(2 * eq) * vpp);
    } else {
        beta_p = -6 * (p.d - 2) * (1 - eq) * vp;
        beta_pp = -6 * (p.d - 2) * ((1 - eq) * vpp - vp * vp);
    }
    const double y2 = y * y;
    const double hpp = (alpha * 0 + beta * h) / y2;
    const double hppp = (alpha_p * 0 + alpha * hpp + beta_p * h + beta * 0 - 2 * y * hpp) / y2;
    const double hpppp = (alpha_pp * 0 + 2 * alpha_p * hpp + alpha * hppp + beta_pp * h +
                          2 * beta_p * 0 + beta * hpp - 4 * y * hppp - 2 * hpp) / y2;
    return {hpp, hppp, hpppp};
}

MonotonicityReport monotonicity_certificate(const ModelParams& p, double a,
                                            const ShooterConfig& cfg) {
    if (!(a > 0)) throw std::invalid_argument("monotonicity_certificate: a > 0");
    Trajectory traj = launch_forward(p, a, cfg);

    MonotonicityReport rep;
    rep.a = a;
    rep.y_exit = traj.y_back();
    rep.first_vanish_y = kNaN;

    double min_hp = std::numeric_limits<double>::infinity();
    double argmin = traj.y_front();
    double prev_y = 0.0, prev_hp = 0.0;
    bool first = true;

    // Scan accepted samples plus a subdivided dense grid between them.
    auto visit = [&](const SystemState& s) {
        const double hp = hp_of(p, s);
        if (hp < min_hp) {
            min_hp = hp;
            argmin = s.y;
        }
        if (!first && std::isnan(rep.first_vanish_y) &&
            ((prev_hp > 0) != (hp > 0))) {
            // Linear zero of h' between the two probes.
            rep.first_vanish_y = prev_y + (s.y - prev_y) * prev_hp / (prev_hp - hp);
        }
        prev_y = s.y;
        prev_hp = hp;
        first = false;
    };
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const Sample& s = traj.samples[i];
        visit({s.y, s.u});
        const double span = traj.samples[i + 1].y - s.y;
        for (int k = 1; k <= 3; ++k)
            visit(traj.at(s.y + span * k / 4.0));
    }
    visit({traj.samples.back().y, traj.samples.back().u});

    rep.min_hp = min_hp;
    rep.argmin_y = argmin;
    rep.hp_positive = min_hp > 0;
    const double root = alpha_root(p);
    rep.conclusive = rep.y_exit > root;
    if (rep.conclusive) {
        double min_beyond = std::numeric_limits<double>::infinity();
        const double y0 = std::max(root, traj.y_front());
        for (int i = 0; i <= 200; ++i) {
            const double y = y0 + (rep.y_exit - y0) * i / 200.0;
            min_beyond = std::min(min_beyond, hp_of(p, traj.at(y)));
        }
        rep.increasing_beyond_alpha_root = min_beyond > 0;
    }
    return rep;
}

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a,
                                  double b, double abs_tol, int max_depth) {
    struct Worker {
        const std::function<double(double)>& f;
        double err = 0.0;
        double run(double a, double m, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6 * (fa + 4 * flm + fm);
            const double right = (b - m) / 6 * (fm + 4 * frm + fb);
            const double delta = left + right - whole;
            if (depth <= 0 || std::abs(delta) <= 15 * tol) {
                err += std::abs(delta) / 15;
                return left + right + delta / 15;
            }
            return run(a, lm, m, fa, flm, fm, left, tol / 2, depth - 1) +
                   run(m, rm, b, fm, frm, fb, right, tol / 2, depth - 1);
        }
    };
    if (a == b) return {0.0, 0.0};
    Worker w{f};
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    const double v = w.run(a, m, b, fa, fm, fb, whole, abs_tol, max_depth);
    return {v, w.err};
}

double upper_incomplete_gamma(double s, double x) {
    if (!(s > 0) || !(x >= 0))
        throw std::invalid_argument("upper_incomplete_gamma: needs s > 0, x >= 0");
    if (x == 0) return std::tgamma(s);
    if (x < s + 1) {
        // Lower series, then complement.
        double sum = 1.0 / s, term = sum;
        for (int n = 1; n < 500; ++n) {
            term *= x / (s + n);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        return std::tgamma(s) - sum * std::exp(-x + s * std::log(x));
    }
    // Continued fraction (modified Lentz).
    const double tiny = 1e-300;
    double bb = x + 1 - s, c = 1 / tiny, dd = 1 / bb, h = dd;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - s);
        bb += 2;
        dd = an * dd + bb;
        if (std::abs(dd) < tiny) dd = tiny;
        c = bb + an / c;
        if (std::abs(c) < tiny) c = tiny;
        dd = 1 / dd;
        const double delta = dd * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + s * std::log(x)) * h;
}

EnergyResult profile_energy(const Trajectory& traj, const ModelParams& p,
                            double b_limit) {
    if (p.kind != FlowKind::harmonic_map)
        throw UnsupportedModelError("profile_energy: defined for the harmonic map only");
    const double d = p.d;

    // Integrand written without divisions so y = 0 is regular for d >= 3.
    auto integrand = [&](double y) {
        const SystemState s = traj.at(y);
        const double sf = std::sin(s.u[0]);
        return (s.u[1] * s.u[1] * std::pow(y, d - 1) +
                (d - 1) * sf * sf * std::pow(y, d - 3)) *
               std::exp(-y * y / 4);
    };

    const double y0 = traj.y_front(), Y = traj.y_back();
    auto main_part = adaptive_simpson(integrand, y0, Y, 1e-9);

    // Head [0, y0] on the linear extension f(y) = f0 + f0' (y - y0); this
    // covers profile launches (f -> 0), mirrored profiles (f -> pi), and
    // constant trajectories alike.
    double head = 0.0;
    const SystemState first = traj.at(y0);
    if (y0 > 0) {
        auto ext = [&](double y) {
            const double f = first.u[0] + first.u[1] * (y - y0);
            const double sf = std::sin(f);
            return (first.u[1] * first.u[1] * std::pow(y, d - 1) +
                    (d - 1) * sf * sf * std::pow(y, d - 3)) *
                   std::exp(-y * y / 4);
        };
        head = adaptive_simpson(ext, d < 3 ? 1e-12 * y0 : 0.0, y0, 1e-12, 24).value;
    }

    // Tail [Y, inf): sin^2 f -> sin^2 b and the f'^2 part is O(y^-6) down
    // the same weight; the weight integral is an incomplete gamma.
    const double sb = std::sin(b_limit);
    const double tail = (d - 1) * sb * sb * std::pow(2.0, d - 3) *
                        upper_incomplete_gamma((d - 2) / 2, Y * Y / 4);

    return {main_part.value + head + tail, main_part.error_estimate + 1e-15};
}

DiscriminantResult equator_discriminant(double d) {
    const double v = d * d - 8 * d + 8;
    return {v, v < 0};
}

void SpectrumGrid::validate() const {
    if (!(y_min > 0) || !(y_max > y_min))
        throw std::invalid_argument("SpectrumGrid: need 0 < y_min < y_max");
    if (nodes < 16) throw std::invalid_argument("SpectrumGrid: nodes >= 16");
}

namespace {

struct Tridiag {
    std::vector<double> diag, off, mass;
};

// K from the quadratic form int (u'^2 - (d-1)/y^2 u^2) w dy with
// w = y^(d-1) e^(-y^2/4), interval weights at midpoints, potential and
// mass lumped at nodes; Dirichlet rows eliminated.
Tridiag assemble(double d, const SpectrumGrid& g) {
    const int N = g.nodes;
    const double h = (g.y_max - g.y_min) / (N - 1);
    std::vector<double> w(N), wm(N - 1);
    auto weight = [&](double y) { return std::pow(y, d - 1) * std::exp(-y * y / 4); };
    for (int i = 0; i < N; ++i) w[i] = weight(g.y_min + i * h);
    for (int i = 0; i + 1 < N; ++i) wm[i] = weight(g.y_min + (i + 0.5) * h);

    Tridiag t;
    t.diag.resize(N - 2);
    t.off.resize(N - 3);
    t.mass.resize(N - 2);
    for (int i = 1; i <= N - 2; ++i) {
        const double y = g.y_min + i * h;
        t.diag[i - 1] = (wm[i - 1] + wm[i]) / h - (d - 1) / (y * y) * w[i] * h;
        t.mass[i - 1] = w[i] * h;
    }
    for (int i = 1; i <= N - 3; ++i) t.off[i - 1] = -wm[i] / h;
    return t;
}

// Sturm sequence: number of negative pivots of K - lambda M equals the
// number of eigenvalues below lambda (Sylvester inertia).
int inertia_below(const Tridiag& t, double lambda) {
    int count = 0;
    double piv = t.diag[0] - lambda * t.mass[0];
    if (piv < 0) ++count;
    const double tiny = 1e-300;
    for (std::size_t i = 1; i < t.diag.size(); ++i) {
        if (std::abs(piv) < tiny) piv = piv < 0 ? -tiny : tiny;
        piv = (t.diag[i] - lambda * t.mass[i]) - t.off[i - 1] * t.off[i - 1] / piv;
        if (piv < 0) ++count;
    }
    return count;
}

}  // namespace

SpectrumReport morse_index(double d, const SpectrumGrid& grid) {
    if (!(d > 2)) throw std::invalid_argument("morse_index: requires d > 2");
    grid.validate();
    const Tridiag t = assemble(d, grid);

    SpectrumReport rep;
    rep.d = d;
    rep.grid = grid;
    rep.negative_count = inertia_below(t, 0.0);

    // Gershgorin bounds for the pencil (M is positive diagonal).
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.diag.size(); ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.off[i - 1]);
        if (i < t.off.size()) r += std::abs(t.off[i]);
        lo = std::min(lo, (t.diag[i] - r) / t.mass[i]);
        hi = std::max(hi, (t.diag[i] + r) / t.mass[i]);
    }
    for (int k = 1; k <= 3; ++k) {
        double a = lo, b = hi;
        if (inertia_below(t, b) < k)
            throw std::runtime_error("morse_index: eigenvalue bisection bracket failed");
        for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, std::abs(a)); ++it) {
            const double m = 0.5 * (a + b);
            if (inertia_below(t, m) >= k) b = m;
            else a = m;
        }
        rep.smallest[k - 1] = 0.5 * (a + b);
    }
    return rep;
}

double integral_form_residual(const ModelParams& p, const Trajectory& traj) {
    if (p.kind != FlowKind::harmonic_map)
        throw UnsupportedModelError("integral_form_residual: harmonic map only");
    const double d = p.d;
    auto integrand = [&](double s) {
        return std::pow(s, d - 3) * std::exp(-s * s / 4) *
               std::sin(2 * traj.at(s).u[0]);
    };

    const double y0 = traj.y_front();
    const SystemState first = traj.at(y0);
    // Head below the launch point, where f ~ a y.
    double A = 2 * (first.u[0] / y0) * std::pow(y0, d - 1) / (d - 1);
    double worst = 0.0, scale = 1.0;
    // Accumulate the quadrature step by step and compare at each sample.
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const Sample& s0 = traj.samples[i];
        const Sample& s1 = traj.samples[i + 1];
        A += adaptive_simpson(integrand, s0.y, s1.y, 1e-13, 18).value;
        const double lhs = 2.0 / (d - 1) * std::pow(s1.y, d - 1) *
                           std::exp(-s1.y * s1.y / 4) * s1.u[1];
        worst = std::max(worst, std::abs(A - lhs));
        scale = std::max(scale, std::abs(lhs));
    }
    return worst / scale;
}

}  // namespace selfsim
