#include "selfsim/flow.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace selfsim {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* to_string(FlowKind k) {
    return k == FlowKind::harmonic_map ? "hm" : "ym";
}

bool admissible(FlowKind kind, double d) {
    if (!std::isfinite(d)) return false;
    return kind == FlowKind::harmonic_map ? d > 2.0 : d > 4.0;
}

void ModelParams::validate() const {
    if (!admissible(kind, d))
        throw std::invalid_argument(
            std::string("inadmissible d for model ") + to_string(kind) +
            " (harmonic map needs d > 2, Yang-Mills d > 4)");
}

double equator_value(const ModelParams& p) {
    return p.kind == FlowKind::harmonic_map ? std::numbers::pi / 2 : 1.0;
}

double second_derivative(const ModelParams& p, double y, double v, double vp) {
    if (!(y > 0)) throw std::domain_error("rhs: y must be positive");
    if (p.kind == FlowKind::harmonic_map)
        return -((p.d - 1) / y - y / 2) * vp +
               (p.d - 1) / (2 * y * y) * std::sin(2 * v);
    return -((p.d - 3) / y - y / 2) * vp +
           (p.d - 2) / (y * y) * v * (v - 1) * (v - 2);
}

Rhs make_rhs(const ModelParams& p) {
    return [p](double y, const Vec& u, Vec& du) {
        du[0] = u[1];
        du[1] = second_derivative(p, y, u[0], u[1]);
    };
}

void OriginData::validate() const {
    if (!(a > 0)) throw std::invalid_argument("origin: requires a > 0");
    if (!(y_start > 0)) throw std::invalid_argument("origin: y_start must be positive");
    if (order < 3 || order > 64)
        throw std::invalid_argument("origin: series order out of range [3, 64]");
}

double default_launch_offset(double a) {
    return std::min(1e-3, 1e-2 / std::max(1.0, a));
}

namespace {

// Harmonic map: f = sum f_k y^k (odd).  Matching powers of the
// y^2-multiplied equation gives, for k >= 2,
//   (k-1)(k+d-1) f_k = (d-1)/2 * s~_k + (k-2)/2 * f_{k-2},
// where s~_k is the y^k coefficient of sin(2f) minus its 2 f_k part.
// sin(2f), cos(2f) coefficients come from S' = 2 f' C, C' = -2 f' S.
std::vector<double> hm_series(double d, double a, int order) {
    const int N = order;
    std::vector<double> f(N + 1, 0.0), s(N + 1, 0.0), c(N + 1, 0.0);
    f[1] = a;
    c[0] = 1.0;
    s[1] = 2 * a;
    for (int k = 2; k <= N; ++k) {
        double st = 0.0;  // s_k without the j = k-1 term
        for (int j = 0; j <= k - 2; ++j) st += (j + 1) * f[j + 1] * c[k - 1 - j];
        st *= 2.0 / k;
        f[k] = ((d - 1) / 2 * st + (k - 2) / 2.0 * f[k - 2]) /
               ((k - 1) * (k + d - 1));
        s[k] = st + 2 * f[k];
        double ck = 0.0;
        for (int j = 0; j <= k - 1; ++j) ck += (j + 1) * f[j + 1] * s[k - 1 - j];
        c[k] = -2.0 * ck / k;
    }
    return f;
}

// Yang-Mills: g = sum g_k y^k (even, g_2 = a/2).  For k >= 3,
//   (k-2)(k+d-2) g_k = (k-2)/2 * g_{k-2} + (d-2) ([g^3]_k - 3 [g^2]_k),
// where the cubic/quadratic coefficients involve only g_{<k}.
std::vector<double> ym_series(double d, double a, int order) {
    const int N = order;
    std::vector<double> g(N + 1, 0.0);
    g[2] = a / 2;
    for (int k = 4; k <= N; k += 2) {
        double g2k = 0.0;
        for (int i = 2; i <= k - 2; ++i) g2k += g[i] * g[k - i];
        double g3k = 0.0;
        for (int i = 2; i <= k - 4; ++i)
            for (int j = 2; j <= k - i - 2; ++j) g3k += g[i] * g[j] * g[k - i - j];
        g[k] = ((k - 2) / 2.0 * g[k - 2] + (d - 2) * (g3k - 3 * g2k)) /
               ((k - 2) * (k + d - 2));
    }
    return g;
}

}  // namespace

std::vector<double> origin_series(const ModelParams& p, double a, int order) {
    p.validate();
    OriginData od{a, 1e-3, order};
    od.validate();
    return p.kind == FlowKind::harmonic_map ? hm_series(p.d, a, order)
                                            : ym_series(p.d, a, order);
}

std::pair<double, double> eval_series(const std::vector<double>& coeff, double y) {
    double v = 0.0, vp = 0.0;
    for (int k = static_cast<int>(coeff.size()) - 1; k >= 1; --k) {
        v = v * y + coeff[k];
        vp = vp * y + k * coeff[k];
    }
    v = v * y + coeff[0];
    return {v, vp};
}

SystemState series_origin(const ModelParams& p, const OriginData& origin) {
    p.validate();
    origin.validate();
    const auto coeff = origin_series(p, origin.a, origin.order);
    const auto [v, vp] = eval_series(coeff, origin.y_start);
    return {origin.y_start, {v, vp}};
}

void TailData::validate() const {
    if (!(Y > 0)) throw std::invalid_argument("tail: Y must be positive");
}

SystemState tail_state(const ModelParams& p, const TailData& tail) {
    p.validate();
    tail.validate();
    const double Y = tail.Y, b = tail.b;
    if (p.kind == FlowKind::harmonic_map) {
        const double L = (p.d - 1) * std::sin(2 * b);
        return {Y, {b + L / (2 * Y * Y), -L / (Y * Y * Y)}};
    }
    const double P = (p.d - 2) * b * (b - 1) * (b - 2);
    return {Y, {b + P / (Y * Y), -2 * P / (Y * Y * Y)}};
}

namespace {

// Tail expansions in x = y^-2.  Matching powers gives, per model,
//   hm: k e_k = (d-1)/2 S_{k-1} - 2(k-1)(2k - d)   e_{k-1}
//   ym: k e_k = (d-2)  P_{k-1} - 2(k-1)(2k+2 - d) e_{k-1}
// with S the sin(2b + 2E) series and P the cubic g(g-1)(g-2) series.
std::vector<double> hm_tail(double d, double b, int order) {
    std::vector<double> e(order + 1, 0.0), S(order + 1, 0.0), C(order + 1, 0.0);
    e[0] = b;
    S[0] = std::sin(2 * b);
    C[0] = std::cos(2 * b);
    for (int k = 1; k <= order; ++k) {
        e[k] = ((d - 1) / 2 * S[k - 1] - 2.0 * (k - 1) * (2 * k - d) * e[k - 1]) / k;
        double sm = 0.0, cm = 0.0;
        for (int j = 1; j <= k; ++j) {
            sm += j * e[j] * C[k - j];
            cm += j * e[j] * S[k - j];
        }
        S[k] = 2.0 * sm / k;
        C[k] = -2.0 * cm / k;
    }
    return e;
}

std::vector<double> ym_tail(double d, double b, int order) {
    std::vector<double> e(order + 1, 0.0), G(order + 1, 0.0);
    e[0] = b;
    G[0] = b;
    auto pcoef = [&](int m) {
        double g2 = 0.0, g3 = 0.0;
        for (int i = 0; i <= m; ++i) {
            g2 += G[i] * G[m - i];
            for (int j = 0; j <= m - i; ++j) g3 += G[i] * G[j] * G[m - i - j];
        }
        return g3 - 3 * g2 + 2 * G[m];
    };
    for (int k = 1; k <= order; ++k) {
        e[k] = ((d - 2) * pcoef(k - 1) - 2.0 * (k - 1) * (2 * k + 2 - d) * e[k - 1]) / k;
        G[k] = e[k];
    }
    return e;
}

}  // namespace

std::vector<double> tail_series(const ModelParams& p, double b, int order) {
    p.validate();
    if (order < 1 || order > 32)
        throw std::invalid_argument("tail_series: order out of range [1, 32]");
    return p.kind == FlowKind::harmonic_map ? hm_tail(p.d, b, order)
                                            : ym_tail(p.d, b, order);
}

SystemState tail_state_series(const ModelParams& p, const TailData& tail, int order) {
    tail.validate();
    const auto e = tail_series(p, tail.b, order);
    const double Y = tail.Y;
    double v = e[0], vp = 0.0;
    double pw = 1.0;  // Y^(-2k)
    double prev = std::numeric_limits<double>::infinity();
    // The expansion is asymptotic; stop at the smallest term.
    for (int k = 1; k <= order; ++k) {
        pw /= Y * Y;
        const double term = e[k] * pw;
        if (std::abs(term) > prev) break;
        v += term;
        vp += -2.0 * k * term / Y;
        prev = std::abs(term);
    }
    return {Y, {v, vp}};
}

YmG1Constants ym_g1_constants(double d) {
    if (!(d > 4)) throw std::invalid_argument("ym_g1: requires d > 4");
    return {0.5 * (6 * d - 12 - (d + 2) * std::sqrt(2 * d - 4)),
            std::sqrt(d - 2) / (2 * std::sqrt(2.0))};
}

double ym_g1_pole(double d) {
    const auto [gamma, delta] = ym_g1_constants(d);
    if (gamma >= 0) return kNaN;
    return std::sqrt(-gamma / delta);
}

std::pair<double, double> ym_explicit_g1(double d, double y) {
    const auto [gamma, delta] = ym_g1_constants(d);
    const double q = gamma + delta * y * y;
    const double scale = std::abs(gamma) + delta * y * y;
    if (std::abs(q) < 4 * std::numeric_limits<double>::epsilon() * scale)
        throw std::domain_error("ym_explicit_g1: evaluation at the pole y = sqrt(-gamma/delta)");
    return {y * y / q, 2 * y * gamma / (q * q)};
}

double type1_quantity(const ModelParams& p, const SystemState& s) {
    if (p.kind != FlowKind::harmonic_map)
        throw UnsupportedModelError("type1_quantity: defined for the harmonic map only");
    if (!(s.y > 0)) throw std::domain_error("type1_quantity: y must be positive");
    const double sf = std::sin(s.u[0]);
    return s.u[1] * s.u[1] + (p.d - 1) / (s.y * s.y) * sf * sf;
}

double type1_origin_limit(const ModelParams& p, double a) {
    if (p.kind != FlowKind::harmonic_map)
        throw UnsupportedModelError("type1_origin_limit: defined for the harmonic map only");
    return p.d * a * a;
}

}  // namespace selfsim
