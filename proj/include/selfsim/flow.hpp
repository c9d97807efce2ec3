// flow.hpp - the two shrinker profile ODEs, their series launch at the
// singular origin, tail asymptotics at infinity, and the explicit
// first Yang-Mills shrinker.
//
// Harmonic map:  f'' + ((d-1)/y - y/2) f' - (d-1)/(2 y^2) sin(2f) = 0
// Yang-Mills:    g'' + ((d-3)/y - y/2) g' - (d-2)/y^2 g(g-1)(g-2) = 0

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "selfsim/ode.hpp"

namespace selfsim {

enum class FlowKind { harmonic_map, yang_mills };

const char* to_string(FlowKind k);

struct UnsupportedModelError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ModelParams {
    FlowKind kind = FlowKind::harmonic_map;
    double d = 3.0;   // real dimension parameter; the ODEs are defined for real d

    void validate() const;   // harmonic_map needs d > 2, yang_mills d > 4
};

bool admissible(FlowKind kind, double d);

// pi/2 for the harmonic map, 1 for Yang-Mills: the value whose
// transversal crossings index the shrinker family.
double equator_value(const ModelParams& p);

// Second derivative solved from the profile ODE.  y must be positive;
// the origin is handled by the series launch, never by the rhs.
double second_derivative(const ModelParams& p, double y, double v, double vp);

// rhs closure over u = (value, derivative) for the ode engine.
Rhs make_rhs(const ModelParams& p);

// ---- origin series -------------------------------------------------------

struct OriginData {
    double a = 1.0;        // f'(0) for harmonic_map, g''(0) for yang_mills
    double y_start = 1e-3; // launch offset
    int order = 7;         // highest power of y kept in the series

    void validate() const;
};

// Launch offset keeping the series convergent: min(1e-3, 1e-2 / max(1, a)).
// The series coefficients scale like a^k, so the radius of convergence
// shrinks as 1/a.
double default_launch_offset(double a);

// Coefficients c[k] of y^k, k = 0..order.  Odd series for harmonic_map
// (c1 = a), even series for yang_mills (c2 = a/2); the rest follow from a
// recurrence obtained by matching powers in the y^2-multiplied ODE.
std::vector<double> origin_series(const ModelParams& p, double a, int order);

// Evaluate a power series and its derivative at y.
std::pair<double, double> eval_series(const std::vector<double>& coeff, double y);

SystemState series_origin(const ModelParams& p, const OriginData& origin);

// ---- tail asymptotics ----------------------------------------------------

struct TailData {
    double b = 1.0;   // limit value at infinity
    double Y = 12.0;  // evaluation point

    void validate() const;
};

// Leading-order tail state:
//   harmonic_map: f(Y) = b + (d-1) sin(2b)/(2 Y^2), f'(Y) = -(d-1) sin(2b)/Y^3
//   yang_mills:   g(Y) = b + (d-2) b(b-1)(b-2)/Y^2, g'(Y) = -2(d-2) b(b-1)(b-2)/Y^3
SystemState tail_state(const ModelParams& p, const TailData& tail);

// Coefficients e[k] of y^(-2k), k = 0..order (e[0] = b), of the full
// asymptotic tail expansion.  tail_state is the order-1 truncation; the
// higher orders are what make a tail launch at finite Y accurate enough
// to integrate against.
std::vector<double> tail_series(const ModelParams& p, double b, int order);

SystemState tail_state_series(const ModelParams& p, const TailData& tail,
                              int order = 6);

// ---- explicit Yang-Mills shrinker ----------------------------------------

struct YmG1Constants {
    double gamma;   // (6d - 12 - (d+2) sqrt(2d-4)) / 2
    double delta;   // sqrt(d-2) / (2 sqrt(2))
};

YmG1Constants ym_g1_constants(double d);

// Pole location sqrt(-gamma/delta) when gamma < 0 (d > 10); NaN otherwise.
double ym_g1_pole(double d);

// g1(y) = y^2 / (gamma + delta y^2) and its derivative.  Throws
// std::domain_error when evaluated at the pole.
std::pair<double, double> ym_explicit_g1(double d, double y);

// ---- type-I quantity -------------------------------------------------------

// f'(y)^2 + (d-1)/y^2 sin^2 f(y); harmonic_map only.
double type1_quantity(const ModelParams& p, const SystemState& s);

// Its y -> 0 limit along the origin series: d * a^2.
double type1_origin_limit(const ModelParams& p, double a);

}  // namespace selfsim
