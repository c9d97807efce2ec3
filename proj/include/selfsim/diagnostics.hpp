// diagnostics.hpp - numerical realizations of the analytical machinery:
// the h = y^3 v' function and its second-order equation, the alpha/beta
// coefficients, the weighted Dirichlet energy, the oscillation
// discriminant, and the equator-map Morse index.

#pragma once

#include <array>
#include <vector>

#include "selfsim/flow.hpp"
#include "selfsim/ode.hpp"
#include "selfsim/shooter.hpp"

namespace selfsim {

// ---- h-equation coefficients ----------------------------------------------
// hm: alpha = y (y^2 - 2d + 10)/2,  beta = d - 7 + (d-1)(1 + cos 2f)
// ym: alpha = y (y^2 - 2d + 14)/2,  beta = d - 10 + 3(d-2)(1 - g)^2

struct CoefficientPair {
    double alpha;
    double beta;
};

CoefficientPair coefficients(const ModelParams& p, double y, double value);

// Root of alpha: sqrt(2d-10) (hm) / sqrt(2d-14) (ym); 0 when alpha > 0 for
// all y.  Beyond it y^2 h'' = alpha h' + beta h forces h upward once
// beta >= 0 and h' > 0.
double alpha_root(const ModelParams& p);

struct HSample {
    double y, h, hp, hpp;
};

struct HProfile {
    std::vector<HSample> samples;
};

// h, h' analytically from the trajectory (h' = y^3 v'' + 3 y^2 v' with v''
// from the rhs); h'' from the h-equation evaluated with the trajectory's
// value.  Sampled on a uniform grid over the trajectory span.
HProfile h_profile(const Trajectory& traj, const ModelParams& p,
                   int n_samples = 2001);

// (h'', h''', h'''') at a forced tangency point: value = equator, h' = 0.
// Obtained by differentiating the h-equation twice; at d = 7 (hm) this
// gives the (0, 0, 24 h^3 / y^8) contradiction quadruple.
std::array<double, 3> equator_tangency_derivatives(const ModelParams& p,
                                                   double y, double h);

struct MonotonicityReport {
    double a = 0.0;
    double min_hp = 0.0;
    double argmin_y = 0.0;
    double first_vanish_y = 0.0;   // NaN when h' never vanishes
    double y_exit = 0.0;
    bool hp_positive = false;      // min h' > 0 up to the exit point
    bool increasing_beyond_alpha_root = false;
    bool conclusive = false;       // trajectory passed the alpha root
};

// Integrates the trajectory for the given a and reports the minimum of h'
// along it.  For hm d >= 7 / ym d >= 10 the positive verdict is the
// nonexistence mechanism; for smaller d it reports where h' first
// vanishes.
MonotonicityReport monotonicity_certificate(const ModelParams& p, double a,
                                            const ShooterConfig& cfg);

// ---- energy ----------------------------------------------------------------

struct EnergyResult {
    double value = 0.0;
    double quadrature_error = 0.0;  // accumulated adaptive-Simpson estimate
};

// Weighted Dirichlet energy of a harmonic-map profile,
//   E(f) = int_0^inf (f'^2 + (d-1)/y^2 sin^2 f) y^(d-1) e^(-y^2/4) dy,
// by adaptive Simpson over the sampled trajectory plus closures: the
// [0, y_first] head from the local behaviour and the [Y, inf) tail from
// the limit value b (incomplete-gamma weight integral).
EnergyResult profile_energy(const Trajectory& traj, const ModelParams& p,
                            double b_limit);

// ---- oscillation discriminant ----------------------------------------------

struct DiscriminantResult {
    double value;       // d^2 - 8 d + 8
    bool oscillatory;   // negative discriminant
};

DiscriminantResult equator_discriminant(double d);

// ---- Morse index of the equator map ----------------------------------------

struct SpectrumGrid {
    double y_min = 1e-3;
    double y_max = 20.0;
    int nodes = 2000;

    void validate() const;
};

struct SpectrumReport {
    double d = 0.0;
    SpectrumGrid grid;
    int negative_count = 0;
    std::array<double, 3> smallest{};   // three lowest eigenvalues
};

// Second variation of the energy at the equator map as the generalized
// symmetric eigenproblem K u = lambda M u on [y_min, y_max] with zero
// boundary values: second-order central differences, weight lumped at
// nodes.  The count comes from the Sturm sequence (inertia) of K, the
// lowest eigenvalues from bisection on the inertia of K - lambda M.
SpectrumReport morse_index(double d, const SpectrumGrid& grid);

// ---- consistency checks used by the verification suite ---------------------

// max over dense samples of |A_quad(y) - (2/(d-1)) y^(d-1) e^(-y^2/4) v'(y)|
// where A_quad is the quadrature of s^(d-3) e^(-s^2/4) sin(2 f(s)) along the
// trajectory.  This is the integral form of the profile ODE rescaled by the
// weight (the unweighted form blows up like e^(y^2/4)).
double integral_form_residual(const ModelParams& p, const Trajectory& traj);

// Adaptive Simpson quadrature (exposed for reuse by tests and the cli).
struct QuadratureResult {
    double value;
    double error_estimate;
};

QuadratureResult adaptive_simpson(const std::function<double(double)>& f,
                                  double a, double b, double abs_tol,
                                  int max_depth = 40);

// Upper incomplete gamma Gamma(s, x) for s > 0, x >= 0.
double upper_incomplete_gamma(double s, double x);

}  // namespace selfsim
