// shooter.hpp - profile search: forward shooting from the origin series,
// outcome classification, bracket sweeps, bisection refinement, and
// two-sided tail matching.
//
// Off-solutions pick up the growing e^{y^2/4} mode, so a raw forward
// integration cannot hold the decay condition at Y to any useful
// tolerance.  The solver therefore shoots forward only up to a matching
// point y_match, launches the tail family backward from Y, and solves
// for the limit value b that joins the two; the reported profile is the
// stitched trajectory and the match residual is the derivative jump at
// y_match.

#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "selfsim/flow.hpp"
#include "selfsim/ode.hpp"

namespace selfsim {

enum class ExitKind { tail_matched, overshoot_top, undershoot_bottom, diverged, inconclusive };

const char* to_string(ExitKind e);

struct ShooterConfig {
    IntegratorConfig integ{1e-12, 1e-14, 1e-5, 0.05, 2'000'000};
    double y_end = 0.0;          // 0 = auto: max(12, 2 sqrt(2 d))
    double y_match = 6.0;        // forward/backward matching point
    double y_start = 0.0;        // 0 = auto: min(1e-3, 1e-2 / max(1, a))
    int series_order = 7;        // origin series order
    int tail_order = 6;          // tail expansion order for the backward launch
    double tail_tol = 1e-6;      // match residual below this => tail_matched
    double bound_cap = 1e4;      // type-I bound for a matched profile (hm)
    double a_min = 0.05;         // default sweep window
    double a_max = 50.0;
    int n_grid = 500;
    double tol_a = 1e-12;        // bisection width target
};

ShooterConfig default_shooter_config(const ModelParams& p);

double effective_y_end(const ModelParams& p, const ShooterConfig& cfg);

struct ShootOutcome {
    double a = 0.0;
    int crossings = 0;           // transversal crossings of the equator value
    ExitKind exit = ExitKind::inconclusive;
    double miss = 0.0;           // M = y^3 v' + tail term, at the trajectory end
    double b_estimate = 0.0;     // limit estimate when the trajectory reaches Y
    double y_exit = 0.0;
    double max_type1 = 0.0;      // sup of the type-I quantity (hm; NaN for ym)
    double match_residual = 0.0; // derivative jump at y_match (tail-matched only)
};

struct ShrinkerSolution {
    double a = 0.0;
    double b = 0.0;
    int n = 0;                   // crossing count of the stitched profile
    Trajectory profile;          // forward part up to y_match, tail part beyond
    double max_type1 = 0.0;      // NaN for ym
    double energy = 0.0;         // filled by the caller (see diagnostics); NaN for ym
    double tail_residual = 0.0;  // |Y^3 v'(Y) + tail term(b)| on the stored profile
    double match_residual = 0.0;
    double a_width = 0.0;        // final bisection bracket width
};

struct SweepRow {
    double a;
    ShootOutcome outcome;
};

enum class BracketReason { miss_sign_change, crossing_change };

struct Bracket {
    std::size_t lo = 0, hi = 0;  // adjacent row indices
    BracketReason reason = BracketReason::miss_sign_change;
};

struct SweepTable {
    std::vector<SweepRow> rows;      // a strictly increasing
    std::vector<Bracket> brackets;
};

struct BracketDissolved : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Forward trajectory from the series launch, with equator-crossing events;
// integration ends at y_end or at the divergence cap.
Trajectory launch_forward(const ModelParams& p, double a, const ShooterConfig& cfg);

// Classify one shot.  A trajectory that reaches Y is tail-matched when the
// backward tail solve converges with match residual below tail_tol (and,
// for the harmonic map, the type-I quantity stayed below bound_cap).
ShootOutcome shoot(const ModelParams& p, double a, const ShooterConfig& cfg);

// Log-spaced scan of (a_min, a_max]; adjacent rows with a miss sign change
// or a crossing-count change are flagged as brackets.
SweepTable bracket_sweep(const ModelParams& p, const ShooterConfig& cfg,
                         double a_min, double a_max, int n_grid);

// Bisection on the exit-direction sign over a flagged bracket, then the
// tail match at the converged a.  Throws BracketDissolved when both ends
// evaluate to the same sign.
ShrinkerSolution refine(const ModelParams& p, const ShooterConfig& cfg,
                        double a_lo, double a_hi, double tol_a);

// Sweep, refine every bracket, keep distinct crossing counts 1..n_max.
// The window auto-extends (up to a_max 5e4) while counts are missing:
// the n-th shrinker parameter grows roughly tenfold with n, so the
// default window only reaches the first ones.
std::vector<ShrinkerSolution> find_shrinkers(const ModelParams& p,
                                             const ShooterConfig& cfg, int n_max);

// Tail mismatch M evaluated at a state:
//   hm: y^3 f' + (d-1) sin(2 f)
//   ym: y^3 g' + 2 (d-2) g (g-1) (g-2)
double tail_mismatch(const ModelParams& p, const SystemState& s);

}  // namespace selfsim
