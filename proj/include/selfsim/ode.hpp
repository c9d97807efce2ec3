// ode.hpp - adaptive embedded Runge-Kutta integration with dense output
// and event detection.
//
// The integrator is a Dormand-Prince 5(4) pair with a standard
// err^(-1/5) step controller (safety 0.9).  Dense output is cubic
// Hermite on the accepted steps; event locations are refined by
// bisection on the interpolant.  Everything here is a pure function of
// its inputs, so replaying a call is bit-identical.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace selfsim {

using Vec = std::vector<double>;

// Right-hand side: writes du = u'(y).  du is pre-sized to u.size().
using Rhs = std::function<void(double y, const Vec& u, Vec& du)>;

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double initial_step = 1e-4;   // first trial step
    double max_step = 0.1;
    std::size_t max_steps = 2'000'000;

    // Throws std::invalid_argument on non-positive tolerances/steps or
    // initial_step > max_step.
    void validate() const;
};

// Any solution component beyond this magnitude ends the integration
// with StopReason::diverged.  Profile values of interest live in
// [-pi, 2*pi + 1] and tails decay, so this is unambiguously off-branch.
inline constexpr double kDivergenceCap = 1e8;

struct SystemState {
    double y = 0.0;
    Vec u;
};

enum class EventDirection { rising, falling, any };

struct EventSpec {
    std::function<double(const SystemState&)> fn;
    EventDirection direction = EventDirection::any;
    bool terminal = false;
};

enum class StopReason { reached_end, event, diverged, step_limit };

const char* to_string(StopReason r);

struct Sample {
    double y;
    Vec u;
    Vec du;   // rhs evaluated at (y, u)
};

struct EventHit {
    double y;
    std::size_t event_index;
    Vec u;
};

struct Trajectory {
    std::vector<Sample> samples;   // y strictly increasing
    std::vector<EventHit> events;
    StopReason reason = StopReason::reached_end;
    std::size_t n_steps = 0;
    std::size_t n_rejected = 0;

    double y_front() const { return samples.front().y; }
    double y_back() const { return samples.back().y; }
    const Sample& back() const { return samples.back(); }

    // Cubic Hermite dense output.  Queries are clamped to the sampled span.
    SystemState at(double y) const;
};

struct StepResult {
    SystemState state;   // 5th-order solution at y + h
    Vec error;           // difference of the embedded 5th/4th order results
    bool diverged = false;
};

// One embedded DP5(4) step of size h > 0.
StepResult step(const Rhs& rhs, const SystemState& s, double h);

// Integrate from s0.y to y_end (requires s0.y < y_end).  Terminal events
// stop the integration at the refined event location.
Trajectory integrate(const Rhs& rhs, const SystemState& s0, double y_end,
                     const IntegratorConfig& cfg,
                     std::span<const EventSpec> events = {});

// Cubic Hermite basis evaluation on [y0, y1]; used by Trajectory::at and
// by the event refinement.
void hermite_eval(double y0, const Vec& u0, const Vec& du0,
                  double y1, const Vec& u1, const Vec& du1,
                  double y, Vec& out);

}  // namespace selfsim
