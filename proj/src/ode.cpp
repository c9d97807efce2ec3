#include "selfsim/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace selfsim {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;

constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;

// 5th-order minus 4th-order weights (error estimator).
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
constexpr double e4 = 125.0 / 192 - 393.0 / 640;
constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
constexpr double e7 = -1.0 / 40;

bool finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

struct StageWork {
    Vec k1, k2, k3, k4, k5, k6, k7, tmp;
    void resize(std::size_t n) {
        for (Vec* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &tmp}) v->assign(n, 0.0);
    }
};

// One DP5 step using preallocated stage storage.  Returns false if any
// stage or the result is non-finite.  k7 is the derivative at the new
// point (FSAL stage), handy as the stored sample derivative.
bool dp5_step(const Rhs& rhs, double y, const Vec& u, double h, StageWork& w,
              Vec& u_new, Vec& err) {
    const std::size_t n = u.size();
    rhs(y, u, w.k1);
    if (!finite(w.k1)) return false;
    for (std::size_t i = 0; i < n; ++i) w.tmp[i] = u[i] + h * a21 * w.k1[i];
    rhs(y + c2 * h, w.tmp, w.k2);
    for (std::size_t i = 0; i < n; ++i)
        w.tmp[i] = u[i] + h * (a31 * w.k1[i] + a32 * w.k2[i]);
    rhs(y + c3 * h, w.tmp, w.k3);
    for (std::size_t i = 0; i < n; ++i)
        w.tmp[i] = u[i] + h * (a41 * w.k1[i] + a42 * w.k2[i] + a43 * w.k3[i]);
    rhs(y + c4 * h, w.tmp, w.k4);
    for (std::size_t i = 0; i < n; ++i)
        w.tmp[i] = u[i] + h * (a51 * w.k1[i] + a52 * w.k2[i] + a53 * w.k3[i] +
                               a54 * w.k4[i]);
    rhs(y + c5 * h, w.tmp, w.k5);
    for (std::size_t i = 0; i < n; ++i)
        w.tmp[i] = u[i] + h * (a61 * w.k1[i] + a62 * w.k2[i] + a63 * w.k3[i] +
                               a64 * w.k4[i] + a65 * w.k5[i]);
    rhs(y + h, w.tmp, w.k6);
    for (std::size_t i = 0; i < n; ++i)
        u_new[i] = u[i] + h * (b1 * w.k1[i] + b3 * w.k3[i] + b4 * w.k4[i] +
                               b5 * w.k5[i] + b6 * w.k6[i]);
    if (!finite(u_new)) return false;
    rhs(y + h, u_new, w.k7);
    if (!finite(w.k7)) return false;
    for (std::size_t i = 0; i < n; ++i)
        err[i] = h * (e1 * w.k1[i] + e3 * w.k3[i] + e4 * w.k4[i] +
                      e5 * w.k5[i] + e6 * w.k6[i] + e7 * w.k7[i]);
    return finite(err);
}

double error_norm(const Vec& err, const Vec& u_old, const Vec& u_new,
                  const IntegratorConfig& cfg) {
    double m = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        double scale =
            cfg.abs_tol +
            cfg.rel_tol * std::max(std::abs(u_old[i]), std::abs(u_new[i]));
        m = std::max(m, std::abs(err[i]) / scale);
    }
    return m;
}

bool exceeds_cap(const Vec& u) {
    for (double x : u)
        if (std::abs(x) > kDivergenceCap) return true;
    return false;
}

}  // namespace

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0))
        throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
    if (!(initial_step > 0) || !(max_step > 0))
        throw std::invalid_argument("IntegratorConfig: step sizes must be positive");
    if (initial_step > max_step)
        throw std::invalid_argument("IntegratorConfig: initial_step > max_step");
    if (max_steps == 0)
        throw std::invalid_argument("IntegratorConfig: max_steps must be positive");
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::reached_end: return "reached_end";
        case StopReason::event: return "event";
        case StopReason::diverged: return "diverged";
        case StopReason::step_limit: return "step_limit";
    }
    return "unknown";
}

void hermite_eval(double y0, const Vec& u0, const Vec& du0, double y1,
                  const Vec& u1, const Vec& du1, double y, Vec& out) {
    const double h = y1 - y0;
    const double s = (y - y0) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    out.resize(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i)
        out[i] = h00 * u0[i] + h * h10 * du0[i] + h01 * u1[i] + h * h11 * du1[i];
}

SystemState Trajectory::at(double y) const {
    const auto& s = samples;
    SystemState out;
    if (y <= s.front().y) {
        out.y = s.front().y;
        out.u = s.front().u;
        return out;
    }
    if (y >= s.back().y) {
        out.y = s.back().y;
        out.u = s.back().u;
        return out;
    }
    std::size_t lo = 0, hi = s.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (s[mid].y <= y) lo = mid;
        else hi = mid;
    }
    out.y = y;
    hermite_eval(s[lo].y, s[lo].u, s[lo].du, s[hi].y, s[hi].u, s[hi].du, y, out.u);
    return out;
}

StepResult step(const Rhs& rhs, const SystemState& s, double h) {
    if (!(h > 0)) throw std::invalid_argument("step: h must be positive");
    StageWork w;
    w.resize(s.u.size());
    StepResult r;
    r.state.y = s.y + h;
    r.state.u.assign(s.u.size(), 0.0);
    r.error.assign(s.u.size(), 0.0);
    r.diverged = !dp5_step(rhs, s.y, s.u, h, w, r.state.u, r.error) ||
                 exceeds_cap(r.state.u);
    return r;
}

Trajectory integrate(const Rhs& rhs, const SystemState& s0, double y_end,
                     const IntegratorConfig& cfg,
                     std::span<const EventSpec> events) {
    cfg.validate();
    if (!(s0.y < y_end))
        throw std::invalid_argument("integrate: empty span (state0.y >= y_end)");

    const std::size_t n = s0.u.size();
    Trajectory traj;
    StageWork w;
    w.resize(n);

    Vec u = s0.u, u_new(n), err(n), du0(n);
    double y = s0.y;
    rhs(y, u, du0);
    if (!finite(du0) || !finite(u)) {
        traj.samples.push_back({y, u, du0});
        traj.reason = StopReason::diverged;
        return traj;
    }
    traj.samples.push_back({y, u, du0});

    std::vector<double> ev_prev(events.size());
    SystemState probe{y, u};
    for (std::size_t e = 0; e < events.size(); ++e) ev_prev[e] = events[e].fn(probe);

    double h = std::min({cfg.initial_step, cfg.max_step, y_end - y});
    const double h_floor = 1e-14;

    while (true) {
        if (traj.n_steps + traj.n_rejected >= cfg.max_steps) {
            traj.reason = StopReason::step_limit;
            return traj;
        }
        bool last = false;
        if (y + h >= y_end) {
            h = y_end - y;
            last = true;
        }
        if (!dp5_step(rhs, y, u, h, w, u_new, err)) {
            ++traj.n_rejected;
            h *= 0.5;
            last = false;
            if (h < h_floor * std::max(1.0, std::abs(y))) {
                traj.reason = StopReason::diverged;
                return traj;
            }
            continue;
        }
        const double enorm = error_norm(err, u, u_new, cfg);
        if (enorm > 1.0) {
            ++traj.n_rejected;
            h *= std::clamp(0.9 * std::pow(enorm, -0.2), 0.1, 0.9);
            if (h < h_floor * std::max(1.0, std::abs(y))) {
                traj.reason = StopReason::diverged;
                return traj;
            }
            continue;
        }

        // Accepted.  k7 is the derivative at (y + h, u_new).
        ++traj.n_steps;
        const double y_new = y + h;
        traj.samples.push_back({y_new, u_new, w.k7});
        const Sample& prev = traj.samples[traj.samples.size() - 2];
        const Sample& cur = traj.samples.back();

        // Event handling over [y, y_new] using the dense interpolant.
        double y_stop = std::numeric_limits<double>::infinity();
        std::size_t stop_index = 0;
        probe.y = y_new;
        probe.u = u_new;
        for (std::size_t e = 0; e < events.size(); ++e) {
            const double v_new = events[e].fn(probe);
            const double v_old = ev_prev[e];
            const bool rising = v_old < 0 && v_new >= 0;
            const bool falling = v_old > 0 && v_new <= 0;
            bool fired = false;
            switch (events[e].direction) {
                case EventDirection::rising: fired = rising; break;
                case EventDirection::falling: fired = falling; break;
                case EventDirection::any: fired = rising || falling; break;
            }
            ev_prev[e] = v_new;
            if (!fired) continue;

            // Bisect the sign change on the interpolant.
            double lo = y, hi = y_new, v_lo = v_old;
            SystemState mid_state;
            mid_state.u.resize(n);
            const double tol =
                std::max(cfg.rel_tol * std::max(std::abs(y_new), 1e-3),
                         4 * std::numeric_limits<double>::epsilon() *
                             (1.0 + std::abs(y_new)));
            for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
                const double mid = 0.5 * (lo + hi);
                hermite_eval(prev.y, prev.u, prev.du, cur.y, cur.u, cur.du, mid,
                             mid_state.u);
                mid_state.y = mid;
                const double vm = events[e].fn(mid_state);
                if ((v_lo < 0) == (vm < 0)) {
                    lo = mid;
                    v_lo = vm;
                } else {
                    hi = mid;
                }
            }
            const double y_hit = 0.5 * (lo + hi);
            Vec u_hit(n);
            hermite_eval(prev.y, prev.u, prev.du, cur.y, cur.u, cur.du, y_hit, u_hit);
            traj.events.push_back({y_hit, e, u_hit});
            if (events[e].terminal && y_hit < y_stop) {
                y_stop = y_hit;
                stop_index = traj.events.size() - 1;
            }
        }

        if (y_stop < std::numeric_limits<double>::infinity()) {
            // Truncate the trajectory at the terminal event location and
            // drop hits recorded beyond it within this step.
            const EventHit hit = traj.events[stop_index];
            std::erase_if(traj.events,
                          [&](const EventHit& h) { return h.y >= hit.y; });
            traj.events.push_back(hit);
            Vec du_hit(n);
            rhs(hit.y, hit.u, du_hit);
            traj.samples.back() = {hit.y, hit.u, du_hit};
            traj.reason = StopReason::event;
            return traj;
        }

        if (exceeds_cap(u_new)) {
            traj.reason = StopReason::diverged;
            return traj;
        }

        y = y_new;
        u = u_new;
        if (last) {
            traj.reason = StopReason::reached_end;
            return traj;
        }
        const double fac =
            (enorm == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
        h = std::min(h * fac, cfg.max_step);
    }
}

}  // namespace selfsim
