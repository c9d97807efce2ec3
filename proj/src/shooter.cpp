#include "selfsim/shooter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace selfsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTransversalTol = 1e-12;  // |v'| below this = tangential touch

double launch_offset(const ShooterConfig& cfg, double a) {
    return cfg.y_start > 0 ? cfg.y_start : default_launch_offset(a);
}

int transversal_crossings(const Trajectory& traj, double y_max) {
    int n = 0;
    for (const auto& hit : traj.events)
        if (hit.event_index == 0 && hit.y <= y_max &&
            std::abs(hit.u[1]) > kTransversalTol)
            ++n;
    return n;
}

double max_type1_along(const ModelParams& p, const Trajectory& traj) {
    if (p.kind != FlowKind::harmonic_map) return kNaN;
    double m = 0.0;
    for (const auto& s : traj.samples)
        m = std::max(m, type1_quantity(p, {s.y, s.u}));
    return m;
}

// Backward pass in s = -y so the engine's increasing-variable contract
// holds; this is the contracting direction for the growing mode.
Trajectory integrate_tail_down(const ModelParams& p, const ShooterConfig& cfg,
                               double b, double Y, double y_match) {
    const Rhs fwd = make_rhs(p);
    Rhs back = [fwd](double s, const Vec& u, Vec& du) {
        fwd(-s, u, du);
        du[0] = -du[0];
        du[1] = -du[1];
    };
    SystemState top = tail_state_series(p, {b, Y}, cfg.tail_order);
    SystemState s0{-Y, top.u};
    const double eq = equator_value(p);
    const EventSpec cross{[eq](const SystemState& st) { return st.u[0] - eq; },
                          EventDirection::any, false};
    return integrate(back, s0, -y_match, cfg.integ, {&cross, 1});
}

struct TailMatch {
    double b = kNaN;
    double match_residual = kNaN;
    Trajectory down;   // in s = -y coordinates
};

// Solve for the limit value b whose tail trajectory meets the forward
// value at y_match; the derivative jump there is the match residual.
std::optional<TailMatch> match_tail(const ModelParams& p, const ShooterConfig& cfg,
                                    const Trajectory& fwd, double Y) {
    const double ym = cfg.y_match;
    if (fwd.y_back() < ym) return std::nullopt;
    const SystemState target = fwd.at(ym);
    if (!std::isfinite(target.u[0]) || std::abs(target.u[0]) > 100.0)
        return std::nullopt;

    // Initial estimate: invert the leading tail asymptotic at y_match.
    double b0 = target.u[0];
    for (int i = 0; i < 4; ++i) {
        const auto e = tail_series(p, b0, 1);
        b0 = target.u[0] - e[1] / (ym * ym);
    }

    auto value_gap = [&](double b) {
        Trajectory down = integrate_tail_down(p, cfg, b, Y, ym);
        if (down.reason != StopReason::reached_end)
            return std::pair<double, Trajectory>(kNaN, std::move(down));
        return std::pair<double, Trajectory>(down.back().u[0] - target.u[0],
                                             std::move(down));
    };

    double lo = b0 - 0.05, hi = b0 + 0.05;
    double glo = value_gap(lo).first, ghi = value_gap(hi).first;
    for (int i = 0; i < 24 && !(glo * ghi < 0); ++i) {
        lo -= 0.08;
        hi += 0.08;
        glo = value_gap(lo).first;
        ghi = value_gap(hi).first;
        if (!std::isfinite(glo) || !std::isfinite(ghi)) return std::nullopt;
    }
    if (!(glo * ghi < 0)) return std::nullopt;

    Trajectory down;
    double b = b0;
    for (int i = 0; i < 120 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++i) {
        b = 0.5 * (lo + hi);
        auto [g, traj] = value_gap(b);
        if (!std::isfinite(g)) return std::nullopt;
        down = std::move(traj);
        if ((g < 0) == (glo < 0)) {
            lo = b;
            glo = g;
        } else {
            hi = b;
        }
    }
    // The backward state components are the values (v, v') themselves; only
    // the s-derivatives carry the sign flip.
    TailMatch m;
    m.b = b;
    m.match_residual = std::abs(down.back().u[1] - target.u[1]);
    m.down = std::move(down);
    return m;
}

// Forward part up to y_match, then the reversed tail part.  Derivatives of
// the backward samples flip sign with the variable change.
Trajectory stitch(const Trajectory& fwd, const Trajectory& down, double y_match) {
    Trajectory out;
    out.reason = StopReason::reached_end;
    for (const auto& s : fwd.samples) {
        if (s.y > y_match) break;
        out.samples.push_back(s);
    }
    for (auto it = down.samples.rbegin(); it != down.samples.rend(); ++it) {
        const double y = -it->y;
        if (!out.samples.empty() && y <= out.samples.back().y + 1e-12) continue;
        out.samples.push_back({y, it->u, {-it->du[0], -it->du[1]}});
    }
    for (const auto& hit : fwd.events)
        if (hit.y <= y_match) out.events.push_back(hit);
    for (auto it = down.events.rbegin(); it != down.events.rend(); ++it)
        if (-it->y > y_match) out.events.push_back({-it->y, it->event_index, it->u});
    out.n_steps = fwd.n_steps + down.n_steps;
    return out;
}

int stitched_crossings(const Trajectory& profile) {
    int n = 0;
    for (const auto& hit : profile.events)
        if (hit.event_index == 0 && std::abs(hit.u[1]) > kTransversalTol) ++n;
    return n;
}

// Exit-direction sign without the tail-match attempt; this is all the
// bisection needs and it skips the backward solves.
double direction_sign(const ModelParams& p, double a, const ShooterConfig& cfg) {
    Trajectory fwd = launch_forward(p, a, cfg);
    const Sample& end = fwd.back();
    if (!std::isfinite(end.u[0]) || !std::isfinite(end.u[1]))
        throw std::runtime_error("shoot trajectory lost finiteness; no direction sign");
    const double m = tail_mismatch(p, {end.y, end.u});
    if (m == 0) throw std::runtime_error("degenerate zero mismatch; no direction sign");
    return m > 0 ? 1.0 : -1.0;
}

// Residual of the limit condition lim y^3 v' = -(d-1) sin(2b) (hm) /
// -2(d-2) b(b-1)(b-2) (ym), evaluated on the integrated tail at y_eval
// with the subleading y^(-2k) corrections of the b-family removed.  The
// uncorrected first-order form carries an irreducible O(Y^-2) offset at
// any finite Y, so this is the sharp realization of the decay condition.
double tail_limit_residual(const ModelParams& p, const Trajectory& profile,
                           double b, int tail_order, double y_eval) {
    const SystemState s = profile.at(y_eval);
    const double y = s.y;
    const auto e = tail_series(p, b, tail_order);
    double est = y * y * y * s.u[1];
    double pw = 1.0;  // y^(2-2k) accumulator starting at k=2
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 2; k < static_cast<int>(e.size()); ++k) {
        pw /= y * y;
        const double term = 2.0 * k * e[k] * pw;
        if (std::abs(term) > prev) break;   // asymptotic series: stop at the smallest term
        est += term;
        prev = std::abs(term);
    }
    const double limit = p.kind == FlowKind::harmonic_map
                             ? -(p.d - 1) * std::sin(2 * b)
                             : -2 * (p.d - 2) * b * (b - 1) * (b - 2);
    return std::abs(est - limit);
}

}  // namespace

const char* to_string(ExitKind e) {
    switch (e) {
        case ExitKind::tail_matched: return "tail_matched";
        case ExitKind::overshoot_top: return "overshoot_top";
        case ExitKind::undershoot_bottom: return "undershoot_bottom";
        case ExitKind::diverged: return "diverged";
        case ExitKind::inconclusive: return "inconclusive";
    }
    return "unknown";
}

ShooterConfig default_shooter_config(const ModelParams& p) {
    ShooterConfig cfg;
    cfg.y_end = effective_y_end(p, cfg);
    return cfg;
}

double effective_y_end(const ModelParams& p, const ShooterConfig& cfg) {
    if (cfg.y_end > 0) return cfg.y_end;
    return std::max(12.0, 2 * std::sqrt(2 * p.d));
}

double tail_mismatch(const ModelParams& p, const SystemState& s) {
    const double y3 = s.y * s.y * s.y;
    if (p.kind == FlowKind::harmonic_map)
        return y3 * s.u[1] + (p.d - 1) * std::sin(2 * s.u[0]);
    const double g = s.u[0];
    return y3 * s.u[1] + 2 * (p.d - 2) * g * (g - 1) * (g - 2);
}

Trajectory launch_forward(const ModelParams& p, double a, const ShooterConfig& cfg) {
    p.validate();
    const double y0 = launch_offset(cfg, a);
    const SystemState s0 = series_origin(p, {a, y0, cfg.series_order});
    const double eq = equator_value(p);
    const EventSpec cross{[eq](const SystemState& st) { return st.u[0] - eq; },
                          EventDirection::any, false};
    return integrate(make_rhs(p), s0, effective_y_end(p, cfg), cfg.integ, {&cross, 1});
}

ShootOutcome shoot(const ModelParams& p, double a, const ShooterConfig& cfg) {
    if (!(a > 0)) throw std::invalid_argument("shoot: requires a > 0");
    const double Y = effective_y_end(p, cfg);
    Trajectory fwd = launch_forward(p, a, cfg);

    ShootOutcome out;
    out.a = a;
    out.crossings = transversal_crossings(fwd, Y);
    out.y_exit = fwd.y_back();
    out.max_type1 = max_type1_along(p, fwd);
    out.b_estimate = kNaN;
    out.match_residual = kNaN;

    const Sample& end = fwd.back();
    const bool end_finite = std::isfinite(end.u[0]) && std::isfinite(end.u[1]);
    out.miss = end_finite ? tail_mismatch(p, {end.y, end.u}) : kNaN;

    if (fwd.reason == StopReason::step_limit) {
        out.exit = ExitKind::inconclusive;
        return out;
    }
    if (!end_finite || !std::isfinite(out.miss)) {
        out.exit = ExitKind::diverged;
        return out;
    }
    if (fwd.reason == StopReason::diverged) {
        // Finite cap exit: classify by the runaway direction.
        out.exit = end.u[1] > 0 ? ExitKind::overshoot_top : ExitKind::undershoot_bottom;
        return out;
    }

    // Reached Y.  Try the tail match; near-misses fail on the residual.
    auto match = match_tail(p, cfg, fwd, Y);
    if (match) {
        out.match_residual = match->match_residual;
        // Genuine profiles keep the type-I quantity near its origin value
        // d a^2, which outgrows any absolute cap once the window extends.
        const bool bounded =
            p.kind != FlowKind::harmonic_map ||
            out.max_type1 < std::max(cfg.bound_cap, 4 * type1_origin_limit(p, a));
        if (match->match_residual < cfg.tail_tol && bounded) {
            out.exit = ExitKind::tail_matched;
            out.b_estimate = match->b;
            // The raw forward count picks up spurious crossings in the
            // final runaway stretch; the matched profile's count is the
            // family index.
            out.crossings = stitched_crossings(stitch(fwd, match->down, cfg.y_match));
            return out;
        }
    }
    if (out.miss == 0) {
        out.exit = ExitKind::inconclusive;
        return out;
    }
    out.exit = out.miss > 0 ? ExitKind::overshoot_top : ExitKind::undershoot_bottom;
    // Limit estimate from f(Y) corrected by the tail asymptotic.
    double b = end.u[0];
    for (int i = 0; i < 3; ++i) {
        const auto e = tail_series(p, b, 1);
        b = end.u[0] - e[1] / (Y * Y);
    }
    out.b_estimate = b;
    return out;
}

SweepTable bracket_sweep(const ModelParams& p, const ShooterConfig& cfg,
                         double a_min, double a_max, int n_grid) {
    p.validate();
    if (!(0 < a_min && a_min < a_max))
        throw std::invalid_argument("bracket_sweep: requires 0 < a_min < a_max");
    if (n_grid < 2) throw std::invalid_argument("bracket_sweep: n_grid >= 2");

    SweepTable table;
    table.rows.reserve(n_grid);
    const double ratio = a_max / a_min;
    for (int i = 0; i < n_grid; ++i) {
        const double a = a_min * std::pow(ratio, double(i) / (n_grid - 1));
        table.rows.push_back({a, shoot(p, a, cfg)});
    }
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
        const ShootOutcome& lo = table.rows[i].outcome;
        const ShootOutcome& hi = table.rows[i + 1].outcome;
        if (std::isfinite(lo.miss) && std::isfinite(hi.miss) &&
            ((lo.miss > 0) != (hi.miss > 0)))
            table.brackets.push_back({i, i + 1, BracketReason::miss_sign_change});
        else if (lo.crossings != hi.crossings)
            table.brackets.push_back({i, i + 1, BracketReason::crossing_change});
    }
    return table;
}

ShrinkerSolution refine(const ModelParams& p, const ShooterConfig& cfg,
                        double a_lo, double a_hi, double tol_a) {
    p.validate();
    if (!(tol_a > 0)) throw std::invalid_argument("refine: tol_a must be positive");
    if (!(0 < a_lo && a_lo < a_hi))
        throw std::invalid_argument("refine: requires 0 < a_lo < a_hi");

    const double Y = effective_y_end(p, cfg);
    const double s_lo = direction_sign(p, a_lo, cfg);
    const double s_hi = direction_sign(p, a_hi, cfg);
    if (s_lo == s_hi)
        throw BracketDissolved("refine: same direction sign at both bracket ends");

    double lo = a_lo, hi = a_hi;
    // Bisect to tol_a (and at least far enough that the midpoint
    // trajectory survives to Y; the matching window in a is narrower than
    // a loose tol_a).
    for (int it = 0; it < 220; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (direction_sign(p, mid, cfg) == s_lo) lo = mid;
        else hi = mid;
        if (hi - lo < tol_a) {
            Trajectory probe = launch_forward(p, 0.5 * (lo + hi), cfg);
            if (probe.reason == StopReason::reached_end) break;
        }
    }

    const double a = 0.5 * (lo + hi);
    Trajectory fwd = launch_forward(p, a, cfg);
    auto match = match_tail(p, cfg, fwd, Y);
    if (!match || !(match->match_residual < cfg.tail_tol))
        throw BracketDissolved("refine: tail match failed at the converged parameter");

    ShrinkerSolution sol;
    sol.a = a;
    sol.b = match->b;
    sol.a_width = hi - lo;
    sol.match_residual = match->match_residual;
    sol.profile = stitch(fwd, match->down, cfg.y_match);
    sol.n = stitched_crossings(sol.profile);
    sol.max_type1 = max_type1_along(p, sol.profile);
    sol.energy = kNaN;  // filled by diagnostics::profile_energy via the caller
    sol.tail_residual = tail_limit_residual(p, sol.profile, sol.b, cfg.tail_order,
                                            std::max(cfg.y_match + 1.0, Y - 1.0));
    if (sol.n < 1)
        throw BracketDissolved("refine: converged profile has no equator crossing");
    return sol;
}

std::vector<ShrinkerSolution> find_shrinkers(const ModelParams& p,
                                             const ShooterConfig& cfg, int n_max) {
    p.validate();
    if (n_max < 1) throw std::invalid_argument("find_shrinkers: n_max >= 1");

    std::vector<ShrinkerSolution> found;
    auto have = [&](int n) {
        return std::any_of(found.begin(), found.end(),
                           [n](const ShrinkerSolution& s) { return s.n == n; });
    };
    auto missing = [&] {
        for (int n = 1; n <= n_max; ++n)
            if (!have(n)) return true;
        return false;
    };

    double win_lo = cfg.a_min, win_hi = cfg.a_max;
    int grid = cfg.n_grid;
    const double hard_cap = 5e4;
    while (true) {
        SweepTable table = bracket_sweep(p, cfg, win_lo, win_hi, grid);
        for (const Bracket& br : table.brackets) {
            if (br.reason != BracketReason::miss_sign_change) continue;
            try {
                ShrinkerSolution sol = refine(p, cfg, table.rows[br.lo].a,
                                              table.rows[br.hi].a, cfg.tol_a);
                if (sol.n >= 1 && sol.n <= n_max && !have(sol.n))
                    found.push_back(std::move(sol));
            } catch (const BracketDissolved&) {
                // tangency or spurious bracket; skip
            }
        }
        if (!missing() || win_hi >= hard_cap) break;
        win_lo = win_hi;
        win_hi = std::min(win_hi * 10.0, hard_cap);
        grid = std::max(cfg.n_grid / 2, 100);
    }
    std::sort(found.begin(), found.end(),
              [](const ShrinkerSolution& x, const ShrinkerSolution& y) {
                  return x.n < y.n;
              });
    return found;
}

}  // namespace selfsim
