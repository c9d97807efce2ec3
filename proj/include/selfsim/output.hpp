// output.hpp - command implementations behind the cli: find / sweep /
// verify / spectrum, with deterministic CSV and JSON writers.
//
// CSV files start with '#' metadata comment lines echoing the full
// configuration, then a header row.  Floats are written in shortest
// round-trip form.  JSON output is one object with "config", "results"
// and "checks" keys.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "selfsim/shooter.hpp"

namespace selfsim {

enum class OutputFormat { csv, json };

struct CliOptions {
    FlowKind model = FlowKind::harmonic_map;
    double d = 3.0;
    int n_max = 1;
    double a_min = 0.05;
    double a_max = 50.0;
    int n_grid = 500;
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double tail_tol = 1e-6;
    double tol_a = 1e-12;
    double y_end = 0.0;       // 0 = per-command default
    double y_match = 6.0;
    int profile_points = 1201;

    // spectrum scan
    double d_min = 6.5;
    double d_max = 8.0;
    double d_step = 0.05;
    int nodes = 2000;
    double y_min = 1e-3;

    std::string out = "-";    // "-" = stdout
    OutputFormat format = OutputFormat::csv;
};

ShooterConfig shooter_config_from(const CliOptions& opt);

// Shortest round-trip decimal form of a double ("nan"/"inf" spelled out).
std::string format_double(double v);

struct CheckResult {
    std::string name;
    bool pass;
    double residual;
    double tolerance;
};

// The per-model invariant suite: constant solutions, reflection symmetry,
// series residual orders, h-equation consistency, and the model-specific
// checks (integral form for hm, explicit g1 for ym).
std::vector<CheckResult> verification_suite(const ModelParams& p,
                                            const ShooterConfig& cfg);

int run_find(const CliOptions& opt, std::ostream& out, std::ostream& err);
int run_sweep(const CliOptions& opt, std::ostream& out, std::ostream& err);
int run_verify(const CliOptions& opt, std::ostream& out, std::ostream& err);
int run_spectrum(const CliOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace selfsim
