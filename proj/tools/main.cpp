// shrinkers - command-line front end: find / sweep / verify / spectrum.
//
// Exit codes: 0 success (an empty result set is a success), 1 numerical
// failure or failed verification, 2 invalid flags or inadmissible input.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "selfsim/output.hpp"

namespace {

selfsim::FlowKind parse_model(const std::string& s) {
    if (s == "hm") return selfsim::FlowKind::harmonic_map;
    if (s == "ym") return selfsim::FlowKind::yang_mills;
    throw CLI::ValidationError("--model", "must be hm or ym");
}

void add_common(CLI::App* cmd, selfsim::CliOptions& opt, std::string& model,
                std::string& format) {
    cmd->add_option("--model", model, "flow model: hm (harmonic map) or ym (Yang-Mills)")
        ->check(CLI::IsMember({"hm", "ym"}));
    cmd->add_option("--d", opt.d, "dimension parameter (real; hm needs d>2, ym d>4)");
    cmd->add_option("--rel-tol", opt.rel_tol, "integrator relative tolerance")
        ->capture_default_str();
    cmd->add_option("--abs-tol", opt.abs_tol, "integrator absolute tolerance")
        ->capture_default_str();
    cmd->add_option("--tail-tol", opt.tail_tol,
                    "tail match residual threshold for tail_matched")
        ->capture_default_str();
    cmd->add_option("--y-end", opt.y_end,
                    "tail evaluation point Y (0 = auto: max(12, 2 sqrt(2 d)); "
                    "spectrum: domain truncation, default 20)");
    cmd->add_option("--y-match", opt.y_match, "forward/backward matching point")
        ->capture_default_str();
    cmd->add_option("--out", opt.out, "output path ('-' = stdout)")
        ->capture_default_str();
    cmd->add_option("--format", format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "shrinkers - self-similar shrinking profiles of the equivariant "
        "harmonic-map and Yang-Mills heat flows"};
    app.require_subcommand(1);

    selfsim::CliOptions opt;
    std::string model = "hm", format = "csv";

    CLI::App* find = app.add_subcommand(
        "find", "sweep, bracket and refine shrinker profiles up to n-max crossings");
    add_common(find, opt, model, format);
    find->add_option("--n-max", opt.n_max, "largest crossing count to search for")
        ->capture_default_str();
    find->add_option("--a-min", opt.a_min, "sweep window lower edge")->capture_default_str();
    find->add_option("--a-max", opt.a_max, "sweep window upper edge")->capture_default_str();
    find->add_option("--n", opt.n_grid, "sweep grid points")->capture_default_str();
    find->add_option("--tol-a", opt.tol_a, "bisection width target")->capture_default_str();
    find->add_option("--profile-points", opt.profile_points,
                     "rows in each profile CSV")->capture_default_str();

    CLI::App* sweep = app.add_subcommand(
        "sweep", "classify a log-spaced grid of shooting parameters");
    add_common(sweep, opt, model, format);
    sweep->add_option("--a-min", opt.a_min, "sweep window lower edge")->capture_default_str();
    sweep->add_option("--a-max", opt.a_max, "sweep window upper edge")->capture_default_str();
    sweep->add_option("--n", opt.n_grid, "sweep grid points")->capture_default_str();

    CLI::App* verify = app.add_subcommand(
        "verify", "run the invariant suite for the given model and dimension");
    add_common(verify, opt, model, format);

    CLI::App* spectrum = app.add_subcommand(
        "spectrum", "equator-map spectral scan: discriminant and Morse index");
    add_common(spectrum, opt, model, format);
    spectrum->add_option("--d-min", opt.d_min, "scan start")->capture_default_str();
    spectrum->add_option("--d-max", opt.d_max, "scan end")->capture_default_str();
    spectrum->add_option("--d-step", opt.d_step, "scan step")->capture_default_str();
    spectrum->add_option("--nodes", opt.nodes, "grid nodes")->capture_default_str();
    spectrum->add_option("--y-min", opt.y_min, "domain truncation at the origin")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        opt.model = parse_model(model);
        opt.format = format == "json" ? selfsim::OutputFormat::json
                                      : selfsim::OutputFormat::csv;
        if (find->parsed()) return selfsim::run_find(opt, std::cout, std::cerr);
        if (sweep->parsed()) return selfsim::run_sweep(opt, std::cout, std::cerr);
        if (verify->parsed()) return selfsim::run_verify(opt, std::cout, std::cerr);
        if (spectrum->parsed()) return selfsim::run_spectrum(opt, std::cout, std::cerr);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        nlohmann::ordered_json diag;
        diag["error"] = e.what();
        diag["command"] = argc > 1 ? argv[1] : "";
        std::cerr << diag.dump(2) << "\n";
        return 1;
    }
}
