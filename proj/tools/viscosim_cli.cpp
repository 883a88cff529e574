// viscosim command-line front end.
//
// Subcommands:
//   identify      adaptive parameter identification on a simulated plant
//   dual-loop     admittance outer loop + backstepping boundary inner loop
//   oracle-check  explicit solver vs. the exact eigen-series solution
//   kernel        control-kernel table dump and PDE residual diagnostics
//   passivity     positive-real check of the admittance transfer function
//
// Exit codes: 0 success, 1 threshold failure, 2 usage/config error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "viscosim/runner.hpp"

namespace {

struct RunArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool svg = false;
    bool force = false;
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
    cmd->add_option("--config", args.config, "scenario configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out, "output directory for artifacts")->required();
    cmd->add_option("--seed", args.seed, "override the scenario RNG seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_flag("--svg", args.svg, "also write an SVG slice heatmap");
    cmd->add_flag("--force", args.force, "overwrite a non-empty output directory");
}

int run_pipeline(const RunArgs& args, viscosim::RunMode expected, const char* subcommand) {
    viscosim::Scenario sc = viscosim::load_scenario(args.config);
    if (sc.mode != expected)
        throw viscosim::ConfigError(std::string("scenario mode does not match the '") +
                                    subcommand + "' subcommand");
    viscosim::RunOptions opt;
    opt.out_dir = args.out;
    opt.svg = args.svg;
    opt.force = args.force;
    if (args.seed_set)
        opt.seed_override = args.seed;

    const viscosim::RunReport rep = viscosim::run_scenario(sc, opt);
    std::cout << "scenario: " << rep.scenario << " (" << rep.mode << ")\n";
    for (const auto& [k, v] : rep.values)
        std::cout << "  " << k << " = " << viscosim::fmt_g17(v) << '\n';
    for (const auto& f : rep.flags)
        std::cout << "  flag: " << f << '\n';
    std::cout << "  artifacts in " << args.out << '\n';
    std::cout << (rep.exit_code == 0 ? "OK" : "THRESHOLD FAILURE") << '\n';
    return rep.exit_code;
}

int run_kernel(double c, double delta, std::size_t panels, const std::string& out) {
    const viscosim::KernelResidualReport rep =
        viscosim::kernel_pde_residual(c, delta, panels);
    std::cout << "kernel diagnostics (c = " << viscosim::fmt_g17(c)
              << ", delta = " << viscosim::fmt_g17(delta) << ", h = " << viscosim::fmt_g17(rep.h)
              << ")\n";
    std::cout << "  max |k_xx - k_xixi - c k| (interior) = "
              << viscosim::fmt_g17(rep.max_abs_interior) << '\n';
    std::cout << "  relative to reaction scale           = "
              << viscosim::fmt_g17(rep.max_rel_interior) << '\n';
    std::cout << "  max |k(x, 0)|                        = " << viscosim::fmt_g17(rep.max_edge)
              << '\n';
    std::cout << "  max |k(x, x) + c x/2|                = " << viscosim::fmt_g17(rep.max_diag)
              << '\n';
    if (!out.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out);
        const viscosim::KernelTable table = viscosim::KernelTable::build(c, delta, panels);
        std::ofstream os(fs::path(out) / "kernel_table.csv", std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot write kernel_table.csv");
        os << "x,xi,k\n";
        for (std::size_t i = 0; i <= table.n; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                os << viscosim::fmt_g17(table.node(i)) << ',' << viscosim::fmt_g17(table.node(j))
                   << ',' << viscosim::fmt_g17(table.at(i, j)) << '\n';
        std::cout << "  table written to " << (fs::path(out) / "kernel_table.csv").string()
                  << '\n';
    }
    return 0;
}

int run_passivity(const viscosim::ControlGains& gains) {
    const viscosim::PassivityReport rep = viscosim::passivity_check(gains);
    std::cout << "G(s) = (" << viscosim::fmt_g17(gains.a1) << " + " << viscosim::fmt_g17(gains.a2)
              << " s)/(" << viscosim::fmt_g17(gains.lambda1) << " + "
              << viscosim::fmt_g17(gains.lambda2) << " s)\n";
    std::cout << "  margin (min Re G over 61 probe frequencies) = "
              << viscosim::fmt_g17(rep.margin) << '\n';
    std::cout << "  verdict: " << (rep.passive ? "passive" : "NOT passive") << " (" << rep.reason
              << ")\n";
    return rep.passive ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"viscoelastic manipulation control stack: simulation and analysis"};
    app.require_subcommand(1);

    RunArgs identify_args, dual_args, oracle_args;
    add_run_options(app.add_subcommand("identify", "adaptive parameter identification"),
                    identify_args);
    add_run_options(app.add_subcommand("dual-loop", "admittance + boundary-control run"),
                    dual_args);
    add_run_options(app.add_subcommand("oracle-check", "solver vs. eigen-series reference"),
                    oracle_args);

    double kc = 1.0, kdelta = 1.0;
    std::size_t kpanels = 256;
    std::string kout;
    CLI::App* kernel_cmd = app.add_subcommand("kernel", "kernel table and residual diagnostics");
    kernel_cmd->add_option("--c", kc, "kernel parameter c = lambda*/eps*")->required();
    kernel_cmd->add_option("--delta", kdelta, "depth extent")->check(CLI::PositiveNumber);
    kernel_cmd->add_option("--panels", kpanels, "grid panels per axis (>= 32)");
    kernel_cmd->add_option("--out", kout, "directory for the kernel table CSV");

    viscosim::ControlGains pgains;
    std::string pconfig;
    CLI::App* pass_cmd = app.add_subcommand("passivity", "admittance positive-real check");
    pass_cmd->add_option("--config", pconfig, "read gains from a dual_loop scenario")
        ->check(CLI::ExistingFile);
    pass_cmd->add_option("--lambda1", pgains.lambda1, "denominator constant");
    pass_cmd->add_option("--lambda2", pgains.lambda2, "denominator rate gain");
    pass_cmd->add_option("--a1", pgains.a1, "numerator constant");
    pass_cmd->add_option("--a2", pgains.a2, "numerator rate gain");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("identify"))
            return run_pipeline(identify_args, viscosim::RunMode::identify, "identify");
        if (app.got_subcommand("dual-loop"))
            return run_pipeline(dual_args, viscosim::RunMode::dual_loop, "dual-loop");
        if (app.got_subcommand("oracle-check"))
            return run_pipeline(oracle_args, viscosim::RunMode::oracle_check, "oracle-check");
        if (app.got_subcommand("kernel"))
            return run_kernel(kc, kdelta, kpanels, kout);
        if (app.got_subcommand("passivity")) {
            if (!pconfig.empty()) {
                const viscosim::Scenario sc = viscosim::load_scenario(pconfig);
                if (sc.mode != viscosim::RunMode::dual_loop)
                    throw viscosim::ConfigError("passivity --config expects a dual_loop scenario");
                pgains = sc.dual.gains;
            }
            return run_passivity(pgains);
        }
    } catch (const viscosim::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
