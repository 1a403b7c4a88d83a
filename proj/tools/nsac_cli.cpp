// Command line front end: profile, simulate, sharp, converge, spectrum.
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nsac/harness.hpp"
#include "nsac/profile.hpp"
#include "nsac/sharp.hpp"
#include "nsac/solver.hpp"
#include "nsac/spectral.hpp"

namespace fs = std::filesystem;
using namespace nsac;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kAbort = 3;

void print_report(const ErrorReport& r) {
    std::printf("eps=%g err_v_LinfL2=%.4e err_v_L2H1=%.4e err_c_LinfL2=%.4e err_c_L2H1tau=%.4e\n", r.eps,
                r.err_v_LinfL2, r.err_v_L2H1, r.err_c_LinfL2, r.err_c_L2H1tau);
    std::printf("  err_c_grad_LinfL2=%.4e err_mu_L2=%.4e err_c_L4=%.4e energy_residual=%.4e radius_error=%.4e\n",
                r.err_c_grad_LinfL2, r.err_mu_L2, r.err_c_L4, r.energy_residual, r.radius_error);
}

int cmd_profile(const std::string& out, double half_length, int points) {
    const ProfileTable table = solve_profile(Potential::quartic(), half_length, static_cast<std::size_t>(points));
    if (out.empty() || out == "-") {
        std::cout.flush();
        write_profile_csv(table, fs::path("/dev/stdout"));
    } else {
        write_profile_csv(table, fs::path(out));
        std::printf("sigma=%.15g alpha=%.15g -> %s\n", table.sigma, table.alpha, out.c_str());
    }
    return kOk;
}

int cmd_simulate(const ExperimentConfig& cfg, double eps) {
    const ProfileTable profile = solve_profile(Potential::quartic());
    const double e = eps > 0.0 ? eps : cfg.eps.front();
    char name[48];
    std::snprintf(name, sizeof(name), "eps_%.6g", e);
    bool monotone = true;
    double div = 0.0;
    const ErrorReport r = run_single(cfg, e, profile, cfg.dir / name, &monotone, &div);
    print_report(r);
    std::printf("  energy_monotone=%d max_divergence=%.3e\n", monotone ? 1 : 0, div);
    write_error_csv({r}, cfg.dir / name / "errors.csv");
    return kOk;
}

int cmd_sharp(const ExperimentConfig& cfg) {
    SharpState s{0.0, initial_curve(cfg), {}};
    std::vector<SharpState> traj{s};
    const int nsaves = static_cast<int>(std::ceil(cfg.t_end / cfg.save_every - 1e-9));
    for (int k = 1; k <= nsaves; ++k) {
        s = advance_curve(s, std::min(cfg.t_end, k * cfg.save_every), 1.0);
        traj.push_back(s);
        std::printf("t=%.6g mean_radius=%.10g", s.t, s.curve.mean_radius());
        if (cfg.kind == "circle") std::printf(" exact=%.10g", exact_circle_radius(cfg.r0, s.t));
        std::printf("\n");
    }
    write_trajectory(traj, cfg.dir / "sharp");
    return kOk;
}

int cmd_converge(const ExperimentConfig& cfg) {
    const SweepResult res = run_experiment(cfg);
    for (const auto& r : res.reports) print_report(r);
    for (const auto& [name, fit] : res.rates)
        std::printf("rate %-18s slope=%.4f r2=%.4f\n", name.c_str(), fit.slope, fit.r_squared);
    std::printf("energy_monotone=%d max_divergence=%.3e\n", res.energy_monotone ? 1 : 0, res.max_divergence);
    int code = kOk;
    for (std::size_t k = 0; k < res.failures.size(); ++k)
        if (!res.failures[k].empty()) {
            std::fprintf(stderr, "eps=%g aborted: %s\n", cfg.eps[k], res.failures[k].c_str());
            code = kAbort;
        }
    return code;
}

int cmd_spectrum(const ExperimentConfig& cfg, double budget) {
    const ProfileTable profile = solve_profile(Potential::quartic());
    SpectralSetup setup{initial_curve(cfg), cfg.lx, cfg.ly, cfg.nx_ratio, cfg.delta};
    const SpectralReport rep = verify_spectral_bound(setup, profile, cfg.eps, budget);
    for (const auto& row : rep.rows)
        std::printf("eps=%g lambda_L=%.6g lambda_L_minus_T=%.6g naive=%.6g %s\n", row.eps, row.lambda_L,
                    row.lambda_L_minus_T, row.naive_bound, row.pass ? "ok" : "below budget");
    fs::create_directories(cfg.dir);
    write_spectral_csv(rep, cfg.dir / "spectrum.csv");
    std::printf("bound C=%g: %s\n", rep.c_budget, rep.pass ? "PASS" : "FAIL");
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffuse-interface Navier-Stokes/Allen-Cahn laboratory"};
    app.require_subcommand(1);

    std::string config, out = "-";
    double half_length = 20.0, eps = 0.0, budget = 10.0;
    int points = 4001;

    auto* profile = app.add_subcommand("profile", "tabulate the optimal profile as CSV");
    profile->add_option("-o,--out", out, "output file, '-' for stdout");
    profile->add_option("--half-length", half_length, "table covers [-L, L]");
    profile->add_option("--points", points, "odd number of table points");

    auto* simulate = app.add_subcommand("simulate", "single diffuse run");
    simulate->add_option("--config", config, "experiment file")->required();
    simulate->add_option("--eps", eps, "eps to run (default: first of the list)");

    auto* sharp = app.add_subcommand("sharp", "sharp-interface tracker only");
    sharp->add_option("--config", config, "experiment file")->required();

    auto* converge = app.add_subcommand("converge", "eps sweep with rate fits");
    converge->add_option("--config", config, "experiment file")->required();

    auto* spectrum = app.add_subcommand("spectrum", "smallest eigenvalues of the linearized operator");
    spectrum->add_option("--config", config, "experiment file")->required();
    spectrum->add_option("--budget", budget, "uniform lower bound -C to test");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (profile->parsed()) return cmd_profile(out, half_length, points);
        const ExperimentConfig cfg = load_config(config);
        cfg.validate();
        if (simulate->parsed()) return cmd_simulate(cfg, eps);
        if (sharp->parsed()) return cmd_sharp(cfg);
        if (converge->parsed()) return cmd_converge(cfg);
        if (spectrum->parsed()) return cmd_spectrum(cfg, budget);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const SolverAbort& e) {
        std::fprintf(stderr, "solver abort: %s\n", e.what());
        return kAbort;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kOk;
}
