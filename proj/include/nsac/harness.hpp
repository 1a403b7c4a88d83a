/// @file harness.hpp
/// @brief Experiment configuration, error norms against the approximate
///        solution, log-log rate fitting and the eps sweep driver.
#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsac/approx.hpp"
#include "nsac/field.hpp"
#include "nsac/geometry.hpp"
#include "nsac/solver.hpp"

namespace nsac {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // [domain]
    double nx_ratio = 4.0;  ///< h = eps / nx_ratio
    double lx = 1.0;
    double ly = 1.0;
    Boundary bc = Boundary::dirichlet_box;
    // [interface]
    std::string kind = "circle";  ///< "circle" or "file:<path>"
    double cx = 0.5;
    double cy = 0.5;
    double r0 = 0.4;
    double delta = 0.0;  ///< 0 selects max(default_delta, 5 eps)
    // [sweep]
    std::vector<double> eps{0.08, 0.04, 0.02};
    double t_end = 0.05;
    double save_every = 0.01;
    // [solver]
    std::string dt_rule = "default";  ///< "default" or a factor f with dt = f min(h^2, eps^2)
    double cg_tol = 1e-10;
    double stabilization = 1.0;
    // [output]
    std::filesystem::path dir = "out";

    /// Markers used for the tracked and extracted curves.
    std::size_t markers = 256;
    /// Freezes the velocity (pure Allen-Cahn); not a file key.
    bool pure_allen_cahn = false;
    /// Start-up ramp: step k uses min(1, ramp_start * ramp_growth^k) times the
    /// rule's dt, so the fast relaxation of the initial data is resolved in time.
    /// ramp_start = 1 disables it. Not file keys.
    double ramp_start = 1e-5;
    double ramp_growth = 1.02;

    double dt_factor() const;
    /// Throws ConfigError for violated invariants.
    void validate() const;
};

/// INI-style "key = value" lines under [section] headers; '#' starts a comment.
/// Unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Initial interface of a configuration.
Curve initial_curve(const ExperimentConfig& cfg);

struct ErrorReport {
    double eps = 0.0;
    double err_v_LinfL2 = 0.0;
    double err_v_L2H1 = 0.0;
    double err_c_LinfL2 = 0.0;
    double err_c_L2H1tau = 0.0;
    double err_c_grad_LinfL2 = 0.0;
    double err_mu_L2 = 0.0;
    double err_c_L4 = 0.0;
    double energy_residual = 0.0;
    double radius_error = 0.0;
};

class TimeGridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Adds one saved instant at a time; L-infinity-in-time norms take the max over
/// saves and L2-in-time norms use the trapezoid rule over the save times.
class ErrorAccumulator {
public:
    void add(double t, const NsacState& run, const ApproxSolution& approx);
    /// Fills the norm fields of a report (eps, energy and radius fields untouched).
    void finish(ErrorReport& report) const;
    std::size_t size() const { return times_.size(); }

private:
    std::vector<double> times_;
    std::vector<double> v_h1_sq_, ctau_sq_, mu_sq_;
    double v_l2_max_ = 0.0, c_l2_max_ = 0.0, grad_max_ = 0.0, c_l4_max_ = 0.0;
};

/// Computes the norms over matched trajectories; throws TimeGridError on mismatch.
ErrorReport error_norms(const std::vector<NsacState>& run, const std::vector<ApproxSolution>& approx,
                        const std::vector<double>& approx_times);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares of log err against log eps.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct SweepResult {
    std::vector<ErrorReport> reports;
    /// Per eps: empty when the run succeeded, else the abort reason.
    std::vector<std::string> failures;
    /// Fitted rates keyed by column name (only when >= 3 successful runs).
    std::vector<std::pair<std::string, RateFit>> rates;
    /// E_tot never increased from step to step, over all runs.
    bool energy_monotone = true;
    /// Largest post-projection divergence over all runs.
    double max_divergence = 0.0;
};

struct RunHooks {
    /// Called after each step (for monitoring); may be empty.
    std::function<void(const NsacState&)> on_step;
};

/// One diffuse run with sharp tracking and error accumulation for a single eps.
ErrorReport run_single(const ExperimentConfig& cfg, double eps, const ProfileTable& profile,
                       const std::filesystem::path& out_dir, bool* energy_monotone = nullptr,
                       double* max_divergence = nullptr, const RunHooks& hooks = {});

/// Full sweep; eps runs execute concurrently and each writes only to its own
/// subdirectory. Emits errors.csv and rates.csv in cfg.dir.
SweepResult run_experiment(const ExperimentConfig& cfg);

/// Deterministic %.17g CSV writers.
void write_error_csv(const std::vector<ErrorReport>& reports, const std::filesystem::path& path);
void write_rates_csv(const std::vector<std::pair<std::string, RateFit>>& rates, const std::filesystem::path& path);

}  // namespace nsac
