/// @file solver.hpp
/// @brief Time stepping for the coupled incompressible Navier-Stokes /
///        Allen-Cahn system with capillary stress.
///
///   dv/dt + v.grad v - Lap v + grad p = -eps div(grad c (x) grad c)
///   div v = 0
///   dc/dt + v.grad c = Lap c - eps^-2 f'(c)
///
/// with v = 0 and c = -1 on the walls of a dirichlet_box grid.
#pragma once

#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nsac/field.hpp"
#include "nsac/linalg.hpp"
#include "nsac/profile.hpp"

namespace nsac {

struct NsacState {
    double t = 0.0;
    StaggeredVectorField v;
    ScalarField p;
    ScalarField c;
    double eps = 0.1;
    long step = 0;
};

struct StepParams {
    double dt = 1e-4;
    double S = 1.0;
    double cg_tol = 1e-10;
    int cg_maxit = 5000;
    /// Constant-coefficient Helmholtz solves by fast transforms (residual checked
    /// against cg_tol, CG fallback); false forces Jacobi-CG everywhere.
    bool transform_solves = true;
    /// Skips the momentum equation (v is frozen); used for pure Allen-Cahn runs.
    bool pure_allen_cahn = false;
};

/// Raised when a run must stop: overshoot, divergence, solver failure, energy growth.
class SolverAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Overshoot guard: |c| may not exceed 1 + kappa.
inline constexpr double kOvershoot = 0.1;
/// Post-projection divergence bound.
inline constexpr double kDivergenceBound = 1e-10;

/// -eps Lap c + f'(c) / eps.
ScalarField chemical_potential(const ScalarField& c, double eps, const Potential& pot = Potential::quartic());

/// Face-centered -eps div(grad c (x) grad c) in conservative flux form.
StaggeredVectorField capillary_force(const ScalarField& c, double eps);

/// Cell-centered v.grad c with second-order upwinding.
ScalarField upwind_advection(const StaggeredVectorField& v, const ScalarField& c);

/// Largest stable default step 0.1 min(h^2, eps^2), further limited by the
/// advective CFL 0.25 h / sup|v| when v is nonzero.
double default_dt(const GridSpec& grid, double eps, double max_velocity = 0.0, double factor = 0.1);

/// Smallest S with S >= (1/2) sup f'' on |c| <= 1 + kappa.
double min_stabilization(const Potential& pot);

struct ProjectionResult {
    StaggeredVectorField v;
    ScalarField p;
    /// Mean removed from the Poisson right-hand side (nonzero only if the data were incompatible).
    double compatibility_defect = 0.0;
};

/// Owns the fast Poisson solver for one grid; stepping is single-threaded per instance.
class DiffuseSolver {
public:
    explicit DiffuseSolver(const GridSpec& grid, Potential pot = Potential::quartic());
    ~DiffuseSolver();
    DiffuseSolver(DiffuseSolver&&) noexcept;
    DiffuseSolver& operator=(DiffuseSolver&&) noexcept;

    const GridSpec& grid() const { return grid_; }
    const Potential& potential() const { return pot_; }

    /// Stabilized semi-implicit Allen-Cahn update.
    ScalarField ac_step(const NsacState& state, const StepParams& params) const;

    /// Implicit viscosity, explicit advection and forcing, then projection.
    ProjectionResult ns_projection_step(const NsacState& state, const StaggeredVectorField& force,
                                        const StepParams& params);

    /// capillary_force -> ns_projection_step -> ac_step; advances t by dt.
    NsacState step_coupled(const NsacState& state, const StepParams& params);

    PoissonSolver& poisson() { return *poisson_; }

private:
    GridSpec grid_;
    Potential pot_;
    std::unique_ptr<PoissonSolver> poisson_;
    struct HelmholtzCache;
    std::unique_ptr<HelmholtzCache> helmholtz_;

    void solve_helmholtz(int mx, int my, int ex, int ey, double a, std::span<const double> rhs,
                         std::span<double> x, const StepParams& prm, const char* what) const;
};

struct Energies {
    double e_eps = 0.0;
    double e_tot = 0.0;
};

/// E_eps = int eps |grad c|^2 / 2 + f(c) / eps and E_tot = int |v|^2 / 4 + E_eps.
Energies total_energy(const NsacState& state, const Potential& pot = Potential::quartic());

/// int (1/2)|grad v|^2 + |mu|^2 / eps at one instant.
double dissipation_rate(const NsacState& state, const Potential& pot = Potential::quartic());

/// Accumulates E_tot(t) + int_0^t D - E_tot(0) with the trapezoid rule in time.
class EnergyLedger {
public:
    explicit EnergyLedger(Potential pot = Potential::quartic()) : pot_(std::move(pot)) {}

    /// Records a state. Returns the energy change relative to the previous record.
    double record(const NsacState& state);
    /// |E_tot(t) + int D - E_tot(0)| / E_tot(0), or absolute when E_tot(0) = 0.
    double residual() const;
    std::size_t size() const { return times_.size(); }
    const std::vector<double>& energies() const { return e_tot_; }
    const std::vector<double>& times() const { return times_; }
    /// Largest step-to-step increase of E_tot seen so far (<= 0 for a dissipative run).
    double max_increase() const { return max_increase_; }

private:
    Potential pot_;
    std::vector<double> times_;
    std::vector<double> e_tot_;
    double last_rate_ = 0.0;
    double dissipated_ = 0.0;
    double max_increase_ = -std::numeric_limits<double>::infinity();
};

double energy_identity_residual(const std::vector<NsacState>& trajectory, const Potential& pot = Potential::quartic());

// Checkpoint: directory with c, p, v.u, v.v snapshots and a "PRUN1" manifest.
void write_checkpoint(const NsacState& state, double dt, const std::filesystem::path& dir);
NsacState read_checkpoint(const std::filesystem::path& dir);

}  // namespace nsac
