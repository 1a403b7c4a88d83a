/// @file linalg.hpp
/// @brief Matrix-free Krylov solver and the fast pressure-Poisson solver.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nsac/field.hpp"

namespace nsac {

/// y = A x for a symmetric operator.
using LinearOp = std::function<void(std::span<const double>, std::span<double>)>;

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    /// Set when a search direction with p^T A p <= 0 was met.
    bool indefinite = false;
};

/// Jacobi-preconditioned conjugate gradients. `x` holds the initial guess on
/// entry. Converged when ||b - A x|| <= rel_tol * ||b||.
CgResult conjugate_gradient(const LinearOp& op, std::span<const double> inv_diag,
                            std::span<const double> rhs, std::span<double> x, double rel_tol,
                            int max_iterations);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Boundary treatment along one axis of a constant-coefficient Helmholtz problem.
enum class AxisKind {
    periodic,        ///< wrap-around
    dirichlet_node,  ///< unknowns strictly between two zero boundary values
    dirichlet_cell,  ///< cell-centered unknowns, ghost = -interior (zero on the wall face)
    neumann_cell,    ///< cell-centered unknowns, ghost = interior
};

/// Direct solver for (a - Lap_h) x = b on an mx-by-my array (x fastest) with
/// the 5-point Laplacian, diagonalized by the matching real trigonometric
/// transforms. Round-off accurate. For a = 0 the constant mode of
/// periodic/Neumann problems is projected out.
class TransformHelmholtz {
public:
    TransformHelmholtz(int mx, int my, double h, AxisKind kx, AxisKind ky);
    ~TransformHelmholtz();
    TransformHelmholtz(const TransformHelmholtz&) = delete;
    TransformHelmholtz& operator=(const TransformHelmholtz&) = delete;

    void solve(double a, std::span<const double> rhs, std::span<double> x);
    /// y = (a - Lap_h) x with the same boundary treatment (for residual checks).
    void apply(double a, std::span<const double> x, std::span<double> y) const;

    int mx() const { return mx_; }
    int my() const { return my_; }

private:
    struct Plans;
    int mx_, my_;
    double h_;
    AxisKind kx_, ky_;
    std::vector<double> mu_x_, mu_y_;
    double norm_ = 1.0;
    std::unique_ptr<Plans> plans_;
};

/// Solves the cell-centered Poisson problem  discrete_divergence(discrete_gradient(phi)) = rhs
/// exactly (to round-off) with cosine transforms (walls, homogeneous Neumann)
/// or a real DFT (periodic). The mean of rhs is removed before solving and the
/// returned phi has zero mean.
class PoissonSolver {
public:
    explicit PoissonSolver(const GridSpec& grid);
    ~PoissonSolver();
    PoissonSolver(const PoissonSolver&) = delete;
    PoissonSolver& operator=(const PoissonSolver&) = delete;

    /// Returns the mean that was subtracted from rhs for compatibility.
    double solve(const ScalarField& rhs, ScalarField& phi);

    const GridSpec& grid() const { return grid_; }

private:
    struct Plans;
    GridSpec grid_;
    std::unique_ptr<Plans> plans_;
};

/// Removes the gradient part of `v` in place: v <- v - grad(phi) with
/// div grad phi = div v. Returns phi.
ScalarField project_divergence_free(StaggeredVectorField& v, PoissonSolver& poisson);

}  // namespace nsac
