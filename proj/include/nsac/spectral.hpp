/// @file spectral.hpp
/// @brief Linearized Allen-Cahn operator -Lap + eps^-2 f''(c_A), its
///        tangential refinement, and a smallest-eigenvalue solver.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsac/field.hpp"
#include "nsac/geometry.hpp"
#include "nsac/linalg.hpp"
#include "nsac/profile.hpp"

namespace nsac {

struct QuadraticForm {
    std::size_t dim = 0;
    /// y = A x, A symmetric.
    LinearOp apply;
    std::string description;
    /// Any certified lower bound on the spectrum (used to place the first shift).
    std::optional<double> lower_bound;
    /// Diagonal of A when known; used for Jacobi preconditioning of the inner solves.
    std::vector<double> diagonal;
};

/// 5-point stiffness with homogeneous Dirichlet walls (ghost = -phi) plus eps^-2 f''(c_A).
/// Periodic grids wrap instead.
QuadraticForm assemble_Leps(const ScalarField& c_A, double eps, const Potential& pot = Potential::quartic());

/// Stiffness form of the tangential gradient: T phi = G^T G phi with G the
/// band-restricted projected centered gradient (same stencil as tangential_gradient).
QuadraticForm assemble_tangential(const TubularGeometry& geom);

/// A - B for two forms on the same space; the lower bound of A carries over when B
/// is dominated by the stiffness part of A.
QuadraticForm subtract(const QuadraticForm& a, const QuadraticForm& b, std::optional<double> lower_bound);

/// L_eps - T on the geometry's grid.
QuadraticForm assemble_Leps_minus_tangential(const ScalarField& c_A, double eps, const TubularGeometry& geom,
                                            const Potential& pot = Potential::quartic());

struct EigenResult {
    double value = 0.0;
    std::vector<double> vector;
    int iterations = 0;
};

class EigenError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Smallest eigenvalue by shifted inverse iteration with CG inner solves. The
/// first shift sits below the form's lower bound; once the iteration settles it
/// moves up to just below the Rayleigh quotient minus twice the residual.
EigenResult min_eigenvalue(const QuadraticForm& form, double tol = 1e-10, int max_outer = 500);

struct SpectralRow {
    double eps = 0.0;
    double lambda_L = 0.0;
    double lambda_L_minus_T = 0.0;
    /// min eps^-2 f''(c_A), the naive potential bound.
    double naive_bound = 0.0;
    bool pass = false;
};

struct SpectralReport {
    std::vector<SpectralRow> rows;
    double c_budget = 10.0;
    bool pass = false;
};

struct SpectralSetup {
    Curve curve;
    double lx = 1.0;
    double ly = 1.0;
    /// h = eps / h_ratio.
    double h_ratio = 4.0;
    /// 0 selects max(default_delta, 5 eps).
    double delta = 0.0;
};

/// For each eps: build c_A on the circle geometry, then lambda_min of L and L - T.
/// PASS iff every value is >= -c_budget.
SpectralReport verify_spectral_bound(const SpectralSetup& setup, const ProfileTable& profile,
                                     const std::vector<double>& eps_list, double c_budget = 10.0);

/// CSV "eps,lambda_min_L,lambda_min_L_minus_T,pass".
void write_spectral_csv(const SpectralReport& report, const std::filesystem::path& path);

}  // namespace nsac
