#include "nsac/linalg.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

namespace nsac {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CgResult conjugate_gradient(const LinearOp& op, std::span<const double> inv_diag,
                            std::span<const double> rhs, std::span<double> x, double rel_tol,
                            int max_iterations) {
    const std::size_t n = rhs.size();
    CgResult res;
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }
    std::vector<double> r(n), z(n), p(n), ap(n);
    op(x, r);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - r[k];
    res.relative_residual = norm2(r) / bnorm;
    if (res.relative_residual <= rel_tol) {
        res.converged = true;
        return res;
    }
    const bool jacobi = !inv_diag.empty();
    const double* d = inv_diag.data();
    double rz = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        z[k] = jacobi ? d[k] * r[k] : r[k];
        rz += r[k] * z[k];
    }
    p = z;
    const double stop = rel_tol * bnorm;
    for (int it = 1; it <= max_iterations; ++it) {
        op(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            res.indefinite = true;
            res.iterations = it;
            return res;
        }
        const double alpha = rz / pap;
        double rr = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            rr += r[k] * r[k];
        }
        res.iterations = it;
        res.relative_residual = std::sqrt(rr) / bnorm;
        if (std::sqrt(rr) <= stop) {
            res.converged = true;
            return res;
        }
        double rz_new = 0.0;
        if (jacobi) {
            for (std::size_t k = 0; k < n; ++k) {
                z[k] = d[k] * r[k];
                rz_new += r[k] * z[k];
            }
        } else {
            rz_new = rr;
            std::copy(r.begin(), r.end(), z.begin());
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    return res;
}

namespace {
// FFTW planning is not thread safe; execution on distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

// ---------------------------------------------------------------------------
// TransformHelmholtz
// ---------------------------------------------------------------------------

namespace {

fftw_r2r_kind forward_kind(AxisKind k) {
    switch (k) {
        case AxisKind::periodic: return FFTW_R2HC;
        case AxisKind::dirichlet_node: return FFTW_RODFT00;
        case AxisKind::dirichlet_cell: return FFTW_RODFT10;
        case AxisKind::neumann_cell: return FFTW_REDFT10;
    }
    return FFTW_R2HC;
}

fftw_r2r_kind backward_kind(AxisKind k) {
    switch (k) {
        case AxisKind::periodic: return FFTW_HC2R;
        case AxisKind::dirichlet_node: return FFTW_RODFT00;
        case AxisKind::dirichlet_cell: return FFTW_RODFT01;
        case AxisKind::neumann_cell: return FFTW_REDFT01;
    }
    return FFTW_HC2R;
}

// Eigenvalues of -d^2/dx^2 (5-point, spacing h) per transform index, and the
// round-trip normalization of the transform pair.
std::vector<double> axis_eigen(int m, double h, AxisKind kind, double& norm) {
    std::vector<double> mu(m);
    const double c = 4.0 / (h * h);
    const double pi = std::numbers::pi;
    for (int q = 0; q < m; ++q) {
        double s = 0.0;
        switch (kind) {
            case AxisKind::periodic: {
                const int k = q <= m / 2 ? q : m - q;
                s = std::sin(pi * k / m);
                break;
            }
            case AxisKind::dirichlet_node: s = std::sin(pi * (q + 1) / (2.0 * (m + 1))); break;
            case AxisKind::dirichlet_cell: s = std::sin(pi * (q + 1) / (2.0 * m)); break;
            case AxisKind::neumann_cell: s = std::sin(pi * q / (2.0 * m)); break;
        }
        mu[q] = c * s * s;
    }
    norm = kind == AxisKind::periodic ? m : (kind == AxisKind::dirichlet_node ? 2.0 * (m + 1) : 2.0 * m);
    return mu;
}

}  // namespace

struct TransformHelmholtz::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::vector<double> work;
};

TransformHelmholtz::TransformHelmholtz(int mx, int my, double h, AxisKind kx, AxisKind ky)
    : mx_(mx), my_(my), h_(h), kx_(kx), ky_(ky), plans_(std::make_unique<Plans>()) {
    if (mx < 1 || my < 1 || !(h > 0.0)) throw std::invalid_argument("bad Helmholtz layout");
    double nx = 1.0, ny = 1.0;
    mu_x_ = axis_eigen(mx, h, kx, nx);
    mu_y_ = axis_eigen(my, h, ky, ny);
    norm_ = 1.0 / (nx * ny);
    auto& P = *plans_;
    P.work.assign(static_cast<std::size_t>(mx) * my, 0.0);
    std::lock_guard lock(planner_mutex());
    P.forward = fftw_plan_r2r_2d(my, mx, P.work.data(), P.work.data(), forward_kind(ky), forward_kind(kx),
                                 FFTW_ESTIMATE);
    P.backward = fftw_plan_r2r_2d(my, mx, P.work.data(), P.work.data(), backward_kind(ky), backward_kind(kx),
                                  FFTW_ESTIMATE);
    if (!P.forward || !P.backward) throw SolverError("FFTW planning failed");
}

TransformHelmholtz::~TransformHelmholtz() {
    std::lock_guard lock(planner_mutex());
    if (plans_->forward) fftw_destroy_plan(plans_->forward);
    if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

void TransformHelmholtz::solve(double a, std::span<const double> rhs, std::span<double> x) {
    auto& P = *plans_;
    if (rhs.size() != P.work.size() || x.size() != P.work.size()) throw std::invalid_argument("Helmholtz size mismatch");
    std::copy(rhs.begin(), rhs.end(), P.work.begin());
    fftw_execute(P.forward);
    for (int j = 0; j < my_; ++j)
        for (int i = 0; i < mx_; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * mx_ + i;
            const double lam = a + mu_x_[i] + mu_y_[j];
            P.work[k] = lam > 0.0 ? P.work[k] / lam : 0.0;
        }
    fftw_execute(P.backward);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = P.work[k] * norm_;
}

void TransformHelmholtz::apply(double a, std::span<const double> x, std::span<double> y) const {
    const double ih2 = 1.0 / (h_ * h_);
    auto value = [&](int i, int j) {
        auto fold = [](int k, int m, AxisKind kind, double& sign, bool& zero) {
            if (k >= 0 && k < m) return k;
            switch (kind) {
                case AxisKind::periodic: return (k % m + m) % m;
                case AxisKind::dirichlet_node: zero = true; return 0;
                case AxisKind::dirichlet_cell: sign = -sign; return k < 0 ? 0 : m - 1;
                case AxisKind::neumann_cell: return k < 0 ? 0 : m - 1;
            }
            return 0;
        };
        double sign = 1.0;
        bool zero = false;
        const int fi = fold(i, mx_, kx_, sign, zero);
        const int fj = fold(j, my_, ky_, sign, zero);
        if (zero) return 0.0;
        return sign * x[static_cast<std::size_t>(fj) * mx_ + fi];
    };
    for (int j = 0; j < my_; ++j)
        for (int i = 0; i < mx_; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * mx_ + i;
            const double s = x[k];
            const double lap = value(i - 1, j) + value(i + 1, j) + value(i, j - 1) + value(i, j + 1) - 4.0 * s;
            y[k] = a * s - lap * ih2;
        }
}

// ---------------------------------------------------------------------------
// PoissonSolver
// ---------------------------------------------------------------------------


struct PoissonSolver::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::vector<double> real;
    fftw_complex* spectrum = nullptr;
    std::vector<double> eigen;  // eigenvalues of the discrete Laplacian per mode
};

PoissonSolver::PoissonSolver(const GridSpec& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
    grid_.require_solver_grid();
    const int nx = grid_.nx, ny = grid_.ny;
    const double h = grid_.h();
    auto& P = *plans_;
    P.real.assign(grid_.cells(), 0.0);
    std::lock_guard lock(planner_mutex());
    if (grid_.bc == Boundary::dirichlet_box) {
        P.forward = fftw_plan_r2r_2d(ny, nx, P.real.data(), P.real.data(), FFTW_REDFT10, FFTW_REDFT10,
                                     FFTW_ESTIMATE);
        P.backward = fftw_plan_r2r_2d(ny, nx, P.real.data(), P.real.data(), FFTW_REDFT01, FFTW_REDFT01,
                                      FFTW_ESTIMATE);
        P.eigen.resize(grid_.cells());
        for (int l = 0; l < ny; ++l)
            for (int k = 0; k < nx; ++k) {
                const double sx = std::sin(std::numbers::pi * k / (2.0 * nx));
                const double sy = std::sin(std::numbers::pi * l / (2.0 * ny));
                P.eigen[static_cast<std::size_t>(l) * nx + k] = -4.0 / (h * h) * (sx * sx + sy * sy);
            }
    } else {
        const int nxc = nx / 2 + 1;
        P.spectrum = fftw_alloc_complex(static_cast<std::size_t>(ny) * nxc);
        P.forward = fftw_plan_dft_r2c_2d(ny, nx, P.real.data(), P.spectrum, FFTW_ESTIMATE);
        P.backward = fftw_plan_dft_c2r_2d(ny, nx, P.spectrum, P.real.data(), FFTW_ESTIMATE);
        P.eigen.resize(static_cast<std::size_t>(ny) * nxc);
        for (int l = 0; l < ny; ++l)
            for (int k = 0; k < nxc; ++k) {
                const double sx = std::sin(std::numbers::pi * k / nx);
                const double sy = std::sin(std::numbers::pi * l / ny);
                P.eigen[static_cast<std::size_t>(l) * nxc + k] = -4.0 / (h * h) * (sx * sx + sy * sy);
            }
    }
    if (!P.forward || !P.backward) throw SolverError("FFTW planning failed");
}

PoissonSolver::~PoissonSolver() {
    std::lock_guard lock(planner_mutex());
    if (plans_->forward) fftw_destroy_plan(plans_->forward);
    if (plans_->backward) fftw_destroy_plan(plans_->backward);
    if (plans_->spectrum) fftw_free(plans_->spectrum);
}

double PoissonSolver::solve(const ScalarField& rhs, ScalarField& phi) {
    if (!(rhs.grid() == grid_)) throw std::invalid_argument("Poisson rhs grid mismatch");
    auto& P = *plans_;
    const int nx = grid_.nx, ny = grid_.ny;
    double mean = 0.0;
    for (double x : rhs.data()) mean += x;
    mean /= static_cast<double>(grid_.cells());
    for (std::size_t k = 0; k < P.real.size(); ++k) P.real[k] = rhs.data()[k] - mean;
    fftw_execute(P.forward);
    if (grid_.bc == Boundary::dirichlet_box) {
        P.real[0] = 0.0;
        for (std::size_t k = 1; k < P.real.size(); ++k) P.real[k] /= P.eigen[k];
        fftw_execute(P.backward);
        const double norm = 1.0 / (4.0 * nx * ny);
        for (double& x : P.real) x *= norm;
    } else {
        const std::size_t nspec = P.eigen.size();
        P.spectrum[0][0] = P.spectrum[0][1] = 0.0;
        for (std::size_t k = 1; k < nspec; ++k) {
            P.spectrum[k][0] /= P.eigen[k];
            P.spectrum[k][1] /= P.eigen[k];
        }
        fftw_execute(P.backward);
        const double norm = 1.0 / (static_cast<double>(nx) * ny);
        for (double& x : P.real) x *= norm;
    }
    if (!(phi.grid() == grid_)) phi = ScalarField(grid_);
    phi.data() = P.real;
    return mean;
}

ScalarField project_divergence_free(StaggeredVectorField& v, PoissonSolver& poisson) {
    const ScalarField div = discrete_divergence(v);
    ScalarField phi(v.grid());
    poisson.solve(div, phi);
    const StaggeredVectorField g = discrete_gradient(phi);
    for (std::size_t k = 0; k < v.u_data().size(); ++k) v.u_data()[k] -= g.u_data()[k];
    for (std::size_t k = 0; k < v.v_data().size(); ++k) v.v_data()[k] -= g.v_data()[k];
    v.enforce_boundary();
    return phi;
}

}  // namespace nsac
