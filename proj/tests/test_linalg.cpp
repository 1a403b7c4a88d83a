#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nsac/field.hpp"
#include "nsac/linalg.hpp"

using namespace nsac;

TEST_CASE("CG solves a 1D Dirichlet Laplacian") {
    const int n = 50;
    LinearOp A = [n](std::span<const double> x, std::span<double> y) {
        for (int i = 0; i < n; ++i)
            y[i] = 2 * x[i] - (i > 0 ? x[i - 1] : 0.0) - (i + 1 < n ? x[i + 1] : 0.0);
    };
    std::vector<double> b(n, 1.0), x(n, 0.0), d(n, 0.5), r(n);
    const CgResult res = conjugate_gradient(A, d, b, x, 1e-12, 500);
    CHECK(res.converged);
    CHECK_FALSE(res.indefinite);
    A(x, r);
    for (int i = 0; i < n; ++i) CHECK(r[i] == doctest::Approx(1.0).epsilon(1e-10));
    // Exact solution of -u'' = 1 on the lattice: u_i = (i+1)(n-i)/2.
    CHECK(x[10] == doctest::Approx(11.0 * 40.0 / 2.0).epsilon(1e-9));
}

TEST_CASE("CG with zero right-hand side returns zero") {
    LinearOp I = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
    std::vector<double> b(4, 0.0), x{1, 2, 3, 4}, d(4, 1.0);
    const CgResult res = conjugate_gradient(I, d, b, x, 1e-10, 10);
    CHECK(res.converged);
    for (double v : x) CHECK(v == 0.0);
}

TEST_CASE("CG flags an indefinite operator") {
    LinearOp A = [](std::span<const double> x, std::span<double> y) {
        y[0] = x[0];
        y[1] = -x[1];
    };
    std::vector<double> b{1.0, 1.0}, x(2, 0.0), d(2, 1.0);
    const CgResult res = conjugate_gradient(A, d, b, x, 1e-12, 10);
    CHECK(res.indefinite);
    CHECK_FALSE(res.converged);
}

TEST_CASE("transform Helmholtz matches its own operator for every boundary kind") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const AxisKind kinds[] = {AxisKind::periodic, AxisKind::dirichlet_node, AxisKind::dirichlet_cell,
                              AxisKind::neumann_cell};
    for (AxisKind kx : kinds)
        for (AxisKind ky : kinds) {
            TransformHelmholtz T(13, 10, 0.1, kx, ky);
            std::vector<double> b(130), x(130), r(130);
            for (auto& v : b) v = U(rng);
            T.solve(5.0, b, x);
            T.apply(5.0, x, r);
            double err = 0.0, nb = 0.0;
            for (int k = 0; k < 130; ++k) err = std::max(err, std::abs(r[k] - b[k])), nb = std::max(nb, std::abs(b[k]));
            CHECK(err <= 1e-12 * nb);
        }
}

TEST_CASE("transform Helmholtz agrees with CG") {
    const int m = 17;
    TransformHelmholtz T(m, m, 1.0 / m, AxisKind::dirichlet_cell, AxisKind::dirichlet_node);
    std::vector<double> b(m * m), xt(m * m), xc(m * m, 0.0), d(m * m, 1.0 / (3.0 + 4.0 * m * m));
    for (int k = 0; k < m * m; ++k) b[k] = std::cos(0.37 * k);
    T.solve(3.0, b, xt);
    LinearOp A = [&](std::span<const double> x, std::span<double> y) { T.apply(3.0, x, y); };
    CHECK(conjugate_gradient(A, d, b, xc, 1e-13, 2000).converged);
    for (int k = 0; k < m * m; ++k) CHECK(xt[k] == doctest::Approx(xc[k]).epsilon(1e-9));
}

TEST_CASE("Poisson solver inverts div grad and projection removes divergence") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (Boundary bc : {Boundary::dirichlet_box, Boundary::periodic}) {
        const GridSpec g{16, 12, 4.0 / 3.0, 1.0, bc};
        PoissonSolver P(g);
        ScalarField rhs(g);
        for (auto& v : rhs.data()) v = U(rng);
        ScalarField phi(g);
        const double mean = P.solve(rhs, phi);
        const ScalarField back = discrete_divergence(discrete_gradient(phi));
        for (std::size_t k = 0; k < rhs.data().size(); ++k)
            CHECK(back.data()[k] == doctest::Approx(rhs.data()[k] - mean).epsilon(1e-10));
        double s = 0.0;
        for (double v : phi.data()) s += v;
        CHECK(std::abs(s) < 1e-10);

        StaggeredVectorField v(g);
        for (auto& x : v.u_data()) x = U(rng);
        for (auto& x : v.v_data()) x = U(rng);
        v.enforce_boundary();
        project_divergence_free(v, P);
        CHECK(max_abs(discrete_divergence(v)) < 1e-12);
    }
}

TEST_CASE("projection leaves a discretely divergence-free field untouched") {
    const GridSpec g{16, 16, 1.0, 1.0, Boundary::dirichlet_box};
    // Stream function on nodes, zero on the boundary.
    auto psi = [](double x, double y) { return std::pow(std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y), 2); };
    StaggeredVectorField v(g);
    const double h = g.h();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) v.u(i, j) = (psi(i * h, (j + 1) * h) - psi(i * h, j * h)) / h;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) v.v(i, j) = -(psi((i + 1) * h, j * h) - psi(i * h, j * h)) / h;
    const StaggeredVectorField before = v;
    PoissonSolver P(g);
    project_divergence_free(v, P);
    CHECK((v - before).max_abs() < 1e-12);
}
