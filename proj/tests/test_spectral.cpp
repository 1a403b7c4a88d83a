#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "nsac/approx.hpp"
#include "nsac/spectral.hpp"

using namespace nsac;

namespace {

constexpr double pi = std::numbers::pi;

// Tridiagonal -d2/dx2 + V on n interior nodes with zero end values.
QuadraticForm tridiagonal(std::vector<double> V, double h) {
    const std::size_t n = V.size();
    QuadraticForm q;
    q.dim = n;
    q.description = "1d";
    q.apply = [V, h, n](std::span<const double> x, std::span<double> y) {
        for (std::size_t k = 0; k < n; ++k) {
            const double l = k > 0 ? x[k - 1] : 0.0, r = k + 1 < n ? x[k + 1] : 0.0;
            y[k] = (2 * x[k] - l - r) / (h * h) + V[k] * x[k];
        }
    };
    q.lower_bound = *std::min_element(V.begin(), V.end());
    q.diagonal.resize(n);
    for (std::size_t k = 0; k < n; ++k) q.diagonal[k] = 2 / (h * h) + V[k];
    return q;
}

Eigen::MatrixXd dense(const QuadraticForm& q) {
    Eigen::MatrixXd A(q.dim, q.dim);
    std::vector<double> e(q.dim, 0.0), y(q.dim);
    for (std::size_t k = 0; k < q.dim; ++k) {
        e[k] = 1.0;
        q.apply(e, y);
        for (std::size_t r = 0; r < q.dim; ++r) A(r, k) = y[r];
        e[k] = 0.0;
    }
    return A;
}

double dense_min(const QuadraticForm& q) {
    const Eigen::MatrixXd A = dense(q);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly)
        .eigenvalues()(0);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

ScalarField random_field(const GridSpec& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    ScalarField c(g);
    for (double& v : c.data()) v = U(rng);
    return c;
}

}  // namespace

TEST_CASE("1d Dirichlet Laplacian") {
    const int n = 200;
    const double h = 1.0 / (n + 1);
    const EigenResult r = min_eigenvalue(tridiagonal(std::vector<double>(n, 0.0), h));
    const double exact = 2 * (1 - std::cos(pi * h)) / (h * h);
    CHECK(std::abs(r.value - exact) <= 1e-10 * exact);
    CHECK(r.value == doctest::Approx(pi * pi).epsilon(0.005));
}

TEST_CASE("diagonal form") {
    QuadraticForm q;
    q.dim = 3;
    q.apply = [](std::span<const double> x, std::span<double> y) {
        y[0] = 3 * x[0], y[1] = 5 * x[1], y[2] = 9 * x[2];
    };
    q.lower_bound = 3.0;
    CHECK(min_eigenvalue(q).value == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("1d translation mode of the profile") {
    const int n = 2000;
    const double L = 20.0, h = 2 * L / (n + 1);
    const Potential q = Potential::quartic();
    std::vector<double> V(n), dtheta(n);
    for (int k = 0; k < n; ++k) {
        const double rho = -L + (k + 1) * h;
        const double t = theta0_quartic(rho);
        V[k] = q.d2f(t);
        dtheta[k] = (1 - t * t) / 2;
    }
    const EigenResult r = min_eigenvalue(tridiagonal(V, h));
    CHECK(std::abs(r.value) <= 1e-3);
    const double cosine = std::abs(dot(r.vector, dtheta)) / std::sqrt(dot(r.vector, r.vector) * dot(dtheta, dtheta));
    CHECK(cosine >= 0.999);
}

TEST_CASE("constant order parameters") {
    const GridSpec g{128, 128, 1.0, 1.0, Boundary::dirichlet_box};
    const double eps = 0.1;
    const double one = min_eigenvalue(assemble_Leps(ScalarField(g, 1.0), eps)).value;
    CHECK(one == doctest::Approx(2 * pi * pi + 1 / (eps * eps)).epsilon(0.02));
    const double zero = min_eigenvalue(assemble_Leps(ScalarField(g, 0.0), eps)).value;
    CHECK(zero == doctest::Approx(2 * pi * pi - 0.5 / (eps * eps)).epsilon(0.02));
}

TEST_CASE("forms are symmetric") {
    const GridSpec g{40, 40, 1.0, 1.0, Boundary::dirichlet_box};
    const TubularGeometry geom(Curve::circle({0.5, 0.5}, 0.25, 256), g, 0.06);
    const ScalarField c = random_field(g, 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N;
    for (const QuadraticForm& q : {assemble_Leps(c, 0.05), assemble_tangential(geom), assemble_Leps_minus_tangential(c, 0.05, geom)}) {
        std::vector<double> x(q.dim), y(q.dim), Ax(q.dim), Ay(q.dim);
        for (int pair = 0; pair < 20; ++pair) {
            for (std::size_t k = 0; k < q.dim; ++k) x[k] = N(rng), y[k] = N(rng);
            q.apply(x, Ax);
            q.apply(y, Ay);
            const double a = dot(Ax, y), b = dot(x, Ay);
            CHECK(std::abs(a - b) <= 1e-10 * std::max(std::abs(a), std::abs(b)));
        }
    }
}

TEST_CASE("agreement with a dense eigensolver") {
    const GridSpec g{48, 48, 1.0, 1.0, Boundary::dirichlet_box};
    const TubularGeometry geom(Curve::circle({0.5, 0.5}, 0.25, 256), g, 0.06);
    const ProfileTable profile = solve_profile(Potential::quartic());
    const ScalarField cA = build_cA(geom, 0.012, profile);
    for (const QuadraticForm& q : {assemble_Leps(cA, 0.012), assemble_Leps_minus_tangential(cA, 0.012, geom),
                                   assemble_Leps(random_field(g, 7), 0.1)}) {
        const double ref = dense_min(q);
        const double got = min_eigenvalue(q).value;
        CHECK(std::abs(got - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("adding a non-negative diagonal never lowers the minimum") {
    const GridSpec g{24, 24, 1.0, 1.0, Boundary::dirichlet_box};
    const QuadraticForm base = assemble_Leps(random_field(g, 3), 0.1);
    const double lam = min_eigenvalue(base).value;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0, 50);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> D(base.dim);
        for (double& d : D) d = U(rng);
        QuadraticForm q = base;
        q.apply = [base, D](std::span<const double> x, std::span<double> y) {
            base.apply(x, y);
            for (std::size_t k = 0; k < x.size(); ++k) y[k] += D[k] * x[k];
        };
        for (std::size_t k = 0; k < D.size(); ++k) q.diagonal[k] += D[k];
        CHECK(min_eigenvalue(q).value >= lam - 1e-9);
    }
}

TEST_CASE("spectral bound on a circle") {
    const ProfileTable profile = solve_profile(Potential::quartic());
    const SpectralSetup setup{Curve::circle({0.5, 0.5}, 0.25, 256), 1.0, 1.0, 4.0, 0.0};
    const SpectralReport rep = verify_spectral_bound(setup, profile, {0.1, 0.05});
    REQUIRE(rep.rows.size() == 2);
    for (const SpectralRow& r : rep.rows) {
        CHECK(r.lambda_L >= -rep.c_budget);
        CHECK(r.lambda_L_minus_T <= r.lambda_L + 1e-9);
        CHECK(r.naive_bound == doctest::Approx(-0.5 / (r.eps * r.eps)).epsilon(0.05));
    }
    CHECK(rep.rows[1].naive_bound < rep.rows[0].naive_bound);

    const SpectralReport one = verify_spectral_bound(setup, profile, {0.1});
    REQUIRE(one.rows.size() == 1);
    CHECK(one.pass == one.rows[0].pass);
    CHECK(one.rows[0].lambda_L == rep.rows[0].lambda_L);
    CHECK_THROWS(verify_spectral_bound(setup, profile, {}));

    const auto path = std::filesystem::temp_directory_path() / "nsac_spectrum.csv";
    write_spectral_csv(rep, path);
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    CHECK(line == "eps,lambda_min_L,lambda_min_L_minus_T,pass");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("the zero field breaks the bound") {
    const GridSpec g = make_grid(1.0, 1.0, 0.025 / 4, Boundary::dirichlet_box);
    CHECK(min_eigenvalue(assemble_Leps(ScalarField(g, 0.0), 0.025)).value < -10.0);
}
