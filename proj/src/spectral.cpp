#include "nsac/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "nsac/approx.hpp"

namespace nsac {

QuadraticForm assemble_Leps(const ScalarField& c_A, double eps, const Potential& pot) {
    const GridSpec g = c_A.grid();
    const double h = g.h();
    const double ih2 = 1.0 / (h * h);
    const int nx = g.nx, ny = g.ny;
    const bool periodic = g.bc == Boundary::periodic;
    std::vector<double> V(g.cells());
    for (std::size_t k = 0; k < V.size(); ++k) V[k] = pot.d2f(c_A.data()[k]) / (eps * eps);

    QuadraticForm q;
    q.dim = g.cells();
    q.description = "L_eps";
    q.lower_bound = *std::min_element(V.begin(), V.end());
    q.diagonal.resize(q.dim);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int walls = periodic ? 0 : (i == 0) + (i == nx - 1) + (j == 0) + (j == ny - 1);
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            q.diagonal[k] = (4.0 + walls) * ih2 + V[k];
        }
    q.apply = [g, V = std::move(V), ih2, periodic](std::span<const double> x, std::span<double> y) {
        const int nx = g.nx, ny = g.ny;
        auto at = [&](int i, int j, double self) {
            if (periodic) return x[static_cast<std::size_t>((j + ny) % ny) * nx + (i + nx) % nx];
            if (i < 0 || i >= nx || j < 0 || j >= ny) return -self;
            return x[static_cast<std::size_t>(j) * nx + i];
        };
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * nx + i;
                const double s = x[k];
                const double lap = at(i - 1, j, s) + at(i + 1, j, s) + at(i, j - 1, s) + at(i, j + 1, s) - 4.0 * s;
                y[k] = -lap * ih2 + V[k] * s;
            }
    };
    return q;
}

namespace {

struct Tap {
    std::size_t index;
    double gx;
    double gy;
};

// Per band cell: projector entries and the gradient taps of the centered /
// one-sided stencil used by tangential_gradient.
struct BandCell {
    std::size_t index;
    double n1, n2;
    std::array<Tap, 4> taps;
};

std::vector<BandCell> band_stencil(const TubularGeometry& geom, bool& touches_wall) {
    const GridSpec& g = geom.grid();
    const int nx = g.nx, ny = g.ny;
    const double h = g.h();
    const bool periodic = g.bc == Boundary::periodic;
    auto pair = [&](int k, int n) -> std::array<std::pair<int, double>, 2> {
        if (periodic) return {{{(k + 1) % n, 0.5 / h}, {(k - 1 + n) % n, -0.5 / h}}};
        if (k == 0) return {{{1, 1.0 / h}, {0, -1.0 / h}}};
        if (k == n - 1) return {{{n - 1, 1.0 / h}, {n - 2, -1.0 / h}}};
        return {{{k + 1, 0.5 / h}, {k - 1, -0.5 / h}}};
    };
    touches_wall = false;
    std::vector<BandCell> cells;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (!geom.in_band(i, j)) continue;
            if (!periodic && (i == 0 || j == 0 || i == nx - 1 || j == ny - 1)) touches_wall = true;
            BandCell b;
            b.index = static_cast<std::size_t>(j) * nx + i;
            b.n1 = geom.normal_ext().x(i, j);
            b.n2 = geom.normal_ext().y(i, j);
            const auto px = pair(i, nx), py = pair(j, ny);
            b.taps[0] = {static_cast<std::size_t>(j) * nx + px[0].first, px[0].second, 0.0};
            b.taps[1] = {static_cast<std::size_t>(j) * nx + px[1].first, px[1].second, 0.0};
            b.taps[2] = {static_cast<std::size_t>(py[0].first) * nx + i, 0.0, py[0].second};
            b.taps[3] = {static_cast<std::size_t>(py[1].first) * nx + i, 0.0, py[1].second};
            cells.push_back(b);
        }
    return cells;
}

}  // namespace

QuadraticForm assemble_tangential(const TubularGeometry& geom) {
    const GridSpec& g = geom.grid();
    bool touches = false;
    auto cells = band_stencil(geom, touches);
    QuadraticForm q;
    q.dim = g.cells();
    q.description = "T";
    q.lower_bound = 0.0;
    q.diagonal.assign(q.dim, 0.0);
    for (const BandCell& b : cells) {
        // Coefficient vector of each distinct tap index, projected.
        for (std::size_t a = 0; a < b.taps.size(); ++a) {
            bool first = true;
            for (std::size_t c = 0; c < a; ++c) first = first && b.taps[c].index != b.taps[a].index;
            if (!first) continue;
            double ax = 0.0, ay = 0.0;
            for (const Tap& t : b.taps)
                if (t.index == b.taps[a].index) ax += t.gx, ay += t.gy;
            const double an = ax * b.n1 + ay * b.n2;
            const double px = ax - an * b.n1, py = ay - an * b.n2;
            q.diagonal[b.taps[a].index] += px * px + py * py;
        }
    }
    q.apply = [cells = std::move(cells)](std::span<const double> x, std::span<double> y) {
        std::fill(y.begin(), y.end(), 0.0);
        for (const BandCell& b : cells) {
            double gx = 0.0, gy = 0.0;
            for (const Tap& t : b.taps) {
                gx += t.gx * x[t.index];
                gy += t.gy * x[t.index];
            }
            const double gn = gx * b.n1 + gy * b.n2;
            const double wx = gx - gn * b.n1, wy = gy - gn * b.n2;
            for (const Tap& t : b.taps) y[t.index] += t.gx * wx + t.gy * wy;
        }
    };
    return q;
}

QuadraticForm subtract(const QuadraticForm& a, const QuadraticForm& b, std::optional<double> lower_bound) {
    if (a.dim != b.dim) throw std::invalid_argument("forms of different dimension");
    QuadraticForm q;
    q.dim = a.dim;
    q.description = a.description + "_minus_" + b.description;
    q.lower_bound = lower_bound;
    if (!a.diagonal.empty() && !b.diagonal.empty()) {
        q.diagonal.resize(q.dim);
        for (std::size_t k = 0; k < q.dim; ++k) q.diagonal[k] = a.diagonal[k] - b.diagonal[k];
    }
    q.apply = [fa = a.apply, fb = b.apply, n = a.dim](std::span<const double> x, std::span<double> y) {
        std::vector<double> t(n);
        fa(x, y);
        fb(x, t);
        for (std::size_t k = 0; k < n; ++k) y[k] -= t[k];
    };
    return q;
}

QuadraticForm assemble_Leps_minus_tangential(const ScalarField& c_A, double eps, const TubularGeometry& geom,
                                            const Potential& pot) {
    if (!(c_A.grid() == geom.grid())) throw std::invalid_argument("c_A and geometry grids differ");
    QuadraticForm L = assemble_Leps(c_A, eps, pot);
    QuadraticForm T = assemble_tangential(geom);
    // Away from walls the projected centered form is dominated by the face
    // stiffness; one-sided wall stencils can exceed it by at most 4 / h^2.
    bool touches = false;
    band_stencil(geom, touches);
    const double h = geom.grid().h();
    const double bound = *L.lower_bound - (touches ? 4.0 / (h * h) : 0.0);
    QuadraticForm q = subtract(L, T, bound);
    q.description = "L_eps_minus_tangential";
    return q;
}

// ---------------------------------------------------------------------------
// Inverse iteration
// ---------------------------------------------------------------------------

EigenResult min_eigenvalue(const QuadraticForm& form, double tol, int max_outer) {
    const std::size_t n = form.dim;
    if (n == 0 || !form.apply) throw EigenError("empty form");
    if (!form.lower_bound) throw EigenError("inverse iteration needs a lower bound on the spectrum");
    const double lb = *form.lower_bound;

    std::vector<double> x(n), y(n), ax(n);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    for (double& v : x) v = 1.0 + u(rng);
    double nx = norm2(x);
    for (double& v : x) v /= nx;

    auto rayleigh = [&](double& resid) {
        form.apply(x, ax);
        const double lam = dot(x, ax);
        double r2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) r2 += (ax[k] - lam * x[k]) * (ax[k] - lam * x[k]);
        resid = std::sqrt(r2);
        return lam;
    };

    double sigma = lb - 1.0 - 1e-3 * std::abs(lb);
    double safe_sigma = sigma;
    double resid = 0.0;
    double lam = rayleigh(resid);
    double prev_step = 0.0, prev_ratio = -1.0;
    std::vector<double> inv_diag(n, 1.0);
    EigenResult out;
    for (int it = 1; it <= max_outer; ++it) {
        if (!form.diagonal.empty())
            for (std::size_t k = 0; k < n; ++k) inv_diag[k] = 1.0 / std::max(form.diagonal[k] - sigma, 1e-300);
        const double s = sigma;
        const LinearOp shifted = [&](std::span<const double> in, std::span<double> o) {
            form.apply(in, o);
            for (std::size_t k = 0; k < n; ++k) o[k] -= s * in[k];
        };
        std::fill(y.begin(), y.end(), 0.0);
        const double scale = 1.0 / std::max(lam - sigma, 1e-300);
        for (std::size_t k = 0; k < n; ++k) y[k] = x[k] * scale;
        const CgResult cg = conjugate_gradient(shifted, form.diagonal.empty() ? std::span<const double>{} : inv_diag,
                                               x, y, 1e-12, 20 * static_cast<int>(std::sqrt(double(n))) + 2000);
        if (cg.indefinite) {
            if (sigma == safe_sigma) throw EigenError("shifted operator indefinite below the lower bound");
            sigma = safe_sigma;
            prev_ratio = -1.0;
            continue;
        }
        if (!cg.converged && cg.relative_residual > 1e-6) throw EigenError("inner CG solve failed to converge");
        nx = norm2(y);
        for (std::size_t k = 0; k < n; ++k) x[k] = y[k] / nx;
        const double next = rayleigh(resid);
        const double step = std::abs(next - lam);
        lam = next;
        out.iterations = it;
        if (step <= tol && it > 1) {
            out.value = lam;
            out.vector = x;
            return out;
        }
        // Move the shift up once successive steps contract at a steady rate.
        if (prev_step > 0.0) {
            const double ratio = step / prev_step;
            if (ratio < 1.0 && prev_ratio > 0.0 && std::abs(ratio - prev_ratio) < 0.1) {
                const double candidate = lam - 2.0 * resid - 1e-3 * std::max(1.0, std::abs(lam));
                if (candidate > sigma) {
                    safe_sigma = sigma;
                    sigma = candidate;
                }
            }
            prev_ratio = ratio;
        }
        prev_step = step;
    }
    throw EigenError("inverse iteration did not converge in the outer iteration limit");
}

// ---------------------------------------------------------------------------
// Uniform bound probe
// ---------------------------------------------------------------------------

SpectralReport verify_spectral_bound(const SpectralSetup& setup, const ProfileTable& profile,
                                     const std::vector<double>& eps_list, double c_budget) {
    if (eps_list.empty()) throw std::invalid_argument("spectral probe needs at least one eps");
    SpectralReport rep;
    rep.c_budget = c_budget;
    rep.pass = true;
    for (double eps : eps_list) {
        const GridSpec grid = make_grid(setup.lx, setup.ly, eps / setup.h_ratio, Boundary::dirichlet_box);
        const double delta =
            setup.delta > 0.0 ? setup.delta : std::max(default_delta(setup.curve, grid), 5.0 * eps);
        const TubularGeometry geom(setup.curve, grid, delta, ClearancePolicy::warn);
        const ScalarField cA = build_cA(geom, eps, profile);
        const QuadraticForm L = assemble_Leps(cA, eps);
        const QuadraticForm LT = assemble_Leps_minus_tangential(cA, eps, geom);
        SpectralRow row;
        row.eps = eps;
        row.naive_bound = *L.lower_bound;
        row.lambda_L = min_eigenvalue(L, 1e-8).value;
        row.lambda_L_minus_T = min_eigenvalue(LT, 1e-8).value;
        row.pass = row.lambda_L >= -c_budget && row.lambda_L_minus_T >= -c_budget;
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

void write_spectral_csv(const SpectralReport& rep, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open spectral CSV: " + path.string());
    os << "eps,lambda_min_L,lambda_min_L_minus_T,pass\n";
    char buf[160];
    for (const auto& r : rep.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d\n", r.eps, r.lambda_L, r.lambda_L_minus_T,
                      r.pass ? 1 : 0);
        os << buf;
    }
}

}  // namespace nsac
