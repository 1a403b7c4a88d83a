#include "nsac/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nsac {

namespace {

inline int wrap(int i, int n) { return (i % n + n) % n; }

// Cell value with the odd reflection about the wall datum b for indices
// outside the grid (ghost = 2b - interior mirror).
double cell_ext(const ScalarField& c, int i, int j, double b) {
    const GridSpec& g = c.grid();
    if (g.bc == Boundary::periodic) return c(wrap(i, g.nx), wrap(j, g.ny));
    int mi = i, mj = j;
    double sign = 1.0;
    if (mi < 0) mi = -1 - mi, sign = -sign;
    if (mi >= g.nx) mi = 2 * g.nx - 1 - mi, sign = -sign;
    if (mj < 0) mj = -1 - mj, sign = -sign;
    if (mj >= g.ny) mj = 2 * g.ny - 1 - mj, sign = -sign;
    const double val = c(mi, mj);
    return sign > 0 ? val : 2.0 * b - val;
}

// Copy of c with a two-cell ghost layer filled by cell_ext.
struct Padded {
    int nx, ny;
    std::vector<double> a;
    Padded(const ScalarField& c, double b) : nx(c.nx()), ny(c.ny()), a(static_cast<std::size_t>(nx + 4) * (ny + 4)) {
        for (int j = -2; j < ny + 2; ++j)
            for (int i = -2; i < nx + 2; ++i) {
                const bool interior = i >= 0 && i < nx && j >= 0 && j < ny;
                (*this)(i, j) = interior ? c(i, j) : cell_ext(c, i, j, b);
            }
    }
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(j + 2) * (nx + 4) + (i + 2)]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(j + 2) * (nx + 4) + (i + 2)]; }
};

// One velocity component laid out as an mx-by-my array of unknowns. Along each
// axis the edge condition is periodic, a fixed zero on the boundary face
// itself, or a zero wall value between the last unknown and its ghost.
enum class Edge { periodic, node_zero, ghost_zero };

struct Layout {
    int mx = 0, my = 0;
    Edge ex = Edge::periodic, ey = Edge::periodic;
    std::size_t size() const { return static_cast<std::size_t>(mx) * my; }
};

// Value of neighbour k along an axis of length m; `self` is used for the mirror ghost.
inline double neighbour(std::span<const double> x, Edge e, int m, int k, double self, auto&& index) {
    if (k >= 0 && k < m) return x[index(k)];
    switch (e) {
        case Edge::periodic: return x[index(wrap(k, m))];
        case Edge::node_zero: return 0.0;
        case Edge::ghost_zero: return -self;
    }
    return 0.0;
}

// y = a x - Lap x for the component layout.
void helmholtz_apply(const Layout& L, double a, double h, std::span<const double> x, std::span<double> y) {
    const double ih2 = 1.0 / (h * h);
    const int mx = L.mx, my = L.my;
    auto edge_point = [&](int i, int j) {
        const std::size_t k = static_cast<std::size_t>(j) * mx + i;
        const double s = x[k];
        auto row = [&](int q) { return static_cast<std::size_t>(j) * mx + q; };
        auto col = [&](int q) { return static_cast<std::size_t>(q) * mx + i; };
        const double w = neighbour(x, L.ex, mx, i - 1, s, row);
        const double e = neighbour(x, L.ex, mx, i + 1, s, row);
        const double so = neighbour(x, L.ey, my, j - 1, s, col);
        const double n = neighbour(x, L.ey, my, j + 1, s, col);
        y[k] = a * s - (w + e + so + n - 4.0 * s) * ih2;
    };
    for (int j = 0; j < my; ++j) {
        if (j == 0 || j == my - 1) {
            for (int i = 0; i < mx; ++i) edge_point(i, j);
            continue;
        }
        edge_point(0, j);
        const double* xc = x.data() + static_cast<std::size_t>(j) * mx;
        double* yc = y.data() + static_cast<std::size_t>(j) * mx;
        for (int i = 1; i < mx - 1; ++i)
            yc[i] = a * xc[i] - (xc[i - 1] + xc[i + 1] + xc[i - mx] + xc[i + mx] - 4.0 * xc[i]) * ih2;
        edge_point(mx - 1, j);
    }
}

std::vector<double> helmholtz_inv_diag(const Layout& L, double a, double h) {
    const double ih2 = 1.0 / (h * h);
    std::vector<double> d(L.size());
    for (int j = 0; j < L.my; ++j)
        for (int i = 0; i < L.mx; ++i) {
            int extra = 0;
            if (L.ex == Edge::ghost_zero) extra += (i == 0) + (i == L.mx - 1);
            if (L.ey == Edge::ghost_zero) extra += (j == 0) + (j == L.my - 1);
            d[static_cast<std::size_t>(j) * L.mx + i] = 1.0 / (a + (4.0 + extra) * ih2);
        }
    return d;
}

void require_converged(const CgResult& r, const char* what) {
    if (!r.converged) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s: CG stalled after %d iterations (relative residual %.3g)", what,
                      r.iterations, r.relative_residual);
        throw SolverAbort(buf);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Pointwise operators
// ---------------------------------------------------------------------------

ScalarField chemical_potential(const ScalarField& c, double eps, const Potential& pot) {
    ScalarField mu = discrete_laplacian(c, -1.0);
    for (std::size_t k = 0; k < mu.data().size(); ++k)
        mu.data()[k] = -eps * mu.data()[k] + pot.df(c.data()[k]) / eps;
    return mu;
}

StaggeredVectorField capillary_force(const ScalarField& c, double eps) {
    const GridSpec& g = c.grid();
    const double h = g.h();
    const int nx = g.nx, ny = g.ny;
    const bool periodic = g.bc == Boundary::periodic;
    const Padded C(c, -1.0);
    // Face differences of c on a one-face halo: gx on vertical faces, gy on horizontal faces.
    const int wx = nx + 3, wy = ny + 3;
    std::vector<double> gx(static_cast<std::size_t>(wx) * wy), gy(gx.size());
    auto at = [&](std::vector<double>& f, int i, int j) -> double& {
        return f[static_cast<std::size_t>(j + 1) * wx + (i + 1)];
    };
    for (int j = -1; j <= ny + 1; ++j)
        for (int i = -1; i <= nx + 1; ++i) {
            at(gx, i, j) = (C(i, j) - C(i - 1, j)) / h;
            at(gy, i, j) = (C(i, j) - C(i, j - 1)) / h;
        }
    // Diagonal stress at cell centers (one-cell halo), off-diagonal at nodes.
    const int cx = nx + 2;
    std::vector<double> txx(static_cast<std::size_t>(cx) * (ny + 2)), tyy(txx.size());
    for (int j = -1; j <= ny; ++j)
        for (int i = -1; i <= nx; ++i) {
            const double a = at(gx, i, j), b = at(gx, i + 1, j);
            const double p = at(gy, i, j), q = at(gy, i, j + 1);
            const std::size_t k = static_cast<std::size_t>(j + 1) * cx + (i + 1);
            txx[k] = 0.5 * (a * a + b * b);
            tyy[k] = 0.5 * (p * p + q * q);
        }
    std::vector<double> txy(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            double val = 0.0;
            if (periodic || (i > 0 && i < nx && j > 0 && j < ny)) {
                const double ax = 0.5 * (at(gx, i, j - 1) + at(gx, i, j));
                const double ay = 0.5 * (at(gy, i - 1, j) + at(gy, i, j));
                val = ax * ay;
            }
            txy[static_cast<std::size_t>(j) * (nx + 1) + i] = val;
        }
    auto TXX = [&](int i, int j) { return txx[static_cast<std::size_t>(j + 1) * cx + (i + 1)]; };
    auto TYY = [&](int i, int j) { return tyy[static_cast<std::size_t>(j + 1) * cx + (i + 1)]; };
    auto TXY = [&](int i, int j) { return txy[static_cast<std::size_t>(j) * (nx + 1) + i]; };
    StaggeredVectorField F(g);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i <= nx; ++i)
            F.u(i, j) = -eps * ((TXX(i, j) - TXX(i - 1, j)) + (TXY(i, j + 1) - TXY(i, j))) / h;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i)
            F.v(i, j) = -eps * ((TXY(i + 1, j) - TXY(i, j)) + (TYY(i, j) - TYY(i, j - 1))) / h;
    F.enforce_boundary();
    return F;
}

ScalarField upwind_advection(const StaggeredVectorField& v, const ScalarField& c) {
    const GridSpec& g = c.grid();
    const double h = g.h();
    ScalarField out(g);
    const Padded C(c, -1.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double uc = 0.5 * (v.u(i, j) + v.u(i + 1, j));
            const double vc = 0.5 * (v.v(i, j) + v.v(i, j + 1));
            double dx = 0.0, dy = 0.0;
            if (uc > 0.0)
                dx = (3.0 * C(i, j) - 4.0 * C(i - 1, j) + C(i - 2, j)) / (2.0 * h);
            else if (uc < 0.0)
                dx = (-3.0 * C(i, j) + 4.0 * C(i + 1, j) - C(i + 2, j)) / (2.0 * h);
            if (vc > 0.0)
                dy = (3.0 * C(i, j) - 4.0 * C(i, j - 1) + C(i, j - 2)) / (2.0 * h);
            else if (vc < 0.0)
                dy = (-3.0 * C(i, j) + 4.0 * C(i, j + 1) - C(i, j + 2)) / (2.0 * h);
            out(i, j) = uc * dx + vc * dy;
        }
    return out;
}

double default_dt(const GridSpec& grid, double eps, double max_velocity, double factor) {
    const double h = grid.h();
    double dt = factor * std::min(h * h, eps * eps);
    if (max_velocity > 0.0) dt = std::min(dt, 0.25 * h / max_velocity);
    return dt;
}

double min_stabilization(const Potential& pot) {
    double m = 0.0;
    for (int k = 0; k <= 440; ++k) m = std::max(m, pot.d2f(-1.0 - kOvershoot + k * 0.005));
    return 0.5 * m;
}

// ---------------------------------------------------------------------------
// DiffuseSolver
// ---------------------------------------------------------------------------

struct DiffuseSolver::HelmholtzCache {
    struct Entry {
        int mx, my, ex, ey;
        std::unique_ptr<TransformHelmholtz> solver;
    };
    std::vector<Entry> entries;
    std::vector<double> resid;
};

DiffuseSolver::DiffuseSolver(const GridSpec& grid, Potential pot)
    : grid_(grid),
      pot_(std::move(pot)),
      poisson_(std::make_unique<PoissonSolver>(grid)),
      helmholtz_(std::make_unique<HelmholtzCache>()) {
    grid_.require_solver_grid();
}

DiffuseSolver::~DiffuseSolver() = default;
DiffuseSolver::DiffuseSolver(DiffuseSolver&&) noexcept = default;
DiffuseSolver& DiffuseSolver::operator=(DiffuseSolver&&) noexcept = default;

void DiffuseSolver::solve_helmholtz(int mx, int my, int ex, int ey, double a, std::span<const double> rhs,
                                    std::span<double> x, const StepParams& prm, const char* what) const {
    const Layout L{mx, my, static_cast<Edge>(ex), static_cast<Edge>(ey)};
    const double h = grid_.h();
    auto op = [&](std::span<const double> in, std::span<double> out) { helmholtz_apply(L, a, h, in, out); };
    if (prm.transform_solves) {
        auto& cache = *helmholtz_;
        auto it = std::find_if(cache.entries.begin(), cache.entries.end(), [&](const auto& e) {
            return e.mx == mx && e.my == my && e.ex == ex && e.ey == ey;
        });
        if (it == cache.entries.end()) {
            auto kind = [](Edge e) {
                switch (e) {
                    case Edge::periodic: return AxisKind::periodic;
                    case Edge::node_zero: return AxisKind::dirichlet_node;
                    case Edge::ghost_zero: return AxisKind::dirichlet_cell;
                }
                return AxisKind::periodic;
            };
            cache.entries.push_back({mx, my, ex, ey, std::make_unique<TransformHelmholtz>(mx, my, h, kind(L.ex), kind(L.ey))});
            it = cache.entries.end() - 1;
        }
        it->solver->solve(a, rhs, x);
        cache.resid.resize(x.size());
        op(x, cache.resid);
        double rr = 0.0, bb = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double d = rhs[k] - cache.resid[k];
            rr += d * d;
            bb += rhs[k] * rhs[k];
        }
        if (rr <= prm.cg_tol * prm.cg_tol * bb) return;
        // Round-off trouble; polish with CG from the transform solution.
    }
    const auto inv_diag = helmholtz_inv_diag(L, a, h);
    const auto res = conjugate_gradient(op, inv_diag, rhs, x, prm.cg_tol, prm.cg_maxit);
    require_converged(res, what);
}

ScalarField DiffuseSolver::ac_step(const NsacState& s, const StepParams& prm) const {
    if (!(prm.dt > 0.0)) throw std::invalid_argument("time step must be positive");
    if (prm.S < min_stabilization(pot_) - 1e-12)
        throw std::invalid_argument("stabilization S below (1/2) sup f'' on the overshoot range");
    const GridSpec& g = grid_;
    const double ie2 = 1.0 / (s.eps * s.eps);
    const double a = 1.0 / prm.dt + prm.S * ie2;
    const ScalarField adv = upwind_advection(s.v, s.c);

    ScalarField rhs(g);
    for (std::size_t k = 0; k < rhs.data().size(); ++k) {
        const double c = s.c.data()[k];
        rhs.data()[k] = c / prm.dt + prm.S * ie2 * c - ie2 * pot_.df(c) - adv.data()[k];
    }
    Layout L{g.nx, g.ny, Edge::periodic, Edge::periodic};
    ScalarField next = s.c;
    if (g.bc == Boundary::dirichlet_box) {
        // Solve for c + 1, which vanishes on the walls (datum -1), so the pure
        // phase -1 gives a zero right-hand side and stays exact.
        L.ex = L.ey = Edge::ghost_zero;
        for (double& r : rhs.data()) r += a;
        for (double& c : next.data()) c += 1.0;
        solve_helmholtz(L.mx, L.my, static_cast<int>(L.ex), static_cast<int>(L.ey), a, rhs.span(), next.span(), prm,
                        "Allen-Cahn Helmholtz solve");
        for (double& c : next.data()) c -= 1.0;
        return next;
    }
    solve_helmholtz(L.mx, L.my, static_cast<int>(L.ex), static_cast<int>(L.ey), a, rhs.span(), next.span(), prm,
                    "Allen-Cahn Helmholtz solve");
    return next;
}

ProjectionResult DiffuseSolver::ns_projection_step(const NsacState& s, const StaggeredVectorField& force,
                                                   const StepParams& prm) {
    const GridSpec& g = grid_;
    const double h = g.h();
    const int nx = g.nx, ny = g.ny;
    const bool periodic = g.bc == Boundary::periodic;
    const StaggeredVectorField& v = s.v;
    const double a = 1.0 / prm.dt;

    auto U = [&](int i, int j) {
        if (periodic) return v.u(wrap(i, nx), wrap(j, ny));
        if (i < 0 || i > nx) return 0.0;
        if (j < 0) return -v.u(i, 0);
        if (j >= ny) return -v.u(i, ny - 1);
        return v.u(i, j);
    };
    auto V = [&](int i, int j) {
        if (periodic) return v.v(wrap(i, nx), wrap(j, ny));
        if (j < 0 || j > ny) return 0.0;
        if (i < 0) return -v.v(0, j);
        if (i >= nx) return -v.v(nx - 1, j);
        return v.v(i, j);
    };

    // u component: unknowns on faces i in [i0, i0 + mx), all rows.
    StaggeredVectorField star(g);
    {
        const int i0 = periodic ? 0 : 1;
        Layout L{periodic ? nx : nx - 1, ny, periodic ? Edge::periodic : Edge::node_zero,
                 periodic ? Edge::periodic : Edge::ghost_zero};
        std::vector<double> rhs(L.size()), x(L.size());
        for (int j = 0; j < ny; ++j)
            for (int q = 0; q < L.mx; ++q) {
                const int i = q + i0;
                const double uu = U(i, j);
                const double vv = 0.25 * (V(i - 1, j) + V(i, j) + V(i - 1, j + 1) + V(i, j + 1));
                const double adv = uu * (U(i + 1, j) - U(i - 1, j)) / (2.0 * h) +
                                   vv * (U(i, j + 1) - U(i, j - 1)) / (2.0 * h);
                const std::size_t k = static_cast<std::size_t>(j) * L.mx + q;
                rhs[k] = a * uu - adv + force.u(i, j);
                x[k] = uu;
            }
        solve_helmholtz(L.mx, L.my, static_cast<int>(L.ex), static_cast<int>(L.ey), a, rhs, x, prm,
                        "viscous solve (u)");
        for (int j = 0; j < ny; ++j)
            for (int q = 0; q < L.mx; ++q) star.u(q + i0, j) = x[static_cast<std::size_t>(j) * L.mx + q];
    }
    {
        const int j0 = periodic ? 0 : 1;
        Layout L{nx, periodic ? ny : ny - 1, periodic ? Edge::periodic : Edge::ghost_zero,
                 periodic ? Edge::periodic : Edge::node_zero};
        std::vector<double> rhs(L.size()), x(L.size());
        for (int q = 0; q < L.my; ++q)
            for (int i = 0; i < nx; ++i) {
                const int j = q + j0;
                const double vv = V(i, j);
                const double uu = 0.25 * (U(i, j - 1) + U(i + 1, j - 1) + U(i, j) + U(i + 1, j));
                const double adv = uu * (V(i + 1, j) - V(i - 1, j)) / (2.0 * h) +
                                   vv * (V(i, j + 1) - V(i, j - 1)) / (2.0 * h);
                const std::size_t k = static_cast<std::size_t>(q) * L.mx + i;
                rhs[k] = a * vv - adv + force.v(i, j);
                x[k] = vv;
            }
        solve_helmholtz(L.mx, L.my, static_cast<int>(L.ex), static_cast<int>(L.ey), a, rhs, x, prm,
                        "viscous solve (v)");
        for (int q = 0; q < L.my; ++q)
            for (int i = 0; i < nx; ++i) star.v(i, q + j0) = x[static_cast<std::size_t>(q) * L.mx + i];
    }
    star.enforce_boundary();

    ProjectionResult out;
    const ScalarField div = discrete_divergence(star);
    ScalarField phi(g);
    out.compatibility_defect = poisson_->solve(div, phi);
    const StaggeredVectorField grad = discrete_gradient(phi);
    for (std::size_t k = 0; k < star.u_data().size(); ++k) star.u_data()[k] -= grad.u_data()[k];
    for (std::size_t k = 0; k < star.v_data().size(); ++k) star.v_data()[k] -= grad.v_data()[k];
    star.enforce_boundary();
    out.v = std::move(star);
    out.p = (1.0 / prm.dt) * phi;
    return out;
}

NsacState DiffuseSolver::step_coupled(const NsacState& s, const StepParams& prm) {
    if (!(s.c.grid() == grid_)) throw std::invalid_argument("state grid does not match the solver grid");
    NsacState next;
    next.eps = s.eps;
    next.t = s.t + prm.dt;
    next.step = s.step + 1;
    if (prm.pure_allen_cahn) {
        next.v = s.v;
        next.p = s.p;
    } else {
        const StaggeredVectorField force = capillary_force(s.c, s.eps);
        ProjectionResult pr = ns_projection_step(s, force, prm);
        const double div = max_abs(discrete_divergence(pr.v));
        if (!(div <= kDivergenceBound)) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "velocity divergence %.3g exceeds bound after projection", div);
            throw SolverAbort(buf);
        }
        next.v = std::move(pr.v);
        next.p = std::move(pr.p);
    }
    NsacState mid{s.t, next.v, next.p, s.c, s.eps, s.step};
    next.c = ac_step(mid, prm);
    if (!next.c.finite() || !next.v.finite()) throw SolverAbort("non-finite values in state");
    if (max_abs(next.c) > 1.0 + kOvershoot) throw SolverAbort("order parameter overshoot beyond 1.1");
    return next;
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

Energies total_energy(const NsacState& s, const Potential& pot) {
    const GridSpec& g = s.c.grid();
    const double area = g.hx() * g.hy();
    double bulk = 0.0;
    for (double c : s.c.data()) bulk += pot.f(c);
    Energies e;
    e.e_eps = 0.5 * s.eps * gradient_energy_integral(s.c, -1.0) + bulk * area / s.eps;
    e.e_tot = 0.25 * inner(s.v, s.v) + e.e_eps;
    return e;
}

double dissipation_rate(const NsacState& s, const Potential& pot) {
    const ScalarField mu = chemical_potential(s.c, s.eps, pot);
    return 0.5 * velocity_gradient_integral(s.v) + inner(mu, mu) / s.eps;
}

double EnergyLedger::record(const NsacState& s) {
    const double e = total_energy(s, pot_).e_tot;
    const double rate = dissipation_rate(s, pot_);
    double change = 0.0;
    if (!times_.empty()) {
        dissipated_ += 0.5 * (s.t - times_.back()) * (rate + last_rate_);
        change = e - e_tot_.back();
        max_increase_ = std::max(max_increase_, change);
    }
    times_.push_back(s.t);
    e_tot_.push_back(e);
    last_rate_ = rate;
    return change;
}

double EnergyLedger::residual() const {
    if (times_.empty()) return 0.0;
    const double r = std::abs(e_tot_.back() + dissipated_ - e_tot_.front());
    return e_tot_.front() == 0.0 ? r : r / std::abs(e_tot_.front());
}

double energy_identity_residual(const std::vector<NsacState>& trajectory, const Potential& pot) {
    EnergyLedger ledger(pot);
    for (const auto& s : trajectory) ledger.record(s);
    return ledger.residual();
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void write_checkpoint(const NsacState& s, double dt, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    dump_field(s.c, dir / "c");
    dump_field(s.p.data().empty() ? ScalarField(s.c.grid()) : s.p, dir / "p");
    dump_field(s.v, dir / "v");
    std::ofstream os(dir / "manifest", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint manifest in " + dir.string());
    char buf[256];
    std::snprintf(buf, sizeof(buf), "PRUN1\nt %.17g\neps %.17g\ndt %.17g\nstep %ld\n", s.t, s.eps, dt, s.step);
    os << buf;
}

NsacState read_checkpoint(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest");
    std::string magic;
    if (!(is >> magic) || magic != "PRUN1") throw SnapshotError("missing or invalid PRUN1 manifest in " + dir.string());
    NsacState s;
    std::string key;
    double value = 0.0;
    while (is >> key >> value) {
        if (key == "t") s.t = value;
        else if (key == "eps") s.eps = value;
        else if (key == "step") s.step = static_cast<long>(value);
    }
    s.c = load_field(dir / "c");
    s.p = load_field(dir / "p");
    s.v = load_staggered(dir / "v");
    return s;
}

}  // namespace nsac
