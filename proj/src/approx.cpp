#include "nsac/approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace nsac {

double stretched_variable(Vec2 x, const TubularGeometry& geom, double eps, const ShiftFn& h_shift) {
    const TubularCoords tc = tubular_coords(x, geom);
    return tc.r / eps - (h_shift ? h_shift(tc.s) : 0.0);
}

ScalarField build_cA(const TubularGeometry& geom, double eps, const ProfileTable& profile, const ShiftFn& h_shift) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (geom.delta() < 5.0 * eps * (1.0 - 1e-12))
        throw std::invalid_argument("tube half-width delta must be at least 5 eps");
    const GridSpec& g = geom.grid();
    const ScalarField& d = geom.d_gamma();
    const ScalarField& s = geom.s_coord();
    const double delta = geom.delta();
    ScalarField c(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double r = d(i, j);
            const double outer = r > 0.0 ? 1.0 : -1.0;
            if (std::abs(r) >= 2.0 * delta) {
                c(i, j) = outer;
                continue;
            }
            const double rho = r / eps - (h_shift ? h_shift(s(i, j)) : 0.0);
            const double z = cutoff_zeta(r, delta).value;
            c(i, j) = z * profile.value(rho) + (1.0 - z) * outer;
        }
    return c;
}

StaggeredVectorField build_vA(const TubularGeometry& geom, const VelocitySampler& bulk, PoissonSolver& poisson) {
    StaggeredVectorField v(geom.grid());
    if (!bulk) return v;
    v.sample([&](double x, double y) { return bulk({x, y}).x; }, [&](double x, double y) { return bulk({x, y}).y; });
    project_divergence_free(v, poisson);
    return v;
}

StaggeredVectorField build_vA(const TubularGeometry& geom, const VelocitySampler& bulk) {
    if (!bulk) return StaggeredVectorField(geom.grid());
    PoissonSolver poisson(geom.grid());
    return build_vA(geom, bulk, poisson);
}

ApproxSolution build_approx(const TubularGeometry& geom, double eps, const ProfileTable& profile,
                            const VelocitySampler& bulk, const ShiftFn& h_shift) {
    return {build_cA(geom, eps, profile, h_shift), build_vA(geom, bulk), geom, eps, h_shift};
}

double estimate_decay_rate(const ScalarField& f, const TubularGeometry& geom, double eps) {
    const GridSpec& g = f.grid();
    const double h = g.h();
    const double rho_lo = 2.0;
    const double rho_hi = std::min(8.0, geom.delta() / eps);
    const int samples = static_cast<int>(std::floor((rho_hi - rho_lo) * eps / h)) + 1;
    if (samples < 6) throw std::invalid_argument("decay-rate fit needs at least 6 grid samples per ray");
    const Curve& curve = geom.curve();
    const auto& normals = geom.marker_normals();
    double total = 0.0;
    int rays = 0;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < curve.size(); ++k)
        for (double side : {1.0, -1.0}) {
            xs.clear();
            ys.clear();
            for (int q = 0; q < samples; ++q) {
                const double rho = rho_lo + (rho_hi - rho_lo) * q / (samples - 1);
                const Vec2 p = curve[k] + normals[k] * (side * rho * eps);
                const double gap = std::abs(interpolate(f, p.x, p.y) - side);
                if (!(gap > 0.0)) throw std::invalid_argument("decay-rate fit: field has no tail (exact outer value)");
                xs.push_back(rho);
                ys.push_back(std::log(gap));
            }
            const double n = static_cast<double>(xs.size());
            double mx = 0.0, my = 0.0;
            for (std::size_t q = 0; q < xs.size(); ++q) mx += xs[q], my += ys[q];
            mx /= n;
            my /= n;
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t q = 0; q < xs.size(); ++q) {
                sxy += (xs[q] - mx) * (ys[q] - my);
                sxx += (xs[q] - mx) * (xs[q] - mx);
            }
            total += -sxy / sxx;
            ++rays;
        }
    return total / rays;
}

void write_approx(const ApproxSolution& a, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    dump_field(a.c_A, dir / "c_A");
    dump_field(a.v_A, dir / "v_A");
    write_curve(a.geom.curve(), dir / "curve.pcrv");
    std::ofstream os(dir / "manifest", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write approximation manifest in " + dir.string());
    char buf[128];
    std::snprintf(buf, sizeof(buf), "PAPX1\neps %.17g\ndelta %.17g\n", a.eps, a.geom.delta());
    os << buf;
}

ApproxSolution read_approx(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest");
    std::string magic;
    if (!(is >> magic) || magic != "PAPX1") throw SnapshotError("missing or invalid PAPX1 manifest in " + dir.string());
    double eps = 0.0, delta = 0.0;
    std::string key;
    double value = 0.0;
    while (is >> key >> value) {
        if (key == "eps") eps = value;
        else if (key == "delta") delta = value;
    }
    ScalarField c = load_field(dir / "c_A");
    StaggeredVectorField v = load_staggered(dir / "v_A");
    TubularGeometry geom(read_curve(dir / "curve.pcrv"), c.grid(), delta, ClearancePolicy::warn);
    return {std::move(c), std::move(v), std::move(geom), eps, {}};
}

}  // namespace nsac
