#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "nsac/approx.hpp"
#include "nsac/sharp.hpp"

using namespace nsac;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

TEST_CASE("exact circle radius") {
    CHECK(exact_circle_radius(0.4, 0.0) == 0.4);
    CHECK(exact_circle_radius(0.4, 0.06) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK_THROWS_AS(exact_circle_radius(0.4, 0.08), std::domain_error);
    CHECK_THROWS_AS(exact_circle_radius(0.4, 0.1), std::domain_error);
}

TEST_CASE("shrinking circle follows the exact radius") {
    SharpState s{0.0, Curve::circle({0.5, 0.5}, 0.4, 256), {}};
    for (double t : {0.01, 0.02, 0.03, 0.04, 0.05, 0.06}) {
        s = advance_curve(s, t, 1e-5);
        CHECK(s.t == doctest::Approx(t).epsilon(1e-12));
        const double exact = exact_circle_radius(0.4, t);
        CHECK(std::abs(s.curve.mean_radius() - exact) <= 1e-3 * exact);
        CHECK(s.curve.size() == 256);
    }
    CHECK(std::abs(s.curve.mean_radius() - 0.2) <= 1e-3);
}

TEST_CASE("large circle is carried by a uniform flow") {
    SharpState s{0.0, Curve::circle({0.0, 0.0}, 10.0, 256), [](Vec2) { return Vec2{1.0, 0.0}; }};
    const Vec2 c0 = s.curve.centroid();
    s = advance_curve(s, 0.01, 1e-3);
    const Vec2 c1 = s.curve.centroid();
    CHECK(std::abs(c1.x - c0.x - 0.01) <= 1e-4);
    CHECK(std::abs(c1.y - c0.y) <= 1e-4);
    CHECK(std::abs(s.curve.mean_radius() - 10.0) <= 1.1 * 0.01 / 10.0);
}

TEST_CASE("curvature balanced by an outward flow is stationary") {
    const double R = 0.25;
    const Vec2 center{0.5, 0.5};
    SharpState s{0.0, Curve::circle(center, R, 256), [&](Vec2 x) {
                     const Vec2 r = x - center;
                     return r * (1.0 / (R * r.norm()));
                 }};
    const Curve start = s.curve;
    const double dt = max_curve_step(s.curve);
    for (int k = 0; k < 100; ++k) s = evolve_curve(s, dt);
    double drift = 0.0;
    for (std::size_t k = 0; k < start.size(); ++k) drift = std::max(drift, (s.curve[k] - start[k]).norm());
    CHECK(drift <= 1e-6);
}

TEST_CASE("area shrinks at rate 2 pi under curvature flow") {
    for (const Curve& c0 : {Curve::circle({0.5, 0.5}, 0.3, 256), resample(Curve::ellipse({0.5, 0.5}, 0.35, 0.2, 256), 256)}) {
        SharpState s{0.0, c0, {}};
        const double a0 = s.curve.signed_area();
        s = advance_curve(s, 0.005, 1.0);
        const double rate = (a0 - s.curve.signed_area()) / 0.005;
        CHECK(rate == doctest::Approx(2 * pi).epsilon(0.02));
    }
}

TEST_CASE("resampling preserves area") {
    const Curve e = Curve::ellipse({0.5, 0.5}, 0.35, 0.2, 256);
    const Curve r = resample(e, 256);
    CHECK(std::abs(r.signed_area() - e.signed_area()) <= 1e-4 * e.signed_area());
}

TEST_CASE("tracker errors") {
    SharpState s{0.0, Curve::circle({0.5, 0.5}, 0.3, 256), {}};
    CHECK_THROWS_AS(evolve_curve(s, 10 * max_curve_step(s.curve)), std::invalid_argument);
    SharpState tiny{0.0, Curve::circle({0.5, 0.5}, 0.01, 16), {}};
    CHECK_THROWS_AS(evolve_curve(tiny, 0.5 * max_curve_step(tiny.curve)), GeometryError);
}

TEST_CASE("zero level set of a distance-like field") {
    const GridSpec g{64, 64, 1.0, 1.0, Boundary::dirichlet_box};
    ScalarField c(g);
    c.sample([](double x, double y) { return 0.25 - std::hypot(x - 0.5, y - 0.5); });
    const Curve z = extract_zero_levelset(c, 256);
    CHECK(z.size() == 256);
    CHECK(std::abs(z.mean_radius() - 0.25) <= g.h());
    CHECK(z.signed_area() > 0.0);
}

TEST_CASE("zero level set of the glued profile") {
    const double eps = 0.04;
    const GridSpec g = make_grid(1.0, 1.0, eps / 4, Boundary::dirichlet_box);
    const TubularGeometry geom(Curve::circle({0.5, 0.5}, 0.25, 512), g, 5 * eps, ClearancePolicy::warn);
    const ScalarField cA = build_cA(geom, eps, solve_profile(Potential::quartic()));
    const Curve z = extract_zero_levelset(cA);
    CHECK(std::abs(z.mean_radius() - 0.25) <= g.h() + eps * eps);
}

TEST_CASE("zero level set errors") {
    const GridSpec g{32, 32, 1.0, 1.0, Boundary::dirichlet_box};
    CHECK_THROWS(extract_zero_levelset(ScalarField(g, -1.0)));
    ScalarField two(g);
    two.sample([](double x, double y) {
        return std::max(0.15 - std::hypot(x - 0.25, y - 0.5), 0.15 - std::hypot(x - 0.75, y - 0.5));
    });
    CHECK_THROWS(extract_zero_levelset(two));
}

TEST_CASE("trajectory dump") {
    const fs::path dir = fs::temp_directory_path() / "nsac_traj";
    fs::remove_all(dir);
    std::vector<SharpState> traj{{0.0, Curve::circle({0.5, 0.5}, 0.3, 64), {}}};
    traj.push_back(advance_curve(traj.back(), 0.001, 1.0));
    write_trajectory(traj, dir);
    CHECK(fs::exists(dir / "manifest"));
    CHECK(read_curve(dir / "curve_00001.pcrv").size() == 64);
}
