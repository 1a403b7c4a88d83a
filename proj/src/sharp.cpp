#include "nsac/sharp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace nsac {

double max_curve_step(const Curve& curve) {
    const double s = curve.min_spacing();
    return 0.2 * s * s;
}

SharpState evolve_curve(const SharpState& state, double dt) {
    const Curve& curve = state.curve;
    if (!(dt > 0.0)) throw std::invalid_argument("curve step must be positive");
    if (dt > max_curve_step(curve) * (1.0 + 1e-12))
        throw std::invalid_argument("curve step exceeds 0.2 (min spacing)^2");
    if (curve.mean_radius() < 4.0 * curve.mean_spacing())
        throw GeometryError("curve too small to resolve curvature (radius < 4 spacings)");
    const auto n = marker_normals(curve);
    const auto H = curvature(curve);
    std::vector<Vec2> moved(curve.size());
    for (std::size_t k = 0; k < curve.size(); ++k) {
        if (std::abs(H[k]) * dt > 0.5) throw GeometryError("curvature blow-up: |H| dt > 0.5");
        double speed = H[k];
        if (state.velocity) speed += n[k].dot(state.velocity(curve[k]));
        moved[k] = curve[k] + n[k] * (dt * speed);
    }
    Curve stepped(std::move(moved));
    if (!stepped.simple()) throw GeometryError("curve self-intersects after step");
    return {state.t + dt, resample(stepped, curve.size()), state.velocity};
}

SharpState advance_curve(const SharpState& state, double t_end, double dt_max) {
    SharpState s = state;
    while (s.t < t_end - 1e-14) {
        double dt = std::min({dt_max, max_curve_step(s.curve), t_end - s.t});
        s = evolve_curve(s, dt);
    }
    s.t = std::max(s.t, t_end);
    return s;
}

double exact_circle_radius(double r0, double t) {
    if (!(r0 > 0.0)) throw std::invalid_argument("initial radius must be positive");
    if (t < 0.0) throw std::invalid_argument("time must be non-negative");
    const double r2 = r0 * r0 - 2.0 * t;
    // Rounding in r0^2 must not turn the extinction time into a tiny radius.
    if (!(r2 > 64.0 * std::numeric_limits<double>::epsilon() * r0 * r0)) throw std::domain_error("circle extinct: t >= R0^2 / 2");
    return std::sqrt(r2);
}

// ---------------------------------------------------------------------------
// Zero-contour extraction
// ---------------------------------------------------------------------------

Curve extract_zero_levelset(const ScalarField& c, std::size_t n) {
    const GridSpec& g = c.grid();
    const int nx = g.nx, ny = g.ny;
    // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2 (j nx + i); vertical (i,j)-(i,j+1) -> 2 (j nx + i) + 1.
    auto hedge = [&](int i, int j) { return 2 * (static_cast<long>(j) * nx + i); };
    auto vedge = [&](int i, int j) { return 2 * (static_cast<long>(j) * nx + i) + 1; };
    std::unordered_map<long, Vec2> points;
    auto crossing = [&](long id, int i0, int j0, int i1, int j1) {
        if (points.count(id)) return;
        const double a = c(i0, j0), b = c(i1, j1);
        const double t = a / (a - b);
        const Vec2 p0{g.xc(i0), g.yc(j0)}, p1{g.xc(i1), g.yc(j1)};
        points[id] = p0 + (p1 - p0) * t;
    };
    std::unordered_map<long, std::vector<long>> links;
    auto link = [&](long a, long b) {
        links[a].push_back(b);
        links[b].push_back(a);
    };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double v[4] = {c(i, j), c(i + 1, j), c(i + 1, j + 1), c(i, j + 1)};
            const bool pos[4] = {v[0] > 0, v[1] > 0, v[2] > 0, v[3] > 0};
            // Edges: 0 bottom (corner 0-1), 1 right (1-2), 2 top (3-2), 3 left (0-3).
            const long e[4] = {hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)};
            int cut[4], m = 0;
            for (int k = 0; k < 4; ++k)
                if (pos[k] != pos[(k + 1) % 4]) cut[m++] = k;
            if (m == 0) continue;
            for (int q = 0; q < m; ++q) {
                const int k = cut[q];
                switch (k) {
                    case 0: crossing(e[0], i, j, i + 1, j); break;
                    case 1: crossing(e[1], i + 1, j, i + 1, j + 1); break;
                    case 2: crossing(e[2], i, j + 1, i + 1, j + 1); break;
                    case 3: crossing(e[3], i, j, i, j + 1); break;
                }
            }
            if (m == 2) {
                link(e[cut[0]], e[cut[1]]);
                continue;
            }
            // Saddle: corners whose sign differs from the center average are cut off.
            const bool center = 0.25 * (v[0] + v[1] + v[2] + v[3]) > 0;
            // Corner k touches edges k and (k + 3) % 4.
            for (int k = 0; k < 4; ++k)
                if (pos[k] != center) link(e[k], e[(k + 3) % 4]);
        }
    if (points.empty()) throw GeometryError("zero level set: no contour found");
    for (const auto& [id, nb] : links)
        if (nb.size() != 2) throw GeometryError("zero level set: open contour touches the sampled region edge");

    std::vector<std::vector<Vec2>> loops;
    std::unordered_map<long, bool> seen;
    std::vector<long> ids;
    ids.reserve(links.size());
    for (const auto& kv : links) ids.push_back(kv.first);
    std::sort(ids.begin(), ids.end());
    for (long start : ids) {
        if (seen[start]) continue;
        std::vector<Vec2> loop;
        long prev = -1, cur = start;
        while (!seen[cur]) {
            seen[cur] = true;
            loop.push_back(points.at(cur));
            const auto& nb = links.at(cur);
            const long next = nb[0] != prev ? nb[0] : nb[1];
            prev = cur;
            cur = next;
        }
        loops.push_back(std::move(loop));
    }
    if (loops.size() != 1) throw GeometryError("zero level set: expected one closed contour, found " +
                                               std::to_string(loops.size()));
    return resample_loop(std::move(loops.front()), n);
}

void write_trajectory(const std::vector<SharpState>& states, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest", std::ios::trunc);
    if (!manifest) throw std::runtime_error("cannot write trajectory manifest in " + dir.string());
    char buf[128];
    for (std::size_t k = 0; k < states.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "curve_%05zu.pcrv", k);
        write_curve(states[k].curve, dir / buf);
        char line[192];
        std::snprintf(line, sizeof(line), "%zu %.17g %s\n", k, states[k].t, buf);
        manifest << line;
    }
}

}  // namespace nsac
