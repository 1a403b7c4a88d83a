#include "nsac/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace nsac {

namespace {

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return (q - p).cross(r - p); };
    const double o1 = orient(a, b, c), o2 = orient(a, b, d);
    const double o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
        return true;
    auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
               r.y <= std::max(p.y, q.y);
    };
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

std::vector<double> chord_lengths(const std::vector<Vec2>& p) {
    const std::size_t n = p.size();
    std::vector<double> l(n);
    for (std::size_t k = 0; k < n; ++k) l[k] = (p[(k + 1) % n] - p[k]).norm();
    return l;
}

}  // namespace

// ---------------------------------------------------------------------------
// Curve
// ---------------------------------------------------------------------------

Curve::Curve(std::vector<Vec2> markers) : markers_(std::move(markers)) {
    if (markers_.size() < kMinMarkers) throw GeometryError("curve needs at least 16 markers");
    for (const Vec2& p : markers_)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("non-finite marker");
    if (signed_area() < 0.0) std::reverse(markers_.begin(), markers_.end());
    if (!simple()) throw GeometryError("curve is self-intersecting");
}

double Curve::length() const {
    double s = 0.0;
    for (double l : chord_lengths(markers_)) s += l;
    return s;
}

double Curve::signed_area() const {
    const std::size_t n = markers_.size();
    double a = 0.0;
    for (std::size_t k = 0; k < n; ++k) a += markers_[k].cross(markers_[(k + 1) % n]);
    return 0.5 * a;
}

double Curve::min_spacing() const {
    const auto l = chord_lengths(markers_);
    return *std::min_element(l.begin(), l.end());
}

Vec2 Curve::centroid() const {
    // Area centroid of the polygon.
    const std::size_t n = markers_.size();
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 p = markers_[k], q = markers_[(k + 1) % n];
        const double w = p.cross(q);
        a += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

double Curve::mean_radius() const {
    const Vec2 c = centroid();
    double s = 0.0;
    for (const Vec2& p : markers_) s += (p - c).norm();
    return s / static_cast<double>(markers_.size());
}

bool Curve::simple() const {
    const std::size_t n = markers_.size();
    // Sort-and-sweep on the segment x-extents.
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    auto lo = [&](std::size_t k) { return std::min(markers_[k].x, markers_[(k + 1) % n].x); };
    auto hi = [&](std::size_t k) { return std::max(markers_[k].x, markers_[(k + 1) % n].x); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lo(a) < lo(b); });
    for (std::size_t ia = 0; ia < n; ++ia) {
        const std::size_t a = order[ia];
        const Vec2 p = markers_[a], q = markers_[(a + 1) % n];
        const double maxx = hi(a);
        const double miny = std::min(p.y, q.y), maxy = std::max(p.y, q.y);
        for (std::size_t ib = ia + 1; ib < n && lo(order[ib]) <= maxx; ++ib) {
            const std::size_t b = order[ib];
            if ((a + 1) % n == b || (b + 1) % n == a) continue;
            const Vec2 r = markers_[b], s = markers_[(b + 1) % n];
            if (std::max(r.y, s.y) < miny || std::min(r.y, s.y) > maxy) continue;
            if (segments_intersect(p, q, r, s)) return false;
        }
    }
    return true;
}

Curve Curve::circle(Vec2 center, double radius, std::size_t n) {
    std::vector<Vec2> p(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        p[k] = {center.x + radius * std::cos(phi), center.y + radius * std::sin(phi)};
    }
    return Curve(std::move(p));
}

Curve Curve::ellipse(Vec2 center, double a, double b, std::size_t n) {
    std::vector<Vec2> p(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        p[k] = {center.x + a * std::cos(phi), center.y + b * std::sin(phi)};
    }
    return Curve(std::move(p));
}

// ---------------------------------------------------------------------------
// Resampling and differential quantities
// ---------------------------------------------------------------------------

namespace {

std::vector<Vec2> resample_once(const std::vector<Vec2>& p, std::size_t n_out) {
    const std::size_t n = p.size();
    const auto l = chord_lengths(p);
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) cum[k + 1] = cum[k] + l[k];
    const double total = cum[n];
    // Tangents per unit chord length (non-uniform centered difference).
    std::vector<Vec2> m(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t km = (k + n - 1) % n, kp = (k + 1) % n;
        const double lm = l[km], lp = l[k];
        const Vec2 dm = (p[k] - p[km]) * (1.0 / lm), dp = (p[kp] - p[k]) * (1.0 / lp);
        m[k] = (dm * lp + dp * lm) * (1.0 / (lm + lp));
    }
    std::vector<Vec2> out(n_out);
    std::size_t seg = 0;
    const double offset = cum[0];
    for (std::size_t k = 0; k < n_out; ++k) {
        const double s = offset + total * static_cast<double>(k) / static_cast<double>(n_out);
        while (seg + 1 < n && cum[seg + 1] <= s) ++seg;
        const double len = l[seg];
        const double t = std::clamp((s - cum[seg]) / len, 0.0, 1.0);
        const Vec2 a = p[seg], b = p[(seg + 1) % n];
        const Vec2 ta = m[seg] * len, tb = m[(seg + 1) % n] * len;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        out[k] = a * h00 + ta * h10 + b * h01 + tb * h11;
    }
    return out;
}

}  // namespace

Curve resample(const Curve& curve, std::size_t n) { return resample_loop(curve.markers(), n); }

Curve resample_loop(std::vector<Vec2> loop, std::size_t n) {
    if (n < Curve::kMinMarkers) throw GeometryError("resample: too few markers requested");
    // Coincident neighbours would give zero-length chords.
    std::vector<Vec2> p;
    p.reserve(loop.size());
    for (const Vec2& q : loop)
        if (p.empty() || (q - p.back()).norm() > 1e-12) p.push_back(q);
    while (p.size() > 1 && (p.front() - p.back()).norm() <= 1e-12) p.pop_back();
    if (p.size() < 3) throw GeometryError("resample: loop has fewer than 3 distinct points");
    p = resample_once(p, n);
    p = resample_once(p, n);
    Curve out(std::move(p));
    const double mean = out.mean_spacing();
    for (double l : chord_lengths(out.markers()))
        if (l < 0.5 * mean || l > 2.0 * mean) throw GeometryError("resample: spacing out of [0.5, 2] x mean");
    return out;
}

std::vector<Vec2> marker_normals(const Curve& curve) {
    const auto& p = curve.markers();
    const std::size_t n = p.size();
    std::vector<Vec2> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 t = p[(k + 1) % n] - p[(k + n - 1) % n];
        const double len = t.norm();
        if (!(len > 0.0)) throw GeometryError("degenerate marker spacing");
        out[k] = t.perp() * (1.0 / len);
    }
    return out;
}

std::vector<double> curvature(const Curve& curve) {
    const auto& p = curve.markers();
    const std::size_t n = p.size();
    const auto l = chord_lengths(p);
    const double floor = 1e-12 * curve.length();
    const auto normals = marker_normals(curve);
    std::vector<double> h(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t km = (k + n - 1) % n, kp = (k + 1) % n;
        const double lm = l[km], lp = l[k];
        if (lm < floor || lp < floor) throw GeometryError("degenerate marker spacing");
        const Vec2 xss = ((p[kp] - p[k]) * (1.0 / lp) - (p[k] - p[km]) * (1.0 / lm)) * (2.0 / (lm + lp));
        h[k] = xss.dot(normals[k]);
    }
    return h;
}

double total_curvature(const Curve& curve) {
    const auto h = curvature(curve);
    const auto l = chord_lengths(curve.markers());
    const std::size_t n = h.size();
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += h[k] * 0.5 * (l[(k + n - 1) % n] + l[k]);
    return s;
}

bool inside(const Curve& curve, Vec2 q) {
    const auto& p = curve.markers();
    const std::size_t n = p.size();
    bool in = false;
    for (std::size_t k = 0, m = n - 1; k < n; m = k++) {
        if ((p[k].y > q.y) != (p[m].y > q.y)) {
            const double xcross = p[k].x + (q.y - p[k].y) * (p[m].x - p[k].x) / (p[m].y - p[k].y);
            if (q.x < xcross) in = !in;
        }
    }
    return in;
}

Projection project(const Curve& curve, Vec2 q) {
    const auto& p = curve.markers();
    const std::size_t n = p.size();
    Projection best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 a = p[k], b = p[(k + 1) % n];
        const Vec2 ab = b - a;
        const double len2 = ab.dot(ab);
        double t = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const Vec2 c = a + ab * t;
        const Vec2 dq = q - c;
        const double d2 = dq.dot(dq);
        if (d2 < best_d2) {
            best_d2 = d2;
            best.segment = k;
            best.t = t;
            best.point = c;
        }
    }
    best.distance = std::sqrt(best_d2);
    return best;
}

namespace {

void require_inside_domain(const Curve& curve, const GridSpec& grid) {
    for (const Vec2& p : curve.markers())
        if (!(p.x > 0.0 && p.x < grid.lx && p.y > 0.0 && p.y < grid.ly))
            throw GeometryError("curve touches or leaves the domain");
}

double boundary_clearance(const Curve& curve, const GridSpec& grid) {
    double c = std::numeric_limits<double>::infinity();
    for (const Vec2& p : curve.markers()) c = std::min({c, p.x, grid.lx - p.x, p.y, grid.ly - p.y});
    return c;
}

}  // namespace

ScalarField signed_distance(const Curve& curve, const GridSpec& grid) {
    require_inside_domain(curve, grid);
    ScalarField d(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Vec2 x{grid.xc(i), grid.yc(j)};
            const double dist = project(curve, x).distance;
            d(i, j) = inside(curve, x) ? dist : -dist;
        }
    return d;
}

Cutoff cutoff_zeta(double r, double delta) {
    const double a = std::abs(r);
    if (a <= delta) return {1.0, 0.0};
    if (a >= 2.0 * delta) return {0.0, 0.0};
    const double t = (a - delta) / delta;
    const double q = t * t * (3.0 - 2.0 * t);
    const double dq = 6.0 * t * (1.0 - t);
    return {1.0 - q, -dq / delta * (r < 0.0 ? -1.0 : 1.0)};
}

// ---------------------------------------------------------------------------
// TubularGeometry
// ---------------------------------------------------------------------------

double default_delta(const Curve& curve, const GridSpec& grid) {
    const double clearance = boundary_clearance(curve, grid);
    return std::min(0.1 * std::min(grid.lx, grid.ly), 0.99 * clearance / 3.0);
}

TubularGeometry::TubularGeometry(Curve curve, const GridSpec& grid, double delta, ClearancePolicy policy)
    : curve_(std::move(curve)), grid_(grid), delta_(delta) {
    if (!(delta_ > 0.0)) throw GeometryError("delta must be positive");
    require_inside_domain(curve_, grid_);
    clearance_ = boundary_clearance(curve_, grid_);
    if (grid_.bc == Boundary::dirichlet_box && !(clearance_ > 3.0 * delta_)) {
        if (policy == ClearancePolicy::enforce)
            throw GeometryError("dist(boundary, curve) must exceed 3 delta");
        clearance_ok_ = false;
    }
    const auto& p = curve_.markers();
    const std::size_t n = p.size();
    const auto l = chord_lengths(p);
    cumulative_.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) cumulative_[k + 1] = cumulative_[k] + l[k];
    length_ = cumulative_[n];
    marker_normals_ = nsac::marker_normals(curve_);
    curvature_ = nsac::curvature(curve_);

    d_ = ScalarField(grid_);
    s_ = ScalarField(grid_);
    normal_ = {ScalarField(grid_), ScalarField(grid_)};
    for (int j = 0; j < grid_.ny; ++j)
        for (int i = 0; i < grid_.nx; ++i) {
            const Vec2 x{grid_.xc(i), grid_.yc(j)};
            const Projection near = project(curve_, x);
            d_(i, j) = inside(curve_, x) ? near.distance : -near.distance;
            const Projection pr = normal_foot(x, near);
            s_(i, j) = arclength_of(pr);
            const Vec2 nrm = marker_normals_[pr.segment] * (1.0 - pr.t) + marker_normals_[(pr.segment + 1) % n] * pr.t;
            const double len = nrm.norm();
            normal_.x(i, j) = nrm.x / len;
            normal_.y(i, j) = nrm.y / len;
        }
}

Projection TubularGeometry::normal_foot(Vec2 x, const Projection& nearest) const {
    const auto& p = curve_.markers();
    const std::size_t n = p.size();
    Projection best = nearest;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t off : {n - 1, std::size_t{0}, std::size_t{1}}) {
        const std::size_t k = (nearest.segment + off) % n;
        const Vec2 a = p[k], e = p[(k + 1) % n] - a;
        const Vec2 n0 = marker_normals_[k], dn = marker_normals_[(k + 1) % n] - n0;
        const Vec2 w = x - a;
        // (w - t e) x (n0 + t dn) = 0
        const double A = -e.cross(dn), B = w.cross(dn) - e.cross(n0), C = w.cross(n0);
        double roots[2];
        int nr = 0;
        if (std::abs(A) < 1e-14 * (std::abs(B) + std::abs(C))) {
            if (B != 0.0) roots[nr++] = -C / B;
        } else {
            const double disc = B * B - 4 * A * C;
            if (disc >= 0.0) {
                const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
                roots[nr++] = q / A;
                if (q != 0.0) roots[nr++] = C / q;
            }
        }
        for (int m = 0; m < nr; ++m) {
            const double t = roots[m];
            if (!(t >= -1e-12 && t <= 1.0 + 1e-12)) continue;
            const double tc = std::clamp(t, 0.0, 1.0);
            const Vec2 foot = a + e * tc;
            const double dist = (x - foot).norm();
            if (dist < best_dist) {
                best_dist = dist;
                best = {dist, k, tc, foot};
            }
        }
    }
    return best;
}

double TubularGeometry::arclength_of(const Projection& pr) const {
    const double s = (cumulative_[pr.segment] + pr.t * (cumulative_[pr.segment + 1] - cumulative_[pr.segment])) / length_;
    return s >= 1.0 ? s - 1.0 : s;
}

namespace {

std::pair<std::size_t, double> locate(const std::vector<double>& cum, double s_abs) {
    const std::size_t n = cum.size() - 1;
    auto it = std::upper_bound(cum.begin(), cum.end(), s_abs);
    std::size_t k = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
    k = std::min(k, n - 1);
    const double t = (s_abs - cum[k]) / (cum[k + 1] - cum[k]);
    return {k, std::clamp(t, 0.0, 1.0)};
}

}  // namespace

Vec2 TubularGeometry::point_at(double s) const {
    s -= std::floor(s);
    const auto [k, t] = locate(cumulative_, s * length_);
    const auto& p = curve_.markers();
    return p[k] * (1.0 - t) + p[(k + 1) % p.size()] * t;
}

Vec2 TubularGeometry::normal_at(double s) const {
    s -= std::floor(s);
    const auto [k, t] = locate(cumulative_, s * length_);
    const Vec2 nrm = marker_normals_[k] * (1.0 - t) + marker_normals_[(k + 1) % marker_normals_.size()] * t;
    return nrm * (1.0 / nrm.norm());
}

TubularCoords tubular_coords(Vec2 x, const TubularGeometry& geom) {
    const Projection pr = project(geom.curve(), x);
    if (!(pr.distance < 3.0 * geom.delta())) throw GeometryError("point outside the tubular band");
    const double r = inside(geom.curve(), x) ? pr.distance : -pr.distance;
    return {r, geom.arclength_of(geom.normal_foot(x, pr))};
}

CellVectorField tangential_gradient(const ScalarField& f, const TubularGeometry& geom) {
    const GridSpec& g = f.grid();
    if (!(g == geom.grid())) throw GeometryError("tangential_gradient: geometry band mismatch");
    const double h = g.h();
    const int nx = g.nx, ny = g.ny;
    const bool periodic = g.bc == Boundary::periodic;
    CellVectorField out{ScalarField(g), ScalarField(g)};
    // Centered where possible, one-sided at walls.
    auto diff = [&](int k, int n, auto&& at) {
        if (periodic) return (at((k + 1) % n) - at((k - 1 + n) % n)) / (2.0 * h);
        if (k == 0) return (at(1) - at(0)) / h;
        if (k == n - 1) return (at(n - 1) - at(n - 2)) / h;
        return (at(k + 1) - at(k - 1)) / (2.0 * h);
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (!geom.in_band(i, j)) continue;
            const double gx = diff(i, nx, [&](int k) { return f(k, j); });
            const double gy = diff(j, ny, [&](int k) { return f(i, k); });
            const double n1 = geom.normal_ext().x(i, j), n2 = geom.normal_ext().y(i, j);
            const double gn = gx * n1 + gy * n2;
            out.x(i, j) = gx - gn * n1;
            out.y(i, j) = gy - gn * n2;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Curve files
// ---------------------------------------------------------------------------

void write_curve(const Curve& curve, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw GeometryError("cannot open curve file for writing: " + path.string());
    os << "PCRV1 " << curve.size() << '\n';
    char buf[96];
    for (const Vec2& p : curve.markers()) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.x, p.y);
        os << buf;
    }
    if (!os) throw GeometryError("curve write failed: " + path.string());
}

Curve read_curve(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw GeometryError("cannot open curve file: " + path.string());
    std::string tag;
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "PCRV1") throw GeometryError("bad curve header in " + path.string());
    std::vector<Vec2> p(n);
    for (auto& q : p)
        if (!(is >> q.x >> q.y)) throw GeometryError("truncated curve file " + path.string());
    return Curve(std::move(p));
}

}  // namespace nsac
