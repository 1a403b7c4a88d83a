/// @file geometry.hpp
/// @brief Closed interface curves and tubular-neighbourhood calculus.
///
/// Sign conventions: the curve is counterclockwise, the enclosed region is
/// the "+" phase, the signed distance is positive inside, and the normal n
/// points into the "+" phase. Curvature is H = -Laplacian(d) on the curve,
/// so a circle of radius R has H = 1/R.
#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <vector>

#include "nsac/field.hpp"

namespace nsac {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    /// Rotation by +90 degrees.
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed marker chain. Construction reorients clockwise input and rejects
/// self-intersecting or too-short chains.
class Curve {
public:
    static constexpr std::size_t kMinMarkers = 16;

    Curve() = default;
    explicit Curve(std::vector<Vec2> markers);

    std::size_t size() const { return markers_.size(); }
    const std::vector<Vec2>& markers() const { return markers_; }
    Vec2 operator[](std::size_t k) const { return markers_[k]; }

    double length() const;
    double signed_area() const;
    double mean_spacing() const { return length() / static_cast<double>(size()); }
    double min_spacing() const;
    Vec2 centroid() const;
    /// Mean distance of the markers from the centroid.
    double mean_radius() const;
    bool simple() const;

    static Curve circle(Vec2 center, double radius, std::size_t n);
    static Curve ellipse(Vec2 center, double a, double b, std::size_t n);

private:
    std::vector<Vec2> markers_;
};

/// Redistributes markers uniformly in arclength (periodic Catmull-Rom interpolation).
Curve resample(const Curve& curve, std::size_t n);
/// Same for a raw closed point loop (any orientation, coincident neighbours dropped).
Curve resample_loop(std::vector<Vec2> loop, std::size_t n);

/// Per-marker interior unit normal from centered tangents.
std::vector<Vec2> marker_normals(const Curve& curve);

/// Per-marker curvature from periodic non-uniform centered differences,
/// H = x_ss . n (circle: 1/R > 0).
std::vector<double> curvature(const Curve& curve);

/// Sum of H ds over the markers.
double total_curvature(const Curve& curve);

/// Winding/crossing parity test.
bool inside(const Curve& curve, Vec2 p);

/// Nearest point on the polyline.
struct Projection {
    double distance = 0.0;  ///< unsigned
    std::size_t segment = 0;
    double t = 0.0;         ///< position along the segment in [0, 1]
    Vec2 point;
};
Projection project(const Curve& curve, Vec2 p);

/// Exact signed distance to the polyline at every cell center.
ScalarField signed_distance(const Curve& curve, const GridSpec& grid);

struct Cutoff {
    double value;
    double derivative;
};

/// zeta(r) = 1 - q((|r| - delta)/delta), q(t) = 3t^2 - 2t^3 on [0, 1].
Cutoff cutoff_zeta(double r, double delta);

enum class ClearancePolicy { enforce, warn };

/// Signed distance, projected normal, and arclength coordinate of a curve on a grid.
class TubularGeometry {
public:
    TubularGeometry(Curve curve, const GridSpec& grid, double delta,
                    ClearancePolicy policy = ClearancePolicy::enforce);

    const Curve& curve() const { return curve_; }
    const GridSpec& grid() const { return grid_; }
    double delta() const { return delta_; }
    double curve_length() const { return length_; }
    /// False when dist(boundary, curve) <= 3 delta was accepted under ClearancePolicy::warn.
    bool clearance_ok() const { return clearance_ok_; }
    double clearance() const { return clearance_; }

    const ScalarField& d_gamma() const { return d_; }
    const CellVectorField& normal_ext() const { return normal_; }
    /// Arclength of the projection scaled to [0, 1).
    const ScalarField& s_coord() const { return s_; }
    const std::vector<Vec2>& marker_normals() const { return marker_normals_; }
    const std::vector<double>& marker_curvature() const { return curvature_; }

    bool in_band(int i, int j) const { return std::abs(d_(i, j)) < 2.0 * delta_; }

    /// Curve point and interior normal at the normalized arclength s.
    Vec2 point_at(double s) const;
    Vec2 normal_at(double s) const;
    /// Normalized arclength of a projection onto the curve.
    double arclength_of(const Projection& p) const;
    /// Foot point along the linearly interpolated marker normals: the point
    /// P(t) on a segment near `nearest` with x - P(t) parallel to n(t). Unlike
    /// the nearest point this varies smoothly with x across polygon vertices.
    Projection normal_foot(Vec2 x, const Projection& nearest) const;

private:
    Curve curve_;
    GridSpec grid_;
    double delta_;
    double length_ = 0.0;
    double clearance_ = 0.0;
    bool clearance_ok_ = true;
    std::vector<double> cumulative_;  ///< arclength at each marker
    std::vector<Vec2> marker_normals_;
    std::vector<double> curvature_;
    ScalarField d_;
    CellVectorField normal_;
    ScalarField s_;
};

/// Largest default half-width: dist(boundary, curve) > 3 delta and delta <= 0.1 min(lx, ly).
double default_delta(const Curve& curve, const GridSpec& grid);

struct TubularCoords {
    double r;  ///< signed distance
    double s;  ///< normalized arclength of the projection
};

/// Inverse of (r, s) -> X0(s) + r n(s). Throws for points outside Gamma(3 delta).
TubularCoords tubular_coords(Vec2 x, const TubularGeometry& geom);

/// (I - n n^T) grad f at cell centers inside Gamma(2 delta), zero elsewhere.
CellVectorField tangential_gradient(const ScalarField& f, const TubularGeometry& geom);

// Curve file: "PCRV1 N" header then N lines "x y".
void write_curve(const Curve& curve, const std::filesystem::path& path);
Curve read_curve(const std::filesystem::path& path);

}  // namespace nsac
