/// @file field.hpp
/// @brief Uniform 2D grid, cell/face field containers and second-order
///        discrete calculus on a MAC (staggered) layout.
///
/// Storage is row-major with x fastest: value(i, j) = data[j * nx + i].
/// Cell centers sit at ((i + 1/2) h, (j + 1/2) h). Horizontal velocity
/// components live on vertical faces x = i h (i = 0..nx), vertical ones on
/// horizontal faces y = j h (j = 0..ny).
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsac {

enum class Boundary : std::uint8_t { dirichlet_box = 0, periodic = 1 };

struct GridSpec {
    int nx = 8;
    int ny = 8;
    double lx = 1.0;
    double ly = 1.0;
    Boundary bc = Boundary::dirichlet_box;

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    /// Mesh size; throws if the cells are not square.
    double h() const;
    bool square() const;
    double xc(int i) const { return (i + 0.5) * hx(); }
    double yc(int j) const { return (j + 0.5) * hy(); }
    std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }

    /// Full check used before any solver run: nx, ny >= 8, positive extents, square cells.
    void require_solver_grid() const;

    bool operator==(const GridSpec&) const = default;
};

/// Unit-box style constructor helper: nx = lx / h rounded.
GridSpec make_grid(double lx, double ly, double h, Boundary bc);

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const GridSpec& grid, double fill = 0.0);

    const GridSpec& grid() const { return grid_; }
    int nx() const { return grid_.nx; }
    int ny() const { return grid_.ny; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(j) * grid_.nx + i]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * grid_.nx + i]; }

    std::span<double> span() { return data_; }
    std::span<const double> span() const { return data_; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Fills with g(x_i, y_j) at cell centers.
    void sample(const std::function<double(double, double)>& g);
    bool finite() const;

private:
    GridSpec grid_{};
    std::vector<double> data_;
};

class StaggeredVectorField {
public:
    StaggeredVectorField() = default;
    explicit StaggeredVectorField(const GridSpec& grid);

    const GridSpec& grid() const { return grid_; }

    /// Face (i, j), i in [0, nx], j in [0, ny).
    double& u(int i, int j) { return u_[static_cast<std::size_t>(j) * (grid_.nx + 1) + i]; }
    double u(int i, int j) const { return u_[static_cast<std::size_t>(j) * (grid_.nx + 1) + i]; }
    /// Face (i, j), i in [0, nx), j in [0, ny].
    double& v(int i, int j) { return v_[static_cast<std::size_t>(j) * grid_.nx + i]; }
    double v(int i, int j) const { return v_[static_cast<std::size_t>(j) * grid_.nx + i]; }

    std::vector<double>& u_data() { return u_; }
    const std::vector<double>& u_data() const { return u_; }
    std::vector<double>& v_data() { return v_; }
    const std::vector<double>& v_data() const { return v_; }

    /// Samples (gu, gv) at face midpoints. Enforces the boundary convention afterwards.
    void sample(const std::function<double(double, double)>& gu,
                const std::function<double(double, double)>& gv);
    /// Zeroes wall-normal faces (dirichlet_box) or copies the wrap face (periodic).
    void enforce_boundary();
    bool finite() const;
    double max_abs() const;

private:
    GridSpec grid_{};
    std::vector<double> u_;
    std::vector<double> v_;
};

/// Two cell-centered components (used for tangential gradients and normals).
struct CellVectorField {
    ScalarField x;
    ScalarField y;
};

/// 5-point Laplacian. Under dirichlet_box the ghost value is 2b - f so that the
/// face average equals `boundary_value`.
ScalarField discrete_laplacian(const ScalarField& f, double boundary_value = -1.0);

/// Cell-centered divergence from face differences.
ScalarField discrete_divergence(const StaggeredVectorField& v);

/// Face-centered gradient. Wall-normal boundary faces are zero under dirichlet_box.
StaggeredVectorField discrete_gradient(const ScalarField& p);

/// Discrete L2 inner products (weighted by cell area). Faces are counted once
/// under periodic wrap.
double inner(const ScalarField& a, const ScalarField& b);
double inner(const StaggeredVectorField& a, const StaggeredVectorField& b);
double l2_norm(const ScalarField& a);
double l2_norm(const StaggeredVectorField& a);
double max_abs(const ScalarField& a);

/// Sum over faces of |grad c|^2 * area, including half-faces at walls where
/// the difference is taken against `boundary_value`. This is the Dirichlet
/// energy whose variation is -discrete_laplacian.
double gradient_energy_integral(const ScalarField& c, double boundary_value = -1.0);

/// Integral of |grad v|^2 for a staggered field with no-slip ghosts at walls.
double velocity_gradient_integral(const StaggeredVectorField& v);

// Field arithmetic helpers.
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);
StaggeredVectorField operator-(const StaggeredVectorField& a, const StaggeredVectorField& b);
StaggeredVectorField operator+(const StaggeredVectorField& a, const StaggeredVectorField& b);
StaggeredVectorField operator*(double s, const StaggeredVectorField& a);

/// Bilinear interpolation of cell-centered values at a physical point. Points
/// outside the cell-center hull are clamped to the nearest center.
double interpolate(const ScalarField& f, double x, double y);

// ---------------------------------------------------------------------------
// Snapshot I/O (binary, little-endian):
//   "PFLD1\n", u32 nx, u32 ny, f64 lx, f64 ly, u8 bc, nx*ny f64 (x fastest)
// ---------------------------------------------------------------------------

class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw snapshot record. For staggered components nx/ny are the face counts.
struct Snapshot {
    std::uint32_t nx = 0;
    std::uint32_t ny = 0;
    double lx = 0.0;
    double ly = 0.0;
    Boundary bc = Boundary::dirichlet_box;
    std::vector<double> values;
};

void write_snapshot(const Snapshot& s, const std::filesystem::path& path);
Snapshot read_snapshot(const std::filesystem::path& path);

void dump_field(const ScalarField& f, const std::filesystem::path& path);
ScalarField load_field(const std::filesystem::path& path);

/// Writes `<path>.u` and `<path>.v`.
void dump_field(const StaggeredVectorField& v, const std::filesystem::path& path);
StaggeredVectorField load_staggered(const std::filesystem::path& path);

}  // namespace nsac
