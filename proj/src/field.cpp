#include "nsac/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace nsac {

namespace {

constexpr char kMagic[6] = {'P', 'F', 'L', 'D', '1', '\n'};

inline int wrap(int i, int n) { return (i % n + n) % n; }

void require_same_grid(const GridSpec& a, const GridSpec& b) {
    if (!(a == b)) throw std::invalid_argument("field grids differ");
}

}  // namespace

// ---------------------------------------------------------------------------
// GridSpec
// ---------------------------------------------------------------------------

bool GridSpec::square() const {
    return std::abs(hx() - hy()) <= 1e-12 * std::max(hx(), hy());
}

double GridSpec::h() const {
    if (!square()) throw std::invalid_argument("non-square cells: hx != hy");
    return hx();
}

void GridSpec::require_solver_grid() const {
    if (nx < 8 || ny < 8) throw std::invalid_argument("grid needs nx, ny >= 8");
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("grid extents must be positive");
    if (!square()) throw std::invalid_argument("non-square cells: hx != hy");
}

GridSpec make_grid(double lx, double ly, double h, Boundary bc) {
    GridSpec g;
    g.lx = lx;
    g.ly = ly;
    g.nx = static_cast<int>(std::lround(lx / h));
    g.ny = static_cast<int>(std::lround(ly / h));
    g.bc = bc;
    return g;
}

// ---------------------------------------------------------------------------
// Containers
// ---------------------------------------------------------------------------

ScalarField::ScalarField(const GridSpec& grid, double fill) : grid_(grid), data_(grid.cells(), fill) {}

void ScalarField::sample(const std::function<double(double, double)>& g) {
    for (int j = 0; j < grid_.ny; ++j)
        for (int i = 0; i < grid_.nx; ++i) (*this)(i, j) = g(grid_.xc(i), grid_.yc(j));
}

bool ScalarField::finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

StaggeredVectorField::StaggeredVectorField(const GridSpec& grid)
    : grid_(grid),
      u_(static_cast<std::size_t>(grid.nx + 1) * grid.ny, 0.0),
      v_(static_cast<std::size_t>(grid.nx) * (grid.ny + 1), 0.0) {}

void StaggeredVectorField::sample(const std::function<double(double, double)>& gu,
                                  const std::function<double(double, double)>& gv) {
    const double hx = grid_.hx(), hy = grid_.hy();
    for (int j = 0; j < grid_.ny; ++j)
        for (int i = 0; i <= grid_.nx; ++i) u(i, j) = gu(i * hx, grid_.yc(j));
    for (int j = 0; j <= grid_.ny; ++j)
        for (int i = 0; i < grid_.nx; ++i) v(i, j) = gv(grid_.xc(i), j * hy);
    enforce_boundary();
}

void StaggeredVectorField::enforce_boundary() {
    const int nx = grid_.nx, ny = grid_.ny;
    if (grid_.bc == Boundary::dirichlet_box) {
        for (int j = 0; j < ny; ++j) u(0, j) = u(nx, j) = 0.0;
        for (int i = 0; i < nx; ++i) v(i, 0) = v(i, ny) = 0.0;
    } else {
        for (int j = 0; j < ny; ++j) u(nx, j) = u(0, j);
        for (int i = 0; i < nx; ++i) v(i, ny) = v(i, 0);
    }
}

bool StaggeredVectorField::finite() const {
    auto ok = [](double x) { return std::isfinite(x); };
    return std::all_of(u_.begin(), u_.end(), ok) && std::all_of(v_.begin(), v_.end(), ok);
}

double StaggeredVectorField::max_abs() const {
    double m = 0.0;
    for (double x : u_) m = std::max(m, std::abs(x));
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

ScalarField discrete_laplacian(const ScalarField& f, double boundary_value) {
    const GridSpec& g = f.grid();
    const double h = g.h();
    const double inv_h2 = 1.0 / (h * h);
    const int nx = g.nx, ny = g.ny;
    ScalarField out(g);
    const bool periodic = g.bc == Boundary::periodic;
    const double two_b = 2.0 * boundary_value;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double c = f(i, j);
            double w, e, s, n;
            if (periodic) {
                w = f(wrap(i - 1, nx), j);
                e = f(wrap(i + 1, nx), j);
                s = f(i, wrap(j - 1, ny));
                n = f(i, wrap(j + 1, ny));
            } else {
                w = i > 0 ? f(i - 1, j) : two_b - c;
                e = i < nx - 1 ? f(i + 1, j) : two_b - c;
                s = j > 0 ? f(i, j - 1) : two_b - c;
                n = j < ny - 1 ? f(i, j + 1) : two_b - c;
            }
            out(i, j) = (w + e + s + n - 4.0 * c) * inv_h2;
        }
    }
    return out;
}

ScalarField discrete_divergence(const StaggeredVectorField& v) {
    const GridSpec& g = v.grid();
    const double hx = g.hx(), hy = g.hy();
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = (v.u(i + 1, j) - v.u(i, j)) / hx + (v.v(i, j + 1) - v.v(i, j)) / hy;
    return out;
}

StaggeredVectorField discrete_gradient(const ScalarField& p) {
    const GridSpec& g = p.grid();
    const double hx = g.hx(), hy = g.hy();
    const int nx = g.nx, ny = g.ny;
    StaggeredVectorField out(g);
    if (g.bc == Boundary::periodic) {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) out.u(i, j) = (p(i, j) - p(wrap(i - 1, nx), j)) / hx;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) out.v(i, j) = (p(i, j) - p(i, wrap(j - 1, ny))) / hy;
    } else {
        for (int j = 0; j < ny; ++j)
            for (int i = 1; i < nx; ++i) out.u(i, j) = (p(i, j) - p(i - 1, j)) / hx;
        for (int j = 1; j < ny; ++j)
            for (int i = 0; i < nx; ++i) out.v(i, j) = (p(i, j) - p(i, j - 1)) / hy;
    }
    out.enforce_boundary();
    return out;
}

double inner(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid());
    double s = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) s += a.data()[k] * b.data()[k];
    return s * a.grid().hx() * a.grid().hy();
}

double inner(const StaggeredVectorField& a, const StaggeredVectorField& b) {
    require_same_grid(a.grid(), b.grid());
    const GridSpec& g = a.grid();
    const bool periodic = g.bc == Boundary::periodic;
    const int iu_end = periodic ? g.nx : g.nx + 1;
    const int jv_end = periodic ? g.ny : g.ny + 1;
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < iu_end; ++i) s += a.u(i, j) * b.u(i, j);
    for (int j = 0; j < jv_end; ++j)
        for (int i = 0; i < g.nx; ++i) s += a.v(i, j) * b.v(i, j);
    return s * g.hx() * g.hy();
}

double l2_norm(const ScalarField& a) { return std::sqrt(inner(a, a)); }
double l2_norm(const StaggeredVectorField& a) { return std::sqrt(inner(a, a)); }

double max_abs(const ScalarField& a) {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::abs(x));
    return m;
}

double gradient_energy_integral(const ScalarField& c, double boundary_value) {
    const GridSpec& g = c.grid();
    const int nx = g.nx, ny = g.ny;
    if (!g.square()) throw std::invalid_argument("non-square cells: hx != hy");
    double s = 0.0;
    if (g.bc == Boundary::periodic) {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double dx = c(i, j) - c(wrap(i - 1, nx), j);
                const double dy = c(i, j) - c(i, wrap(j - 1, ny));
                s += dx * dx + dy * dy;
            }
        return s;  // (d/h)^2 * h^2
    }
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double d = c(i, j) - c(i - 1, j);
            s += d * d;
        }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double d = c(i, j) - c(i, j - 1);
            s += d * d;
        }
    // Half-cell next to each wall: ((c - b) / (h/2))^2 * h^2 / 2 = 2 (c - b)^2.
    double w = 0.0;
    for (int j = 0; j < ny; ++j) {
        const double a = c(0, j) - boundary_value, b = c(nx - 1, j) - boundary_value;
        w += a * a + b * b;
    }
    for (int i = 0; i < nx; ++i) {
        const double a = c(i, 0) - boundary_value, b = c(i, ny - 1) - boundary_value;
        w += a * a + b * b;
    }
    return s + 2.0 * w;
}

double velocity_gradient_integral(const StaggeredVectorField& v) {
    const GridSpec& g = v.grid();
    const int nx = g.nx, ny = g.ny;
    double s = 0.0;
    // du/dx, dv/dy at cell centers.
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double a = v.u(i + 1, j) - v.u(i, j);
            const double b = v.v(i, j + 1) - v.v(i, j);
            s += a * a + b * b;
        }
    if (g.bc == Boundary::periodic) {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double a = v.u(i, j) - v.u(i, wrap(j - 1, ny));
                const double b = v.v(i, j) - v.v(wrap(i - 1, nx), j);
                s += a * a + b * b;
            }
        return s;
    }
    // du/dy at nodes; no-slip ghost u(-1) = -u(0) gives 2u/h over a half cell.
    for (int i = 0; i <= nx; ++i) {
        for (int j = 1; j < ny; ++j) {
            const double a = v.u(i, j) - v.u(i, j - 1);
            s += a * a;
        }
        s += 2.0 * (v.u(i, 0) * v.u(i, 0) + v.u(i, ny - 1) * v.u(i, ny - 1));
    }
    for (int j = 0; j <= ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            const double b = v.v(i, j) - v.v(i - 1, j);
            s += b * b;
        }
        s += 2.0 * (v.v(0, j) * v.v(0, j) + v.v(nx - 1, j) * v.v(nx - 1, j));
    }
    return s;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid());
    ScalarField out(a.grid());
    for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] = a.data()[k] - b.data()[k];
    return out;
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid());
    ScalarField out(a.grid());
    for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] = a.data()[k] + b.data()[k];
    return out;
}

ScalarField operator*(double s, const ScalarField& a) {
    ScalarField out(a);
    for (double& x : out.data()) x *= s;
    return out;
}

StaggeredVectorField operator-(const StaggeredVectorField& a, const StaggeredVectorField& b) {
    require_same_grid(a.grid(), b.grid());
    StaggeredVectorField out(a.grid());
    for (std::size_t k = 0; k < out.u_data().size(); ++k) out.u_data()[k] = a.u_data()[k] - b.u_data()[k];
    for (std::size_t k = 0; k < out.v_data().size(); ++k) out.v_data()[k] = a.v_data()[k] - b.v_data()[k];
    return out;
}

StaggeredVectorField operator+(const StaggeredVectorField& a, const StaggeredVectorField& b) {
    require_same_grid(a.grid(), b.grid());
    StaggeredVectorField out(a.grid());
    for (std::size_t k = 0; k < out.u_data().size(); ++k) out.u_data()[k] = a.u_data()[k] + b.u_data()[k];
    for (std::size_t k = 0; k < out.v_data().size(); ++k) out.v_data()[k] = a.v_data()[k] + b.v_data()[k];
    return out;
}

StaggeredVectorField operator*(double s, const StaggeredVectorField& a) {
    StaggeredVectorField out(a);
    for (double& x : out.u_data()) x *= s;
    for (double& x : out.v_data()) x *= s;
    return out;
}

double interpolate(const ScalarField& f, double x, double y) {
    const GridSpec& g = f.grid();
    const double fx = std::clamp(x / g.hx() - 0.5, 0.0, static_cast<double>(g.nx - 1));
    const double fy = std::clamp(y / g.hy() - 0.5, 0.0, static_cast<double>(g.ny - 1));
    const int i0 = std::min(static_cast<int>(fx), g.nx - 2);
    const int j0 = std::min(static_cast<int>(fy), g.ny - 2);
    const double tx = fx - i0, ty = fy - j0;
    return (1 - tx) * (1 - ty) * f(i0, j0) + tx * (1 - ty) * f(i0 + 1, j0) +
           (1 - tx) * ty * f(i0, j0 + 1) + tx * ty * f(i0 + 1, j0 + 1);
}

// ---------------------------------------------------------------------------
// Snapshot I/O
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U bits = std::bit_cast<U>(value);
    unsigned char buf[sizeof(U)];
    for (std::size_t k = 0; k < sizeof(U); ++k) buf[k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xFFu);
    os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    unsigned char buf[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw SnapshotError("truncated snapshot");
    U bits = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) bits |= static_cast<U>(buf[k]) << (8 * k);
    return std::bit_cast<T>(bits);
}

constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 32;

GridSpec grid_from_snapshot(const Snapshot& s) {
    GridSpec g;
    g.nx = static_cast<int>(s.nx);
    g.ny = static_cast<int>(s.ny);
    g.lx = s.lx;
    g.ly = s.ly;
    g.bc = s.bc;
    return g;
}

}  // namespace

void write_snapshot(const Snapshot& s, const std::filesystem::path& path) {
    if (static_cast<std::uint64_t>(s.nx) * s.ny != s.values.size())
        throw SnapshotError("snapshot size does not match header dimensions");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw SnapshotError("cannot open for writing: " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(os, s.nx);
    put_le<std::uint32_t>(os, s.ny);
    put_le<double>(os, s.lx);
    put_le<double>(os, s.ly);
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(s.bc));
    for (double x : s.values) put_le<double>(os, x);
    if (!os) throw SnapshotError("write failed: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SnapshotError("cannot open for reading: " + path.string());
    char magic[sizeof(kMagic)];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw SnapshotError("bad magic in " + path.string());
    Snapshot s;
    s.nx = get_le<std::uint32_t>(is);
    s.ny = get_le<std::uint32_t>(is);
    s.lx = get_le<double>(is);
    s.ly = get_le<double>(is);
    const auto bc = get_le<std::uint8_t>(is);
    if (bc > 1) throw SnapshotError("unknown boundary code");
    s.bc = static_cast<Boundary>(bc);
    const std::uint64_t count = static_cast<std::uint64_t>(s.nx) * s.ny;
    if (s.nx == 0 || s.ny == 0 || count > kMaxValues) throw SnapshotError("snapshot dimensions out of range");
    const auto header_end = is.tellg();
    is.seekg(0, std::ios::end);
    const auto remaining = static_cast<std::uint64_t>(is.tellg() - header_end);
    if (remaining != count * sizeof(double)) throw SnapshotError("snapshot payload size mismatch");
    is.seekg(header_end);
    s.values.resize(count);
    for (auto& x : s.values) x = get_le<double>(is);
    return s;
}

void dump_field(const ScalarField& f, const std::filesystem::path& path) {
    Snapshot s{static_cast<std::uint32_t>(f.nx()), static_cast<std::uint32_t>(f.ny()), f.grid().lx,
               f.grid().ly, f.grid().bc, f.data()};
    write_snapshot(s, path);
}

ScalarField load_field(const std::filesystem::path& path) {
    Snapshot s = read_snapshot(path);
    ScalarField f(grid_from_snapshot(s));
    f.data() = std::move(s.values);
    return f;
}

void dump_field(const StaggeredVectorField& v, const std::filesystem::path& path) {
    const GridSpec& g = v.grid();
    Snapshot su{static_cast<std::uint32_t>(g.nx + 1), static_cast<std::uint32_t>(g.ny), g.lx, g.ly, g.bc,
                v.u_data()};
    Snapshot sv{static_cast<std::uint32_t>(g.nx), static_cast<std::uint32_t>(g.ny + 1), g.lx, g.ly, g.bc,
                v.v_data()};
    write_snapshot(su, path.string() + ".u");
    write_snapshot(sv, path.string() + ".v");
}

StaggeredVectorField load_staggered(const std::filesystem::path& path) {
    Snapshot su = read_snapshot(path.string() + ".u");
    Snapshot sv = read_snapshot(path.string() + ".v");
    if (su.nx != sv.nx + 1 || su.ny + 1 != sv.ny || su.lx != sv.lx || su.ly != sv.ly || su.bc != sv.bc)
        throw SnapshotError("inconsistent staggered snapshot pair");
    GridSpec g;
    g.nx = static_cast<int>(sv.nx);
    g.ny = static_cast<int>(su.ny);
    g.lx = su.lx;
    g.ly = su.ly;
    g.bc = su.bc;
    StaggeredVectorField v(g);
    v.u_data() = std::move(su.values);
    v.v_data() = std::move(sv.values);
    return v;
}

}  // namespace nsac
