#include "nsac/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "nsac/sharp.hpp"

namespace nsac {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ConfigError("key '" + key + "': not a number: '" + text + "'");
    return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

}  // namespace

double ExperimentConfig::dt_factor() const {
    if (dt_rule == "default") return 0.1;
    const double f = to_double("dt_rule", dt_rule);
    if (!(f > 0.0)) throw ConfigError("dt_rule factor must be positive");
    return f;
}

void ExperimentConfig::validate() const {
    if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("domain extents must be positive");
    if (nx_ratio < 4.0) throw ConfigError("nx_ratio must be >= 4 (h <= eps / 4)");
    if (eps.empty()) throw ConfigError("eps list is empty");
    for (double e : eps)
        if (!(e > 0.0) || e > 1.0) throw ConfigError("every eps must lie in (0, 1]");
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
    if (!(save_every > 0.0)) throw ConfigError("save_every must be positive");
    if (!(cg_tol > 0.0) || cg_tol > 1e-10) throw ConfigError("cg_tol must lie in (0, 1e-10]");
    if (!(stabilization > 0.0)) throw ConfigError("stabilization must be positive");
    if (!(ramp_start > 0.0) || ramp_start > 1.0) throw ConfigError("ramp_start must lie in (0, 1]");
    if (ramp_start < 1.0 && !(ramp_growth > 1.0)) throw ConfigError("ramp_growth must exceed 1");
    (void)dt_factor();
    if (kind == "circle") {
        if (!(r0 > 0.0)) throw ConfigError("circle radius must be positive");
        if (t_end >= 0.5 * r0 * r0) throw ConfigError("t_end beyond the circle extinction time r0^2 / 2");
        if (cx - r0 <= 0.0 || cx + r0 >= lx || cy - r0 <= 0.0 || cy + r0 >= ly)
            throw ConfigError("circle does not fit strictly inside the domain");
    } else if (kind.rfind("file:", 0) != 0 || kind.size() == 5) {
        throw ConfigError("interface kind must be 'circle' or 'file:<path>'");
    }
    if (delta < 0.0) throw ConfigError("delta must be >= 0");
    if (delta > 0.0)
        for (double e : eps)
            if (delta < 5.0 * e) throw ConfigError("delta must be at least 5 eps for every eps");
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "domain" && section != "interface" && section != "sweep" && section != "solver" &&
                section != "output")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string full = section + "." + key;
        if (full == "domain.nx_ratio") cfg.nx_ratio = to_double(key, val);
        else if (full == "domain.lx") cfg.lx = to_double(key, val);
        else if (full == "domain.ly") cfg.ly = to_double(key, val);
        else if (full == "domain.bc") {
            if (val == "dirichlet_box") cfg.bc = Boundary::dirichlet_box;
            else if (val == "periodic") cfg.bc = Boundary::periodic;
            else throw ConfigError("bc must be dirichlet_box or periodic");
        } else if (full == "interface.kind") cfg.kind = val;
        else if (full == "interface.cx") cfg.cx = to_double(key, val);
        else if (full == "interface.cy") cfg.cy = to_double(key, val);
        else if (full == "interface.r0") cfg.r0 = to_double(key, val);
        else if (full == "interface.delta") cfg.delta = to_double(key, val);
        else if (full == "sweep.eps") cfg.eps = to_list(key, val);
        else if (full == "sweep.t_end") cfg.t_end = to_double(key, val);
        else if (full == "sweep.save_every") cfg.save_every = to_double(key, val);
        else if (full == "solver.dt_rule") cfg.dt_rule = val;
        else if (full == "solver.cg_tol") cfg.cg_tol = to_double(key, val);
        else if (full == "solver.stabilization") cfg.stabilization = to_double(key, val);
        else if (full == "output.dir") cfg.dir = val;
        else throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    return parse_config(is);
}

Curve initial_curve(const ExperimentConfig& cfg) {
    if (cfg.kind == "circle") return Curve::circle({cfg.cx, cfg.cy}, cfg.r0, cfg.markers);
    return resample(read_curve(cfg.kind.substr(5)), cfg.markers);
}

// ---------------------------------------------------------------------------
// Error norms
// ---------------------------------------------------------------------------

void ErrorAccumulator::add(double t, const NsacState& run, const ApproxSolution& approx) {
    if (!times_.empty() && !(t > times_.back())) throw TimeGridError("save times must increase");
    if (!(run.c.grid() == approx.c_A.grid())) throw TimeGridError("run and approximation grids differ");
    const GridSpec& g = run.c.grid();
    const double area = g.hx() * g.hy();
    const StaggeredVectorField ev = run.v - approx.v_A;
    const ScalarField ec = run.c - approx.c_A;
    const ScalarField emu = chemical_potential(run.c, run.eps) - chemical_potential(approx.c_A, approx.eps);

    const double v_l2sq = inner(ev, ev);
    v_l2_max_ = std::max(v_l2_max_, std::sqrt(v_l2sq));
    v_h1_sq_.push_back(v_l2sq + velocity_gradient_integral(ev));
    c_l2_max_ = std::max(c_l2_max_, l2_norm(ec));
    grad_max_ = std::max(grad_max_, std::sqrt(gradient_energy_integral(ec, 0.0)));
    double l4 = 0.0;
    for (double e : ec.data()) l4 += e * e * e * e;
    c_l4_max_ = std::max(c_l4_max_, std::pow(l4 * area, 0.25));
    const CellVectorField tau = tangential_gradient(ec, approx.geom);
    ctau_sq_.push_back(inner(tau.x, tau.x) + inner(tau.y, tau.y));
    mu_sq_.push_back(inner(emu, emu));
    times_.push_back(t);
}

void ErrorAccumulator::finish(ErrorReport& r) const {
    auto trapz = [&](const std::vector<double>& f) {
        double s = 0.0;
        for (std::size_t k = 1; k < times_.size(); ++k) s += 0.5 * (times_[k] - times_[k - 1]) * (f[k] + f[k - 1]);
        return std::sqrt(s);
    };
    r.err_v_LinfL2 = v_l2_max_;
    r.err_v_L2H1 = trapz(v_h1_sq_);
    r.err_c_LinfL2 = c_l2_max_;
    r.err_c_L2H1tau = trapz(ctau_sq_);
    r.err_c_grad_LinfL2 = grad_max_;
    r.err_mu_L2 = trapz(mu_sq_);
    r.err_c_L4 = c_l4_max_;
}

ErrorReport error_norms(const std::vector<NsacState>& run, const std::vector<ApproxSolution>& approx,
                        const std::vector<double>& approx_times) {
    if (run.size() != approx.size() || approx.size() != approx_times.size())
        throw TimeGridError("run and approximation trajectories differ in length");
    ErrorAccumulator acc;
    for (std::size_t k = 0; k < run.size(); ++k) {
        if (std::abs(run[k].t - approx_times[k]) > 1e-12 * std::max(1.0, std::abs(approx_times[k])))
            throw TimeGridError("run and approximation save times do not match");
        acc.add(approx_times[k], run[k], approx[k]);
    }
    ErrorReport r;
    if (!run.empty()) r.eps = run.front().eps;
    acc.finish(r);
    r.energy_residual = energy_identity_residual(run);
    return r;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw std::invalid_argument("rate fit needs at least 3 points");
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [e, err] : points) {
        if (!(e > 0.0) || !(err > 0.0)) throw std::invalid_argument("rate fit needs positive values");
        mx += std::log(e);
        my += std::log(err);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [e, err] : points) {
        const double dx = std::log(e) - mx, dy = std::log(err) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("rate fit needs distinct eps values");
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return f;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

ErrorReport run_single(const ExperimentConfig& cfg, double eps, const ProfileTable& profile,
                       const std::filesystem::path& out_dir, bool* energy_monotone, double* max_divergence,
                       const RunHooks& hooks) {
    const GridSpec grid = make_grid(cfg.lx, cfg.ly, eps / cfg.nx_ratio, cfg.bc);
    grid.require_solver_grid();
    const Curve curve0 = initial_curve(cfg);
    const double delta = cfg.delta > 0.0 ? cfg.delta : std::max(default_delta(curve0, grid), 5.0 * eps);

    const TubularGeometry geom0(curve0, grid, delta, ClearancePolicy::warn);
    const ApproxSolution approx0 = build_approx(geom0, eps, profile);
    NsacState state;
    state.eps = eps;
    state.c = approx0.c_A;
    state.v = approx0.v_A;
    state.p = ScalarField(grid);

    DiffuseSolver solver(grid);
    StepParams prm;
    prm.S = cfg.stabilization;
    prm.cg_tol = cfg.cg_tol;
    prm.pure_allen_cahn = cfg.pure_allen_cahn;
    const double dt_base = default_dt(grid, eps, 0.0, cfg.dt_factor());

    SharpState sharp{0.0, curve0, {}};
    ErrorAccumulator acc;
    acc.add(0.0, state, approx0);
    EnergyLedger ledger;
    ledger.record(state);
    bool monotone = true;
    double max_div = 0.0;
    if (!out_dir.empty()) write_checkpoint(state, dt_base, out_dir / "save_000");

    const int nsaves = static_cast<int>(std::ceil(cfg.t_end / cfg.save_every - 1e-9));
    long taken = 0;
    double dt = dt_base;
    auto advance = [&](double step, double t_new) {
        prm.dt = step;
        state = solver.step_coupled(state, prm);
        state.t = t_new;
        ++taken;
        if (!prm.pure_allen_cahn) max_div = std::max(max_div, max_abs(discrete_divergence(state.v)));
        const double change = ledger.record(state);
        if (change > 1e-12 * std::abs(ledger.energies().front())) {
            monotone = false;
            if (prm.pure_allen_cahn) throw SolverAbort("energy increased in a pure Allen-Cahn run");
        }
        if (hooks.on_step) hooks.on_step(state);
    };
    for (int k = 1; k <= nsaves; ++k) {
        const double t_save = std::min(cfg.t_end, k * cfg.save_every);
        // Ramp phase, then equal steps that land on the save time.
        for (;;) {
            const double ramp = cfg.ramp_start * std::pow(cfg.ramp_growth, static_cast<double>(taken));
            if (ramp >= 1.0 || t_save - state.t <= 1e-12 * t_save) break;
            dt = std::min(dt_base * ramp, t_save - state.t);
            advance(dt, state.t + dt);
        }
        if (t_save - state.t > 1e-12 * t_save) {
            const long nsub = std::max(1L, static_cast<long>(std::ceil((t_save - state.t) / dt_base - 1e-9)));
            dt = (t_save - state.t) / static_cast<double>(nsub);
            const double t_start = state.t;
            for (long q = 1; q <= nsub; ++q) advance(dt, t_start + dt * static_cast<double>(q));
        }
        state.t = t_save;
        sharp = advance_curve(sharp, t_save, 1.0);
        const TubularGeometry geom(sharp.curve, grid, delta, ClearancePolicy::warn);
        acc.add(t_save, state, build_approx(geom, eps, profile));
        if (!out_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof(name), "save_%03d", k);
            write_checkpoint(state, dt, out_dir / name);
        }
    }

    ErrorReport r;
    r.eps = eps;
    acc.finish(r);
    r.energy_residual = ledger.residual();
    const Curve contour = extract_zero_levelset(state.c, cfg.markers);
    const double reference =
        cfg.kind == "circle" ? exact_circle_radius(cfg.r0, cfg.t_end) : sharp.curve.mean_radius();
    r.radius_error = std::abs(contour.mean_radius() - reference);
    if (!out_dir.empty()) write_curve(contour, out_dir / "zero_levelset.pcrv");
    if (energy_monotone) *energy_monotone = monotone;
    if (max_divergence) *max_divergence = max_div;
    return r;
}

SweepResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const ProfileTable profile = solve_profile(Potential::quartic());
    std::filesystem::create_directories(cfg.dir);

    struct Outcome {
        ErrorReport report;
        std::string failure;
        bool monotone = true;
        double divergence = 0.0;
    };
    std::vector<std::future<Outcome>> jobs;
    for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
        jobs.push_back(std::async(std::launch::async, [&cfg, &profile, k] {
            Outcome o;
            const double eps = cfg.eps[k];
            char name[48];
            std::snprintf(name, sizeof(name), "eps_%.6g", eps);
            try {
                o.report = run_single(cfg, eps, profile, cfg.dir / name, &o.monotone, &o.divergence);
            } catch (const std::exception& e) {
                o.failure = e.what();
                o.report.eps = eps;
            }
            return o;
        }));
    }
    SweepResult res;
    for (auto& j : jobs) {
        Outcome o = j.get();
        res.energy_monotone = res.energy_monotone && o.monotone;
        res.max_divergence = std::max(res.max_divergence, o.divergence);
        res.failures.push_back(o.failure);
        if (o.failure.empty()) res.reports.push_back(o.report);
    }
    write_error_csv(res.reports, cfg.dir / "errors.csv");

    if (res.reports.size() >= 3) {
        using Getter = double ErrorReport::*;
        const std::pair<const char*, Getter> columns[] = {
            {"err_v_LinfL2", &ErrorReport::err_v_LinfL2},       {"err_v_L2H1", &ErrorReport::err_v_L2H1},
            {"err_c_LinfL2", &ErrorReport::err_c_LinfL2},       {"err_c_L2H1tau", &ErrorReport::err_c_L2H1tau},
            {"err_c_grad_LinfL2", &ErrorReport::err_c_grad_LinfL2}, {"err_mu_L2", &ErrorReport::err_mu_L2},
            {"err_c_L4", &ErrorReport::err_c_L4},               {"energy_residual", &ErrorReport::energy_residual},
            {"radius_error", &ErrorReport::radius_error}};
        for (const auto& [name, field] : columns) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : res.reports) pts.emplace_back(r.eps, r.*field);
            try {
                res.rates.emplace_back(name, fit_rate(pts));
            } catch (const std::invalid_argument&) {
                // Zero entries: no rate for this column.
            }
        }
    }
    write_rates_csv(res.rates, cfg.dir / "rates.csv");
    return res;
}

void write_error_csv(const std::vector<ErrorReport>& reports, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << "eps,err_v_LinfL2,err_v_L2H1,err_c_LinfL2,err_c_L2H1tau,err_c_grad_LinfL2,err_mu_L2,err_c_L4,"
          "energy_residual,radius_error\n";
    char buf[512];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.eps,
                      r.err_v_LinfL2, r.err_v_L2H1, r.err_c_LinfL2, r.err_c_L2H1tau, r.err_c_grad_LinfL2,
                      r.err_mu_L2, r.err_c_L4, r.energy_residual, r.radius_error);
        os << buf;
    }
}

void write_rates_csv(const std::vector<std::pair<std::string, RateFit>>& rates, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << "quantity,slope,intercept,r_squared\n";
    char buf[256];
    for (const auto& [name, f] : rates) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", name.c_str(), f.slope, f.intercept, f.r_squared);
        os << buf;
    }
}

}  // namespace nsac
