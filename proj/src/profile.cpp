#include "nsac/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>

namespace nsac {

Potential Potential::quartic() { return scaled_quartic(1.0); }

Potential Potential::scaled_quartic(double lambda) {
    Potential p;
    p.f = [lambda](double c) {
        const double a = 1.0 - c * c;
        return lambda * 0.125 * a * a;
    };
    p.df = [lambda](double c) { return lambda * 0.5 * (c * c * c - c); };
    p.d2f = [lambda](double c) { return lambda * 0.5 * (3.0 * c * c - 1.0); };
    p.name = lambda == 1.0 ? "quartic" : "quartic*" + std::to_string(lambda);
    return p;
}

void check_wells(const Potential& pot) {
    if (!pot.f || !pot.df || !pot.d2f) throw PotentialError("potential callables missing");
    const double tol = 1e-12;
    if (std::abs(pot.df(1.0)) > tol || std::abs(pot.df(-1.0)) > tol)
        throw PotentialError("potential needs f'(+-1) = 0");
    if (!(pot.d2f(1.0) > 0.0) || !(pot.d2f(-1.0) > 0.0)) throw PotentialError("potential needs f''(+-1) > 0");
    for (int k = 1; k < 200; ++k) {
        const double c = -1.0 + k / 100.0;
        const double fp = pot.f(c), fm = pot.f(-c);
        if (!(fp > 0.0)) throw PotentialError("potential must be positive on (-1, 1)");
        if (std::abs(fp - fm) > 1e-12 * std::max(1.0, std::abs(fp)))
            throw PotentialError("potential must be even");
    }
}

double decay_alpha(const Potential& pot) {
    const double a = pot.d2f(-1.0), b = pot.d2f(1.0);
    if (!(a > 0.0) || !(b > 0.0)) throw PotentialError("decay rate needs f''(+-1) > 0");
    return std::min(std::sqrt(a), std::sqrt(b));
}

double theta0_quartic(double rho) { return std::tanh(0.5 * rho); }

// ---------------------------------------------------------------------------
// Table construction
// ---------------------------------------------------------------------------

namespace {

double slope(const Potential& pot, double theta) { return std::sqrt(2.0 * std::max(pot.f(theta), 0.0)); }

double hermite(double y0, double y1, double m0, double m1, double h, double t) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * m1;
}

}  // namespace

ProfileTable solve_profile(const Potential& pot, double half_length, std::size_t n) {
    check_wells(pot);
    if (n < 5 || n % 2 == 0) throw std::invalid_argument("profile table needs an odd point count >= 5");
    if (!(half_length > 0.0)) throw std::invalid_argument("profile half-length must be positive");

    ProfileTable tab;
    tab.half_length = half_length;
    tab.alpha = decay_alpha(pot);
    const std::size_t mid = n / 2;
    const double h = 2.0 * half_length / static_cast<double>(n - 1);
    tab.rho.resize(n);
    for (std::size_t k = 0; k < n; ++k) tab.rho[k] = -half_length + h * static_cast<double>(k);
    tab.rho[mid] = 0.0;

    // theta' = sqrt(2 f(theta)) from theta(0) = 0 by RK4 with substeps; the
    // negative half is the odd reflection.
    std::vector<double> pos(mid + 1, 0.0);
    constexpr int kSub = 8;
    const double dt = h / kSub;
    double th = 0.0;
    for (std::size_t k = 1; k <= mid; ++k) {
        for (int s = 0; s < kSub; ++s) {
            const double k1 = slope(pot, th);
            const double k2 = slope(pot, th + 0.5 * dt * k1);
            const double k3 = slope(pot, th + 0.5 * dt * k2);
            const double k4 = slope(pot, th + dt * k3);
            th += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        th = std::min(th, 1.0);
        pos[k] = th;
    }
    tab.theta.resize(n);
    for (std::size_t k = 0; k <= mid; ++k) {
        tab.theta[mid + k] = pos[k];
        tab.theta[mid - k] = -pos[k];
    }
    tab.dtheta.resize(n);
    tab.d2theta.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        tab.dtheta[k] = slope(pot, tab.theta[k]);
        tab.d2theta[k] = pot.df(tab.theta[k]);
    }
    // Strictly increasing until the per-step increment alpha h (1 - |theta|)
    // drops below the spacing of doubles near 1.
    const double kUlpBand = 4.0 * std::numeric_limits<double>::epsilon() / std::min(1.0, tab.alpha * h);
    for (std::size_t k = 1; k < n; ++k) {
        const bool resolvable = 1.0 - std::abs(tab.theta[k]) > kUlpBand && 1.0 - std::abs(tab.theta[k - 1]) > kUlpBand;
        if (resolvable ? !(tab.theta[k] > tab.theta[k - 1]) : !(tab.theta[k] >= tab.theta[k - 1]))
            throw PotentialError("profile is not increasing");
    }
    const double gap = 1.0 - tab.theta.back();
    if (gap > 1e-3) throw PotentialError("profile table too short to reach the wells");
    // Tail amplitude from the outermost point whose gap is still well resolved.
    std::size_t k_tail = n - 1;
    while (k_tail > mid && 1.0 - tab.theta[k_tail] < 1e-12) --k_tail;
    tab.tail_amplitude = (1.0 - tab.theta[k_tail]) * std::exp(tab.alpha * tab.rho[k_tail]);

    tab.sigma = surface_tension(tab);
    tab.eta = eta_of(tab);
    return tab;
}

double ProfileTable::value(double r) const {
    const double L = half_length;
    if (r >= L) return 1.0 - tail_amplitude * std::exp(-alpha * r);
    if (r <= -L) return -1.0 + tail_amplitude * std::exp(alpha * r);
    const double h = spacing();
    const double x = (r + L) / h;
    const std::size_t k = std::min(static_cast<std::size_t>(x), size() - 2);
    return hermite(theta[k], theta[k + 1], dtheta[k], dtheta[k + 1], h, x - static_cast<double>(k));
}

double ProfileTable::derivative(double r) const {
    const double L = half_length;
    if (std::abs(r) >= L) return alpha * tail_amplitude * std::exp(-alpha * std::abs(r));
    const double h = spacing();
    const double x = (r + L) / h;
    const std::size_t k = std::min(static_cast<std::size_t>(x), size() - 2);
    return hermite(dtheta[k], dtheta[k + 1], d2theta[k], d2theta[k + 1], h, x - static_cast<double>(k));
}

double surface_tension(const ProfileTable& tab) {
    const std::size_t n = tab.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("Simpson quadrature needs an odd point count");
    const double h = tab.spacing();
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = (k == 0 || k == n - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        s += w * tab.dtheta[k] * tab.dtheta[k];
    }
    s *= h / 3.0;
    // theta' ~ c exp(-alpha |rho|) beyond the table: tail integral theta'(L)^2 / (2 alpha) per side.
    const double tail = (tab.dtheta.front() * tab.dtheta.front() + tab.dtheta.back() * tab.dtheta.back()) /
                        (2.0 * tab.alpha);
    if (tail > 1e-10 * s) throw std::invalid_argument("profile table too short: tail mass exceeds 1e-10 of sigma");
    return s + tail;
}

std::vector<double> eta_of(const ProfileTable& tab) {
    const std::size_t n = tab.size();
    const double h = tab.spacing();
    if (!(tab.sigma > 0.0)) throw std::invalid_argument("eta needs sigma");
    // g = theta'^2 with g' = 2 theta' theta''; Hermite-corrected trapezoid per cell.
    std::vector<double> eta(n);
    double cum = tab.dtheta.front() * tab.dtheta.front() / (2.0 * tab.alpha);
    eta[0] = -1.0 + 2.0 / tab.sigma * cum;
    for (std::size_t k = 1; k < n; ++k) {
        const double g0 = tab.dtheta[k - 1] * tab.dtheta[k - 1], g1 = tab.dtheta[k] * tab.dtheta[k];
        const double dg0 = 2.0 * tab.dtheta[k - 1] * tab.d2theta[k - 1];
        const double dg1 = 2.0 * tab.dtheta[k] * tab.d2theta[k];
        cum += 0.5 * h * (g0 + g1) + h * h / 12.0 * (dg0 - dg1);
        eta[k] = -1.0 + 2.0 / tab.sigma * cum;
    }
    return eta;
}

void write_profile_csv(const ProfileTable& tab, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open profile CSV: " + path.string());
    os << "rho,theta0,dtheta0,eta\n";
    char buf[128];
    for (std::size_t k = 0; k < tab.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", tab.rho[k], tab.theta[k], tab.dtheta[k],
                      tab.eta[k]);
        os << buf;
    }
}

}  // namespace nsac
