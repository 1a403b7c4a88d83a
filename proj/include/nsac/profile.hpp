/// @file profile.hpp
/// @brief Double-well potentials and the one-dimensional optimal profile.
///
/// The optimal profile is the increasing heteroclinic of -theta'' + f'(theta) = 0
/// with theta(0) = 0 and theta(+-inf) = +-1. It is tabulated from the
/// equipartition first integral theta' = sqrt(2 f(theta)).
#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsac {

struct Potential {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
    std::string name;

    /// f(c) = (1 - c^2)^2 / 8, f'(c) = (c^3 - c)/2, f''(c) = (3c^2 - 1)/2.
    static Potential quartic();
    /// lambda * quartic.
    static Potential scaled_quartic(double lambda);
};

class PotentialError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Samples the well conditions: f'(+-1) = 0, f''(+-1) > 0, f(c) = f(-c) > 0 on (-1, 1).
void check_wells(const Potential& pot);

/// min(sqrt f''(-1), sqrt f''(1)); throws for non-positive curvature at a well.
double decay_alpha(const Potential& pot);

/// Closed form for the quartic potential: tanh(rho / 2).
double theta0_quartic(double rho);

struct ProfileTable {
    std::vector<double> rho;
    std::vector<double> theta;
    std::vector<double> dtheta;
    std::vector<double> d2theta;
    std::vector<double> eta;
    double sigma = 0.0;
    double alpha = 0.0;
    double half_length = 0.0;
    /// Amplitude A of the tail 1 - theta ~ A exp(-alpha rho) matched at the table end.
    double tail_amplitude = 0.0;

    std::size_t size() const { return rho.size(); }
    double spacing() const { return rho[1] - rho[0]; }

    /// theta0 anywhere on R: cubic Hermite on the table, exponential tail beyond it.
    double value(double r) const;
    /// theta0' anywhere on R.
    double derivative(double r) const;
};

/// Tabulates the profile on a uniform grid of n points over [-L, L] (n odd).
ProfileTable solve_profile(const Potential& pot, double half_length = 20.0, std::size_t n = 4001);

/// Integral of theta0'^2 by composite Simpson plus the analytic tail.
double surface_tension(const ProfileTable& table);

/// -1 + (2/sigma) * cumulative integral of theta0'^2 from -infinity.
std::vector<double> eta_of(const ProfileTable& table);

/// CSV with header "rho,theta0,dtheta0,eta".
void write_profile_csv(const ProfileTable& table, const std::filesystem::path& path);

}  // namespace nsac
