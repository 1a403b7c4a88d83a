/// @file sharp.hpp
/// @brief Front tracking for the sharp-interface law V = H + n.v, plus the
///        zero-contour extraction used to read a diffuse interface back as a curve.
#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "nsac/field.hpp"
#include "nsac/geometry.hpp"

namespace nsac {

/// Bulk velocity at a point.
using VelocitySampler = std::function<Vec2(Vec2)>;

struct SharpState {
    double t = 0.0;
    Curve curve;
    /// Empty means v = 0.
    VelocitySampler velocity;
};

/// Explicit stability cap for one marker step.
double max_curve_step(const Curve& curve);

/// One explicit step: X <- X + dt (H + n.v) n, then uniform resampling.
/// Requires dt <= 0.2 (min spacing)^2.
SharpState evolve_curve(const SharpState& state, double dt);

/// Steps to t_end with dt_max, sub-cycling whenever the stability cap is smaller.
SharpState advance_curve(const SharpState& state, double t_end, double dt_max);

/// sqrt(R0^2 - 2t); throws at or beyond the extinction time R0^2 / 2.
double exact_circle_radius(double r0, double t);

/// Marching squares on cell centers with linear edge interpolation; the single
/// closed contour is ordered and resampled to n markers.
Curve extract_zero_levelset(const ScalarField& c, std::size_t n = 256);

/// One PCRV1 file per entry plus "manifest" listing "index time file".
void write_trajectory(const std::vector<SharpState>& states, const std::filesystem::path& dir);

}  // namespace nsac
