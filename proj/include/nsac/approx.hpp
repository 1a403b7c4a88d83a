/// @file approx.hpp
/// @brief Leading-order glued approximate solution: the optimal profile in the
///        stretched variable inside the tube, pure phases outside, and a
///        projected divergence-free velocity.
#pragma once

#include <filesystem>
#include <functional>

#include "nsac/field.hpp"
#include "nsac/geometry.hpp"
#include "nsac/linalg.hpp"
#include "nsac/profile.hpp"
#include "nsac/sharp.hpp"

namespace nsac {

/// Interface shift h_eps as a function of normalized arclength; empty means 0.
using ShiftFn = std::function<double(double)>;

struct ApproxSolution {
    ScalarField c_A;
    StaggeredVectorField v_A;
    TubularGeometry geom;
    double eps = 0.0;
    ShiftFn h_shift;
};

/// rho = d(x) / eps - h(s(x)). Throws outside the 3 delta tube.
double stretched_variable(Vec2 x, const TubularGeometry& geom, double eps, const ShiftFn& h_shift = {});

/// zeta(d) theta0(rho) + (1 - zeta(d)) sign(d) at cell centers. Requires delta >= 5 eps.
ScalarField build_cA(const TubularGeometry& geom, double eps, const ProfileTable& profile,
                     const ShiftFn& h_shift = {});

/// Face samples of `bulk` followed by one discrete projection. An empty sampler gives 0.
StaggeredVectorField build_vA(const TubularGeometry& geom, const VelocitySampler& bulk, PoissonSolver& poisson);
StaggeredVectorField build_vA(const TubularGeometry& geom, const VelocitySampler& bulk);

ApproxSolution build_approx(const TubularGeometry& geom, double eps, const ProfileTable& profile,
                            const VelocitySampler& bulk = {}, const ShiftFn& h_shift = {});

/// Fits |f - sign(d)| ~ C exp(-a |rho|) along normal rays through the markers
/// over rho in [2, min(8, delta / eps)] on both sides; returns the mean a.
double estimate_decay_rate(const ScalarField& f, const TubularGeometry& geom, double eps);

// Directory layout: c_A, v_A.u, v_A.v snapshots, curve.pcrv, and a "PAPX1" manifest with eps and delta.
void write_approx(const ApproxSolution& a, const std::filesystem::path& dir);
ApproxSolution read_approx(const std::filesystem::path& dir);

}  // namespace nsac
