#pragma once
// Energy, first variation and the explicit constants of the basic estimates,
// for radial and Cartesian states.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tfdw/cartesian.hpp"
#include "tfdw/cartesian_model.hpp"
#include "tfdw/constants.hpp"
#include "tfdw/energy_breakdown.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial.hpp"
#include "tfdw/radial_model.hpp"

namespace tfdw {

inline EnergyBreakdown energy(RadialFunction const& u, PotentialSpec const& V, Constants const& k) {
    require_finite(u);
    return RadialModel(u.grid_ptr(), V, k).energy(u.values());
}

inline EnergyBreakdown energy(Field3 const& u, PotentialSpec const& V, Constants const& k, double smearing = 0) {
    require_finite(u);
    return CartesianModel(u.grid_ptr(), V, k, smearing).energy(u.values());
}

// L2 gradient g of the discrete energy: sum_i w_i g_i phi_i is its derivative in direction phi.
inline RadialFunction el_gradient(RadialFunction const& u, PotentialSpec const& V, Constants const& k) {
    require_finite(u);
    RadialModel const model(u.grid_ptr(), V, k);
    std::vector<double> G(u.size());
    model.energy_gradient(u.values(), G);
    RadialFunction g(u.grid_ptr());
    model.to_l2(G, g.values());
    return g;
}

inline Field3 el_gradient(Field3 const& u, PotentialSpec const& V, Constants const& k, double smearing = 0) {
    require_finite(u);
    CartesianModel const model(u.grid_ptr(), V, k, smearing);
    std::vector<double> G(u.size());
    model.energy_gradient(u.values(), G);
    Field3 g(u.grid_ptr());
    model.to_l2(G, g.values());
    return g;
}

// Constant of the basic energy estimate E_V(u) >= -C1 int |u|^2.
inline double lower_bound_C1(PotentialSpec const& V, Constants const& k) {
    k.validate();
    if (V.is<RadialTablePotential>())
        throw unsupported_error("lower_bound_C1: tabulated potentials need the bottom of the spectrum of "
                                "-c_W Laplacian - 4|V|, which is not computed");
    double const base = k.c_d * k.c_d / (2 * k.c_tf);
    if (V.is_none()) return base;
    double const Z = V.total_charge();
    return base + 2 * Z * Z / k.c_w;
}

// Largest slope of the cutoff profile admitted by the localization lemmas.
inline constexpr double cutoff_slope_bound = 2.0;

// c_D^2/(4 c_TF) + c_W (|grad chi|_inf^2 + |grad eta|_inf^2), evaluated with both slopes at the bound.
inline double localization_constant_C2(Constants const& k, double slope = cutoff_slope_bound) {
    return k.c_d * k.c_d / (4 * k.c_tf) + k.c_w * (2 * slope * slope);
}

// 8 c_W + c_D^2/(4 c_TF)
inline double annulus_constant_C3(Constants const& k) { return 8 * k.c_w + k.c_d * k.c_d / (4 * k.c_tf); }

// (int |u|^2/|x - c|^2) / (4 int |grad u|^2); at most 1 by Hardy's inequality.
inline double hardy_quotient(RadialFunction const& u) {
    require_finite(u);
    auto const& g = u.grid();
    auto const r = g.nodes();
    auto const w = g.weights();
    double num = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (r[i] > 0) num += w[i] * u[i] * u[i] / (r[i] * r[i]);
    double const kin = kinetic_density(u);
    if (num == 0) return 0.0;
    if (!(kin > 0)) throw degenerate_input_error("hardy_quotient: zero kinetic energy with nonzero numerator");
    return num / (4 * kin);
}

inline double hardy_quotient(RadialFunction const& u, std::array<double, 3> const& center) {
    if (center != std::array<double, 3>{0, 0, 0})
        throw configuration_error("hardy_quotient: a radial state can only be centred at the origin");
    return hardy_quotient(u);
}

inline double hardy_quotient(Field3 const& u, std::array<double, 3> const& center = {0, 0, 0}) {
    require_finite(u);
    auto const& g = u.grid();
    if (!g.contains(center)) throw domain_error("hardy_quotient: centre lies outside the box");
    double const h = g.spacing();
    double num = 0;
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        auto const p = g.point(idx);
        double const dx = p[0] - center[0], dy = p[1] - center[1], dz = p[2] - center[2];
        double const d2 = dx * dx + dy * dy + dz * dz;
        // the cell containing the centre uses the cell average of 1/|x|^2
        double const inv = d2 > 0.25 * h * h ? 1.0 / d2 : cube_mean_inverse_distance_squared / (h * h);
        num += u[idx] * u[idx] * inv;
    }
    num *= g.cell_volume();
    double const kin = kinetic_density(u);
    if (num == 0) return 0.0;
    if (!(kin > 0)) throw degenerate_input_error("hardy_quotient: zero kinetic energy with nonzero numerator");
    return num / (4 * kin);
}

// Both sides of E_V(u) + C1 int |u|^2 >= (c_TF/2) int |u|^{10/3} + (c_W/2) int |grad u|^2
//                                         + int |V||u|^2 + D(|u|^2, |u|^2).
struct BasicEstimate {
    double lhs = 0;
    double rhs = 0;
    double C1 = 0;
    double margin() const noexcept { return lhs - rhs; }
};

inline BasicEstimate basic_energy_estimate(RadialFunction const& u, PotentialSpec const& V, Constants const& k) {
    auto const e = energy(u, V, k);
    BasicEstimate b;
    b.C1 = lower_bound_C1(V, k);
    b.lhs = e.total + b.C1 * mass(u);
    // with attractive potentials, int |V||u|^2 = -external
    b.rhs = 0.5 * e.thomas_fermi + 0.5 * e.weizsacker + std::abs(e.external) + e.hartree;
    return b;
}

// min over nodes of [c_TF |u|^{10/3} - c_D |u|^{8/3} + (c_D^2 / (4 c_TF)) |u|^2]; never negative.
inline double complete_square_margin(std::span<const double> u, Constants const& k) {
    double worst = std::numeric_limits<double>::infinity();
    double const q = k.c_d * k.c_d / (4 * k.c_tf);
    for (double x : u) {
        detail::Powers const p(x);
        worst = std::min(worst, k.c_tf * p.a103 - k.c_d * p.a83 + q * x * x);
    }
    return u.empty() ? 0.0 : worst;
}

} // namespace tfdw
