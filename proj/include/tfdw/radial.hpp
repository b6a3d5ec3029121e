#pragma once
// Spherically symmetric states on a RadialGrid: quadrature, kinetic energy,
// Newton-theorem Hartree potential and dilations.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tfdw/errors.hpp"
#include "tfdw/radial_grid.hpp"

namespace tfdw {

class RadialFunction {
public:
    RadialFunction() = default;
    explicit RadialFunction(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}
    RadialFunction(GridPtr grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_->size())
            throw configuration_error("radial function size does not match its grid");
    }

    template <class F>
    static RadialFunction sample(GridPtr grid, F&& f) {
        RadialFunction u(grid);
        auto const r = grid->nodes();
        for (std::size_t i = 0; i < r.size(); ++i) u.values_[i] = f(r[i]);
        return u;
    }

    RadialGrid const& grid() const { return *grid_; }
    GridPtr const& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    bool is_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    RadialFunction& operator*=(double s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

inline void require_finite(RadialFunction const& u) {
    if (!u.is_finite()) throw invalid_state_error("radial state has non-finite samples");
}

// sum_i w_i f_i, i.e. int 4 pi r^2 f(r) dr
inline double integrate(RadialGrid const& g, std::span<const double> f) {
    auto const w = g.weights();
    double s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

inline double mass(RadialGrid const& g, std::span<const double> u) {
    auto const w = g.weights();
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * u[i] * u[i];
    return s;
}

inline double mass(RadialFunction const& u) {
    require_finite(u);
    return mass(u.grid(), u.values());
}

namespace detail {

// Staggered first derivative du/dt at the n-1 half nodes, fourth order in the
// interior with third-order one-sided closures. Unlike the collocated central
// stencil it has no odd-even null mode, so sum c_k (Su)_k^2 is a proper
// positive form on everything but constants.
struct StaggeredStencil {
    std::size_t first; // index of the first sample used
    double c[4];
};

inline StaggeredStencil staggered_row(std::size_t k, std::size_t n) {
    if (k == 0) return {0, {-23.0 / 24, 21.0 / 24, 3.0 / 24, -1.0 / 24}};
    if (k == n - 2) return {n - 4, {1.0 / 24, -3.0 / 24, -21.0 / 24, 23.0 / 24}};
    return {k - 1, {1.0 / 24, -27.0 / 24, 27.0 / 24, -1.0 / 24}};
}

} // namespace detail

// du/dt at mid nodes (divide by dt implicitly applied). out.size() == n-1.
inline void staggered_derivative(RadialGrid const& g, std::span<const double> u, std::span<double> out) {
    std::size_t const n = g.size();
    double const inv_dt = 1.0 / g.step();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        auto const row = detail::staggered_row(k, n);
        double d = 0;
        for (int j = 0; j < 4; ++j) d += row.c[j] * u[row.first + j];
        out[k] = d * inv_dt;
    }
}

// out += S^T v, the adjoint of staggered_derivative.
inline void staggered_derivative_adjoint(RadialGrid const& g, std::span<const double> v, std::span<double> out) {
    std::size_t const n = g.size();
    double const inv_dt = 1.0 / g.step();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        auto const row = detail::staggered_row(k, n);
        for (int j = 0; j < 4; ++j) out[row.first + j] += row.c[j] * v[k] * inv_dt;
    }
}

// int 4 pi r^2 |u'(r)|^2 dr on raw samples.
inline double kinetic_density(RadialGrid const& g, std::span<const double> u) {
    std::vector<double> du(g.size() - 1);
    staggered_derivative(g, u, du);
    auto const kw = g.kinetic_weights();
    double s = 0;
    for (std::size_t k = 0; k < du.size(); ++k) s += kw[k] * du[k] * du[k];
    return s;
}

inline double kinetic_density(RadialFunction const& u) {
    require_finite(u);
    return kinetic_density(u.grid(), u.values());
}

// out += scale * d/du [kinetic_density(u)]  (coefficient-space gradient)
inline void add_kinetic_gradient(RadialGrid const& g, std::span<const double> u, double scale,
                                 std::span<double> out) {
    std::vector<double> du(g.size() - 1);
    staggered_derivative(g, u, du);
    auto const kw = g.kinetic_weights();
    for (std::size_t k = 0; k < du.size(); ++k) du[k] *= 2 * scale * kw[k];
    staggered_derivative_adjoint(g, du, out);
}

// Newton's theorem on the grid:
//   Phi_i = (1/r_i) sum_{j<=i} w_j rho_j + sum_{j>i} w_j rho_j / r_j
// which is exactly sum_j w_j rho_j / max(r_i, r_j).
inline void newton_potential(RadialGrid const& g, std::span<const double> rho, std::span<double> phi) {
    std::size_t const n = g.size();
    auto const r = g.nodes();
    auto const w = g.weights();
    std::vector<double> outer(n + 1, 0.0);
    for (std::size_t j = n; j-- > 0;) outer[j] = outer[j + 1] + (r[j] > 0 ? w[j] * rho[j] / r[j] : 0.0);
    double inner = 0;
    for (std::size_t i = 0; i < n; ++i) {
        inner += w[i] * rho[i];
        double const enclosed = r[i] > 0 ? inner / r[i] : 0.0;
        phi[i] = enclosed + outer[i + 1];
    }
}

struct HartreeResult {
    RadialFunction potential;
    double energy = 0;
};

// rho is a density (not an amplitude). energy = (1/2) int rho Phi.
inline HartreeResult hartree_radial(RadialFunction const& rho) {
    require_finite(rho);
    auto const v = rho.values();
    double scale = 0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    for (double x : v)
        if (x < -1e-12 * std::max(scale, 1e-300))
            throw domain_error("hartree_radial: density has negative values");
    HartreeResult out{RadialFunction(rho.grid_ptr()), 0.0};
    newton_potential(rho.grid(), v, out.potential.values());
    auto const w = rho.grid().weights();
    for (std::size_t i = 0; i < v.size(); ++i) out.energy += w[i] * v[i] * out.potential[i];
    out.energy *= 0.5;
    return out;
}

// Lagrange interpolation of degree 5 in the grid coordinate. Outside the grid:
// constant continuation below r_min, zero above r_max.
inline double evaluate(RadialGrid const& g, std::span<const double> u, double r) {
    std::size_t const n = g.size();
    if (r >= g.r_max()) return r == g.r_max() ? u[n - 1] : 0.0;
    if (r <= g.r_min()) return u[0];
    double const s = g.fractional_index(r);
    auto base = static_cast<std::ptrdiff_t>(std::floor(s));
    if (double(base) == s) return u[static_cast<std::size_t>(base)];
    constexpr int order = 6;
    std::ptrdiff_t start = std::clamp<std::ptrdiff_t>(base - 2, 0, std::ptrdiff_t(n) - order);
    double result = 0;
    for (int a = 0; a < order; ++a) {
        double l = 1;
        double const xa = double(start + a);
        for (int b = 0; b < order; ++b) {
            if (b == a) continue;
            double const xb = double(start + b);
            l *= (s - xb) / (xa - xb);
        }
        result += l * u[static_cast<std::size_t>(start + a)];
    }
    return result;
}

inline double evaluate(RadialFunction const& u, double r) { return evaluate(u.grid(), u.values(), r); }

struct Dilated {
    RadialFunction u;
    double truncated_mass = 0; // mass of u(l r) that fell beyond r_max
    bool resampled_with_loss = false;
};

// l^{3/2} u(l r), resampled on the same grid.
inline Dilated dilate_tracked(RadialFunction const& u, double ell) {
    if (!(ell > 0) || !std::isfinite(ell)) throw domain_error("dilate: scale must be positive");
    require_finite(u);
    auto const& g = u.grid();
    Dilated out{RadialFunction(u.grid_ptr()), 0.0, false};
    if (ell == 1.0) {
        out.u = u;
        return out;
    }
    double const amp = std::pow(ell, 1.5);
    auto const r = g.nodes();
    for (std::size_t i = 0; i < r.size(); ++i) out.u[i] = amp * evaluate(u, ell * r[i]);
    if (ell < 1) {
        // samples of u beyond l*r_max are not represented after the dilation
        double const cut = ell * g.r_max();
        auto const w = g.weights();
        for (std::size_t i = 0; i < r.size(); ++i)
            if (r[i] > cut) out.truncated_mass += w[i] * u[i] * u[i];
        double const m = mass(g, u.values());
        out.resampled_with_loss = out.truncated_mass > 1e-10 * std::max(m, 1e-300);
    }
    return out;
}

inline RadialFunction dilate(RadialFunction const& u, double ell) { return dilate_tracked(u, ell).u; }

// Cumulative mass up to radius r (trapezoid in t, linear interpolation between nodes).
class CumulativeMass {
public:
    CumulativeMass(RadialGrid const& g, std::span<const double> u) : grid_(&g), cum_(g.size(), 0.0) {
        // half-cell trapezoid pieces so that cum_[n-1] == mass
        double const dt = g.step();
        auto const r = g.nodes();
        auto dens = [&](std::size_t i) {
            return 4 * std::numbers::pi * r[i] * r[i] * g.jacobian(r[i]) * u[i] * u[i];
        };
        for (std::size_t i = 1; i < g.size(); ++i) cum_[i] = cum_[i - 1] + 0.5 * dt * (dens(i - 1) + dens(i));
    }
    double operator()(double r) const {
        auto const& g = *grid_;
        if (r <= g.r_min()) return 0.0;
        if (r >= g.r_max()) return cum_.back();
        double const s = g.fractional_index(r);
        auto const i = std::min<std::size_t>(static_cast<std::size_t>(s), g.size() - 2);
        double const f = s - double(i);
        return (1 - f) * cum_[i] + f * cum_[i + 1];
    }
    double total() const { return cum_.back(); }

private:
    RadialGrid const* grid_;
    std::vector<double> cum_;
};

} // namespace tfdw
