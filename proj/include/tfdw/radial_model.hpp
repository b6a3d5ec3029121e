#pragma once
// The functional discretized on a radial grid: values, coefficient-space
// gradients and the Sobolev preconditioner used by the descent.

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfdw/constants.hpp"
#include "tfdw/energy_breakdown.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial.hpp"

namespace tfdw {

namespace detail {

// |u|^{p} for the fractional powers that appear in the functional.
struct Powers {
    double a43, a23, a103, a83; // |u|^{4/3}, |u|^{2/3}, |u|^{10/3}, |u|^{8/3}
    explicit Powers(double u) {
        double const a = std::abs(u);
        double const c = std::cbrt(a);
        a23 = c * c;
        a43 = a * c;
        a83 = a * a * a23;
        a103 = a * a * a43;
    }
};

} // namespace detail

inline std::vector<double> sample_potential(RadialGrid const& g, PotentialSpec const& V) {
    if (!V.is_radial())
        throw configuration_error("molecular potential with off-center nuclei needs a Cartesian state");
    std::vector<double> out(g.size(), 0.0);
    if (V.is_none()) return out;
    auto const r = g.nodes();
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = V.radial_value(r[i]);
    return out;
}

// Treatment of the outermost node during minimization. free leaves u(r_max)
// unconstrained so that escaping mass stays visible; zero pins it to 0.
enum class OuterBoundary { free, zero };

inline std::string_view to_string(OuterBoundary b) { return b == OuterBoundary::free ? "free" : "zero"; }

inline OuterBoundary outer_boundary_from_string(std::string_view s) {
    if (s == "free") return OuterBoundary::free;
    if (s == "zero") return OuterBoundary::zero;
    throw configuration_error("unknown outer boundary '" + std::string(s) + "'");
}

// Symmetric positive definite banded system 2 (c_W K + sigma W), K the kinetic
// form, factored once by LAPACK and reused for every application.
class RadialPreconditioner {
public:
    static constexpr int bandwidth = 3;

    RadialPreconditioner(RadialGrid const& g, double c_w, double sigma, OuterBoundary outer = OuterBoundary::free)
        : n_(int(g.size())), sigma_(sigma) {
        int const ld = bandwidth + 1;
        ab_.assign(std::size_t(ld) * std::size_t(n_), 0.0);
        auto at = [&](int i, int j) -> double& { // upper storage, i <= j
            return ab_[std::size_t(bandwidth + i - j) + std::size_t(j) * std::size_t(ld)];
        };
        auto const kw = g.kinetic_weights();
        double const inv_dt = 1.0 / g.step();
        for (std::size_t k = 0; k + 1 < g.size(); ++k) {
            auto const row = detail::staggered_row(k, g.size());
            for (int a = 0; a < 4; ++a)
                for (int b = a; b < 4; ++b) {
                    int const i = int(row.first) + a, j = int(row.first) + b;
                    at(i, j) += 2 * c_w * kw[k] * row.c[a] * row.c[b] * inv_dt * inv_dt;
                }
        }
        auto const w = g.weights();
        for (int i = 0; i < n_; ++i) at(i, i) += 2 * sigma * w[std::size_t(i)];
        if (outer == OuterBoundary::zero) {
            // identity row and column for the pinned node
            for (int j = std::max(0, n_ - 1 - bandwidth); j < n_ - 1; ++j) at(j, n_ - 1) = 0;
            at(n_ - 1, n_ - 1) = 1;
        }
        int const info = LAPACKE_dpbtrf(LAPACK_COL_MAJOR, 'U', n_, bandwidth, ab_.data(), ld);
        if (info != 0) throw configuration_error("radial preconditioner is not positive definite");
    }

    double sigma() const noexcept { return sigma_; }

    // d = M^{-1} G
    void apply(std::span<const double> G, std::span<double> d) const {
        std::copy(G.begin(), G.end(), d.begin());
        int const info = LAPACKE_dpbtrs(LAPACK_COL_MAJOR, 'U', n_, bandwidth, 1, ab_.data(), bandwidth + 1,
                                        d.data(), n_);
        if (info != 0) throw configuration_error("radial preconditioner solve failed");
    }

private:
    int n_;
    double sigma_;
    std::vector<double> ab_;
};

class RadialModel {
public:
    using Preconditioner = RadialPreconditioner;

    RadialModel(GridPtr grid, PotentialSpec const& V, Constants const& k,
                OuterBoundary outer = OuterBoundary::free)
        : grid_(std::move(grid)), potential_(V), constants_(k), outer_(outer), v_(sample_potential(*grid_, V)) {
        k.validate();
    }

    RadialGrid const& grid() const noexcept { return *grid_; }
    GridPtr const& grid_ptr() const noexcept { return grid_; }
    Constants const& constants() const noexcept { return constants_; }
    PotentialSpec const& potential() const noexcept { return potential_; }
    std::span<const double> potential_samples() const noexcept { return v_; }
    std::size_t size() const noexcept { return grid_->size(); }
    OuterBoundary outer_boundary() const noexcept { return outer_; }

    EnergyBreakdown energy(std::span<const double> u) const { return evaluate(u, nullptr); }

    // G = dE/du in coefficient space (not divided by the quadrature weights).
    EnergyBreakdown energy_gradient(std::span<const double> u, std::span<double> G) const {
        return evaluate(u, &G);
    }

    double mass(std::span<const double> u) const { return tfdw::mass(*grid_, u); }
    double inner(std::span<const double> a, std::span<const double> b) const {
        auto const w = grid_->weights();
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
        return s;
    }
    // Mass matrix applied to u.
    void apply_mass(std::span<const double> u, std::span<double> out) const {
        auto const w = grid_->weights();
        for (std::size_t i = 0; i < u.size(); ++i) out[i] = w[i] * u[i];
    }
    // |g|^2 of the L2 function represented by the coefficient gradient G.
    double dual_norm2(std::span<const double> G) const {
        auto const w = grid_->weights();
        double s = 0;
        for (std::size_t i = 0; i < G.size(); ++i) s += G[i] * G[i] / w[i];
        return s;
    }
    void to_l2(std::span<const double> G, std::span<double> g) const {
        auto const w = grid_->weights();
        for (std::size_t i = 0; i < G.size(); ++i) g[i] = G[i] / w[i];
    }
    double kinetic(std::span<const double> u) const { return kinetic_density(*grid_, u); }

    // s^T M s for the preconditioner metric.
    double metric(std::span<const double> s, double kinetic_scale, double sigma) const {
        return 2 * (kinetic_scale * kinetic(s) + sigma * mass(s));
    }
    // 2 (c K + sigma W) with c the coefficient of the kinetic form in the objective.
    Preconditioner preconditioner(double kinetic_scale, double sigma) const {
        return Preconditioner(*grid_, kinetic_scale, sigma, outer_);
    }
    // Smallest kinetic scale the domain can hold.
    double sigma_floor(double kinetic_scale) const {
        double const L = grid_->r_max();
        return kinetic_scale * (std::numbers::pi / L) * (std::numbers::pi / L);
    }

    // With a pinned outer node, minimizers extend by zero to H^1(R^3) functions,
    // so their energies bound the whole-space infimum from above.
    void constrain(std::span<double> v) const {
        if (outer_ == OuterBoundary::zero) v.back() = 0;
    }

    // Mass in the outermost 5% of the radial range.
    double boundary_mass(std::span<const double> u) const {
        auto const r = grid_->nodes();
        auto const w = grid_->weights();
        double const cut = 0.95 * grid_->r_max();
        double s = 0;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (r[i] >= cut) s += w[i] * u[i] * u[i];
        return s;
    }

private:
    EnergyBreakdown evaluate(std::span<const double> u, std::span<double>* G) const {
        auto const& g = *grid_;
        auto const& k = constants_;
        auto const w = g.weights();
        std::size_t const n = g.size();
        EnergyBreakdown e;
        e.weizsacker = k.c_w * kinetic_density(g, u);
        std::vector<double> rho(n), phi;
        if (G) {
            std::fill(G->begin(), G->end(), 0.0);
            add_kinetic_gradient(g, u, k.c_w, *G);
        }
        for (std::size_t i = 0; i < n; ++i) {
            detail::Powers const p(u[i]);
            rho[i] = u[i] * u[i];
            if (k.toggles.thomas_fermi) e.thomas_fermi += w[i] * p.a103;
            if (k.toggles.dirac) e.dirac += w[i] * p.a83;
            if (k.toggles.external) e.external += w[i] * v_[i] * rho[i];
            if (G) {
                double d = 0;
                if (k.toggles.thomas_fermi) d += k.c_tf * (10.0 / 3.0) * p.a43 * u[i];
                if (k.toggles.dirac) d -= k.c_d * (8.0 / 3.0) * p.a23 * u[i];
                if (k.toggles.external) d += 2 * v_[i] * u[i];
                (*G)[i] += w[i] * d;
            }
        }
        e.thomas_fermi *= k.c_tf;
        e.dirac *= k.c_d;
        if (k.toggles.hartree) {
            phi.resize(n);
            newton_potential(g, rho, phi);
            for (std::size_t i = 0; i < n; ++i) e.hartree += w[i] * rho[i] * phi[i];
            e.hartree *= 0.5;
            if (G)
                for (std::size_t i = 0; i < n; ++i) (*G)[i] += 2 * w[i] * phi[i] * u[i];
        }
        e.assemble();
        return e;
    }

    GridPtr grid_;
    PotentialSpec potential_;
    Constants constants_;
    OuterBoundary outer_;
    std::vector<double> v_;
};

} // namespace tfdw
