#pragma once
// The functional on a Cartesian box, with the same interface as RadialModel so
// that the descent is shared between the two representations.

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "tfdw/cartesian.hpp"
#include "tfdw/constants.hpp"
#include "tfdw/energy_breakdown.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial_model.hpp"

namespace tfdw {

// Diagonal Fourier multiplier 1 / (2 h^3 (c |k|^2 + sigma)).
class CartesianPreconditioner {
public:
    CartesianPreconditioner(BoxGrid const& g, double c_w, double sigma)
        : op_(std::make_unique<SpectralOperator>(g)), c_(c_w), sigma_(sigma), h3_(g.cell_volume()) {}

    double sigma() const noexcept { return sigma_; }

    void apply(std::span<const double> G, std::span<double> d) const {
        double const c = c_, s = sigma_, h3 = h3_;
        op_->apply(G, d, [=](double k2) { return 1.0 / (2 * h3 * (c * k2 + s)); });
    }

private:
    std::unique_ptr<SpectralOperator> op_; // scratch buffers; the descent is single-threaded
    double c_, sigma_, h3_;
};

class CartesianModel {
public:
    using Preconditioner = CartesianPreconditioner;

    CartesianModel(BoxPtr box, PotentialSpec const& V, Constants const& k, double smearing = 0)
        : box_(std::move(box)), potential_(V), constants_(k),
          smearing_(smearing > 0 ? smearing : default_smearing(*box_)),
          v_(sample_potential(box_, V, smearing_).data()), poisson_(std::make_unique<FreeSpacePoisson>(*box_)),
          laplace_(std::make_unique<SpectralOperator>(*box_)) {
        k.validate();
    }

    BoxGrid const& grid() const noexcept { return *box_; }
    BoxPtr const& grid_ptr() const noexcept { return box_; }
    Constants const& constants() const noexcept { return constants_; }
    PotentialSpec const& potential() const noexcept { return potential_; }
    double smearing() const noexcept { return smearing_; }
    std::span<const double> potential_samples() const noexcept { return v_; }
    std::size_t size() const noexcept { return box_->size(); }

    EnergyBreakdown energy(std::span<const double> u) const { return evaluate(u, nullptr); }
    EnergyBreakdown energy_gradient(std::span<const double> u, std::span<double> G) const {
        return evaluate(u, &G);
    }

    double mass(std::span<const double> u) const { return tfdw::mass(*box_, u); }
    double inner(std::span<const double> a, std::span<const double> b) const {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return box_->cell_volume() * s;
    }
    void apply_mass(std::span<const double> u, std::span<double> out) const {
        double const h3 = box_->cell_volume();
        for (std::size_t i = 0; i < u.size(); ++i) out[i] = h3 * u[i];
    }
    double dual_norm2(std::span<const double> G) const {
        double s = 0;
        for (double x : G) s += x * x;
        return s / box_->cell_volume();
    }
    void to_l2(std::span<const double> G, std::span<double> g) const {
        double const inv = 1.0 / box_->cell_volume();
        for (std::size_t i = 0; i < G.size(); ++i) g[i] = inv * G[i];
    }
    double kinetic(std::span<const double> u) const {
        std::vector<double> lap(u.size());
        laplace_->negative_laplacian(u, lap);
        double s = 0;
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * lap[i];
        return box_->cell_volume() * s;
    }
    double metric(std::span<const double> s, double kinetic_scale, double sigma) const {
        return 2 * (kinetic_scale * kinetic(s) + sigma * mass(s));
    }
    Preconditioner preconditioner(double kinetic_scale, double sigma) const {
        return Preconditioner(*box_, kinetic_scale, sigma);
    }
    double sigma_floor(double kinetic_scale) const {
        double const L = box_->edge();
        return kinetic_scale * (std::numbers::pi / L) * (std::numbers::pi / L);
    }
    void constrain(std::span<double>) const {}

    // Mass at sup-norm distance >= 95% of the half edge.
    double boundary_mass(std::span<const double> u) const {
        double const cut = 0.95 * 0.5 * box_->edge();
        double s = 0;
        for (std::size_t idx = 0; idx < u.size(); ++idx) {
            auto const p = box_->point(idx);
            if (std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])}) >= cut) s += u[idx] * u[idx];
        }
        return box_->cell_volume() * s;
    }

private:
    EnergyBreakdown evaluate(std::span<const double> u, std::span<double>* G) const {
        auto const& k = constants_;
        std::size_t const n = u.size();
        double const h3 = box_->cell_volume();
        EnergyBreakdown e;
        std::vector<double> lap(n);
        laplace_->negative_laplacian(u, lap);
        double kin = 0;
        for (std::size_t i = 0; i < n; ++i) kin += u[i] * lap[i];
        e.weizsacker = k.c_w * h3 * kin;

        std::vector<double> rho(n);
        for (std::size_t i = 0; i < n; ++i) rho[i] = u[i] * u[i];
        std::vector<double> phi;
        if (k.toggles.hartree) {
            phi.resize(n);
            poisson_->solve(rho, phi);
        }
        double tf = 0, dirac = 0, ext = 0, har = 0;
        for (std::size_t i = 0; i < n; ++i) {
            detail::Powers const p(u[i]);
            if (k.toggles.thomas_fermi) tf += p.a103;
            if (k.toggles.dirac) dirac += p.a83;
            if (k.toggles.external) ext += v_[i] * rho[i];
            if (k.toggles.hartree) har += rho[i] * phi[i];
            if (G) {
                double d = 2 * k.c_w * lap[i];
                if (k.toggles.thomas_fermi) d += k.c_tf * (10.0 / 3.0) * p.a43 * u[i];
                if (k.toggles.dirac) d -= k.c_d * (8.0 / 3.0) * p.a23 * u[i];
                if (k.toggles.external) d += 2 * v_[i] * u[i];
                if (k.toggles.hartree) d += 2 * phi[i] * u[i];
                (*G)[i] = h3 * d;
            }
        }
        e.thomas_fermi = k.c_tf * h3 * tf;
        e.dirac = k.c_d * h3 * dirac;
        e.external = h3 * ext;
        e.hartree = 0.5 * h3 * har;
        e.assemble();
        return e;
    }

    BoxPtr box_;
    PotentialSpec potential_;
    Constants constants_;
    double smearing_;
    std::vector<double> v_;
    std::unique_ptr<FreeSpacePoisson> poisson_; // scratch buffers, one model per solve
    std::unique_ptr<SpectralOperator> laplace_;
};

} // namespace tfdw
