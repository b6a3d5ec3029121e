#pragma once
// Radial grids for spherically symmetric states.
//
// A grid is uniform in a coordinate t: t = r (linear) or t = ln r (logarithmic).
// Quadrature is the composite trapezoid rule in t applied to 4 pi r^2 f(r) dr/dt,
// which for integrands decaying at both ends is accurate far beyond its nominal
// second order (Euler-Maclaurin end corrections vanish).

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfdw/errors.hpp"

namespace tfdw {

enum class GridKind { linear, logarithmic };

inline std::string_view to_string(GridKind kind) {
    return kind == GridKind::linear ? "linear" : "logarithmic";
}

inline GridKind grid_kind_from_string(std::string_view s) {
    if (s == "linear") return GridKind::linear;
    if (s == "logarithmic" || s == "log") return GridKind::logarithmic;
    throw configuration_error("unknown radial grid kind '" + std::string(s) + "'");
}

class RadialGrid {
public:
    static constexpr std::size_t min_points = 16;

    RadialGrid(GridKind kind, double r_min, double r_max, std::size_t n)
        : kind_(kind), r_min_(r_min), r_max_(r_max), n_(n) {
        if (!(std::isfinite(r_min) && std::isfinite(r_max)) || !(r_min < r_max))
            throw configuration_error("radial grid requires finite r_min < r_max");
        if (n < min_points)
            throw configuration_error("radial grid requires at least 16 points");
        if (kind == GridKind::logarithmic && !(r_min > 0))
            throw configuration_error("logarithmic radial grid requires r_min > 0");
        if (kind == GridKind::linear && r_min < 0)
            throw configuration_error("linear radial grid requires r_min >= 0");

        t0_ = coordinate(r_min);
        dt_ = (coordinate(r_max) - t0_) / double(n - 1);

        nodes_.resize(n);
        weights_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double r = radius_at(t0_ + dt_ * double(i));
            if (i == 0) r = r_min;
            if (i == n - 1) r = r_max;
            nodes_[i] = r;
            double const trap = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            weights_[i] = 4 * std::numbers::pi * r * r * jacobian(r) * dt_ * trap;
        }

        mid_nodes_.resize(n - 1);
        kinetic_weights_.resize(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            double const r = radius_at(t0_ + dt_ * (double(k) + 0.5));
            mid_nodes_[k] = r;
            // int 4 pi r^2 |du/dr|^2 dr = int 4 pi r^2 / J |du/dt|^2 dt, midpoint rule in t
            kinetic_weights_[k] = 4 * std::numbers::pi * r * r / jacobian(r) * dt_;
        }
    }

    GridKind kind() const noexcept { return kind_; }
    double r_min() const noexcept { return r_min_; }
    double r_max() const noexcept { return r_max_; }
    std::size_t size() const noexcept { return n_; }

    // Uniform spacing in the grid coordinate t.
    double step() const noexcept { return dt_; }
    double t0() const noexcept { return t0_; }

    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> mid_nodes() const noexcept { return mid_nodes_; }
    std::span<const double> kinetic_weights() const noexcept { return kinetic_weights_; }

    double coordinate(double r) const {
        return kind_ == GridKind::logarithmic ? std::log(r) : r;
    }
    double radius_at(double t) const {
        return kind_ == GridKind::logarithmic ? std::exp(t) : t;
    }
    // dr/dt
    double jacobian(double r) const noexcept {
        return kind_ == GridKind::logarithmic ? r : 1.0;
    }
    // Fractional node index of radius r (may lie outside [0, n-1]).
    double fractional_index(double r) const {
        return (coordinate(r) - t0_) / dt_;
    }

    // Exactly what sum(weights) evaluates to for the chosen rule.
    double trapezoid_volume() const {
        double const four_pi = 4 * std::numbers::pi;
        if (kind_ == GridKind::logarithmic) {
            // trapezoid of exp(3t): (e^{3b} - e^{3a}) (dt/2) coth(3 dt/2)
            double const x = 1.5 * dt_;
            return four_pi * (std::pow(r_max_, 3) - std::pow(r_min_, 3)) * (dt_ / 2) / std::tanh(x);
        }
        // Euler-Maclaurin terminates for a quadratic integrand
        double const a = r_min_, b = r_max_;
        return four_pi * ((b * b * b - a * a * a) / 3 + dt_ * dt_ / 12 * (2 * b - 2 * a));
    }

    bool operator==(RadialGrid const& other) const noexcept {
        return kind_ == other.kind_ && r_min_ == other.r_min_ && r_max_ == other.r_max_ &&
               n_ == other.n_;
    }

private:
    GridKind kind_;
    double r_min_, r_max_;
    std::size_t n_;
    double t0_{}, dt_{};
    std::vector<double> nodes_, weights_, mid_nodes_, kinetic_weights_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(GridKind kind, double r_min, double r_max, std::size_t n) {
    return std::make_shared<const RadialGrid>(kind, r_min, r_max, n);
}

inline GridPtr make_log_grid(double r_min = 1e-4, double r_max = 40, std::size_t n = 2000) {
    return make_grid(GridKind::logarithmic, r_min, r_max, n);
}

// Default working grid: logarithmic, [1e-4, 40], 2000 points.
inline GridPtr default_grid() { return make_log_grid(); }

} // namespace tfdw
