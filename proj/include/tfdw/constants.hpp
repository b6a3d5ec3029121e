#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "tfdw/errors.hpp"

namespace tfdw {

// Switches for the individual terms of the functional. The von Weizsaecker term
// is always present. Anything but all-enabled is meant for oracle tests.
struct TermToggles {
    bool thomas_fermi = true;
    bool dirac = true;
    bool hartree = true;
    bool external = true;

    bool all_enabled() const noexcept { return thomas_fermi && dirac && hartree && external; }
    bool operator==(TermToggles const&) const = default;
};

struct Constants {
    double c_tf = 1.0;
    double c_d = 1.0;
    double c_w = 1.0;
    TermToggles toggles{};

    void validate() const {
        if (!(c_tf > 0 && c_d > 0 && c_w > 0) || !std::isfinite(c_tf) || !std::isfinite(c_d) ||
            !std::isfinite(c_w))
            throw configuration_error("coupling constants c_TF, c_D, c_W must be positive and finite");
    }

    bool operator==(Constants const&) const = default;

    static Constants unit() { return {}; }

    // Atomic units: c_TF = (3/10)(3 pi^2)^{2/3}, c_D = (3/4)(3/pi)^{1/3}, c_W = 1/2
    // (full von Weizsaecker correction for u = sqrt(rho)).
    static Constants physical() {
        Constants k;
        k.c_tf = 0.3 * std::pow(3 * std::numbers::pi * std::numbers::pi, 2.0 / 3.0);
        k.c_d = 0.75 * std::cbrt(3 / std::numbers::pi);
        k.c_w = 0.5;
        return k;
    }

    static Constants preset(std::string const& name) {
        if (name == "unit") return unit();
        if (name == "physical") return physical();
        throw configuration_error("unknown constants preset '" + name + "'");
    }
};

} // namespace tfdw
