#pragma once
// External potentials: none, atomic -Z/|x|, molecular sum_j -Z_j/|x - r_j|, and
// a tabulated nonpositive short-range radial profile.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "tfdw/errors.hpp"

namespace tfdw {

struct NoPotential {
    bool operator==(NoPotential const&) const = default;
};

struct AtomicPotential {
    double Z = 0;
    bool operator==(AtomicPotential const&) const = default;
};

struct Nucleus {
    double Z = 0;
    std::array<double, 3> position{0, 0, 0};
    bool operator==(Nucleus const&) const = default;
};

struct MolecularPotential {
    std::vector<Nucleus> nuclei;
    bool operator==(MolecularPotential const&) const = default;
};

// V(r) sampled at increasing radii r; linear interpolation, V = 0 beyond the table.
struct RadialTablePotential {
    std::vector<double> r;
    std::vector<double> V;
    bool operator==(RadialTablePotential const&) const = default;

    double operator()(double x) const {
        if (r.empty() || x >= r.back()) return 0.0;
        if (x <= r.front()) return V.front();
        auto const it = std::upper_bound(r.begin(), r.end(), x);
        auto const j = std::size_t(it - r.begin());
        double const t = (x - r[j - 1]) / (r[j] - r[j - 1]);
        return (1 - t) * V[j - 1] + t * V[j];
    }
};

class PotentialSpec {
public:
    using Variant = std::variant<NoPotential, AtomicPotential, MolecularPotential, RadialTablePotential>;

    PotentialSpec() = default;
    PotentialSpec(Variant v) : value_(std::move(v)) { validate(); }

    static PotentialSpec none() { return PotentialSpec(NoPotential{}); }
    static PotentialSpec atomic(double Z) { return PotentialSpec(AtomicPotential{Z}); }
    static PotentialSpec molecular(std::vector<Nucleus> nuclei) {
        return PotentialSpec(MolecularPotential{std::move(nuclei)});
    }
    static PotentialSpec radial_table(std::vector<double> r, std::vector<double> V) {
        return PotentialSpec(RadialTablePotential{std::move(r), std::move(V)});
    }

    Variant const& value() const noexcept { return value_; }

    template <class T>
    bool is() const noexcept { return std::holds_alternative<T>(value_); }
    template <class T>
    T const& as() const { return std::get<T>(value_); }

    bool is_none() const noexcept { return is<NoPotential>(); }

    // Sum of nuclear charges; 0 for None and RadialTable.
    double total_charge() const {
        if (auto const* a = std::get_if<AtomicPotential>(&value_)) return a->Z;
        if (auto const* m = std::get_if<MolecularPotential>(&value_)) {
            double z = 0;
            for (auto const& n : m->nuclei) z += n.Z;
            return z;
        }
        return 0;
    }

    // Atomic equivalent of a spherically symmetric Coulomb potential, if any.
    std::optional<AtomicPotential> radial_coulomb() const {
        if (auto const* a = std::get_if<AtomicPotential>(&value_)) return *a;
        if (auto const* m = std::get_if<MolecularPotential>(&value_)) {
            for (auto const& n : m->nuclei)
                if (n.Z != 0 && (n.position[0] != 0 || n.position[1] != 0 || n.position[2] != 0))
                    return std::nullopt;
            return AtomicPotential{total_charge()};
        }
        return std::nullopt;
    }

    // Whether the potential can be sampled on a radial grid.
    bool is_radial() const { return !is<MolecularPotential>() || radial_coulomb().has_value(); }

    // V at radius r for radially symmetric potentials.
    double radial_value(double r) const {
        if (is_none()) return 0.0;
        if (auto const* t = std::get_if<RadialTablePotential>(&value_)) return (*t)(r);
        auto const a = radial_coulomb();
        if (!a) throw configuration_error("molecular potential is not radially symmetric");
        if (a->Z == 0) return 0.0;
        if (!(r > 0)) throw configuration_error("Coulomb potential cannot be sampled at r = 0");
        return -a->Z / r;
    }

    void validate() const {
        if (auto const* a = std::get_if<AtomicPotential>(&value_)) {
            if (!(a->Z >= 0) || !std::isfinite(a->Z)) throw domain_error("nuclear charge Z must be >= 0");
        } else if (auto const* m = std::get_if<MolecularPotential>(&value_)) {
            for (auto const& n : m->nuclei) {
                if (!(n.Z >= 0) || !std::isfinite(n.Z)) throw domain_error("nuclear charges Z_j must be >= 0");
                for (double c : n.position)
                    if (!std::isfinite(c)) throw domain_error("nuclear position must be finite");
            }
        } else if (auto const* t = std::get_if<RadialTablePotential>(&value_)) {
            if (t->r.size() != t->V.size() || t->r.size() < 2)
                throw configuration_error("radial table needs matching r and V arrays with >= 2 samples");
            double max_rv = 0;
            for (std::size_t i = 0; i < t->r.size(); ++i) {
                if (!(t->r[i] >= 0) || (i > 0 && !(t->r[i] > t->r[i - 1])))
                    throw configuration_error("radial table radii must be nonnegative and increasing");
                if (!(t->V[i] <= 0) || !std::isfinite(t->V[i]))
                    throw domain_error("radial table potential must be nonpositive");
                max_rv = std::max(max_rv, std::abs(t->r[i] * t->V[i]));
            }
            // short range: |r V(r)| must have decayed at the end of the table
            if (std::abs(t->r.back() * t->V.back()) > 1e-2 * max_rv)
                throw domain_error("radial table potential must satisfy r V(r) -> 0");
        }
    }

    bool operator==(PotentialSpec const&) const = default;

private:
    Variant value_{NoPotential{}};
};

} // namespace tfdw
