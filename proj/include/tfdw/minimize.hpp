#pragma once
// Mass-constrained minimization, the dilation reduction of the mass-free
// problem, the h_u(s) profile and the Gagliardo-Nirenberg quotient.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tfdw/cartesian.hpp"
#include "tfdw/cartesian_model.hpp"
#include "tfdw/constants.hpp"
#include "tfdw/descent.hpp"
#include "tfdw/energy_breakdown.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/functional.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial.hpp"
#include "tfdw/radial_model.hpp"

namespace tfdw {

enum class SeedProfile { gaussian, hydrogenic };

inline std::string_view to_string(SeedProfile s) { return s == SeedProfile::gaussian ? "gaussian" : "hydrogenic"; }

inline SeedProfile seed_profile_from_string(std::string_view s) {
    if (s == "gaussian") return SeedProfile::gaussian;
    if (s == "hydrogenic") return SeedProfile::hydrogenic;
    throw configuration_error("unknown seed profile '" + std::string(s) + "'");
}

inline std::string_view to_string(StepRule s) { return s == StepRule::fixed ? "fixed" : "adaptive"; }

inline StepRule step_rule_from_string(std::string_view s) {
    if (s == "fixed") return StepRule::fixed;
    if (s == "adaptive") return StepRule::adaptive;
    throw configuration_error("unknown step rule '" + std::string(s) + "'");
}

struct RadialGridSpec {
    GridKind kind = GridKind::logarithmic;
    double r_min = 1e-4;
    double r_max = 40;
    std::size_t n = 2000;
    OuterBoundary outer = OuterBoundary::free;

    GridPtr make() const { return make_grid(kind, r_min, r_max, n); }
    bool operator==(RadialGridSpec const&) const = default;
};

struct BoxSpec {
    double L = 16;
    std::size_t n = 48;
    double smearing = 0; // 0 selects two grid spacings

    BoxPtr make() const { return make_box(L, n); }
    bool operator==(BoxSpec const&) const = default;
};

struct SolveConfig {
    double mass = 1;
    std::size_t max_iter = 5000;
    double tolerance = 1e-7; // relative projected-gradient norm
    StepRule step_rule = StepRule::adaptive;
    double fixed_step = 0.5;
    std::size_t restarts = 2;
    SeedProfile seed = SeedProfile::gaussian;
    // |u(r_max)| <= decay_threshold * max |u| is required of converged radial states
    double decay_threshold = 1e-3;
    RadialGridSpec grid{};
    BoxSpec box{};

    void validate() const {
        if (!(mass > 0) || !std::isfinite(mass)) throw configuration_error("solve: mass must be positive");
        if (!(tolerance > 0)) throw configuration_error("solve: tolerance must be positive");
        if (max_iter == 0) throw configuration_error("solve: max_iter must be positive");
        if (step_rule == StepRule::fixed && !(fixed_step > 0))
            throw configuration_error("solve: fixed step must be positive");
        if (!(decay_threshold > 0)) throw configuration_error("solve: decay threshold must be positive");
    }
};

using State = std::variant<RadialFunction, Field3>;

inline bool is_radial(State const& s) { return std::holds_alternative<RadialFunction>(s); }

inline double mass(State const& s) {
    return std::visit([](auto const& u) { return mass(u); }, s);
}

struct MinimizeResult {
    State u;
    EnergyBreakdown breakdown;
    double residual = 0;
    std::size_t iterations = 0;
    double boundary_mass = 0;
    bool converged = false;
    double lagrange_multiplier = 0; // mu = <g, u> / (2 m)
    std::vector<double> history;    // accepted energies of the winning run
    // provenance
    PotentialSpec potential;
    Constants constants;
    double target_mass = 0;
    double tolerance = 0;
    std::size_t restarts = 0;

    double energy() const noexcept { return breakdown.total; }
    RadialFunction const& radial() const { return std::get<RadialFunction>(u); }
    Field3 const& field() const { return std::get<Field3>(u); }
};

// ---------------------------------------------------------------------------
// dilation reduction

struct OptimalDilation {
    double ell = 0;
    double value = 0;
    bool attained = false;
    double a = 0, b = 0;
};

// inf over l of l^2 a - l b for a = m^3 A + m^{11/3} B and b = m^{7/3} C - m^3 D,
// the energy of the mass-m state m^2 l^{3/2} u(m l x) built from unit-mass u.
inline OptimalDilation optimal_dilation(EnergyBreakdown const& e, double m) {
    if (!(m > 0)) throw domain_error("optimal_dilation: mass must be positive");
    OptimalDilation d;
    d.a = m * m * m * e.weizsacker + std::pow(m, 11.0 / 3.0) * e.thomas_fermi;
    d.b = std::pow(m, 7.0 / 3.0) * e.dirac - m * m * m * e.hartree;
    if (!(d.a > 0)) throw domain_error("optimal_dilation: quadratic coefficient must be positive");
    if (d.b > 0) {
        d.ell = d.b / (2 * d.a);
        d.value = -d.b * d.b / (4 * d.a);
        d.attained = true;
    }
    return d;
}

inline void require_unit_mass(RadialFunction const& u, double tol = 1e-6) {
    if (!(std::abs(mass(u) - 1) <= tol)) throw domain_error("expected a unit-mass state");
}

inline OptimalDilation optimal_dilation(RadialFunction const& u, double m, Constants const& k) {
    require_unit_mass(u);
    return optimal_dilation(energy(u, PotentialSpec::none(), k), m);
}

// sqrt(m) (m l)^{3/2} u(m l r): the trial state of the reduction.
inline RadialFunction dilation_trial_state(RadialFunction const& u, double m, double ell) {
    auto v = dilate(u, m * ell);
    v *= std::sqrt(m);
    return v;
}

struct HSample {
    double s = 0, h = 0, dh = 0;
};

// h_u(s) = s (C - s D)_+^2 / (A + s B) and its derivative
// (C - s D)(A C - 3 s A D - 2 s^2 B D) / (A + s B)^2 where C - s D > 0.
inline HSample h_value(EnergyBreakdown const& e, double s) {
    double const A = e.weizsacker, B = e.thomas_fermi, C = e.dirac, D = e.hartree;
    double const p = std::max(C - s * D, 0.0);
    double const q = A + s * B;
    HSample out{s, s * p * p / q, 0.0};
    if (p > 0) out.dh = p * (A * C - 3 * s * A * D - 2 * s * s * B * D) / (q * q);
    return out;
}

inline std::vector<HSample> h_curve(RadialFunction const& u, std::span<const double> s_values, Constants const& k) {
    require_unit_mass(u);
    auto const e = energy(u, PotentialSpec::none(), k);
    std::vector<HSample> out;
    out.reserve(s_values.size());
    for (double s : s_values) {
        if (!(s > 0)) throw domain_error("h_curve: s must be positive");
        out.push_back(h_value(e, s));
    }
    return out;
}

// Largest s below which the derivative numerator stays positive:
// A C - 3 s A D - 2 s^2 B D > 0 and s < C/D.
inline double h_positivity_limit(EnergyBreakdown const& e) {
    double const A = e.weizsacker, B = e.thomas_fermi, C = e.dirac, D = e.hartree;
    if (!(D > 0)) return std::numeric_limits<double>::infinity();
    double root;
    if (B * D > 0) {
        double const qa = 2 * B * D, qb = 3 * A * D, qc = -A * C;
        root = (-qb + std::sqrt(qb * qb - 4 * qa * qc)) / (2 * qa);
    } else {
        root = C / (3 * D);
    }
    return std::min(root, C / D);
}

// ---------------------------------------------------------------------------
// minimization

namespace detail {

struct EnergyObjective {
    template <class Model>
    struct Bound {
        Model const& model;
        Evaluation value_gradient(std::span<const double> u, std::span<double> G) const {
            auto const e = model.energy_gradient(u, G);
            return {e.total, e.weizsacker + e.thomas_fermi + e.dirac + std::abs(e.external) + e.hartree};
        }
        double kinetic_scale(std::span<const double>) const { return model.constants().c_w; }
    };
};

inline double energy_floor(PotentialSpec const& V, Constants const& k, double m) {
    if (V.is<RadialTablePotential>()) return -std::numeric_limits<double>::infinity();
    return -10 * lower_bound_C1(V, k) * m;
}

// Dilation factors used by successive restarts: 0.8, 1.25, 0.64, 1.5625, ...
inline double restart_dilation(std::size_t i) {
    double const base = (i % 2 == 0) ? 0.8 : 1.25;
    return std::pow(base, double(i / 2 + 1));
}

inline double profile(SeedProfile p, double L, double r) {
    // unit-mass profiles of inverse width L
    if (p == SeedProfile::gaussian) return std::pow(L * L / std::numbers::pi, 0.75) * std::exp(-0.5 * L * L * r * r);
    return std::sqrt(L * L * L / std::numbers::pi) * std::exp(-L * r);
}

// Inverse width of the seed: closed-form optimal dilation of the unit Gaussian
// when it applies, otherwise a scan of the energy over the admissible widths.
template <class EnergyOf>
double seed_width(SeedProfile p, PotentialSpec const& V, Constants const& k, double m, double L_lo, double L_hi,
                  EnergyOf&& energy_of) {
    if (p == SeedProfile::gaussian && V.is_none()) {
        // unit Gaussian: A = 3/2 c_W and every other term in closed form
        EnergyBreakdown e;
        double const pi = std::numbers::pi;
        e.weizsacker = 1.5 * k.c_w;
        // int (pi^{-3/4} e^{-r^2/2})^p = pi^{3/2 - 3p/4} (2/p)^{3/2}
        e.thomas_fermi = k.c_tf * std::pow(pi, 1.5 - 2.5) * std::pow(0.6, 1.5);
        e.dirac = k.c_d * std::pow(pi, 1.5 - 2.0) * std::pow(0.75, 1.5);
        e.hartree = 1 / std::sqrt(2 * pi);
        auto const d = optimal_dilation(e, m);
        if (d.attained) {
            double const L = m * d.ell;
            if (L >= L_lo && L <= L_hi) return L;
        }
    }
    double best_L = L_lo, best_E = std::numeric_limits<double>::infinity();
    constexpr int samples = 81;
    for (int i = 0; i < samples; ++i) {
        double const L = L_lo * std::pow(L_hi / L_lo, double(i) / (samples - 1));
        double const E = energy_of(L);
        if (E < best_E) {
            best_E = E;
            best_L = L;
        }
    }
    return best_L;
}

struct Candidate {
    DescentOutcome run;
    EnergyBreakdown breakdown;
};

inline bool better(Candidate const& a, Candidate const& b, double slack) {
    if (a.breakdown.total < b.breakdown.total - slack) return true;
    if (a.breakdown.total > b.breakdown.total + slack) return false;
    return a.run.residual < b.run.residual;
}

inline std::vector<double> dilated_samples(State const& s, double ell) {
    return std::visit([&](auto const& u) { return dilate(u, ell).data(); }, s);
}

template <class Model, class MakeState>
MinimizeResult run_minimization(Model const& model, PotentialSpec const& V, SolveConfig const& cfg,
                                Constants const& k, std::vector<double> seed, MakeState&& make_state) {
    DescentOptions opt;
    opt.mass = cfg.mass;
    opt.max_iter = cfg.max_iter;
    opt.tolerance = cfg.tolerance;
    opt.step_rule = cfg.step_rule;
    opt.fixed_step = cfg.fixed_step;
    opt.floor = energy_floor(V, k, cfg.mass);
    typename EnergyObjective::template Bound<Model> const obj{model};

    auto solve = [&](std::vector<double> start) {
        Candidate c;
        c.run = projected_descent(model, obj, std::move(start), opt);
        c.breakdown = model.energy(c.run.u);
        return c;
    };

    Candidate best = solve(std::move(seed));
    State const first = make_state(best.run.u);
    for (std::size_t i = 0; i < cfg.restarts; ++i) {
        Candidate c = solve(dilated_samples(first, restart_dilation(i)));
        if (better(c, best, cfg.tolerance)) best = std::move(c);
    }

    MinimizeResult out;
    out.u = make_state(best.run.u);
    out.breakdown = best.breakdown;
    out.residual = best.run.residual;
    out.iterations = best.run.iterations;
    out.boundary_mass = model.boundary_mass(best.run.u);
    out.converged = best.run.converged;
    out.lagrange_multiplier = best.run.multiplier;
    out.history = std::move(best.run.history);
    out.potential = V;
    out.constants = k;
    out.target_mass = cfg.mass;
    out.tolerance = cfg.tolerance;
    out.restarts = cfg.restarts;
    return out;
}

inline double peak(std::span<const double> v) {
    double p = 0;
    for (double x : v) p = std::max(p, std::abs(x));
    return p;
}

inline double max_abs_edge(Field3 const& u) {
    auto const& g = u.grid();
    std::size_t const n = g.n();
    double edge = 0;
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        std::size_t const k = idx % n, j = (idx / n) % n, i = idx / (n * n);
        if (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1)
            edge = std::max(edge, std::abs(u[idx]));
    }
    return edge;
}

inline std::array<double, 3> charge_centroid(PotentialSpec const& V) {
    std::array<double, 3> c{0, 0, 0};
    if (auto const* m = std::get_if<MolecularPotential>(&V.value())) {
        double z = 0;
        for (auto const& n : m->nuclei) {
            for (int a = 0; a < 3; ++a) c[a] += n.Z * n.position[a];
            z += n.Z;
        }
        if (z > 0)
            for (auto& x : c) x /= z;
    }
    return c;
}

} // namespace detail

// Radial if V is, Cartesian otherwise. initial, when given, seeds the descent
// (resampled onto the configured grid if it lives on another one).
inline MinimizeResult minimize_mass_constrained(PotentialSpec const& V, SolveConfig const& cfg, Constants const& k,
                                                std::optional<State> const& initial = std::nullopt) {
    cfg.validate();
    k.validate();
    V.validate();
    double const m = cfg.mass;

    if (V.is_radial()) {
        auto grid = cfg.grid.make();
        if (initial && is_radial(*initial) && *std::get<RadialFunction>(*initial).grid_ptr() == *grid)
            grid = std::get<RadialFunction>(*initial).grid_ptr();
        RadialModel const model(grid, V, k, cfg.grid.outer);
        std::vector<double> seed;
        if (initial) {
            if (!is_radial(*initial)) throw configuration_error("a radial solve needs a radial initial state");
            auto const& u0 = std::get<RadialFunction>(*initial);
            require_finite(u0);
            seed.resize(grid->size());
            if (u0.grid() == *grid) std::copy(u0.values().begin(), u0.values().end(), seed.begin());
            else {
                auto const r = grid->nodes();
                for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = evaluate(u0, r[i]);
            }
        } else {
            double const L_lo = 8 / grid->r_max(), L_hi = 0.5 / grid->r_min();
            auto sample = [&](double L) {
                return RadialFunction::sample(grid, [&](double r) { return std::sqrt(m) * detail::profile(cfg.seed, L, r); });
            };
            double const L = detail::seed_width(cfg.seed, V, k, m, L_lo, std::min(L_hi, 1e3),
                                                [&](double L) { return model.energy(sample(L).values()).total; });
            seed = sample(L).data();
        }
        auto make_state = [&](std::vector<double> const& v) { return State(RadialFunction(grid, v)); };
        auto result = detail::run_minimization(model, V, cfg, k, std::move(seed), make_state);
        // accepted minimizers must have decayed at the outer edge
        auto const v = result.radial().values();
        result.converged = result.converged && std::abs(v.back()) <= cfg.decay_threshold * detail::peak(v);
        return result;
    }

    auto box = cfg.box.make();
    CartesianModel const model(box, V, k, cfg.box.smearing);
    std::vector<double> seed;
    if (initial) {
        if (is_radial(*initial)) seed = Field3::from_radial(box, std::get<RadialFunction>(*initial)).data();
        else {
            auto const& f = std::get<Field3>(*initial);
            if (!(f.grid() == *box)) throw configuration_error("initial 3D state lives on a different box");
            seed = std::vector<double>(f.values().begin(), f.values().end());
        }
    } else {
        auto const c = detail::charge_centroid(V);
        auto sample = [&](double L) {
            return Field3::sample(box, [&](double x, double y, double z) {
                double const dx = x - c[0], dy = y - c[1], dz = z - c[2];
                return std::sqrt(m) * detail::profile(cfg.seed, L, std::sqrt(dx * dx + dy * dy + dz * dz));
            });
        };
        double const L_lo = 8 / box->edge(), L_hi = 0.5 / box->spacing();
        double const L = detail::seed_width(cfg.seed, V, k, m, L_lo, L_hi,
                                            [&](double L) { return model.energy(sample(L).values()).total; });
        seed = sample(L).data();
    }
    auto make_state = [&](std::vector<double> const& v) { return State(Field3(box, v)); };
    auto result = detail::run_minimization(model, V, cfg, k, std::move(seed), make_state);
    auto const& f = result.field();
    result.converged =
        result.converged && detail::max_abs_edge(f) <= cfg.decay_threshold * detail::peak(f.values());
    return result;
}

// ---------------------------------------------------------------------------
// Gagliardo-Nirenberg quotient

struct GNResult {
    double S = 0;          // sup estimate of (int |u|^{8/3})^2 / int |grad u|^2 over unit mass
    RadialFunction u;      // maximizer, dilated to unit kinetic energy
    double residual = 0;
    std::size_t iterations = 0;
    bool converged = false;
};

inline double gn_quotient(RadialFunction const& u) {
    require_finite(u);
    auto const& g = u.grid();
    auto const w = g.weights();
    double c = 0;
    for (std::size_t i = 0; i < u.size(); ++i) c += w[i] * detail::Powers(u[i]).a83;
    double const kin = kinetic_density(u);
    if (!(kin > 0)) throw degenerate_input_error("gn_quotient: zero kinetic energy");
    // C^2/K scales as m^{5/3} under u -> sqrt(m) u; report the unit-mass value
    return c * c / kin / std::pow(mass(u), 5.0 / 3.0);
}

namespace detail {

// -C^2/K on the unit sphere, with C = int |u|^{8/3} and K = int |grad u|^2.
struct GNObjective {
    RadialModel const& model;
    Evaluation value_gradient(std::span<const double> u, std::span<double> G) const {
        auto const& g = model.grid();
        auto const w = g.weights();
        double c = 0;
        for (std::size_t i = 0; i < u.size(); ++i) c += w[i] * Powers(u[i]).a83;
        double const kin = kinetic_density(g, u);
        std::fill(G.begin(), G.end(), 0.0);
        // d(-C^2/K) = -(2C/K) dC + (C^2/K^2) dK
        add_kinetic_gradient(g, u, c * c / (kin * kin), G);
        double const s = -2 * c / kin * (8.0 / 3.0);
        for (std::size_t i = 0; i < u.size(); ++i) G[i] += s * w[i] * Powers(u[i]).a23 * u[i];
        double const q = c * c / kin;
        return {-q, q};
    }
    double kinetic_scale(std::span<const double> u) const {
        auto const& g = model.grid();
        auto const w = g.weights();
        double c = 0;
        for (std::size_t i = 0; i < u.size(); ++i) c += w[i] * Powers(u[i]).a83;
        double const kin = kinetic_density(g, u);
        return c * c / (kin * kin);
    }
};

} // namespace detail

inline GNResult gn_quotient_optimize(SolveConfig cfg) {
    cfg.mass = 1;
    cfg.validate();
    auto const grid = cfg.grid.make();
    Constants const k;
    RadialModel const model(grid, PotentialSpec::none(), k, cfg.grid.outer);
    auto seed = RadialFunction::sample(grid, [](double r) { return detail::profile(SeedProfile::gaussian, 1.0, r); });
    DescentOptions opt;
    opt.mass = 1;
    opt.max_iter = cfg.max_iter;
    opt.tolerance = cfg.tolerance;
    opt.step_rule = cfg.step_rule;
    opt.fixed_step = cfg.fixed_step;
    auto const run = projected_descent(model, detail::GNObjective{model}, seed.data(), opt);
    GNResult out;
    RadialFunction u(grid, run.u);
    out.S = gn_quotient(u);
    out.residual = run.residual;
    out.iterations = run.iterations;
    out.converged = run.converged;
    double const kin = kinetic_density(u);
    out.u = dilate(u, 1 / std::sqrt(kin));
    return out;
}

} // namespace tfdw
