#pragma once
// Localization checks on computed states: cutoff pairs, the IMS identity, the
// localization and annulus inequalities, the radius of the system, the split
// point, the concentration function and a detector for escaping mass.
//
// Sign convention: every inequality is reported as RHS - LHS, so a value >= 0
// means the inequality holds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tfdw/cartesian.hpp"
#include "tfdw/constants.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/fft.hpp"
#include "tfdw/functional.hpp"
#include "tfdw/minimize.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial.hpp"

namespace tfdw {

// f(t) = cos(pi s / 2), g(t) = sin(pi s / 2) with s = 3t^2 - 2t^3 on [0, 1].
// Both are C^1, f^2 + g^2 = 1 identically and the largest slope is about 1.94.
struct CutoffProfile {
    static double s(double t) noexcept { return t * t * (3 - 2 * t); }
    static double ds(double t) noexcept { return 6 * t * (1 - t); }

    static double f(double t) noexcept {
        if (t <= 0) return 1;
        if (t >= 1) return 0;
        return std::cos(0.5 * std::numbers::pi * s(t));
    }
    static double g(double t) noexcept {
        if (t <= 0) return 0;
        if (t >= 1) return 1;
        return std::sin(0.5 * std::numbers::pi * s(t));
    }
    static double df(double t) noexcept {
        if (t <= 0 || t >= 1) return 0;
        return -0.5 * std::numbers::pi * std::sin(0.5 * std::numbers::pi * s(t)) * ds(t);
    }
    static double dg(double t) noexcept {
        if (t <= 0 || t >= 1) return 0;
        return 0.5 * std::numbers::pi * std::cos(0.5 * std::numbers::pi * s(t)) * ds(t);
    }
    // f'^2 + g'^2
    static double gradient_sum(double t) noexcept {
        if (t <= 0 || t >= 1) return 0;
        double const d = 0.5 * std::numbers::pi * ds(t);
        return d * d;
    }
    // max over t of |f'|, attained at t = 0.6326...; |g'| peaks at the mirror point. Solved numerically.
    static constexpr double max_slope() noexcept { return 1.9426506678894722; }
};

struct CutoffPair {
    double R = 0;

    double chi(double r) const noexcept { return CutoffProfile::f(r - R); }
    double eta(double r) const noexcept { return CutoffProfile::g(r - R); }
    double dchi(double r) const noexcept { return CutoffProfile::df(r - R); }
    double deta(double r) const noexcept { return CutoffProfile::dg(r - R); }
    // |grad chi|^2 + |grad eta|^2 at |x| = r
    double gradient_sum(double r) const noexcept { return CutoffProfile::gradient_sum(r - R); }
    // inside the transition layer 0 < chi < 1
    bool in_layer(double r) const noexcept { return r > R && r < R + 1; }
    double max_slope() const noexcept { return CutoffProfile::max_slope(); }
};

inline CutoffPair make_cutoff(double R) {
    if (!(R >= 0) || !std::isfinite(R)) throw domain_error("make_cutoff: R must be finite and >= 0");
    return CutoffPair{R};
}

namespace detail {

// A state seen as samples u_i at radii r_i = |x_i| with quadrature weights w_i.
struct RadialSamples {
    std::vector<double> r, w, u;

    double sum(auto&& f) const {
        double s = 0;
        for (std::size_t i = 0; i < r.size(); ++i) s += w[i] * f(r[i]) * u[i] * u[i];
        return s;
    }
    double mass() const { return sum([](double) { return 1.0; }); }
    double r_max() const { return r.empty() ? 0 : *std::max_element(r.begin(), r.end()); }
};

inline RadialSamples samples(RadialFunction const& u) {
    auto const& g = u.grid();
    return {{g.nodes().begin(), g.nodes().end()}, {g.weights().begin(), g.weights().end()},
            {u.values().begin(), u.values().end()}};
}

inline RadialSamples samples(Field3 const& u) {
    auto const& g = u.grid();
    RadialSamples s;
    s.r.resize(u.size());
    s.w.assign(u.size(), g.cell_volume());
    s.u.assign(u.values().begin(), u.values().end());
    for (std::size_t i = 0; i < u.size(); ++i) s.r[i] = g.radius(i);
    return s;
}

// Largest radius the state can resolve: r_max radially, the half edge on a box.
inline double domain_radius(RadialFunction const& u) { return u.grid().r_max(); }
inline double domain_radius(Field3 const& u) { return 0.5 * u.grid().edge(); }

inline double abs_rV(PotentialSpec const& V, double r) {
    if (V.is_none()) return 0;
    if (auto c = V.radial_coulomb()) return c->Z;
    if (V.is<RadialTablePotential>()) return std::abs(r * V.as<RadialTablePotential>()(r));
    return 0;
}

// 2 D(a, b) = int a (|x|^{-1} * b) for two radial densities.
inline double coulomb_pairing(RadialGrid const& g, std::span<const double> a, std::span<const double> b) {
    std::vector<double> phi(g.size());
    newton_potential(g, b, phi);
    auto const w = g.weights();
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) s += w[i] * a[i] * phi[i];
    return s;
}

inline double coulomb_pairing(BoxGrid const& g, std::span<const double> a, std::span<const double> b) {
    std::vector<double> phi(g.size());
    FreeSpacePoisson(g).solve(b, phi);
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) s += a[i] * phi[i];
    return g.cell_volume() * s;
}

inline RadialFunction multiply(RadialFunction const& u, auto&& f) {
    RadialFunction out(u.grid_ptr());
    auto const r = u.grid().nodes();
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(r[i]) * u[i];
    return out;
}

inline Field3 multiply(Field3 const& u, auto&& f) {
    Field3 out(u.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u.grid().radius(i)) * u[i];
    return out;
}

inline std::vector<double> potential_samples(RadialFunction const& u, PotentialSpec const& V) {
    if (!V.is_radial()) throw configuration_error("a radial state needs a radially symmetric potential");
    std::vector<double> v(u.size());
    auto const r = u.grid().nodes();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = V.radial_value(r[i]);
    return v;
}

inline std::vector<double> potential_samples(Field3 const& u, PotentialSpec const& V) {
    return sample_potential(u.grid_ptr(), V, default_smearing(u.grid())).data();
}

inline std::vector<double> square(std::span<const double> u) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * u[i];
    return out;
}

} // namespace detail

// [int |grad u|^2 - int |grad chi u|^2 - int |grad eta u|^2] + int (|grad chi|^2 + |grad eta|^2)|u|^2.
// Zero in the continuum; what remains is discretization error.
template <class U>
double ims_defect(U const& u, double R) {
    require_finite(u);
    auto const c = make_cutoff(R);
    auto const inner = detail::multiply(u, [&](double r) { return c.chi(r); });
    auto const outer = detail::multiply(u, [&](double r) { return c.eta(r); });
    double const layer = detail::samples(u).sum([&](double r) { return c.gradient_sum(r); });
    return (kinetic_density(u) - kinetic_density(inner) - kinetic_density(outer)) + layer;
}

// RMS of the IMS defect over `count` cut radii spread over [R, R (1 + spread)).
// A single defect depends on where the kinks of the profile fall between nodes
// (f'' jumps at t = 1, g'' at t = 0); the average shows the asymptotic order.
template <class U>
double ims_defect_rms(U const& u, double R, std::size_t count = 32, double spread = 0.05) {
    if (count == 0) throw domain_error("ims_defect_rms: count must be positive");
    double s = 0;
    for (std::size_t j = 0; j < count; ++j) {
        double const d = ims_defect(u, R * (1 + spread * double(j) / double(count)));
        s += d * d;
    }
    return std::sqrt(s / double(count));
}

// [-int V |eta u|^2 + C2 int_Omega |u|^2] - 2 D(|chi u|^2, |eta u|^2), Omega = {R < |x| < R + 1}.
template <class U>
double localization_gap(U const& u, PotentialSpec const& V, double R, Constants const& k) {
    require_finite(u);
    auto const c = make_cutoff(R);
    auto const s = detail::samples(u);
    auto const v = detail::potential_samples(u, V);
    double ext = 0, layer = 0;
    for (std::size_t i = 0; i < s.r.size(); ++i) {
        double const rho = s.u[i] * s.u[i];
        double const e = c.eta(s.r[i]);
        ext += s.w[i] * v[i] * e * e * rho;
        if (c.in_layer(s.r[i])) layer += s.w[i] * rho;
    }
    auto const inner = detail::square(detail::multiply(u, [&](double r) { return c.chi(r); }).values());
    auto const outer = detail::square(detail::multiply(u, [&](double r) { return c.eta(r); }).values());
    double const pairing = detail::coulomb_pairing(u.grid(), inner, outer);
    return (-ext + localization_constant_C2(k) * layer) - pairing;
}

// 12 int_{|x|>=R} (C3 + |x V(x)|)|u|^2 - (int_{|x|<=R} |u|^2)(int_{|y|>=2R} |u|^2). Needs R >= 1.
template <class U>
double annulus_residual(U const& u, PotentialSpec const& V, double R, Constants const& k) {
    if (!(R >= 1) || !std::isfinite(R)) throw domain_error("annulus_residual: R must be >= 1");
    require_finite(u);
    auto const s = detail::samples(u);
    double const C3 = annulus_constant_C3(k);
    double const tail = s.sum([&](double r) { return r >= R ? C3 + detail::abs_rV(V, r) : 0.0; });
    double const inside = s.sum([&](double r) { return r <= R ? 1.0 : 0.0; });
    double const far = s.sum([&](double r) { return r >= 2 * R ? 1.0 : 0.0; });
    return 12 * tail - inside * far;
}

// int |chi_R u|^2
template <class U>
double inner_mass(U const& u, double R) {
    double const shift = R; // R may be negative during the bisection below
    return detail::samples(u).sum([&](double r) {
        double const f = CutoffProfile::f(r - shift);
        return f * f;
    });
}

// R with int |chi_R u|^2 = int |eta_R u|^2 = m/2. R ranges over [-1, r_max]: the map is 0 at
// R = -1 and m at R = r_max, and a state concentrated within distance 1/2 of the origin has R < 0.
template <class U>
double radius_Rm(U const& u) {
    require_finite(u);
    auto const s = detail::samples(u);
    double const m = s.mass();
    if (!(m > 0)) throw domain_error("radius_Rm: the state has zero mass");
    double const top = detail::domain_radius(u);
    auto chi_mass = [&](double R) {
        return s.sum([&](double r) {
            double const f = CutoffProfile::f(r - R);
            return f * f;
        });
    };
    double lo = -1, hi = top;
    double const tol = 1e-8 * top;
    while (hi - lo > tol) {
        double const mid = 0.5 * (lo + hi);
        (chi_mass(mid) < 0.5 * m ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct SplitPoint {
    double r = 0;             // r_m
    double inner_mass = 0;    // a_m = int |chi_{r_m} u|^2
    double annulus_mass = 0;  // int_{r_m <= |x| <= r_m + 1} |u|^2
    double lo = 0, hi = 0;    // search interval [R_m m^{-1/2}, 2 R_m m^{-1/2}]
    double sup_abs_xV = 0;    // sup_{|x| >= r_m} |x V(x)|
};

// Radius in [R_m m^{-1/2}, 2 R_m m^{-1/2}] with the least unit-annulus mass, on 1025 candidates.
// Ties go to the smallest radius within 1e-12 of the minimum.
template <class U>
SplitPoint split_point(U const& u, PotentialSpec const& V) {
    require_finite(u);
    auto const s = detail::samples(u);
    double const m = s.mass();
    if (!(m > 0)) throw domain_error("split_point: the state has zero mass");
    double const Rm = radius_Rm(u);
    SplitPoint out;
    out.lo = std::max(0.0, Rm / std::sqrt(m));
    out.hi = std::min(2 * std::max(Rm, 0.0) / std::sqrt(m), detail::domain_radius(u) - 1);
    if (!(out.hi >= out.lo))
        throw domain_error("split_point: the search interval is empty (domain too small for this state)");

    // mass in [r, r + 1] from a sorted cumulative table
    std::vector<std::size_t> order(s.r.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.r[a] < s.r[b]; });
    std::vector<double> radii(order.size()), cum(order.size() + 1, 0.0);
    for (std::size_t j = 0; j < order.size(); ++j) {
        auto const i = order[j];
        radii[j] = s.r[i];
        cum[j + 1] = cum[j] + s.w[i] * s.u[i] * s.u[i];
    }
    auto upto = [&](double r, bool inclusive) {
        auto const it = inclusive ? std::upper_bound(radii.begin(), radii.end(), r)
                                  : std::lower_bound(radii.begin(), radii.end(), r);
        return cum[std::size_t(it - radii.begin())];
    };
    auto annulus = [&](double r) { return upto(r + 1, true) - upto(r, false); };

    constexpr std::size_t candidates = 1025;
    std::vector<double> rs(candidates), ms(candidates);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < candidates; ++j) {
        rs[j] = out.lo + (out.hi - out.lo) * double(j) / double(candidates - 1);
        ms[j] = annulus(rs[j]);
        best = std::min(best, ms[j]);
    }
    std::size_t pick = 0;
    while (ms[pick] > best + 1e-12) ++pick;
    out.r = rs[pick];
    out.annulus_mass = ms[pick];
    out.inner_mass = inner_mass(u, out.r);
    for (std::size_t i = 0; i < s.r.size(); ++i)
        if (s.r[i] >= out.r) out.sup_abs_xV = std::max(out.sup_abs_xV, detail::abs_rV(V, s.r[i]));
    return out;
}

struct ConcentrationEntry {
    double R = 0;
    double M = 0;     // M_R
    double center = 0; // distance of the maximizing centre from the origin
};

struct Concentration {
    std::vector<ConcentrationEntry> table;
    std::optional<double> threshold_radius; // smallest tabulated R with M_R > m^{2/3}
};

namespace detail {

// Fraction of the sphere |x| = r inside the ball of radius R centred at distance c.
inline double cap_fraction(double r, double c, double R) {
    if (c == 0 || r == 0) return std::max(r, c) <= R ? 1.0 : 0.0;
    if (r + c <= R) return 1;
    if (r >= c + R || r <= c - R) return 0;
    return std::clamp((R * R - (r - c) * (r - c)) / (4 * r * c), 0.0, 1.0);
}

inline double finish_threshold(Concentration& out, double m) {
    double const target = std::pow(m, 2.0 / 3.0);
    for (auto const& e : out.table)
        if (e.M > target) {
            out.threshold_radius = e.R;
            break;
        }
    return target;
}

} // namespace detail

// Ball masses maximized over centres on a ray (512 centres in [0, r_max]).
inline Concentration concentration(RadialFunction const& u, std::span<const double> radii) {
    require_finite(u);
    auto const s = detail::samples(u);
    double const top = u.grid().r_max();
    constexpr std::size_t centres = 512;
    Concentration out;
    for (double R : radii) {
        if (!(R >= 0)) throw domain_error("concentration: radii must be >= 0");
        ConcentrationEntry e{R, 0, 0};
        for (std::size_t j = 0; j < centres; ++j) {
            double const c = top * double(j) / double(centres - 1);
            double const M = s.sum([&](double r) { return detail::cap_fraction(r, c, R); });
            if (M > e.M) e = {R, M, c};
        }
        out.table.push_back(e);
    }
    detail::finish_threshold(out, s.mass());
    return out;
}

// Sliding-window ball sums on the box, by zero-padded FFT convolution.
inline Concentration concentration(Field3 const& u, std::span<const double> radii) {
    require_finite(u);
    auto const& g = u.grid();
    std::size_t const n = g.n(), N = 2 * n;
    double const h = g.spacing();
    RealFFT3 fu(N, N, N), fb(N, N, N);
    auto pad = [&](std::span<double> dst, auto&& value) {
        std::fill(dst.begin(), dst.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) dst[(i * N + j) * N + k] = value(i, j, k);
    };
    pad(fu.real(), [&](std::size_t i, std::size_t j, std::size_t k) {
        double const x = u[g.index(i, j, k)];
        return g.cell_volume() * x * x;
    });
    fu.forward();
    std::vector<std::complex<double>> rho_hat(fu.spectrum().begin(), fu.spectrum().end());

    Concentration out;
    for (double R : radii) {
        if (!(R >= 0)) throw domain_error("concentration: radii must be >= 0");
        // ball indicator at offsets d in (-n, n), wrapped
        auto ball = fb.real();
        std::fill(ball.begin(), ball.end(), 0.0);
        auto wrap = [&](std::ptrdiff_t d) { return std::size_t(d < 0 ? d + std::ptrdiff_t(N) : d); };
        auto const r_cells = std::ptrdiff_t(std::ceil(R / h));
        auto const lim = std::min<std::ptrdiff_t>(r_cells, std::ptrdiff_t(n) - 1);
        for (std::ptrdiff_t a = -lim; a <= lim; ++a)
            for (std::ptrdiff_t b = -lim; b <= lim; ++b)
                for (std::ptrdiff_t c = -lim; c <= lim; ++c)
                    if (h * h * double(a * a + b * b + c * c) <= R * R)
                        ball[(wrap(a) * N + wrap(b)) * N + wrap(c)] = 1;
        fb.forward();
        auto spec = fb.spectrum();
        for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= rho_hat[i];
        fb.backward();
        double const norm = 1.0 / double(N * N * N);
        ConcentrationEntry e{R, 0, 0};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    double const M = norm * fb.real()[(i * N + j) * N + k];
                    if (M > e.M) {
                        double const x = g.coordinate(i), y = g.coordinate(j), z = g.coordinate(k);
                        e = {R, M, std::sqrt(x * x + y * y + z * z)};
                    }
                }
        out.table.push_back(e);
    }
    detail::finish_threshold(out, mass(u));
    return out;
}

inline std::vector<double> default_concentration_radii(double top) {
    std::vector<double> radii;
    for (double R = 0.5; R <= top; R *= 2) radii.push_back(R);
    return radii;
}

struct EscapeRow {
    double r_max = 0;
    double energy = 0;
    double boundary_mass = 0;
    bool converged = false;
};

struct EscapeReport {
    std::vector<EscapeRow> rows;
    bool escape_suspected = false;
    bool energy_keeps_decreasing = false;
    bool boundary_mass_persists = false;
    double tolerance = 0;
    double mass = 0;

    std::string flag() const { return escape_suspected ? "escape-suspected" : "none"; }
};

namespace detail {

inline double domain_radius(State const& s) {
    return std::visit([](auto const& u) { return domain_radius(u); }, s);
}

} // namespace detail

// Results over nested domains at identical physics, sorted by increasing r_max. Flags
// "escape-suspected" when the energy drops by more than 3x tolerance at every enlargement
// and at least 1% of the mass sits at the boundary of the largest domain.
inline EscapeReport escape_indicator(std::span<const MinimizeResult> results) {
    if (results.size() < 2) throw configuration_error("escape_indicator needs at least two results");
    auto const& first = results.front();
    EscapeReport rep;
    rep.mass = first.target_mass;
    for (auto const& r : results) {
        if (!(r.potential == first.potential) || !(r.constants == first.constants) ||
            r.target_mass != first.target_mass)
            throw configuration_error("escape_indicator: results differ in potential, constants or mass");
        rep.rows.push_back({detail::domain_radius(r.u), r.energy(), r.boundary_mass, r.converged});
        rep.tolerance = std::max(rep.tolerance, r.tolerance);
    }
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].r_max > rep.rows[i - 1].r_max))
            throw configuration_error("escape_indicator: domains must be strictly increasing");
    rep.energy_keeps_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].energy < rep.rows[i - 1].energy - 3 * rep.tolerance)) rep.energy_keeps_decreasing = false;
    rep.boundary_mass_persists = rep.rows.back().boundary_mass >= 0.01 * rep.mass;
    rep.escape_suspected = rep.energy_keeps_decreasing && rep.boundary_mass_persists;
    return rep;
}

struct LemmaCheck {
    double R = 0;
    double gap = 0;      // localization estimate, RHS - LHS
    double annulus = 0;  // annulus estimate, RHS - LHS; NaN when R < 1
    double ims = 0;      // IMS defect
};

struct LocalizationReport {
    double mass = 0;
    double R_m = 0;
    SplitPoint split;
    double inner_mass = 0; // int |chi_{R_m} u|^2
    double outer_mass = 0; // int |eta_{R_m} u|^2
    double boundary_mass = 0;
    double potential_moment = 0; // int |V| |u|^2, reported raw
    bool split_available = false;
    std::string split_note;
    std::vector<LemmaCheck> lemmas;
    Concentration concentration;
};

template <class U>
LocalizationReport diagnose(U const& u, PotentialSpec const& V, Constants const& k,
                            std::span<const double> lemma_radii, std::span<const double> concentration_radii,
                            double boundary_mass = 0) {
    require_finite(u);
    LocalizationReport rep;
    auto const s = detail::samples(u);
    rep.mass = s.mass();
    rep.boundary_mass = boundary_mass;
    rep.R_m = radius_Rm(u);
    rep.inner_mass = inner_mass(u, rep.R_m);
    rep.outer_mass = rep.mass - rep.inner_mass;
    try {
        rep.split = split_point(u, V);
        rep.split_available = true;
    } catch (domain_error const& e) {
        rep.split_note = e.what();
    }
    auto const v = detail::potential_samples(u, V);
    for (std::size_t i = 0; i < s.r.size(); ++i) rep.potential_moment += s.w[i] * std::abs(v[i]) * s.u[i] * s.u[i];
    for (double R : lemma_radii) {
        LemmaCheck c;
        c.R = R;
        c.gap = localization_gap(u, V, R, k);
        c.annulus = R >= 1 ? annulus_residual(u, V, R, k) : std::numeric_limits<double>::quiet_NaN();
        c.ims = ims_defect(u, R);
        rep.lemmas.push_back(c);
    }
    rep.concentration = concentration(u, concentration_radii);
    return rep;
}

inline LocalizationReport diagnose(MinimizeResult const& res, std::span<const double> lemma_radii,
                                   std::span<const double> concentration_radii) {
    return std::visit(
        [&](auto const& u) {
            return diagnose(u, res.potential, res.constants, lemma_radii, concentration_radii, res.boundary_mass);
        },
        res.u);
}

} // namespace tfdw
