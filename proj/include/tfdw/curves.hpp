#pragma once
// Energy curves m -> I_V(m) and the checks built on them: the binding inequality,
// the gap between the free and the bound curve, and the small-mass slope.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tfdw/constants.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/io.hpp"
#include "tfdw/minimize.hpp"
#include "tfdw/potential.hpp"

namespace tfdw {

struct CurveSample {
    double m = 0;
    double energy = 0;
    double residual = 0;
    bool converged = false;
    double kinetic = 0;       // int |grad u|^2 of the minimizer
    double boundary_mass = 0;
    double multiplier = 0;
    std::size_t iterations = 0;
    double r_max = 0;         // domain the sample was computed on
    double R_m = 0;           // half-mass radius of the minimizer

    bool operator==(CurveSample const&) const = default;
};

struct EnergyCurve {
    PotentialSpec potential;
    Constants constants;
    SolveConfig solve;   // mass field unused
    double domain_scale = 0;
    std::vector<CurveSample> samples;

    // V = None is computed within the radial ansatz and is only an upper bound for I_0.
    std::string label() const { return potential.is_none() ? "I0_radial" : "I_V"; }
    std::string hash() const { return physics_hash(potential, constants, solve); }

    // Exact sample lookup; the zero-mass value is 0 by convention.
    std::optional<double> find(double m) const {
        if (m == 0) return 0.0;
        for (auto const& s : samples)
            if (s.m == m || std::abs(s.m - m) <= 1e-12 * std::max(std::abs(s.m), std::abs(m))) return s.energy;
        return std::nullopt;
    }
    double at(double m) const {
        auto v = find(m);
        if (!v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", m);
            throw lookup_error(label() + " has no sample at m = " + buf);
        }
        return *v;
    }
    CurveSample const* sample(double m) const {
        for (auto const& s : samples)
            if (s.m == m || std::abs(s.m - m) <= 1e-12 * std::max(std::abs(s.m), std::abs(m))) return &s;
        return nullptr;
    }
};

struct CurveOptions {
    bool warm_start = true;
    std::size_t jobs = 1; // used only for cold starts
    // > 0: r_max = max(grid r_max, domain_scale * m^{-1/3}) at each m (small-mass sweeps)
    double domain_scale = 0;
    // samples already computed (resume); reused when their m matches
    std::vector<CurveSample> existing{};
    // called after every new sample, from the thread that computed it
    std::function<void(CurveSample const&)> on_sample{};
};

namespace detail {

inline SolveConfig config_at(SolveConfig cfg, double m, double domain_scale) {
    cfg.mass = m;
    if (domain_scale > 0) cfg.grid.r_max = std::max(cfg.grid.r_max, domain_scale / std::cbrt(m));
    return cfg;
}

inline CurveSample to_sample(MinimizeResult const& r, Constants const& k) {
    CurveSample s;
    s.m = r.target_mass;
    s.energy = r.energy();
    s.residual = r.residual;
    s.converged = r.converged;
    s.kinetic = r.breakdown.weizsacker / k.c_w;
    s.boundary_mass = r.boundary_mass;
    s.multiplier = r.lagrange_multiplier;
    s.iterations = r.iterations;
    s.r_max = is_radial(r.u) ? r.radial().grid().r_max() : 0.5 * r.field().grid().edge();
    s.R_m = std::visit([](auto const& u) { return radius_Rm(u); }, r.u);
    return s;
}

// Warm start for mass m from a minimizer at mass m_prev: spread by (m/m_prev)^{1/3}.
inline State warm_state(State const& prev, double m_prev, double m) {
    double const ell = std::cbrt(m_prev / m);
    return std::visit(
        [&](auto const& u) -> State {
            auto v = dilate(u, ell);
            v *= std::sqrt(m / m_prev);
            return v;
        },
        prev);
}

inline std::string mass_context(double m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "at m = %.17g: ", m);
    return buf;
}

// Rethrow e with m in the message, keeping its type.
[[noreturn]] inline void rethrow_at(double m) {
    auto const ctx = mass_context(m);
    try {
        throw;
    } catch (solver_failure const& e) {
        throw solver_failure(ctx + e.what());
    } catch (domain_error const& e) {
        throw domain_error(ctx + e.what());
    } catch (configuration_error const& e) {
        throw configuration_error(ctx + e.what());
    } catch (error const& e) {
        throw error(ctx + e.what());
    }
}

} // namespace detail

// One solve per m. Warm-started sweeps run in increasing m, each seeded by the
// previous minimizer; cold starts may run in parallel.
inline EnergyCurve compute_curve(PotentialSpec const& V, std::vector<double> m_values, SolveConfig const& cfg,
                                 Constants const& k, CurveOptions const& opt = {}) {
    for (std::size_t i = 0; i < m_values.size(); ++i) {
        if (!(m_values[i] > 0) || !std::isfinite(m_values[i]))
            throw configuration_error("compute_curve: masses must be positive");
        if (i > 0 && !(m_values[i] > m_values[i - 1]))
            throw configuration_error("compute_curve: masses must be strictly increasing");
    }
    V.validate();
    k.validate();
    EnergyCurve curve;
    curve.potential = V;
    curve.constants = k;
    curve.solve = cfg;
    curve.solve.mass = 1;
    curve.domain_scale = opt.domain_scale;
    curve.samples.resize(m_values.size());

    auto reuse = [&](double m) -> CurveSample const* {
        for (auto const& s : opt.existing)
            if (s.m == m) return &s;
        return nullptr;
    };

    if (opt.warm_start || opt.jobs <= 1) {
        std::optional<State> prev;
        double m_prev = 0;
        for (std::size_t i = 0; i < m_values.size(); ++i) {
            double const m = m_values[i];
            if (auto const* s = reuse(m)) {
                curve.samples[i] = *s;
                prev.reset(); // the stored sample has no state; next point starts cold
                continue;
            }
            try {
                std::optional<State> init;
                if (opt.warm_start && prev) init = detail::warm_state(*prev, m_prev, m);
                auto r = minimize_mass_constrained(V, detail::config_at(cfg, m, opt.domain_scale), k, init);
                curve.samples[i] = detail::to_sample(r, k);
                prev = std::move(r.u);
                m_prev = m;
            } catch (error const&) {
                detail::rethrow_at(m);
            }
            if (opt.on_sample) opt.on_sample(curve.samples[i]);
        }
        return curve;
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_index = m_values.size();
    auto worker = [&] {
        for (;;) {
            std::size_t const i = next.fetch_add(1);
            if (i >= m_values.size()) return;
            double const m = m_values[i];
            try {
                if (auto const* s = reuse(m)) {
                    curve.samples[i] = *s;
                    continue;
                }
                try {
                    auto r = minimize_mass_constrained(V, detail::config_at(cfg, m, opt.domain_scale), k);
                    curve.samples[i] = detail::to_sample(r, k);
                } catch (error const&) {
                    detail::rethrow_at(m);
                }
                if (opt.on_sample) {
                    std::lock_guard lock(err_mutex);
                    opt.on_sample(curve.samples[i]);
                }
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    std::size_t const n = std::min(opt.jobs, m_values.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return curve;
}

// ----------------------------------------------------------------------------

struct BindingResidual {
    double m = 0, m_prime = 0;
    double bound_part = 0; // I_V(m')
    double free_part = 0;  // I0(m - m')
    double whole = 0;      // I_V(m)
    double residual = 0;   // [I_V(m') + I0(m - m')] - I_V(m)
};

inline void require_same_constants(EnergyCurve const& a, EnergyCurve const& b) {
    if (!(a.constants == b.constants)) throw configuration_error("curves were computed with different constants");
}

// No interpolation: every value must be a sample (or the zero-mass convention).
inline std::vector<BindingResidual> binding_check(EnergyCurve const& curve_V, EnergyCurve const& curve_0,
                                                  std::span<const std::pair<double, double>> pairs) {
    require_same_constants(curve_V, curve_0);
    if (!curve_0.potential.is_none()) throw configuration_error("binding_check: the second curve must have V = None");
    std::vector<BindingResidual> out;
    for (auto const& [m, mp] : pairs) {
        if (!(mp >= 0 && mp <= m)) throw domain_error("binding_check: need 0 <= m' <= m");
        BindingResidual b;
        b.m = m;
        b.m_prime = mp;
        b.bound_part = curve_V.at(mp);
        b.free_part = curve_0.at(m - mp);
        b.whole = curve_V.at(m);
        b.residual = (b.bound_part + b.free_part) - b.whole;
        out.push_back(b);
    }
    return out;
}

// Every pair (m, m') with m, m', m - m' all on the curves' sample grids (m' = 0 and m' = m included).
inline std::vector<std::pair<double, double>> split_pairs(EnergyCurve const& curve_V, EnergyCurve const& curve_0) {
    std::vector<std::pair<double, double>> pairs;
    for (auto const& s : curve_V.samples) {
        pairs.emplace_back(s.m, 0.0);
        for (auto const& t : curve_V.samples)
            if (t.m < s.m && curve_0.find(s.m - t.m)) pairs.emplace_back(s.m, t.m);
        pairs.emplace_back(s.m, s.m);
    }
    return pairs;
}

struct GapRow {
    double m = 0;
    double gap = 0;            // I0(m) - I_V(m)
    double normalized_gap = 0; // gap / (Z 2 sqrt(m T_V(m)))
};

inline std::vector<GapRow> gap_curve(EnergyCurve const& curve_V, EnergyCurve const& curve_0) {
    require_same_constants(curve_V, curve_0);
    double const Z = curve_V.potential.total_charge();
    if (!(Z > 0)) throw domain_error("gap_curve: needs a potential with total charge Z > 0");
    std::vector<GapRow> out;
    out.push_back({0, 0, 0});
    for (auto const& s : curve_V.samples) {
        auto const free = curve_0.find(s.m);
        if (!free) continue;
        GapRow r;
        r.m = s.m;
        r.gap = *free - s.energy;
        double const scale = Z * 2 * std::sqrt(s.m * s.kinetic);
        r.normalized_gap = scale > 0 ? r.gap / scale : 0;
        out.push_back(r);
    }
    return out;
}

struct SlopeRow {
    double m = 0;
    double ratio = 0;     // I0(m) / m^{5/3}
    double limit = 0;     // -(c_D^2 / (4 c_W)) S
    double deviation = 0; // |ratio - limit| / |limit|
    double per_mass = 0;  // I0(m) / m
};

inline std::vector<SlopeRow> small_m_slope(EnergyCurve const& curve_0, double S, Constants const& k) {
    double const limit = -(k.c_d * k.c_d / (4 * k.c_w)) * S;
    std::vector<SlopeRow> out;
    for (auto const& s : curve_0.samples) {
        SlopeRow r;
        r.m = s.m;
        r.ratio = s.energy / std::pow(s.m, 5.0 / 3.0);
        r.limit = limit;
        r.deviation = limit != 0 ? std::abs(r.ratio - limit) / std::abs(limit) : 0;
        r.per_mass = s.energy / s.m;
        out.push_back(r);
    }
    return out;
}

// ----------------------------------------------------------------------------
// export / import

inline std::string curve_csv(EnergyCurve const& c) {
    std::string out = "m,energy,residual,converged\n";
    char buf[128];
    for (auto const& s : c.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", s.m, s.energy, s.residual, s.converged ? 1 : 0);
        out += buf;
    }
    return out;
}

inline json to_json(CurveSample const& s) {
    return {{"m", s.m},
            {"energy", s.energy},
            {"residual", s.residual},
            {"converged", s.converged},
            {"kinetic", s.kinetic},
            {"boundary_mass", s.boundary_mass},
            {"multiplier", s.multiplier},
            {"iterations", s.iterations},
            {"r_max", s.r_max},
            {"R_m", s.R_m}};
}

inline CurveSample curve_sample_from_json(json const& j) {
    io::allow_keys(j, "sample",
                   {"m", "energy", "residual", "converged", "kinetic", "boundary_mass", "multiplier", "iterations",
                    "r_max", "R_m"});
    CurveSample s;
    s.m = io::require<double>(j, "sample", "m");
    s.energy = io::require<double>(j, "sample", "energy");
    s.residual = io::require<double>(j, "sample", "residual");
    s.converged = io::require<bool>(j, "sample", "converged");
    io::get_to(j, "sample", "kinetic", s.kinetic);
    io::get_to(j, "sample", "boundary_mass", s.boundary_mass);
    io::get_to(j, "sample", "multiplier", s.multiplier);
    io::get_to(j, "sample", "iterations", s.iterations);
    io::get_to(j, "sample", "r_max", s.r_max);
    io::get_to(j, "sample", "R_m", s.R_m);
    return s;
}

inline json to_json(EnergyCurve const& c) {
    json samples = json::array();
    for (auto const& s : c.samples) samples.push_back(to_json(s));
    return {{"label", c.label()},
            {"hash", c.hash()},
            {"potential", to_json(c.potential)},
            {"constants", to_json(c.constants)},
            {"solve", to_json(c.solve)},
            {"domain_scale", c.domain_scale},
            {"samples", samples}};
}

inline EnergyCurve curve_from_json(json const& j) {
    try {
        io::allow_keys(j, "curve", {"label", "hash", "potential", "constants", "solve", "domain_scale", "samples"});
        EnergyCurve c;
        c.potential = potential_from_json(j.at("potential"));
        c.constants = constants_from_json(j.at("constants"));
        c.solve = solve_config_from_json(j.at("solve"));
        io::get_to(j, "curve", "domain_scale", c.domain_scale);
        for (auto const& s : j.at("samples")) c.samples.push_back(curve_sample_from_json(s));
        for (std::size_t i = 1; i < c.samples.size(); ++i)
            if (!(c.samples[i].m > c.samples[i - 1].m)) throw configuration_error("curve: masses must increase");
        if (j.contains("hash") && j["hash"] != c.hash())
            throw configuration_error("curve: stored hash does not match its contents");
        return c;
    } catch (json::exception const& e) {
        throw io_error(std::string("malformed curve document: ") + e.what());
    }
}

enum class ExportFormat { csv, json };

inline void export_curve(EnergyCurve const& c, std::filesystem::path const& path, ExportFormat f) {
    if (f == ExportFormat::csv) io::write_text_atomic(path, curve_csv(c));
    else io::write_json(path, to_json(c));
}

inline EnergyCurve import_curve(std::filesystem::path const& path) {
    try {
        return curve_from_json(io::read_json(path));
    } catch (error const& e) {
        throw io_error("'" + path.string() + "': " + e.what());
    }
}

inline void export_report(LocalizationReport const& r, std::filesystem::path const& path, ExportFormat f) {
    if (f == ExportFormat::csv) io::write_text_atomic(path, concentration_csv(r.concentration));
    else io::write_json(path, to_json(r));
}

// <stem>-<label>-<hash>.<ext>
inline std::string curve_filename(EnergyCurve const& c, std::string_view stem, std::string_view ext) {
    return std::string(stem) + "-" + c.label() + "-" + c.hash() + "." + std::string(ext);
}

} // namespace tfdw
