#pragma once
// The run configuration of the command-line tool: one JSON document, parsed
// strictly, with dotted-path overrides ("solve.grid.n=4000").

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tfdw/constants.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/io.hpp"
#include "tfdw/minimize.hpp"
#include "tfdw/potential.hpp"

namespace tfdw {

struct CurveParams {
    std::vector<double> masses{0.25, 0.5, 1, 2, 4};
    bool warm_start = true;
    std::size_t jobs = 1;
    double domain_scale = 0;
};

struct BindingParams {
    std::string curve_V;
    std::string curve_0;
    std::vector<std::pair<double, double>> pairs; // empty: every split available on the grids
};

struct DiagnoseParams {
    std::string state;                  // empty: minimize first
    std::vector<double> radii{1, 2, 4, 8};
    std::vector<double> concentration_radii; // empty: 0.5, 1, 2, ... up to the domain radius
    std::vector<double> escape_domains;      // r_max values for the escape check; empty: skipped
};

struct AsymptoticsParams {
    std::vector<double> masses{0.1, 0.01, 0.001};
    double domain_scale = 60;
};

struct RunConfig {
    Constants constants{};
    PotentialSpec potential{};
    SolveConfig solve{};
    std::string output_dir = "tfdw-out";
    std::uint64_t seed = 20240611;
    std::string state; // input state for `energy`
    CurveParams curve{};
    BindingParams binding{};
    DiagnoseParams diagnose{};
    AsymptoticsParams asymptotics{};

    void validate() const {
        constants.validate();
        // toggles are for oracle tests only; the tool always evaluates the full functional
        if (!constants.toggles.all_enabled())
            throw configuration_error("constants.toggles: every term must be enabled in tool runs");
        potential.validate();
        solve.validate();
        (void)solve.grid.make();
        if (!potential.is_radial()) (void)solve.box.make();
        if (output_dir.empty()) throw configuration_error("output_dir must not be empty");
        auto require_increasing = [](std::vector<double> const& v, char const* what) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!(v[i] > 0) || !std::isfinite(v[i]))
                    throw configuration_error(std::string(what) + ": values must be positive");
                if (i > 0 && !(v[i] > v[i - 1]))
                    throw configuration_error(std::string(what) + ": values must be strictly increasing");
            }
        };
        require_increasing(curve.masses, "curve.masses");
        if (curve.jobs == 0) throw configuration_error("curve.jobs must be >= 1");
        if (curve.domain_scale < 0) throw configuration_error("curve.domain_scale must be >= 0");
        for (auto const& [m, mp] : binding.pairs)
            if (!(mp >= 0 && mp <= m)) throw configuration_error("binding.pairs: need 0 <= m' <= m");
        require_increasing(diagnose.radii, "diagnose.radii");
        require_increasing(diagnose.concentration_radii, "diagnose.concentration_radii");
        require_increasing(diagnose.escape_domains, "diagnose.escape_domains");
        std::vector<double> as = asymptotics.masses;
        std::sort(as.begin(), as.end());
        require_increasing(as, "asymptotics.masses");
        if (asymptotics.domain_scale < 0) throw configuration_error("asymptotics.domain_scale must be >= 0");
    }
};

inline json to_json(RunConfig const& c) {
    json pairs = json::array();
    for (auto const& [m, mp] : c.binding.pairs) pairs.push_back({m, mp});
    return {{"constants", to_json(c.constants)},
            {"potential", to_json(c.potential)},
            {"solve", to_json(c.solve)},
            {"output_dir", c.output_dir},
            {"seed", c.seed},
            {"state", c.state},
            {"curve",
             {{"masses", c.curve.masses},
              {"warm_start", c.curve.warm_start},
              {"jobs", c.curve.jobs},
              {"domain_scale", c.curve.domain_scale}}},
            {"binding", {{"curve_V", c.binding.curve_V}, {"curve_0", c.binding.curve_0}, {"pairs", pairs}}},
            {"diagnose",
             {{"state", c.diagnose.state},
              {"radii", c.diagnose.radii},
              {"concentration_radii", c.diagnose.concentration_radii},
              {"escape_domains", c.diagnose.escape_domains}}},
            {"asymptotics", {{"masses", c.asymptotics.masses}, {"domain_scale", c.asymptotics.domain_scale}}}};
}

inline RunConfig run_config_from_json(json const& j) {
    char const* what = "config";
    io::allow_keys(j, what,
                   {"constants", "potential", "solve", "output_dir", "seed", "state", "curve", "binding", "diagnose",
                    "asymptotics"});
    RunConfig c;
    try {
        if (j.contains("constants")) c.constants = constants_from_json(j["constants"]);
        if (j.contains("potential")) c.potential = potential_from_json(j["potential"]);
        if (j.contains("solve")) c.solve = solve_config_from_json(j["solve"]);
        io::get_to(j, what, "output_dir", c.output_dir);
        io::get_to(j, what, "seed", c.seed);
        io::get_to(j, what, "state", c.state);
        if (j.contains("curve")) {
            auto const& s = j["curve"];
            io::allow_keys(s, "curve", {"masses", "warm_start", "jobs", "domain_scale"});
            io::get_to(s, "curve", "masses", c.curve.masses);
            io::get_to(s, "curve", "warm_start", c.curve.warm_start);
            io::get_to(s, "curve", "jobs", c.curve.jobs);
            io::get_to(s, "curve", "domain_scale", c.curve.domain_scale);
        }
        if (j.contains("binding")) {
            auto const& s = j["binding"];
            io::allow_keys(s, "binding", {"curve_V", "curve_0", "pairs"});
            io::get_to(s, "binding", "curve_V", c.binding.curve_V);
            io::get_to(s, "binding", "curve_0", c.binding.curve_0);
            if (s.contains("pairs")) {
                std::vector<std::array<double, 2>> raw;
                io::get_to(s, "binding", "pairs", raw);
                for (auto const& p : raw) c.binding.pairs.emplace_back(p[0], p[1]);
            }
        }
        if (j.contains("diagnose")) {
            auto const& s = j["diagnose"];
            io::allow_keys(s, "diagnose", {"state", "radii", "concentration_radii", "escape_domains"});
            io::get_to(s, "diagnose", "state", c.diagnose.state);
            io::get_to(s, "diagnose", "radii", c.diagnose.radii);
            io::get_to(s, "diagnose", "concentration_radii", c.diagnose.concentration_radii);
            io::get_to(s, "diagnose", "escape_domains", c.diagnose.escape_domains);
        }
        if (j.contains("asymptotics")) {
            auto const& s = j["asymptotics"];
            io::allow_keys(s, "asymptotics", {"masses", "domain_scale"});
            io::get_to(s, "asymptotics", "masses", c.asymptotics.masses);
            io::get_to(s, "asymptotics", "domain_scale", c.asymptotics.domain_scale);
        }
    } catch (domain_error const& e) {
        throw configuration_error(e.what());
    }
    c.validate();
    return c;
}

// Value text of an override: JSON if it parses as JSON, a plain string otherwise.
inline json override_value(std::string_view text) {
    auto parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) return json(std::string(text));
    return parsed;
}

// Apply "a.b.c=value" to a configuration document, creating intermediate objects.
// Keys are not checked here; strict parsing afterwards rejects unknown ones.
inline void apply_override(json& doc, std::string_view assignment) {
    auto const eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw configuration_error("override '" + std::string(assignment) + "' is not of the form key=value");
    std::string_view const path = assignment.substr(0, eq);
    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        auto const dot = path.find('.', start);
        std::string const key(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
        if (key.empty()) throw configuration_error("override '" + std::string(assignment) + "' has an empty key");
        if (!node->is_object()) {
            if (!node->is_null())
                throw configuration_error("override '" + std::string(assignment) + "' descends into a non-object");
            *node = json::object();
        }
        if (dot == std::string_view::npos) {
            (*node)[key] = override_value(assignment.substr(eq + 1));
            return;
        }
        auto& child = (*node)[key];
        // a preset string for constants becomes an object with that preset
        if (child.is_string() && key == "constants") child = json{{"preset", child.get<std::string>()}};
        node = &child;
        start = dot + 1;
    }
}

// Load (or default), apply overrides, then TFDW_OUT, then parse strictly.
inline RunConfig load_run_config(std::filesystem::path const& path, std::vector<std::string> const& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        try {
            doc = io::read_json(path);
        } catch (io_error const& e) {
            throw configuration_error(e.what());
        }
    }
    for (auto const& o : overrides) apply_override(doc, o);
    if (char const* out = std::getenv("TFDW_OUT"); out && *out) doc["output_dir"] = out;
    return run_config_from_json(doc);
}

// Hash of the physics and discretization of a run.
inline std::string config_hash(RunConfig const& c) { return physics_hash(c.potential, c.constants, c.solve); }

} // namespace tfdw
