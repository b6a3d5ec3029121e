#pragma once
// JSON mappings, state files and atomic file output.
//
// Radial state file:
//   {"grid": {"kind", "r_min", "r_max", "n"}, "values": [...], "meta": {...}}
// 3D state file:
//   {"grid": {"L", "n"}, "encoding": "row-major", "dtype": "float64", "byte_order": "little",
//    "payload": "base64", "data": "<n^3 doubles, index (i*n + j)*n + k>", "meta": {...}}
//
// Every configuration object is parsed strictly: unknown keys are errors.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <unistd.h>

#include "json.hpp"

#include "tfdw/cartesian.hpp"
#include "tfdw/constants.hpp"
#include "tfdw/diagnostics.hpp"
#include "tfdw/energy_breakdown.hpp"
#include "tfdw/errors.hpp"
#include "tfdw/minimize.hpp"
#include "tfdw/potential.hpp"
#include "tfdw/radial.hpp"

namespace tfdw {

using json = nlohmann::json;

namespace io {

// ----------------------------------------------------------------------------
// files

inline std::string read_text(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("error while reading '" + path.string() + "'");
    return ss.str();
}

// Write to a sibling temporary, then rename over the target.
inline void write_text_atomic(std::filesystem::path const& path, std::string_view content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw io_error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            throw io_error("error while writing '" + path.string() + "'");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignore;
        fs::remove(tmp, ignore);
        throw io_error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

inline json read_json(std::filesystem::path const& path) {
    auto const text = read_text(path);
    try {
        return json::parse(text);
    } catch (json::parse_error const& e) {
        throw io_error("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

inline void write_json(std::filesystem::path const& path, json const& j) { write_text_atomic(path, j.dump(2) + "\n"); }

// ----------------------------------------------------------------------------
// hashing

// 64-bit FNV-1a
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Hash of the compact dump; object keys are sorted, so equal documents hash equally.
inline std::string hash_hex(json const& j) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

// ----------------------------------------------------------------------------
// base64 (RFC 4648, padded)

inline std::string base64_encode(std::span<const unsigned char> bytes) {
    static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        std::uint32_t const v = (std::uint32_t(bytes[i]) << 16) | (std::uint32_t(bytes[i + 1]) << 8) | bytes[i + 2];
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += table[(v >> 6) & 63];
        out += table[v & 63];
    }
    if (i < bytes.size()) {
        std::uint32_t v = std::uint32_t(bytes[i]) << 16;
        if (i + 1 < bytes.size()) v |= std::uint32_t(bytes[i + 1]) << 8;
        out += table[(v >> 18) & 63];
        out += table[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? table[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

inline std::vector<unsigned char> base64_decode(std::string_view s) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (s.size() % 4 != 0) throw io_error("base64 payload length is not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            char const c = s[i + std::size_t(k)];
            if (c == '=' && i + 4 == s.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else if (pad > 0 || (v[k] = value(c)) < 0) {
                throw io_error("invalid base64 payload");
            }
        }
        std::uint32_t const x = (std::uint32_t(v[0]) << 18) | (std::uint32_t(v[1]) << 12) |
                                (std::uint32_t(v[2]) << 6) | std::uint32_t(v[3]);
        out.push_back((x >> 16) & 255);
        if (pad < 2) out.push_back((x >> 8) & 255);
        if (pad < 1) out.push_back(x & 255);
    }
    return out;
}

// ----------------------------------------------------------------------------
// strict reading helpers

inline void require_object(json const& j, std::string_view what) {
    if (!j.is_object()) throw configuration_error(std::string(what) + ": expected a JSON object");
}

inline void allow_keys(json const& j, std::string_view what, std::initializer_list<std::string_view> keys) {
    require_object(j, what);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (auto k : keys) known = known || it.key() == k;
        if (!known) throw configuration_error(std::string(what) + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
void get_to(json const& j, std::string_view what, char const* key, T& out) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (json::exception const&) {
        throw configuration_error(std::string(what) + ": key '" + key + "' has the wrong type");
    }
}

template <class T>
T require(json const& j, std::string_view what, char const* key) {
    if (!j.contains(key)) throw configuration_error(std::string(what) + ": missing key '" + key + "'");
    T out{};
    get_to(j, what, key, out);
    return out;
}

} // namespace io

// ----------------------------------------------------------------------------
// value types

inline json to_json(TermToggles const& t) {
    return {{"thomas_fermi", t.thomas_fermi}, {"dirac", t.dirac}, {"hartree", t.hartree}, {"external", t.external}};
}

inline TermToggles toggles_from_json(json const& j) {
    io::allow_keys(j, "toggles", {"thomas_fermi", "dirac", "hartree", "external"});
    TermToggles t;
    io::get_to(j, "toggles", "thomas_fermi", t.thomas_fermi);
    io::get_to(j, "toggles", "dirac", t.dirac);
    io::get_to(j, "toggles", "hartree", t.hartree);
    io::get_to(j, "toggles", "external", t.external);
    return t;
}

inline json to_json(Constants const& k) {
    return {{"c_tf", k.c_tf}, {"c_d", k.c_d}, {"c_w", k.c_w}, {"toggles", to_json(k.toggles)}};
}

// Either a preset name or an object; a preset may be combined with explicit overrides.
inline Constants constants_from_json(json const& j) {
    if (j.is_string()) return Constants::preset(j.get<std::string>());
    io::allow_keys(j, "constants", {"preset", "c_tf", "c_d", "c_w", "toggles"});
    Constants k = j.contains("preset") ? Constants::preset(io::require<std::string>(j, "constants", "preset"))
                                       : Constants{};
    io::get_to(j, "constants", "c_tf", k.c_tf);
    io::get_to(j, "constants", "c_d", k.c_d);
    io::get_to(j, "constants", "c_w", k.c_w);
    if (j.contains("toggles")) k.toggles = toggles_from_json(j["toggles"]);
    k.validate();
    return k;
}

inline json to_json(PotentialSpec const& V) {
    return std::visit(
        [](auto const& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, NoPotential>) return {{"kind", "none"}};
            else if constexpr (std::is_same_v<T, AtomicPotential>) return {{"kind", "atomic"}, {"Z", p.Z}};
            else if constexpr (std::is_same_v<T, MolecularPotential>) {
                json nuclei = json::array();
                for (auto const& n : p.nuclei) nuclei.push_back({{"Z", n.Z}, {"position", n.position}});
                return {{"kind", "molecular"}, {"nuclei", nuclei}};
            } else return {{"kind", "radial_table"}, {"r", p.r}, {"V", p.V}};
        },
        V.value());
}

inline PotentialSpec potential_from_json(json const& j) {
    io::require_object(j, "potential");
    auto const kind = io::require<std::string>(j, "potential", "kind");
    if (kind == "none") {
        io::allow_keys(j, "potential", {"kind"});
        return PotentialSpec::none();
    }
    if (kind == "atomic") {
        io::allow_keys(j, "potential", {"kind", "Z"});
        return PotentialSpec::atomic(io::require<double>(j, "potential", "Z"));
    }
    if (kind == "molecular") {
        io::allow_keys(j, "potential", {"kind", "nuclei"});
        auto const& arr = j.at("nuclei");
        if (!arr.is_array()) throw configuration_error("potential: 'nuclei' must be an array");
        std::vector<Nucleus> nuclei;
        for (auto const& n : arr) {
            io::allow_keys(n, "nucleus", {"Z", "position"});
            nuclei.push_back({io::require<double>(n, "nucleus", "Z"),
                              io::require<std::array<double, 3>>(n, "nucleus", "position")});
        }
        return PotentialSpec::molecular(std::move(nuclei));
    }
    if (kind == "radial_table") {
        io::allow_keys(j, "potential", {"kind", "r", "V"});
        return PotentialSpec::radial_table(io::require<std::vector<double>>(j, "potential", "r"),
                                           io::require<std::vector<double>>(j, "potential", "V"));
    }
    throw configuration_error("potential: unknown kind '" + kind + "'");
}

inline json to_json(RadialGridSpec const& g) {
    return {{"kind", std::string(to_string(g.kind))}, {"r_min", g.r_min}, {"r_max", g.r_max}, {"n", g.n},
            {"outer", std::string(to_string(g.outer))}};
}

inline RadialGridSpec radial_grid_from_json(json const& j) {
    io::allow_keys(j, "grid", {"kind", "r_min", "r_max", "n", "outer"});
    RadialGridSpec g;
    if (j.contains("kind")) g.kind = grid_kind_from_string(io::require<std::string>(j, "grid", "kind"));
    io::get_to(j, "grid", "r_min", g.r_min);
    io::get_to(j, "grid", "r_max", g.r_max);
    io::get_to(j, "grid", "n", g.n);
    if (j.contains("outer")) g.outer = outer_boundary_from_string(io::require<std::string>(j, "grid", "outer"));
    return g;
}

inline json to_json(BoxSpec const& b) { return {{"L", b.L}, {"n", b.n}, {"smearing", b.smearing}}; }

inline BoxSpec box_from_json(json const& j) {
    io::allow_keys(j, "box", {"L", "n", "smearing"});
    BoxSpec b;
    io::get_to(j, "box", "L", b.L);
    io::get_to(j, "box", "n", b.n);
    io::get_to(j, "box", "smearing", b.smearing);
    return b;
}

inline json to_json(SolveConfig const& c) {
    return {{"mass", c.mass},
            {"max_iter", c.max_iter},
            {"tolerance", c.tolerance},
            {"step_rule", std::string(to_string(c.step_rule))},
            {"fixed_step", c.fixed_step},
            {"restarts", c.restarts},
            {"seed", std::string(to_string(c.seed))},
            {"decay_threshold", c.decay_threshold},
            {"grid", to_json(c.grid)},
            {"box", to_json(c.box)}};
}

inline SolveConfig solve_config_from_json(json const& j) {
    io::allow_keys(j, "solve",
                   {"mass", "max_iter", "tolerance", "step_rule", "fixed_step", "restarts", "seed", "decay_threshold",
                    "grid", "box"});
    SolveConfig c;
    io::get_to(j, "solve", "mass", c.mass);
    io::get_to(j, "solve", "max_iter", c.max_iter);
    io::get_to(j, "solve", "tolerance", c.tolerance);
    if (j.contains("step_rule")) c.step_rule = step_rule_from_string(io::require<std::string>(j, "solve", "step_rule"));
    io::get_to(j, "solve", "fixed_step", c.fixed_step);
    io::get_to(j, "solve", "restarts", c.restarts);
    if (j.contains("seed")) c.seed = seed_profile_from_string(io::require<std::string>(j, "solve", "seed"));
    io::get_to(j, "solve", "decay_threshold", c.decay_threshold);
    if (j.contains("grid")) c.grid = radial_grid_from_json(j["grid"]);
    if (j.contains("box")) c.box = box_from_json(j["box"]);
    return c;
}

inline json to_json(EnergyBreakdown const& e) {
    return {{"weizsacker", e.weizsacker}, {"thomas_fermi", e.thomas_fermi}, {"dirac", e.dirac},
            {"external", e.external},     {"hartree", e.hartree},           {"total", e.total}};
}

inline EnergyBreakdown breakdown_from_json(json const& j) {
    io::allow_keys(j, "breakdown", {"weizsacker", "thomas_fermi", "dirac", "external", "hartree", "total"});
    EnergyBreakdown e;
    e.weizsacker = io::require<double>(j, "breakdown", "weizsacker");
    e.thomas_fermi = io::require<double>(j, "breakdown", "thomas_fermi");
    e.dirac = io::require<double>(j, "breakdown", "dirac");
    e.external = io::require<double>(j, "breakdown", "external");
    e.hartree = io::require<double>(j, "breakdown", "hartree");
    e.total = io::require<double>(j, "breakdown", "total");
    return e;
}

// ----------------------------------------------------------------------------
// state files

inline json state_to_json(RadialFunction const& u, json meta = json::object()) {
    auto const& g = u.grid();
    return {{"grid", {{"kind", std::string(to_string(g.kind()))}, {"r_min", g.r_min()}, {"r_max", g.r_max()},
                      {"n", g.size()}}},
            {"values", std::vector<double>(u.values().begin(), u.values().end())},
            {"meta", std::move(meta)}};
}

inline json state_to_json(Field3 const& u, json meta = json::object()) {
    std::vector<unsigned char> bytes(u.size() * sizeof(double));
    static_assert(std::endian::native == std::endian::little, "3D state files assume a little-endian host");
    std::memcpy(bytes.data(), u.values().data(), bytes.size());
    return {{"grid", {{"L", u.grid().edge()}, {"n", u.grid().n()}}},
            {"encoding", "row-major"},
            {"dtype", "float64"},
            {"byte_order", "little"},
            {"payload", "base64"},
            {"layout", "value at (x_i, y_j, z_k) stored at index (i*n + j)*n + k, x_i = (i - n/2) L/n"},
            {"data", io::base64_encode(bytes)},
            {"meta", std::move(meta)}};
}

inline json state_to_json(State const& s, json meta = json::object()) {
    return std::visit([&](auto const& u) { return state_to_json(u, std::move(meta)); }, s);
}

inline State state_from_json(json const& j) {
    try {
        io::require_object(j, "state");
        auto const& grid = j.at("grid");
        io::require_object(grid, "state grid");
        if (grid.contains("L")) {
            io::allow_keys(j, "state", {"grid", "encoding", "dtype", "byte_order", "payload", "layout", "data", "meta"});
            io::allow_keys(grid, "state grid", {"L", "n"});
            if (j.value("encoding", "") != "row-major" || j.value("dtype", "float64") != "float64" ||
                j.value("byte_order", "little") != "little" || j.value("payload", "base64") != "base64")
                throw io_error("unsupported 3D state encoding");
            auto box = make_box(io::require<double>(grid, "state grid", "L"),
                                io::require<std::size_t>(grid, "state grid", "n"));
            auto const bytes = io::base64_decode(io::require<std::string>(j, "state", "data"));
            if (bytes.size() != box->size() * sizeof(double)) throw io_error("3D state payload has the wrong size");
            std::vector<double> v(box->size());
            std::memcpy(v.data(), bytes.data(), bytes.size());
            Field3 f(box, std::move(v));
            require_finite(f);
            return f;
        }
        io::allow_keys(j, "state", {"grid", "values", "meta"});
        io::allow_keys(grid, "state grid", {"kind", "r_min", "r_max", "n"});
        auto g = make_grid(grid_kind_from_string(io::require<std::string>(grid, "state grid", "kind")),
                           io::require<double>(grid, "state grid", "r_min"),
                           io::require<double>(grid, "state grid", "r_max"),
                           io::require<std::size_t>(grid, "state grid", "n"));
        RadialFunction u(g, io::require<std::vector<double>>(j, "state", "values"));
        require_finite(u);
        return u;
    } catch (json::exception const& e) {
        throw io_error(std::string("malformed state document: ") + e.what());
    }
}

inline void save_state(std::filesystem::path const& path, State const& s, json meta = json::object()) {
    io::write_json(path, state_to_json(s, std::move(meta)));
}

inline State load_state(std::filesystem::path const& path) {
    try {
        return state_from_json(io::read_json(path));
    } catch (error const& e) {
        throw io_error("'" + path.string() + "': " + e.what());
    }
}

// ----------------------------------------------------------------------------
// results and reports

inline json summary_to_json(MinimizeResult const& r) {
    return {{"breakdown", to_json(r.breakdown)},
            {"energy", r.energy()},
            {"residual", r.residual},
            {"iterations", r.iterations},
            {"boundary_mass", r.boundary_mass},
            {"converged", r.converged},
            {"multiplier", r.lagrange_multiplier},
            {"mass", r.target_mass},
            {"tolerance", r.tolerance},
            {"restarts", r.restarts},
            {"potential", to_json(r.potential)},
            {"constants", to_json(r.constants)}};
}

inline json to_json(Concentration const& c) {
    json rows = json::array();
    for (auto const& e : c.table) rows.push_back({{"R", e.R}, {"M_R", e.M}, {"center", e.center}});
    json j = {{"table", rows}};
    j["threshold_radius"] = c.threshold_radius ? json(*c.threshold_radius) : json(nullptr);
    return j;
}

inline std::string concentration_csv(Concentration const& c) {
    std::string out = "R,M_R\n";
    char buf[64];
    for (auto const& e : c.table) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", e.R, e.M);
        out += buf;
    }
    return out;
}

inline json to_json(LocalizationReport const& r) {
    json lemmas = json::array();
    for (auto const& c : r.lemmas) {
        json row = {{"R", c.R}, {"localization_gap", c.gap}, {"ims_defect", c.ims}};
        row["annulus_residual"] = std::isnan(c.annulus) ? json(nullptr) : json(c.annulus);
        lemmas.push_back(row);
    }
    json j = {{"mass", r.mass},
              {"R_m", r.R_m},
              {"inner_mass", r.inner_mass},
              {"outer_mass", r.outer_mass},
              {"boundary_mass", r.boundary_mass},
              {"potential_moment", r.potential_moment},
              {"lemmas", lemmas},
              {"concentration", to_json(r.concentration)}};
    if (r.split_available)
        j["split"] = {{"r_m", r.split.r},          {"a_m", r.split.inner_mass}, {"annulus_mass", r.split.annulus_mass},
                      {"interval", {r.split.lo, r.split.hi}}, {"sup_abs_xV", r.split.sup_abs_xV}};
    else
        j["split"] = {{"unavailable", r.split_note}};
    return j;
}

inline json to_json(EscapeReport const& r) {
    json rows = json::array();
    for (auto const& e : r.rows)
        rows.push_back(
            {{"r_max", e.r_max}, {"energy", e.energy}, {"boundary_mass", e.boundary_mass}, {"converged", e.converged}});
    return {{"rows", rows},
            {"flag", r.flag()},
            {"energy_keeps_decreasing", r.energy_keeps_decreasing},
            {"boundary_mass_persists", r.boundary_mass_persists},
            {"tolerance", r.tolerance},
            {"mass", r.mass}};
}

// Provenance hash of the physics and discretization.
inline std::string physics_hash(PotentialSpec const& V, Constants const& k, SolveConfig const& cfg) {
    json const grid = V.is_radial() ? to_json(cfg.grid) : to_json(cfg.box);
    return io::hash_hex({{"potential", to_json(V)}, {"constants", to_json(k)}, {"grid", grid}});
}

} // namespace tfdw
