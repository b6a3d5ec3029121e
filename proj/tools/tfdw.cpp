// tfdw: command-line front end.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 non-convergence
// (output files are still written), 1 anything else.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tfdw.hpp"
#include "tfdw/run_config.hpp"

namespace fs = std::filesystem;
using namespace tfdw;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_internal = 1;
constexpr int exit_config = 2;
constexpr int exit_unconverged = 3;

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    bool allow_mismatch = false;
};

struct Context {
    RunConfig cfg;
    fs::path out;
    std::string hash;
    bool allow_mismatch = false;

    fs::path file(std::string const& stem, std::string const& ext) const {
        return out / (stem + "-" + hash + "." + ext);
    }
};

Context make_context(Common const& c) {
    Context ctx;
    ctx.cfg = load_run_config(c.config, c.overrides);
    // an explicit --out wins over TFDW_OUT
    if (!c.out.empty()) ctx.cfg.output_dir = c.out;
    ctx.out = ctx.cfg.output_dir;
    ctx.hash = config_hash(ctx.cfg);
    ctx.allow_mismatch = c.allow_mismatch;
    return ctx;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string full(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// gnuplot data: "# x y" header, then one pair per line; blocks separated by blank lines
void write_dat(fs::path const& path, std::string const& x, std::string const& y,
               std::vector<std::vector<std::pair<double, double>>> const& blocks, std::string const& hash) {
    std::string s = "# config " + hash + "\n# " + x + " " + y + "\n";
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (b > 0) s += "\n\n";
        for (auto const& [a, v] : blocks[b]) s += full(a) + " " + full(v) + "\n";
    }
    io::write_text_atomic(path, s);
}

void print_breakdown(EnergyBreakdown const& e) {
    std::cout << "  weizsacker    " << fmt(e.weizsacker) << "\n"
              << "  thomas_fermi  " << fmt(e.thomas_fermi) << "\n"
              << "  dirac        -" << fmt(e.dirac) << "\n"
              << "  external      " << fmt(e.external) << "\n"
              << "  hartree       " << fmt(e.hartree) << "\n"
              << "  total         " << fmt(e.total) << "\n";
}

void check_state_hash(Context const& ctx, fs::path const& path) {
    auto const doc = io::read_json(path);
    if (ctx.allow_mismatch || !doc.is_object() || !doc.contains("meta") || !doc["meta"].is_object()) return;
    auto const& meta = doc["meta"];
    if (meta.contains("config_hash") && meta["config_hash"] != ctx.hash)
        throw configuration_error("state '" + path.string() + "' was produced under config " +
                                  meta["config_hash"].get<std::string>() + ", not " + ctx.hash +
                                  " (pass --allow-mismatch to evaluate it anyway)");
}

EnergyBreakdown energy_of(State const& s, RunConfig const& cfg) {
    return std::visit(
        [&](auto const& u) -> EnergyBreakdown {
            using T = std::decay_t<decltype(u)>;
            if constexpr (std::is_same_v<T, RadialFunction>) return energy(u, cfg.potential, cfg.constants);
            else return energy(u, cfg.potential, cfg.constants, cfg.solve.box.smearing);
        },
        s);
}

// ----------------------------------------------------------------------------

int cmd_energy(Common const& c, std::string state_path) {
    auto ctx = make_context(c);
    if (state_path.empty()) state_path = ctx.cfg.state;
    if (state_path.empty()) throw configuration_error("energy: no state file given (--state or config 'state')");
    auto const state = load_state(state_path);
    check_state_hash(ctx, state_path);
    auto const e = energy_of(state, ctx.cfg);
    std::cout << "energy of " << state_path << " (mass " << fmt(mass(state)) << ")\n";
    print_breakdown(e);
    io::write_json(ctx.file("energy", "json"), {{"config_hash", ctx.hash},
                                                {"state", state_path},
                                                {"mass", mass(state)},
                                                {"breakdown", to_json(e)},
                                                {"potential", to_json(ctx.cfg.potential)},
                                                {"constants", to_json(ctx.cfg.constants)}});
    return exit_ok;
}

void write_minimize_outputs(Context const& ctx, MinimizeResult const& r) {
    json meta = {{"config_hash", ctx.hash}, {"summary", summary_to_json(r)}};
    save_state(ctx.file("state", "json"), r.u, meta);
    json summary = summary_to_json(r);
    summary["config_hash"] = ctx.hash;
    summary["config"] = to_json(ctx.cfg);
    io::write_json(ctx.file("summary", "json"), summary);
    std::vector<std::pair<double, double>> hist;
    for (std::size_t i = 0; i < r.history.size(); ++i) hist.emplace_back(double(i), r.history[i]);
    write_dat(ctx.file("history", "dat"), "iteration", "energy", {hist}, ctx.hash);
    if (is_radial(r.u)) {
        auto const& u = r.radial();
        std::vector<std::pair<double, double>> prof;
        auto const nodes = u.grid().nodes();
        for (std::size_t i = 0; i < u.size(); ++i) prof.emplace_back(nodes[i], u[i]);
        write_dat(ctx.file("profile", "dat"), "r", "u", {prof}, ctx.hash);
    }
}

int cmd_minimize(Common const& c) {
    auto ctx = make_context(c);
    auto const r = minimize_mass_constrained(ctx.cfg.potential, ctx.cfg.solve, ctx.cfg.constants);
    write_minimize_outputs(ctx, r);
    std::cout << "minimize m = " << fmt(ctx.cfg.solve.mass) << ": energy " << fmt(r.energy()) << ", residual "
              << fmt(r.residual) << ", iterations " << r.iterations << ", boundary mass " << fmt(r.boundary_mass)
              << (r.converged ? ", converged" : ", NOT converged") << "\n";
    print_breakdown(r.breakdown);
    std::cout << "wrote " << ctx.file("state", "json").string() << "\n";
    return r.converged ? exit_ok : exit_unconverged;
}

EnergyCurve run_curve(Context const& ctx, PotentialSpec const& V, std::vector<double> const& masses,
                      double domain_scale, bool resume, std::string const& stem) {
    EnergyCurve proto;
    proto.potential = V;
    proto.constants = ctx.cfg.constants;
    proto.solve = ctx.cfg.solve;
    proto.solve.mass = 1;
    auto const json_path = ctx.out / curve_filename(proto, stem, "json");

    CurveOptions opt;
    opt.warm_start = ctx.cfg.curve.warm_start;
    opt.jobs = ctx.cfg.curve.jobs;
    opt.domain_scale = domain_scale;
    if (resume && fs::exists(json_path)) {
        auto const old = import_curve(json_path);
        if (old.hash() != proto.hash() || old.domain_scale != domain_scale)
            throw configuration_error("cannot resume from '" + json_path.string() + "': different settings");
        opt.existing = old.samples;
        std::cout << "resuming with " << old.samples.size() << " stored samples\n";
    }
    // checkpoint after every sample so an interrupted sweep can resume
    std::map<double, CurveSample> done;
    for (auto const& s : opt.existing) done[s.m] = s;
    opt.on_sample = [&](CurveSample const& s) {
        done[s.m] = s;
        EnergyCurve partial = proto;
        partial.domain_scale = domain_scale;
        for (auto const& [m, x] : done) partial.samples.push_back(x);
        export_curve(partial, json_path, ExportFormat::json);
        std::cout << "  m = " << fmt(s.m) << "  E = " << fmt(s.energy) << "  residual " << fmt(s.residual)
                  << (s.converged ? "" : "  (not converged)") << "\n"
                  << std::flush;
    };
    auto curve = compute_curve(V, masses, ctx.cfg.solve, ctx.cfg.constants, opt);
    export_curve(curve, json_path, ExportFormat::json);
    export_curve(curve, ctx.out / curve_filename(curve, stem, "csv"), ExportFormat::csv);
    std::vector<std::pair<double, double>> pts;
    for (auto const& s : curve.samples) pts.emplace_back(s.m, s.energy);
    write_dat(ctx.out / curve_filename(curve, stem, "dat"), "m", curve.label(), {pts}, curve.hash());
    // growth of the half-mass radius along the curve
    std::vector<std::pair<double, double>> rm;
    for (auto const& s : curve.samples) rm.emplace_back(s.m, s.R_m);
    write_dat(ctx.out / curve_filename(curve, stem + "-Rm", "dat"), "m", "R_m", {rm}, curve.hash());
    return curve;
}

int cmd_curve(Common const& c, bool resume) {
    auto ctx = make_context(c);
    auto const curve =
        run_curve(ctx, ctx.cfg.potential, ctx.cfg.curve.masses, ctx.cfg.curve.domain_scale, resume, "curve");
    std::cout << curve.label() << " with " << curve.samples.size() << " samples written to "
              << (ctx.out / curve_filename(curve, "curve", "csv")).string() << "\n";
    bool all = true;
    for (auto const& s : curve.samples) all = all && s.converged;
    return all ? exit_ok : exit_unconverged;
}

int cmd_binding(Common const& c, std::string curve_v, std::string curve_0) {
    auto ctx = make_context(c);
    if (curve_v.empty()) curve_v = ctx.cfg.binding.curve_V;
    if (curve_0.empty()) curve_0 = ctx.cfg.binding.curve_0;
    if (curve_v.empty() || curve_0.empty())
        throw configuration_error("binding: both curve files are required (--curve-v, --curve-0)");
    auto const cv = import_curve(curve_v);
    auto const c0 = import_curve(curve_0);
    if (!(cv.constants == c0.constants) || !(cv.solve.grid == c0.solve.grid) || cv.domain_scale != c0.domain_scale)
        throw configuration_error("binding: the curves were computed with different constants or grids");
    auto const pairs = ctx.cfg.binding.pairs.empty() ? split_pairs(cv, c0) : ctx.cfg.binding.pairs;
    auto const res = binding_check(cv, c0, pairs);

    std::string const tag = cv.hash() + "-" + c0.hash();
    std::string csv = "m,m_prime,residual\n";
    json rows = json::array();
    std::map<double, std::vector<std::pair<double, double>>> blocks;
    double worst = std::numeric_limits<double>::infinity();
    for (auto const& b : res) {
        csv += full(b.m) + "," + full(b.m_prime) + "," + full(b.residual) + "\n";
        rows.push_back({{"m", b.m},
                        {"m_prime", b.m_prime},
                        {"I_V(m')", b.bound_part},
                        {"I0(m-m')", b.free_part},
                        {"I_V(m)", b.whole},
                        {"residual", b.residual}});
        blocks[b.m].emplace_back(b.m_prime, b.residual);
        worst = std::min(worst, b.residual);
        std::cout << "  m = " << fmt(b.m) << "  m' = " << fmt(b.m_prime) << "  residual " << fmt(b.residual) << "\n";
    }
    io::write_text_atomic(ctx.out / ("binding-" + tag + ".csv"), csv);
    json report = {{"curve_V", cv.hash()}, {"curve_0", c0.hash()}, {"pairs", rows}, {"min_residual", worst}};
    if (cv.potential.total_charge() > 0) {
        json gaps = json::array();
        std::vector<std::pair<double, double>> g, gn;
        for (auto const& r : gap_curve(cv, c0)) {
            gaps.push_back({{"m", r.m}, {"gap", r.gap}, {"normalized_gap", r.normalized_gap}});
            g.emplace_back(r.m, r.gap);
            gn.emplace_back(r.m, r.normalized_gap);
        }
        report["gap"] = gaps;
        write_dat(ctx.out / ("gap-" + tag + ".dat"), "m", "gap", {g}, tag);
        write_dat(ctx.out / ("gap-normalized-" + tag + ".dat"), "m", "normalized_gap", {gn}, tag);
    }
    io::write_json(ctx.out / ("binding-" + tag + ".json"), report);
    std::vector<std::vector<std::pair<double, double>>> dat;
    for (auto& [m, v] : blocks) dat.push_back(v);
    write_dat(ctx.out / ("binding-" + tag + ".dat"), "m_prime", "residual", dat, tag);
    std::cout << "smallest residual " << fmt(worst) << "\n";
    return exit_ok;
}

int cmd_diagnose(Common const& c, std::string state_path) {
    auto ctx = make_context(c);
    auto const& cfg = ctx.cfg;
    if (state_path.empty()) state_path = cfg.diagnose.state;
    MinimizeResult res;
    bool converged = true;
    if (!state_path.empty()) {
        check_state_hash(ctx, state_path);
        res.u = load_state(state_path);
        res.potential = cfg.potential;
        res.constants = cfg.constants;
        res.target_mass = mass(res.u);
        res.breakdown = energy_of(res.u, cfg);
    } else {
        res = minimize_mass_constrained(cfg.potential, cfg.solve, cfg.constants);
        write_minimize_outputs(ctx, res);
        converged = res.converged;
    }
    double const top = std::visit([](auto const& u) { return detail::domain_radius(u); }, res.u);
    auto const conc_radii =
        cfg.diagnose.concentration_radii.empty() ? default_concentration_radii(top) : cfg.diagnose.concentration_radii;
    auto const rep = diagnose(res, cfg.diagnose.radii, conc_radii);
    json j = to_json(rep);
    j["config_hash"] = ctx.hash;
    j["energy"] = res.energy();

    if (!cfg.diagnose.escape_domains.empty()) {
        std::vector<MinimizeResult> runs;
        for (double R : cfg.diagnose.escape_domains) {
            auto sc = cfg.solve;
            sc.grid.r_max = R;
            sc.box.L = 2 * R;
            runs.push_back(minimize_mass_constrained(cfg.potential, sc, cfg.constants));
        }
        auto const esc = escape_indicator(runs);
        j["escape"] = to_json(esc);
        std::vector<std::pair<double, double>> e, b;
        for (auto const& row : esc.rows) {
            e.emplace_back(row.r_max, row.energy);
            b.emplace_back(row.r_max, row.boundary_mass);
        }
        write_dat(ctx.file("escape-energy", "dat"), "r_max", "energy", {e}, ctx.hash);
        write_dat(ctx.file("escape-boundary-mass", "dat"), "r_max", "boundary_mass", {b}, ctx.hash);
        std::cout << "escape check: " << esc.flag() << "\n";
    }
    io::write_json(ctx.file("report", "json"), j);
    export_report(rep, ctx.file("concentration", "csv"), ExportFormat::csv);

    std::vector<std::pair<double, double>> conc, gap, ann, ims;
    for (auto const& e : rep.concentration.table) conc.emplace_back(e.R, e.M);
    for (auto const& l : rep.lemmas) {
        gap.emplace_back(l.R, l.gap);
        if (!std::isnan(l.annulus)) ann.emplace_back(l.R, l.annulus);
        ims.emplace_back(l.R, l.ims);
    }
    write_dat(ctx.file("concentration", "dat"), "R", "M_R", {conc}, ctx.hash);
    write_dat(ctx.file("localization-gap", "dat"), "R", "localization_gap", {gap}, ctx.hash);
    write_dat(ctx.file("annulus-residual", "dat"), "R", "annulus_residual", {ann}, ctx.hash);
    write_dat(ctx.file("ims-defect", "dat"), "R", "ims_defect", {ims}, ctx.hash);

    std::cout << "R_m = " << fmt(rep.R_m) << ", mass " << fmt(rep.mass);
    if (rep.split_available) std::cout << ", r_m = " << fmt(rep.split.r) << ", a_m = " << fmt(rep.split.inner_mass);
    std::cout << "\n";
    for (auto const& l : rep.lemmas)
        std::cout << "  R = " << fmt(l.R) << "  localization gap " << fmt(l.gap) << "  annulus "
                  << (std::isnan(l.annulus) ? std::string("n/a") : fmt(l.annulus)) << "  IMS defect " << fmt(l.ims)
                  << "\n";
    std::cout << "wrote " << ctx.file("report", "json").string() << "\n";
    return converged ? exit_ok : exit_unconverged;
}

int cmd_asymptotics(Common const& c, bool resume) {
    auto ctx = make_context(c);
    auto const& cfg = ctx.cfg;
    auto const gn = gn_quotient_optimize(cfg.solve);
    std::cout << "Gagliardo-Nirenberg quotient S = " << fmt(gn.S) << (gn.converged ? "" : " (not converged)") << "\n";
    auto masses = cfg.asymptotics.masses;
    std::sort(masses.begin(), masses.end());
    auto const curve = run_curve(ctx, PotentialSpec::none(), masses, cfg.asymptotics.domain_scale, resume, "small-mass");
    auto const rows = small_m_slope(curve, gn.S, cfg.constants);
    std::string csv = "m,ratio,limit,deviation,per_mass\n";
    json jr = json::array();
    std::vector<std::pair<double, double>> ratio, dev, per;
    for (auto const& r : rows) {
        csv += full(r.m) + "," + full(r.ratio) + "," + full(r.limit) + "," + full(r.deviation) + "," +
               full(r.per_mass) + "\n";
        jr.push_back({{"m", r.m}, {"ratio", r.ratio}, {"limit", r.limit}, {"deviation", r.deviation},
                      {"per_mass", r.per_mass}});
        ratio.emplace_back(r.m, r.ratio);
        dev.emplace_back(r.m, r.deviation);
        per.emplace_back(r.m, r.per_mass);
        std::cout << "  m = " << fmt(r.m) << "  I0/m^(5/3) = " << fmt(r.ratio) << "  limit " << fmt(r.limit)
                  << "  deviation " << fmt(r.deviation) << "\n";
    }
    io::write_text_atomic(ctx.file("asymptotics", "csv"), csv);
    io::write_json(ctx.file("asymptotics", "json"), {{"config_hash", ctx.hash},
                                                     {"S", gn.S},
                                                     {"S_residual", gn.residual},
                                                     {"S_converged", gn.converged},
                                                     {"rows", jr}});
    write_dat(ctx.file("asymptotics-ratio", "dat"), "m", "ratio", {ratio}, ctx.hash);
    write_dat(ctx.file("asymptotics-deviation", "dat"), "m", "deviation", {dev}, ctx.hash);
    write_dat(ctx.file("asymptotics-per-mass", "dat"), "m", "per_mass", {per}, ctx.hash);
    bool all = gn.converged;
    for (auto const& s : curve.samples) all = all && s.converged;
    return all ? exit_ok : exit_unconverged;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", c.overrides, "override a key by dotted path, e.g. solve.grid.n=4000");
    sub->add_option("-o,--out", c.out, "output directory (overrides output_dir and TFDW_OUT)");
    sub->add_flag("--allow-mismatch", c.allow_mismatch, "accept input files produced under another config");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thomas-Fermi-Dirac-von Weizsaecker energies: minimization, energy curves and localization checks"};
    app.require_subcommand(1);

    Common common;
    std::string state, curve_v, curve_0;
    bool resume = false;
    std::size_t jobs = 0;

    auto* energy = app.add_subcommand("energy", "evaluate the energy of a state file");
    add_common(energy, common);
    energy->add_option("--state", state, "state file (radial or 3D JSON)");

    auto* minimize = app.add_subcommand("minimize", "minimize the energy at fixed mass");
    add_common(minimize, common);

    auto* curve = app.add_subcommand("curve", "sweep the mass and record the energy curve");
    add_common(curve, common);
    curve->add_flag("--resume", resume, "reuse samples from an existing curve file");
    curve->add_option("-j,--jobs", jobs, "worker threads for cold-started sweeps");

    auto* binding = app.add_subcommand("binding", "binding inequality and gap from two curve files");
    add_common(binding, common);
    binding->add_option("--curve-v", curve_v, "curve JSON with the potential");
    binding->add_option("--curve-0", curve_0, "curve JSON with V = None");

    auto* diag = app.add_subcommand("diagnose", "localization report of a minimizer");
    add_common(diag, common);
    diag->add_option("--state", state, "state file; minimizes first when absent");

    auto* asym = app.add_subcommand("asymptotics", "small-mass slope against the Gagliardo-Nirenberg quotient");
    add_common(asym, common);
    asym->add_flag("--resume", resume, "reuse samples from an existing curve file");
    asym->add_option("-j,--jobs", jobs, "worker threads for cold-started sweeps");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    if (jobs > 0) common.overrides.push_back("curve.jobs=" + std::to_string(jobs));

    try {
        if (*energy) return cmd_energy(common, state);
        if (*minimize) return cmd_minimize(common);
        if (*curve) return cmd_curve(common, resume);
        if (*binding) return cmd_binding(common, curve_v, curve_0);
        if (*diag) return cmd_diagnose(common, state);
        if (*asym) return cmd_asymptotics(common, resume);
    } catch (lookup_error const& e) {
        std::cerr << "tfdw: missing sample: " << e.what() << "\n";
        return exit_config;
    } catch (configuration_error const& e) {
        std::cerr << "tfdw: configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (io_error const& e) {
        std::cerr << "tfdw: " << e.what() << "\n";
        return exit_config;
    } catch (domain_error const& e) {
        std::cerr << "tfdw: " << e.what() << "\n";
        return exit_config;
    } catch (solver_failure const& e) {
        std::cerr << "tfdw: solver failure: " << e.what() << "\n";
        return exit_unconverged;
    } catch (std::exception const& e) {
        std::cerr << "tfdw: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_internal;
}
