#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "support/random_states.hpp"
#include "tfdw/io.hpp"
#include "tfdw/run_config.hpp"

using namespace tfdw;

namespace {

std::filesystem::path scratch(std::string const& name) {
    auto const dir = std::filesystem::temp_directory_path() / "tfdw-unit-io";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(Base64, KnownVectors) {
    auto enc = [](std::string const& s) {
        return io::base64_encode(std::span(reinterpret_cast<unsigned char const*>(s.data()), s.size()));
    };
    EXPECT_EQ(enc(""), "");
    EXPECT_EQ(enc("f"), "Zg==");
    EXPECT_EQ(enc("fo"), "Zm8=");
    EXPECT_EQ(enc("foo"), "Zm9v");
    EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
    auto const d = io::base64_decode("Zm9vYmE=");
    EXPECT_EQ(std::string(d.begin(), d.end()), "fooba");
    EXPECT_ANY_THROW(io::base64_decode("Zm9"));
    EXPECT_ANY_THROW(io::base64_decode("Zm9*"));
}

TEST(Base64, RandomBytesRoundTrip) {
    std::mt19937_64 rng(fixtures::default_seed);
    for (std::size_t n : {1u, 2u, 3u, 100u, 1001u}) {
        std::vector<unsigned char> b(n);
        for (auto& c : b) c = static_cast<unsigned char>(rng());
        EXPECT_EQ(io::base64_decode(io::base64_encode(b)), b);
    }
}

TEST(State, RadialRoundTripIsExact) {
    std::mt19937_64 rng(fixtures::default_seed);
    auto const u = fixtures::random_radial(make_log_grid(1e-4, 30, 500), rng, 0.7);
    auto const path = scratch("radial.json");
    save_state(path, u, {{"note", "x"}});
    auto const back = load_state(path);
    ASSERT_TRUE(is_radial(back));
    auto const& v = std::get<RadialFunction>(back);
    EXPECT_EQ(v.grid(), u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) ASSERT_EQ(v[i], u[i]);
    EXPECT_EQ(io::read_json(path)["meta"]["note"], "x");
}

TEST(State, BoxRoundTripIsExact) {
    std::mt19937_64 rng(fixtures::default_seed);
    auto const f = fixtures::random_field(make_box(10, 16), default_grid(), rng, 1, true);
    auto const path = scratch("box.json");
    save_state(path, f);
    auto const j = io::read_json(path);
    EXPECT_EQ(j["encoding"], "row-major");
    EXPECT_EQ(j["dtype"], "float64");
    EXPECT_EQ(j["byte_order"], "little");
    auto const back = load_state(path);
    ASSERT_FALSE(is_radial(back));
    auto const& g = std::get<Field3>(back);
    EXPECT_EQ(g.grid(), f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) ASSERT_EQ(g[i], f[i]);
}

TEST(State, MalformedDocumentsRejected) {
    EXPECT_THROW(load_state(scratch("missing.json")), io_error);
    auto const path = scratch("bad-state.json");
    io::write_text_atomic(path, R"({"grid": {"kind": "log", "r_min": 1e-4, "r_max": 40, "n": 20}, "values": [1, 2]})");
    EXPECT_THROW(load_state(path), io_error);
    io::write_text_atomic(path, R"({"grid": {"L": 10, "n": 16}, "encoding": "row-major", "data": "AAAA"})");
    EXPECT_THROW(load_state(path), io_error);
    io::write_text_atomic(path, "[1, 2");
    EXPECT_THROW(load_state(path), io_error);
}

TEST(Json, StrictKeys) {
    EXPECT_THROW(constants_from_json(json{{"c_tf", 1}, {"c_x", 2}}), configuration_error);
    EXPECT_THROW(potential_from_json(json{{"kind", "atomic"}, {"Z", 1}, {"charge", 2}}), configuration_error);
    EXPECT_THROW(potential_from_json(json{{"kind", "yukawa"}}), configuration_error);
    EXPECT_THROW(solve_config_from_json(json{{"mass", "heavy"}}), configuration_error);
    EXPECT_THROW(constants_from_json(json("planck")), configuration_error);
}

TEST(Json, ValueTypesRoundTrip) {
    Constants k = Constants::physical();
    EXPECT_EQ(constants_from_json(to_json(k)), k);
    auto const mol = PotentialSpec::molecular({{1, {0, 0, -0.7}}, {2, {0, 0, 0.7}}});
    EXPECT_EQ(potential_from_json(to_json(mol)), mol);
    auto const tab = PotentialSpec::radial_table({0.1, 1, 10}, {-3, -1, 0});
    EXPECT_EQ(potential_from_json(to_json(tab)), tab);
    SolveConfig cfg;
    cfg.mass = 2.5;
    cfg.step_rule = StepRule::fixed;
    cfg.grid.n = 3000;
    cfg.box.n = 64;
    auto const back = solve_config_from_json(to_json(cfg));
    EXPECT_EQ(back.mass, 2.5);
    EXPECT_EQ(back.step_rule, StepRule::fixed);
    EXPECT_EQ(back.grid, cfg.grid);
    EXPECT_EQ(back.box, cfg.box);
    auto const preset = constants_from_json(json{{"preset", "physical"}, {"c_w", 1}});
    EXPECT_EQ(preset.c_tf, Constants::physical().c_tf);
    EXPECT_EQ(preset.c_w, 1);
}

TEST(RunConfig, OverridesApply) {
    json doc = json::object();
    apply_override(doc, "solve.grid.n=3000");
    apply_override(doc, "potential={\"kind\":\"atomic\",\"Z\":2}");
    apply_override(doc, "constants=physical");
    apply_override(doc, "constants.c_w=1");
    apply_override(doc, "output_dir=some/where");
    auto const c = run_config_from_json(doc);
    EXPECT_EQ(c.solve.grid.n, 3000u);
    EXPECT_EQ(c.potential, PotentialSpec::atomic(2));
    EXPECT_EQ(c.constants.c_tf, Constants::physical().c_tf);
    EXPECT_EQ(c.constants.c_w, 1);
    EXPECT_EQ(c.output_dir, "some/where");
}

TEST(RunConfig, BadOverridesAndKeys) {
    json doc = json::object();
    EXPECT_THROW(apply_override(doc, "no-equals"), configuration_error);
    EXPECT_THROW(apply_override(doc, "=1"), configuration_error);
    EXPECT_THROW(apply_override(doc, "a..b=1"), configuration_error);
    apply_override(doc, "seed=4");
    EXPECT_THROW(apply_override(doc, "seed.x=1"), configuration_error);
    EXPECT_THROW(run_config_from_json(json{{"sovle", json::object()}}), configuration_error);
    EXPECT_THROW(run_config_from_json(json{{"curve", {{"masses", {1, 0.5}}}}}), configuration_error);
    EXPECT_THROW(run_config_from_json(json{{"binding", {{"pairs", {{0.5, 1}}}}}}), configuration_error);
}

TEST(RunConfig, TogglesRefusedInToolRuns) {
    json doc{{"constants", {{"toggles", {{"dirac", false}}}}}};
    EXPECT_THROW(run_config_from_json(doc), configuration_error);
}

TEST(RunConfig, OutputEnvironmentVariable) {
    auto const path = scratch("cfg.json");
    io::write_json(path, json{{"output_dir", "from-file"}});
    ::unsetenv("TFDW_OUT");
    EXPECT_EQ(load_run_config(path, {}).output_dir, "from-file");
    ::setenv("TFDW_OUT", "from-env", 1);
    EXPECT_EQ(load_run_config(path, {"output_dir=from-flag"}).output_dir, "from-env");
    ::unsetenv("TFDW_OUT");
    EXPECT_THROW(load_run_config(scratch("nope.json"), {}), configuration_error);
}

TEST(RunConfig, RoundTripThroughJson) {
    RunConfig c;
    c.curve.masses = {0.1, 0.2};
    c.binding.pairs = {{0.2, 0.1}};
    c.diagnose.escape_domains = {20, 40};
    auto const back = run_config_from_json(to_json(c));
    EXPECT_EQ(back.curve.masses, c.curve.masses);
    EXPECT_EQ(back.binding.pairs, c.binding.pairs);
    EXPECT_EQ(back.diagnose.escape_domains, c.diagnose.escape_domains);
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Hash, DeterministicAndSensitive) {
    RunConfig a, b;
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.solve.mass = 3; // mass is not part of the physics hash
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.solve.grid.n = 2001;
    EXPECT_NE(config_hash(a), config_hash(b));
    b = a;
    b.potential = PotentialSpec::atomic(1);
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(io::fnv1a(""), 14695981039346656037ull);
}

TEST(Files, AtomicWriteCreatesDirectories) {
    auto const path = scratch("nested/deeper/file.txt");
    std::filesystem::remove_all(path.parent_path());
    io::write_text_atomic(path, "hello");
    EXPECT_EQ(io::read_text(path), "hello");
    for (auto const& e : std::filesystem::directory_iterator(path.parent_path()))
        EXPECT_EQ(e.path().filename(), "file.txt"); // no temporary left behind
    EXPECT_THROW(io::read_text(scratch("absent.txt")), io_error);
}
