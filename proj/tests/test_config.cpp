#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "fpk/config.hpp"
#include "fpk/errors.hpp"

using namespace fpk;

TEST_CASE("every shipped preset parses, validates, and round-trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(__FILE__).parent_path().parent_path() / "presets";
    REQUIRE(fs::is_directory(dir));
    int count = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".toml") continue;
        ++count;
        CAPTURE(entry.path().string());
        const RunConfig cfg = load_config(entry.path().string());
        const RunConfig again = parse_config(cfg.to_text());
        CHECK(again.to_text() == cfg.to_text());
        CHECK(again.problem == cfg.problem);
        CHECK(again.train.lr == cfg.train.lr);
        CHECK(again.train.beta == cfg.train.beta);
        CHECK(again.train.seed == cfg.train.seed);
        CHECK(again.grid.n_space == cfg.grid.n_space);
    }
    CHECK(count == 19);
}

TEST_CASE("preset example1_dsn_pinn carries the experiment-1 settings") {
    namespace fs = std::filesystem;
    const fs::path preset = fs::path(__FILE__).parent_path().parent_path() / "presets" /
                            "example1_dsn_pinn.toml";
    const RunConfig cfg = load_config(preset.string());
    CHECK(cfg.problem == "example1");
    CHECK(cfg.train.variant == Variant::dsn_pinn);
    CHECK(cfg.train.hidden == std::vector<int>{20, 20, 20});
    CHECK(cfg.train.beta == 0.5);
    CHECK(cfg.train.epsilon == 5e-5);
    CHECK(cfg.train.n_max == 5);
    CHECK(cfg.train.n_adap == 3);
    CHECK(cfg.train.lr == 0.005);
    CHECK(cfg.train.n_per_slice == 50);
    CHECK(cfg.train.time_slices == 40);
    CHECK(cfg.train.n_boundary == 80);
    CHECK(cfg.train.n_initial == 160);
    CHECK(cfg.train.mask == Mask::sigmoid);
}

TEST_CASE("preset example2_dsn_pinn carries the experiment-2 settings") {
    namespace fs = std::filesystem;
    const fs::path preset = fs::path(__FILE__).parent_path().parent_path() / "presets" /
                            "example2_dsn_pinn.toml";
    const RunConfig cfg = load_config(preset.string());
    CHECK(cfg.train.epsilon == 1e-5);
    CHECK(cfg.train.n_max == 6);
    CHECK(cfg.train.n_adap == 4);
    CHECK(cfg.train.beta == 0.6);
    CHECK(cfg.train.mask == Mask::sqrt);
}

TEST_CASE("malformed configs are rejected with the offending key") {
    const char* base = R"([problem]
name = example1

[train]
variant = pinn
beta = {}
)";
    (void)base;
    CHECK_THROWS_WITH_AS(parse_config("[train]\nbeta = 1.5\n"),
                         doctest::Contains("beta"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[train]\nlr = 0\n"), doctest::Contains("lr"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[train]\nwarp = 9\n"),
                         doctest::Contains("train.warp"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[turbo]\nx = 1\n"), doctest::Contains("turbo"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[problem]\nname = example9\n"),
                         doctest::Contains("example9"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[train]\nlr = fast\n"), doctest::Contains("lr"),
                         ConfigError);
    CHECK_THROWS_AS(parse_config("lr = 1\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/path.toml"), ConfigError);
}

TEST_CASE("comments, blank lines, and numeric overrides") {
    const RunConfig cfg = parse_config(R"(# experiment override
[problem]
name = example3   # heat problem
t1 = 2.0
c_t = 2.0
box1 = [0, 5]
box2 = [0, 5]

[train]
variant = dsn-pinn
seed = 17
)");
    CHECK(cfg.problem == "example3");
    CHECK(cfg.train.seed == 17);
    const FpkProblem p = cfg.make_problem();
    CHECK(p.t1 == 2.0);
    CHECK(p.c_t == 2.0);
    CHECK(p.space_box[0][1] == 5.0);
    CHECK(p.space_box[1][1] == 5.0);
    // defaults untouched elsewhere
    CHECK(p.t0 == 0.0);
}

TEST_CASE("override validation") {
    CHECK_THROWS_AS(parse_config("[problem]\nname = example1\nt0 = 2\nt1 = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("[problem]\nname = example1\nbox1 = [3, -3]\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("[problem]\nname = example3\nbox1 = [0, 1]\n"),
                    ConfigError);  // missing box2 on a 2d problem
    CHECK_THROWS_AS(parse_config("[problem]\nname = example1\nc_t = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[reference]\nscheme = heun\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[report]\nn_space = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[net]\nhidden = [20, 0]\n"), ConfigError);
}

TEST_CASE("defaults survive an empty config") {
    const RunConfig cfg = parse_config("");
    CHECK(cfg.problem == "example1");
    CHECK(cfg.train.epochs_per_round == 5000);
    CHECK(cfg.reference.scheme == "em");
    CHECK(cfg.grid.n_space == 201);
    CHECK_FALSE(cfg.reference_file.has_value());
}
