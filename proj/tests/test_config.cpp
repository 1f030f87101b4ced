#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "radt/config.hpp"

using namespace radt;

namespace {

std::filesystem::path config_dir() { return std::filesystem::path(RADT_SOURCE_DIR) / "configs"; }

// Returns the key carried by the ConfigError thrown from fn, or "" if none.
template <typename Fn>
std::string error_key(Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.key().empty() ? std::string("<none>") : e.key();
  }
  return "";
}

ExperimentConfig parse(const std::string& text) { return experiment_config(ConfigFile::parse(text), false); }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults are valid") {
    const auto cfg = parse("");
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.env.name == "chainwalk");
    CHECK(cfg.run.seeds == std::vector<std::uint64_t>{0});
    CHECK(cfg.augment.clip.theta_lo == 0.9);
    CHECK(cfg.augment.clip.theta_hi == 1.25);
    CHECK(cfg.augment.eta == 0.1);
    CHECK(cfg.learner.neural.batch == 64);
    CHECK(cfg.learner.neural.lr == 3e-4);
  }

  TEST_CASE("grammar handles sections, comments and quotes") {
    const auto file = ConfigFile::parse(
        "# leading comment\n"
        "; another\n"
        "[env]\n"
        "name = chainwalk   # trailing\n"
        "states=6\n"
        "\n"
        "[run]\n"
        "output_dir = \"out dir # not a comment\"\n"
        "seeds = 0..2, 7\n");
    CHECK(file.entries().at("env.name").value == "chainwalk");
    CHECK(file.entries().at("env.states").line == 5);
    const auto cfg = experiment_config(file, false);
    CHECK(cfg.env.params.at("states") == "6");
    CHECK(cfg.run.output_dir == "out dir # not a comment");
    CHECK(cfg.run.seeds == std::vector<std::uint64_t>{0, 1, 2, 7});
  }

  TEST_CASE("errors name the offending key") {
    CHECK(error_key([] { parse("[data]\nn_source = many\n"); }) == "data.n_source");
    CHECK(error_key([] { parse("[data]\nbogus = 1\n"); }) == "data.bogus");
    CHECK(error_key([] { parse("[shift]\nmagnitude = 1.5\n"); }) == "shift.magnitude");
    CHECK(error_key([] { parse("[augment]\nclip_lo = 2\nclip_hi = 1\n"); }) == "augment.clip_lo");
    CHECK(error_key([] { parse("[learner]\nkind = forest\n"); }) == "learner.kind");
    CHECK(error_key([] { parse("[eval]\nexact = maybe\n"); }) == "eval.exact");
    CHECK(error_key([] { parse("[run]\nseeds = 3..1\n"); }) == "run.seeds");
    CHECK(error_key([] { parse("[run]\ncells = RADT-Magic\n"); }) == "run.cells");
    CHECK(error_key([] { parse("[rate]\nn_grid = 100, 50, 400\n"); }) == "rate.n_grid");
    CHECK(error_key([] { parse("[env]\nwidth = 3\n"); }) == "env");
    CHECK(error_key([] { ConfigFile::parse("name = x\n"); }) == "name");
    CHECK(error_key([] { ConfigFile::parse("[env]\nname = a\nname = b\n"); }) == "env.name");
    CHECK(error_key([] { ConfigFile::parse("[env\n"); }) == "<none>");
    CHECK(error_key([] { ConfigFile::parse("[env]\njust words\n"); }) == "<none>");
    try {
      parse("[data]\nn_source = many\n");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).rfind("data.n_source", 0) == 0);
    }
  }

  TEST_CASE("overrides win over file values") {
    auto file = ConfigFile::parse("[data]\nn_source = 10\n");
    file.set("data.n_source=20");
    file.set("eval.n_rollouts", "5");
    const auto cfg = experiment_config(file, false);
    CHECK(cfg.data.n_source == 20);
    CHECK(cfg.eval.n_rollouts == 5);
    CHECK_THROWS_AS(file.set("no_equals"), ConfigError);
    CHECK_THROWS_AS(file.set("nosection=1"), ConfigError);
  }

  TEST_CASE("seed environment variable overrides the root seed") {
    const auto file = ConfigFile::parse("[run]\nroot_seed = 3\n");
    ::setenv(kSeedEnvVar, "99", 1);
    CHECK(experiment_config(file, true).run.root_seed == 99);
    CHECK(experiment_config(file, false).run.root_seed == 3);
    ::setenv(kSeedEnvVar, "-4", 1);
    CHECK_THROWS_AS(experiment_config(file, true), ConfigError);
    ::unsetenv(kSeedEnvVar);
    CHECK(experiment_config(file, true).run.root_seed == 3);
  }

  TEST_CASE("config text round-trips to the same config") {
    const auto cfg = parse("[env]\nname = random\nstates = 4\nactions = 3\nhorizon = 5\nseed = 2\n"
                           "[learner]\nkind = neural\nhidden = 16\n[eval]\nf_grid = 1.5, 2\n");
    const auto again = parse(to_config_text(cfg));
    CHECK(to_json(again) == to_json(cfg));
    CHECK(config_hash(again) == config_hash(cfg));
  }

  TEST_CASE("hash ignores output location but tracks everything else") {
    const auto a = parse("[run]\noutput_dir = x\n");
    const auto b = parse("[run]\noutput_dir = y\nsave_artifacts = true\n");
    const auto c = parse("[run]\noutput_dir = x\nroot_seed = 1\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
  }

  TEST_CASE("number lists accept ranges and reject junk") {
    CHECK(parse_number_list("1, 2.5, 4", "k") == std::vector<double>{1.0, 2.5, 4.0});
    CHECK(parse_number_list("2..4", "k") == std::vector<double>{2.0, 3.0, 4.0});
    CHECK_THROWS_AS(parse_number_list("", "k"), ConfigError);
    CHECK_THROWS_AS(parse_number_list("1, x", "k"), ConfigError);
    CHECK_THROWS_AS(parse_seed_list("1.5", "k"), ConfigError);
  }

  TEST_CASE("shipped configs load and validate") {
    for (const char* name : {"demo.ini", "zero_shift.ini", "rate_study.ini"}) {
      CAPTURE(name);
      const auto cfg = load_experiment_config(config_dir() / name, {}, false);
      CHECK_NOTHROW(cfg.validate());
      CHECK(cfg.run.seeds.size() == 20);
    }
    const auto zero = load_experiment_config(config_dir() / "zero_shift.ini", {}, false);
    CHECK(zero.shift.magnitude == 0.0);
    CHECK_THROWS_AS(load_experiment_config(config_dir() / "missing.ini"), ConfigError);
  }
}
