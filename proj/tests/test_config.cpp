#include <doctest.h>

#include <string>

#include "cognn/config.hpp"

using namespace cognn;

namespace {

std::string error_text(auto fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("key value parsing") {
    const auto kv = KeyValueConfig::parse("# comment\neta = 0.1  # trailing\n\nnum_agents=5\n");
    CHECK(kv.get_double("eta", 0) == 0.1);
    CHECK(kv.get_size("num_agents", 0) == 5);
    CHECK(kv.get_string("missing", "x") == "x");
    CHECK_THROWS_AS(KeyValueConfig::parse("eta 0.1\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("eta = 1\neta = 2\n"), ConfigError);
    CHECK(error_text([] { KeyValueConfig::parse("a = 1\nb\n"); }).find("line 2") != std::string::npos);
}

TEST_CASE("typed getters reject bad values") {
    const auto kv = KeyValueConfig::parse("a = abc\nb = -3\nc = yes\nd = 1, 2,3\n");
    CHECK_THROWS_AS(kv.get_double("a", 0), ConfigError);
    CHECK_THROWS_AS(kv.get_size("b", 0), ConfigError);
    CHECK(error_text([&] { kv.get_double("a", 0); }).find("'a'") != std::string::npos);
    CHECK(kv.get_list("d", {}) == std::vector<double>{1, 2, 3});
}

TEST_CASE("experiment defaults") {
    const ExperimentConfig c = experiment_from(KeyValueConfig::parse(""));
    CHECK(c.engine.num_agents == 20);
    CHECK(c.engine.window == 10);
    CHECK(c.spring.agents == 20);
    CHECK(c.schedule.num_rewirings == 20);
    CHECK(c.run.snapshot_every == 100);
    CHECK(c.run.max_steps == 5000);
    CHECK(c.sweep.eta_grid == std::vector<double>{0.0075, 0.01, 0.05, 0.075, 0.125});
    CHECK(c.sweep.copus_grid.size() == 4);
}

TEST_CASE("experiment keys") {
    const ExperimentConfig c = experiment_from(KeyValueConfig::parse(
        "num_agents = 5\ngraph_mode = frozen_uniform\npredictor_kind = temporal_conv\n"
        "normalize = none\nbaseline = zerov\nspring_k = 0.5\neta_grid = 0.1\n"));
    CHECK(c.engine.num_agents == 5);
    CHECK(c.spring.agents == 5);
    CHECK(c.engine.graph_mode == GraphMode::FrozenUniform);
    CHECK(c.engine.predictor_kind == PredictorKind::TemporalConv);
    CHECK(c.run.normalize == Normalization::None);
    CHECK(c.run.baseline == Baseline::ZeroV);
    CHECK(c.spring.spring_k == 0.5);
    CHECK(c.sweep.eta_grid == std::vector<double>{0.1});
}

TEST_CASE("experiment errors name the key") {
    CHECK(error_text([] { experiment_from(KeyValueConfig::parse("etta = 0.1\n")); })
              .find("etta") != std::string::npos);
    CHECK(error_text([] { experiment_from(KeyValueConfig::parse("graph_mode = maybe\n")); })
              .find("graph_mode") != std::string::npos);
    CHECK_THROWS_AS(experiment_from(KeyValueConfig::parse("source = csv\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from(KeyValueConfig::parse("eta = 2\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from(KeyValueConfig::parse("box_half = -1\n")), ConfigError);
}

TEST_CASE("every documented key is accepted") {
    for (const auto& [key, doc] : config_keys()) {
        CHECK(!doc.empty());
        CHECK(error_text([&] { experiment_from(KeyValueConfig::parse(key + " = 1\n")); })
                  .find("unknown config key") == std::string::npos);
    }
}
