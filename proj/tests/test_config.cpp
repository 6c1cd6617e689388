#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "thermorom/config.hpp"
#include "thermorom/errors.hpp"

using namespace thermorom;
using nlohmann::json;

TEST_CASE("toml subset") {
    const std::string text = R"(# leading comment
seed = 42
name = "a \"quoted\" # not a comment"
lit = 'C:\path'

[system]
kind = "gas_containers"   # trailing comment
params = ["alpha"]

[data]
lower = [1.0]
upper = [5_0.0]
grid = [
  [1, 2],   # nested
  [3, 4],
]
flag = true
neg = -1e-3
[system.gas]
alpha = 10
dotted.key = 3
)";
    const json j = parse_toml(text, "t.toml");
    CHECK(j["seed"] == 42);
    CHECK(j["name"] == "a \"quoted\" # not a comment");
    CHECK(j["lit"] == "C:\\path");
    CHECK(j["system"]["kind"] == "gas_containers");
    CHECK(j["system"]["gas"]["alpha"] == 10);
    CHECK(j["system"]["gas"]["dotted"]["key"] == 3);
    CHECK(j["data"]["upper"][0] == 50.0);
    CHECK(j["data"]["grid"][1][0] == 3);
    CHECK(j["data"]["flag"] == true);
    CHECK(j["data"]["neg"].get<double>() == doctest::Approx(-1e-3));
    CHECK(j["seed"].is_number_integer());
    CHECK(j["data"]["lower"][0].is_number_float());

    // round trip through the writer
    CHECK(parse_toml(to_toml(j)) == j);
}

TEST_CASE("toml errors carry line numbers") {
    auto line_of = [](const std::string& text) {
        try {
            parse_toml(text, "x.toml");
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(line_of("a = 1\nb = \n").find("x.toml:2") == 0);
    CHECK(line_of("a = 1\na = 2\n").find("duplicate") != std::string::npos);
    CHECK(line_of("[t]\n[t]\n").find("defined twice") != std::string::npos);
    CHECK(line_of("a = [1, 2\n").find("x.toml") == 0);
    CHECK(line_of("a = 1 2\n").find("end of line") != std::string::npos);
    CHECK(line_of("a = {x = 1}\n").find("inline tables") != std::string::npos);
    CHECK(line_of("a = nan\n").find("nan") != std::string::npos);
    CHECK(line_of("a = 1__0\n").find("'_'") != std::string::npos);
    CHECK(line_of("a = \"open\n").find("newline") != std::string::npos);
}

TEST_CASE("overrides") {
    json j = parse_toml("[training]\nepochs = 10\n");
    apply_override(j, "training.epochs=20");
    apply_override(j, "loss.scheme=rk4");
    apply_override(j, "data.lower=[0.5, 1.0]");
    apply_override(j, "system.kind=\"burgers\"");
    CHECK(j["training"]["epochs"] == 20);
    CHECK(j["loss"]["scheme"] == "rk4");
    CHECK(j["data"]["lower"][1] == 1.0);
    CHECK(j["system"]["kind"] == "burgers");
    CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "training.epochs.x=1"), ConfigError);
}

TEST_CASE("defaults carry the published hyperparameters") {
    const RunConfig b = run_config_from_json(json::object());
    CHECK(b.system.kind == SystemKind::burgers);
    CHECK(b.system.state_dim() == 200);
    CHECK(b.system.num_snapshots() == 201);
    CHECK(b.autoencoder.hidden == std::vector<int>{100});
    CHECK(b.autoencoder.latent_dim == 5);
    CHECK(b.autoencoder.activation == Activation::relu);
    CHECK(b.model.shape.depth == 5);
    CHECK(b.model.shape.width == 40);
    CHECK(b.loss.rec == 1e-1);
    CHECK(b.loss.jac == 1e-9);
    CHECK(b.loss.mod == 1e-7);
    CHECK(b.training.total_epochs() == 15000);
    CHECK(b.training.batch_size_at(0) == 50);
    CHECK(b.training.adam.learning_rate == 1e-4);
    CHECK(b.training.adam.decay_factor == 0.99);
    CHECK(b.training.adam.decay_period == 2000);
    CHECK(b.active.update_every == 3000);
    CHECK(b.training_grid().size() == 9);

    const RunConfig g = run_config_from_json(json{{"system", {{"kind", "gas_containers"}}}});
    CHECK(g.autoencoder.identity);
    CHECK(g.model.known_energy);
    CHECK(g.model.shape.latent_dim == 4);
    CHECK(g.system.num_snapshots() == 401);
    CHECK(g.training_grid().size() == 7);
    CHECK(g.test_grid().size() == 21);
    std::mt19937_64 rng(1);
    const PGFinn m = make_model(g, rng);
    CHECK(m.param_offset()[0] == 25.5);
    CHECK(m.param_scale()[0] == 24.5);
}

TEST_CASE("schema errors name the field") {
    auto path_of = [](const json& j) {
        try {
            run_config_from_json(j);
        } catch (const ConfigError& e) {
            return e.path();
        }
        return std::string("no error");
    };
    CHECK(path_of({{"training", {{"epochs", -1}}}}) == "training.epochs");
    CHECK(path_of({{"training", {{"epochz", 1}}}}) == "training.epochz");
    CHECK(path_of({{"loss", {{"lambda_rec", "big"}}}}) == "loss.lambda_rec");
    CHECK(path_of({{"loss", {{"scheme", "leapfrog"}}}}) == "loss.scheme");
    CHECK(path_of({{"data", {{"lower", {0.7}}}}}) == "data.lower");
    CHECK(path_of({{"data", {{"upper", {0.6, 1.1}}}}}) == "data.upper");
    CHECK(path_of({{"system", {{"kind", "pendulum"}}}}) == "system.kind");
    CHECK(path_of({{"system", {{"burgers", {{"spatial_stride", 7}}}}}}) == "system.burgers.spatial_stride");
    CHECK(path_of({{"training", {{"phases", {{10, 0}}}}}}) == "training.phases[0][1]");
    CHECK(path_of({{"data", {{"train_mu", {{0.8}}}}}}) == "data.train_mu[0]");
    CHECK(path_of({{"system", "burgers"}}) == "system");
    CHECK(path_of({{"autoencoder", {{"latent_dim", 300}}}}) == "autoencoder.latent_dim");
}

TEST_CASE("grids and holdout draws") {
    const auto g = uniform_grid((Vector(2) << 0.7, 0.9).finished(), (Vector(2) << 0.9, 1.1).finished(), {3, 3});
    REQUIRE(g.size() == 9);
    CHECK(g[0] == (Vector(2) << 0.7, 0.9).finished());
    CHECK(g[1][0] == 0.7);
    CHECK(g[1][1] == doctest::Approx(1.0));
    CHECK(g[8] == (Vector(2) << 0.9, 1.1).finished());
    CHECK(uniform_grid(Vector::Constant(1, 1.0), Vector::Constant(1, 3.0), {1})[0][0] == 2.0);

    RunConfig rc = run_config_from_json(json::object());
    const auto h1 = rc.holdout_points(16);
    CHECK(h1 == rc.holdout_points(16));
    for (const auto& mu : h1) {
        CHECK((mu.array() >= rc.data.lower.array()).all());
        CHECK((mu.array() <= rc.data.upper.array()).all());
    }
    rc.seed = 7;
    CHECK(h1 != rc.holdout_points(16));
}

TEST_CASE("shipped configs parse") {
    const std::filesystem::path dir = THERMOROM_CONFIG_DIR;
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() != ".toml") continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(run_config_from_json(load_toml(e.path())));
        ++n;
    }
    CHECK(n >= 3);
}
