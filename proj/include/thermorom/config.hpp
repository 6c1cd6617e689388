#pragma once

// Run configuration.
//
// Files use a TOML subset: [table] / [a.b] headers, `key = value` lines,
// dotted keys, basic and literal strings, integers, floats, booleans and
// (possibly nested, possibly multi-line) arrays. Inline tables, dates and
// arrays of tables are not supported. The parsed tree is held as JSON.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermorom/active.hpp"
#include "thermorom/autoencoder.hpp"
#include "thermorom/losses.hpp"
#include "thermorom/pgfinn.hpp"
#include "thermorom/systems.hpp"
#include "thermorom/training.hpp"

namespace thermorom {

/// Throws ParseError with the source name and line number.
nlohmann::json parse_toml(const std::string& text, const std::string& source = "<string>");
nlohmann::json load_toml(const std::filesystem::path& path);
std::string to_toml(const nlohmann::json& root);

/// Applies "a.b.c=value"; the value is read as a TOML value, or taken as a
/// bare string when it does not parse as one.
void apply_override(nlohmann::json& root, const std::string& assignment);

struct DataConfig {
    Vector lower, upper;             // parameter box
    std::vector<int> train_points;   // uniform grid counts per parameter
    std::vector<Vector> train_mu;    // explicit list; overrides the grid when non-empty
    std::vector<int> test_points;    // evaluation grid
    int holdout = 16;                // random held-out points for indicator correlation
};

struct AutoEncoderConfig {
    bool identity = false;
    std::vector<int> hidden{100};
    int latent_dim = 5;
    Activation activation = Activation::relu;
};

struct ModelConfig {
    PGFinnShape shape;  // latent_dim and param_dim are filled from the rest of the config
    bool known_energy = false;
    bool known_entropy = false;
    Vector mu_offset, mu_scale;  // empty selects the centre and half-width of the box
};

struct EvalConfig {
    int timing_repeats = 5;
    double thermo_dt = 0.0;  // 0 selects the snapshot dt
    int thermo_steps = 0;    // 0 selects the snapshot count
};

struct RunConfig {
    SystemConfig system;
    DataConfig data;
    AutoEncoderConfig autoencoder;
    ModelConfig model;
    LossWeights loss;
    TrainSchedule training;
    ActiveConfig active;
    EvalConfig eval;
    std::uint64_t seed = 0;
    int jobs = 1;

    std::vector<Vector> training_grid() const;
    std::vector<Vector> test_grid() const;
    /// `count` points drawn uniformly in the box with a generator derived from the seed.
    std::vector<Vector> holdout_points(int count) const;
};

/// Defaults for a system, with the published values where they exist.
nlohmann::json default_config(SystemKind kind);

/// Defaults for config["system"]["kind"] merged under `config`, then
/// validated. Throws ConfigError naming the offending key.
RunConfig run_config_from_json(const nlohmann::json& config);
/// The merged tree (defaults + file + overrides) that run_config_from_json reads.
nlohmann::json merged_config(const nlohmann::json& config);

/// Points of a uniform tensor grid, first parameter varying slowest.
std::vector<Vector> uniform_grid(const Vector& lower, const Vector& upper, const std::vector<int>& counts);

AutoEncoder make_autoencoder(const RunConfig& cfg, std::mt19937_64& rng);
/// Network inputs are normalized to (mu - centre) / half-width of the box.
PGFinn make_model(const RunConfig& cfg, std::mt19937_64& rng);

}  // namespace thermorom
