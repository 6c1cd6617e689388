#pragma once

// Residual-based greedy sampling of the parameter domain during training.
//
// The indicator of a candidate mu is the sum, over every `stride`-th stored
// step, of the full-order backward Euler residual evaluated on the decoded
// reduced-order prediction:
//
//   e_res(mu) = sum_{n = s, 2s, ...} || u~_n - u~_{n-1} - dt f(u~_n; mu) ||

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "thermorom/training.hpp"

namespace thermorom {

struct IndicatorResult {
    double value = 0.0;  // +inf when the rollout diverged or left the physical domain
    bool diverged = false;
    int kept_steps = 0;
};

/// Indicator of an already decoded trajectory (columns are time).
IndicatorResult residual_indicator(const Matrix& states, const Vector& mu, const SystemConfig& cfg, double dt,
                                   int stride);

IndicatorResult error_indicator(const AutoEncoder& ae, const PGFinn& model, const Vector& mu, const SystemConfig& cfg,
                                int stride = 10, Scheme scheme = Scheme::forward_euler);

/// Index of the first maximal value; +inf beats everything.
int argmax_first(const std::vector<double>& values);

struct Selection {
    int index = 0;
    std::vector<IndicatorResult> indicators;
};

Selection greedy_select(const AutoEncoder& ae, const PGFinn& model, const std::vector<Vector>& candidates,
                        const SystemConfig& cfg, int stride = 10, Scheme scheme = Scheme::forward_euler,
                        int jobs = 1);

/// 2^{N_mu} corners of the box [lower, upper], first parameter varying slowest.
std::vector<Vector> domain_corners(const Vector& lower, const Vector& upper);

struct ActiveConfig {
    Vector lower, upper;  // parameter box
    int update_every = 3000;  // N_up, epochs
    int budget = 4;           // points added in total
    int pool_size = 16;
    int stride = 10;
    std::uint64_t seed = 0;
    double target_indicator = 0.0;  // stop sampling once the pool maximum falls below this; 0 disables
    int max_redraws = 3;

    void validate() const;
};

struct SamplingRecord {
    int update = 0;
    int epoch = 0;
    std::vector<Vector> pool;
    std::vector<double> indicators;
    int selected = -1;  // -1 when nothing was added
    Vector selected_mu;
    std::string note;
};

struct ActiveResult {
    AutoEncoder ae;
    PGFinn model;
    TrainHistory history;
    TrajectoryDataset dataset;  // final training set
    std::vector<SamplingRecord> log;

    std::vector<Vector> training_mus() const;
    void write_log_csv(const std::filesystem::path& path) const;
};

/// Trains on `initial` and every `update_every` epochs adds the pool member
/// with the largest indicator, generated on demand with the full-order solver.
ActiveResult active_train(const TrajectoryDataset& initial, const AutoEncoder& ae, const PGFinn& model,
                          const LossWeights& weights, const TrainSchedule& schedule, const ActiveConfig& active,
                          const SystemConfig& cfg, const std::filesystem::path& run_dir = {},
                          std::function<void(const std::string&)> log = {});

}  // namespace thermorom
