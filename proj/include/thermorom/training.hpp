#pragma once

// Joint training of the autoencoder and the latent pGFINN.
//
// The batch unit is a consecutive snapshot pair (trajectory, n). Every epoch
// reshuffles all pairs of all trajectories with a generator seeded by
// (seed, epoch), so any epoch can be replayed without the ones before it.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "thermorom/autoencoder.hpp"
#include "thermorom/losses.hpp"
#include "thermorom/pgfinn.hpp"
#include "thermorom/systems.hpp"

namespace thermorom {

std::vector<PairIndex> all_pairs(const TrajectoryDataset& data);

/// Shuffled pairs cut into batches of `batch_size` (the last one may be short).
std::vector<std::vector<PairIndex>> make_batches(const TrajectoryDataset& data, int batch_size, std::uint64_t seed,
                                                 std::int64_t epoch);

struct TrainPhase {
    int epochs = 0;
    int batch_size = 50;
};

struct TrainSchedule {
    std::vector<TrainPhase> phases{{15000, 50}};
    AdamConfig adam;
    std::uint64_t seed = 0;
    int eval_every = 100;         // full-set loss evaluation
    int checkpoint_every = 1000;  // structural assert + checkpoint
    int jobs = 1;

    int total_epochs() const;
    int batch_size_at(int epoch) const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    LossTerms terms;  // summed over the epoch's batches
    double total = 0.0;
    double lr = 0.0;
};

struct EvalRecord {
    int epoch = 0;  // epochs completed when evaluated
    int num_pairs = 0;
    LossTerms terms;
    double total = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::vector<EvalRecord> evals;
    bool aborted = false;
    std::string abort_reason;
    int last_good_epoch = 0;

    void write_csv(const std::filesystem::path& path) const;
    void write_eval_csv(const std::filesystem::path& path) const;
};

/// Full-set loss without gradients.
EvalRecord evaluate_dataset(const TrajectoryDataset& data, const AutoEncoder& ae, const PGFinn& model,
                            const LossWeights& weights, int jobs = 1);

/// Structural identities at encoded training snapshots (up to `max_points`,
/// spread over trajectories and time). Throws NumericalError when violated.
StructureReport assert_structure(const TrajectoryDataset& data, const AutoEncoder& ae, const PGFinn& model,
                                 int max_points = 32);

class Trainer;

/// Called after each completed epoch with the number of epochs done. May
/// append trajectories to the dataset; new pairs enter from the next epoch.
using EpochHook = std::function<void(int epochs_done, Trainer& trainer)>;

class Trainer {
public:
    Trainer(TrajectoryDataset data, AutoEncoder ae, PGFinn model, LossWeights weights, TrainSchedule schedule);

    /// Enables history CSVs and on-disk checkpoints under `dir`.
    void set_run_dir(std::filesystem::path dir);
    void set_epoch_hook(EpochHook hook) { hook_ = std::move(hook); }
    void set_progress(std::function<void(const EpochRecord&)> fn) { progress_ = std::move(fn); }

    /// Trains until the schedule is exhausted or the run aborts on a
    /// NumericalError or DomainError. On abort the parameters are those of the
    /// last good checkpoint, which is also left in the run directory.
    const TrainHistory& run();

    const AutoEncoder& autoencoder() const { return ae_; }
    const PGFinn& model() const { return model_; }
    const TrajectoryDataset& dataset() const { return data_; }
    TrajectoryDataset& dataset() { return data_; }
    const TrainHistory& history() const { return history_; }
    const LossWeights& weights() const { return weights_; }
    const TrainSchedule& schedule() const { return schedule_; }
    int epochs_done() const { return epoch_; }
    const OptimState& optimizer() const { return opt_; }

    /// Resumable state: parameters, optimizer moments and the epoch counter.
    void save_state(const std::filesystem::path& dir) const;
    void load_state(const std::filesystem::path& dir, const KnownResolver& resolver = {});

private:
    void run_epoch();
    void checkpoint();
    void restore_last_good();

    TrajectoryDataset data_;
    AutoEncoder ae_;
    PGFinn model_;
    LossWeights weights_;
    TrainSchedule schedule_;
    OptimState opt_;
    int epoch_ = 0;
    TrainHistory history_;
    std::optional<std::filesystem::path> run_dir_;
    EpochHook hook_;
    std::function<void(const EpochRecord&)> progress_;
    // last good state kept in memory
    std::vector<double> good_params_;
    OptimState good_opt_;
    int good_epoch_ = 0;
};

}  // namespace thermorom
