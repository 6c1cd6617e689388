#include "thermorom/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "thermorom/checkpoint.hpp"
#include "thermorom/errors.hpp"

namespace thermorom {

std::vector<PairIndex> all_pairs(const TrajectoryDataset& data) {
    std::vector<PairIndex> out;
    for (std::size_t t = 0; t < data.trajectories.size(); ++t) {
        const int n = static_cast<int>(data.trajectories[t].states.cols());
        for (int s = 0; s + 1 < n; ++s) out.push_back({static_cast<int>(t), s});
    }
    return out;
}

std::vector<std::vector<PairIndex>> make_batches(const TrajectoryDataset& data, int batch_size, std::uint64_t seed,
                                                 std::int64_t epoch) {
    if (batch_size <= 0) throw ConfigError("training.batch_size", "must be positive");
    std::vector<PairIndex> pairs = all_pairs(data);
    const auto e = static_cast<std::uint64_t>(epoch);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::vector<std::vector<PairIndex>> out;
    for (std::size_t i = 0; i < pairs.size(); i += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(pairs.size(), i + static_cast<std::size_t>(batch_size));
        out.emplace_back(pairs.begin() + static_cast<std::ptrdiff_t>(i), pairs.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

int TrainSchedule::total_epochs() const {
    int n = 0;
    for (const auto& p : phases) n += p.epochs;
    return n;
}

int TrainSchedule::batch_size_at(int epoch) const {
    int start = 0;
    for (const auto& p : phases) {
        if (epoch < start + p.epochs) return p.batch_size;
        start += p.epochs;
    }
    return phases.empty() ? 0 : phases.back().batch_size;
}

void TrainSchedule::validate() const {
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const std::string at = "training.phases[" + std::to_string(i) + "]";
        if (phases[i].epochs < 0) throw ConfigError(at + ".epochs", "must be non-negative");
        if (phases[i].batch_size <= 0) throw ConfigError(at + ".batch_size", "must be positive");
    }
    if (!(adam.learning_rate > 0.0) || !std::isfinite(adam.learning_rate))
        throw ConfigError("training.learning_rate", "must be positive");
    if (!(adam.decay_factor > 0.0) || adam.decay_factor > 1.0)
        throw ConfigError("training.lr_decay", "must lie in (0, 1]");
    if (adam.decay_period <= 0) throw ConfigError("training.lr_decay_period", "must be positive");
    if (eval_every <= 0) throw ConfigError("training.eval_every", "must be positive");
    if (checkpoint_every <= 0) throw ConfigError("training.checkpoint_every", "must be positive");
    if (jobs <= 0) throw ConfigError("jobs", "must be positive");
}

namespace {

void write_terms(std::ostream& out, const LossTerms& t) {
    out << t.integration << ',' << t.reconstruction << ',' << t.jacobian << ',' << t.model;
}

}  // namespace

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17) << "epoch,L_int,L_rec,L_Jac,L_mod,total,lr\n";
    for (const auto& r : epochs) {
        out << r.epoch << ',';
        write_terms(out, r.terms);
        out << ',' << r.total << ',' << r.lr << '\n';
    }
}

void TrainHistory::write_eval_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17) << "epoch,pairs,L_int,L_rec,L_Jac,L_mod,total\n";
    for (const auto& r : evals) {
        out << r.epoch << ',' << r.num_pairs << ',';
        write_terms(out, r.terms);
        out << ',' << r.total << '\n';
    }
}

EvalRecord evaluate_dataset(const TrajectoryDataset& data, const AutoEncoder& ae, const PGFinn& model,
                            const LossWeights& weights, int jobs) {
    const auto pairs = all_pairs(data);
    EvalRecord rec;
    rec.num_pairs = static_cast<int>(pairs.size());
    // one trajectory at a time keeps the gathered batch small
    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j].trajectory == pairs[i].trajectory) ++j;
        const LossBatch b = gather_batch(data, std::span<const PairIndex>(pairs.data() + i, j - i));
        const LossEval e = total_loss(b, ae, model, weights, false, jobs);
        rec.terms += e.terms;
        rec.total += e.total;
        i = j;
    }
    return rec;
}

StructureReport assert_structure(const TrajectoryDataset& data, const AutoEncoder& ae, const PGFinn& model,
                                 int max_points) {
    const int nt = static_cast<int>(data.trajectories.size());
    if (nt == 0 || max_points <= 0) return {};
    const int per = std::max(1, max_points / nt);
    Matrix u, mu;
    std::vector<Vector> us, mus;
    for (const auto& t : data.trajectories) {
        const int n = static_cast<int>(t.states.cols());
        for (int k = 0; k < per && static_cast<int>(us.size()) < max_points; ++k) {
            const int col = per == 1 ? 0 : static_cast<int>(static_cast<long>(k) * (n - 1) / (per - 1));
            us.push_back(t.states.col(col));
            mus.push_back(t.mu);
        }
    }
    u.resize(ae.state_dim(), static_cast<Eigen::Index>(us.size()));
    mu.resize(model.param_dim(), static_cast<Eigen::Index>(us.size()));
    for (std::size_t c = 0; c < us.size(); ++c) {
        u.col(static_cast<Eigen::Index>(c)) = us[c];
        mu.col(static_cast<Eigen::Index>(c)) = mus[c];
    }
    const StructureReport rep = check_structure(model, ae.encode_batch(u), mu);
    if (!rep.ok()) {
        std::ostringstream msg;
        msg << "structural invariant violated: |L+L^T| " << rep.skew_l << ", |M-M^T| " << rep.sym_m << ", |L gS| "
            << rep.degeneracy_l << ", |M gE| " << rep.degeneracy_m << ", psd " << rep.psd;
        throw NumericalError(msg.str());
    }
    return rep;
}

Trainer::Trainer(TrajectoryDataset data, AutoEncoder ae, PGFinn model, LossWeights weights, TrainSchedule schedule)
    : data_(std::move(data)),
      ae_(std::move(ae)),
      model_(std::move(model)),
      weights_(weights),
      schedule_(std::move(schedule)) {
    weights_.validate();
    schedule_.validate();
    if (data_.trajectories.empty()) throw DimensionError("Trainer: empty dataset");
    data_.validate();
    if (data_.state_dim() != ae_.state_dim())
        throw DimensionError("Trainer: dataset state dimension " + std::to_string(data_.state_dim()) +
                             " does not match the autoencoder input " + std::to_string(ae_.state_dim()));
    if (ae_.latent_dim() != model_.latent_dim()) throw DimensionError("Trainer: latent dimensions differ");
    if (static_cast<int>(data_.param_names.size()) != model_.param_dim())
        throw DimensionError("Trainer: parameter dimension mismatch");
    opt_ = OptimState(schedule_.adam, joint_num_params(ae_, model_));
}

void Trainer::set_run_dir(std::filesystem::path dir) {
    std::filesystem::create_directories(dir / "checkpoints");
    run_dir_ = std::move(dir);
}

void Trainer::run_epoch() {
    const int bs = schedule_.batch_size_at(epoch_);
    const auto batches = make_batches(data_, bs, schedule_.seed, epoch_);
    EpochRecord rec;
    rec.epoch = epoch_;
    rec.lr = effective_rate(schedule_.adam, epoch_);
    std::vector<double> params = joint_params(ae_, model_);
    for (const auto& idx : batches) {
        const LossBatch b = gather_batch(data_, idx);
        const LossEval e = total_loss(b, ae_, model_, weights_, true, schedule_.jobs);
        rec.terms += e.terms;
        rec.total += e.total;
        opt_step(opt_, params, e.grad, epoch_);
        set_joint_params(ae_, model_, params);
    }
    ++epoch_;
    history_.epochs.push_back(rec);
    if (progress_) progress_(rec);
}

void Trainer::checkpoint() {
    assert_structure(data_, ae_, model_);
    good_params_ = joint_params(ae_, model_);
    good_opt_ = opt_;
    good_epoch_ = epoch_;
    history_.last_good_epoch = epoch_;
    if (!run_dir_) return;
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%07d", epoch_);
    save_state(*run_dir_ / "checkpoints" / name);
    std::ofstream(*run_dir_ / "checkpoints" / "latest.txt") << name << '\n';
    history_.write_csv(*run_dir_ / "history.csv");
    history_.write_eval_csv(*run_dir_ / "eval_history.csv");
}

void Trainer::restore_last_good() {
    set_joint_params(ae_, model_, good_params_);
    opt_ = good_opt_;
    epoch_ = good_epoch_;
    history_.last_good_epoch = good_epoch_;
}

const TrainHistory& Trainer::run() {
    const int total = schedule_.total_epochs();
    if (epoch_ >= total) return history_;
    good_params_ = joint_params(ae_, model_);
    good_opt_ = opt_;
    good_epoch_ = epoch_;
    auto evaluate = [&] {
        EvalRecord r = evaluate_dataset(data_, ae_, model_, weights_, schedule_.jobs);
        r.epoch = epoch_;
        history_.evals.push_back(r);
    };
    try {
        if (history_.evals.empty() || history_.evals.back().epoch != epoch_) evaluate();
        while (epoch_ < total) {
            run_epoch();
            if (epoch_ % schedule_.eval_every == 0 || epoch_ == total) evaluate();
            if (epoch_ % schedule_.checkpoint_every == 0 || epoch_ == total) checkpoint();
            if (hook_ && epoch_ < total) hook_(epoch_, *this);
        }
    } catch (const std::exception& e) {
        // a diverging model can also leave the physical domain of a known energy/entropy
        if (!dynamic_cast<const NumericalError*>(&e) && !dynamic_cast<const DomainError*>(&e)) throw;
        history_.aborted = true;
        history_.abort_reason = e.what();
        restore_last_good();
        if (run_dir_) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%07d", epoch_);
            const auto dir = *run_dir_ / "checkpoints" / name;
            if (!std::filesystem::exists(dir)) save_state(dir);
            std::ofstream(*run_dir_ / "checkpoints" / "latest.txt") << name << '\n';
        }
    }
    if (run_dir_) {
        history_.write_csv(*run_dir_ / "history.csv");
        history_.write_eval_csv(*run_dir_ / "eval_history.csv");
    }
    return history_;
}

void Trainer::save_state(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    ae_.save(dir / "autoencoder");
    model_.save(dir / "model");
    CheckpointRecord rec;
    rec.header.kind = CheckpointKind::tensor;
    const auto n = static_cast<int>(opt_.first_moment.size());
    rec.header.shape = {2, n};
    rec.header.seed = schedule_.seed;
    rec.header.step = opt_.step;
    rec.header.epoch = static_cast<std::uint64_t>(epoch_);
    rec.values.resize(2 * static_cast<std::size_t>(n));
    std::copy(opt_.first_moment.begin(), opt_.first_moment.end(), rec.values.begin());
    std::copy(opt_.second_moment.begin(), opt_.second_moment.end(), rec.values.begin() + n);
    write_checkpoint(dir / "optimizer.ckpt", rec);
    nlohmann::json mus = nlohmann::json::array();
    for (const auto& t : data_.trajectories) mus.push_back(std::vector<double>(t.mu.begin(), t.mu.end()));
    nlohmann::json j{{"format", "thermorom-trainer"},
                     {"epoch", epoch_},
                     {"seed", schedule_.seed},
                     {"num_params", n},
                     {"training_mu", mus}};
    std::ofstream(dir / "trainer.json") << j.dump(2) << '\n';
}

void Trainer::load_state(const std::filesystem::path& dir, const KnownResolver& resolver) {
    AutoEncoder ae = AutoEncoder::load(dir / "autoencoder");
    PGFinn model = PGFinn::load(dir / "model", resolver);
    const CheckpointRecord rec = read_checkpoint(dir / "optimizer.ckpt");
    const std::size_t n = joint_num_params(ae, model);
    if (rec.header.kind != CheckpointKind::tensor || rec.header.shape != std::vector<int>{2, static_cast<int>(n)})
        throw ParseError("optimizer state in " + dir.string() + " does not match the model parameter count");
    if (ae.state_dim() != ae_.state_dim() || model.latent_dim() != model_.latent_dim() ||
        model.param_dim() != model_.param_dim())
        throw DimensionError("Trainer::load_state: checkpoint shapes differ from the trainer's");
    ae_ = std::move(ae);
    model_ = std::move(model);
    opt_ = OptimState(schedule_.adam, n);
    opt_.step = rec.header.step;
    std::copy(rec.values.begin(), rec.values.begin() + static_cast<std::ptrdiff_t>(n), opt_.first_moment.begin());
    std::copy(rec.values.begin() + static_cast<std::ptrdiff_t>(n), rec.values.end(), opt_.second_moment.begin());
    epoch_ = static_cast<int>(rec.header.epoch);
    good_params_ = joint_params(ae_, model_);
    good_opt_ = opt_;
    good_epoch_ = epoch_;
}

}  // namespace thermorom
