#include "thermorom/active.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "thermorom/errors.hpp"
#include "thermorom/evalkit.hpp"
#include "thermorom/parallel.hpp"

namespace thermorom {

IndicatorResult residual_indicator(const Matrix& states, const Vector& mu, const SystemConfig& cfg, double dt,
                                   int stride) {
    if (stride <= 0) throw DimensionError("residual_indicator: stride must be positive");
    IndicatorResult r;
    try {
        for (Eigen::Index n = stride; n < states.cols(); n += stride) {
            r.value += fom_residual(states.col(n), states.col(n - 1), dt, cfg, mu);
            ++r.kept_steps;
        }
    } catch (const DomainError&) {
        r.diverged = true;
    }
    if (!std::isfinite(r.value)) r.diverged = true;
    if (r.diverged) r.value = std::numeric_limits<double>::infinity();
    return r;
}

IndicatorResult error_indicator(const AutoEncoder& ae, const PGFinn& model, const Vector& mu, const SystemConfig& cfg,
                                int stride, Scheme scheme) {
    const Vector u0 = system_initial_state(cfg, mu);
    const RomRollout rom = rom_rollout(ae, model, u0, mu, cfg.snapshot_dt(), cfg.num_snapshots() - 1, scheme);
    if (rom.diverged) {
        IndicatorResult r;
        r.value = std::numeric_limits<double>::infinity();
        r.diverged = true;
        return r;
    }
    return residual_indicator(rom.states, mu, cfg, cfg.snapshot_dt(), stride);
}

int argmax_first(const std::vector<double>& values) {
    if (values.empty()) throw DimensionError("argmax_first: empty");
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

Selection greedy_select(const AutoEncoder& ae, const PGFinn& model, const std::vector<Vector>& candidates,
                        const SystemConfig& cfg, int stride, Scheme scheme, int jobs) {
    if (candidates.empty()) throw DimensionError("greedy_select: no candidates");
    Selection s;
    s.indicators.resize(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), jobs, [&](int i) {
        s.indicators[static_cast<std::size_t>(i)] =
            error_indicator(ae, model, candidates[static_cast<std::size_t>(i)], cfg, stride, scheme);
    });
    std::vector<double> v;
    for (const auto& r : s.indicators) v.push_back(r.value);
    s.index = argmax_first(v);
    return s;
}

std::vector<Vector> domain_corners(const Vector& lower, const Vector& upper) {
    if (lower.size() != upper.size() || lower.size() == 0) throw DimensionError("domain_corners: bad box");
    const auto n = lower.size();
    std::vector<Vector> out;
    for (long mask = 0; mask < (1L << n); ++mask) {
        Vector c(n);
        for (Eigen::Index k = 0; k < n; ++k) c[k] = (mask >> (n - 1 - k)) & 1 ? upper[k] : lower[k];
        out.push_back(c);
    }
    return out;
}

void ActiveConfig::validate() const {
    if (lower.size() == 0 || lower.size() != upper.size()) throw ConfigError("active.domain", "lower/upper sizes differ");
    if (((upper - lower).array() <= 0.0).any()) throw ConfigError("active.domain", "upper must exceed lower");
    if (update_every <= 0) throw ConfigError("active.update_every", "must be positive");
    if (budget < 0) throw ConfigError("active.budget", "must be non-negative");
    if (pool_size <= 0) throw ConfigError("active.pool_size", "must be positive");
    if (stride <= 0) throw ConfigError("active.stride", "must be positive");
    if (max_redraws < 0) throw ConfigError("active.max_redraws", "must be non-negative");
}

std::vector<Vector> ActiveResult::training_mus() const {
    std::vector<Vector> out;
    for (const auto& t : dataset.trajectories) out.push_back(t.mu);
    return out;
}

namespace {

std::string join_mu(const Vector& mu) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (Eigen::Index k = 0; k < mu.size(); ++k) s << (k ? " " : "") << mu[k];
    return s.str();
}

}  // namespace

void ActiveResult::write_log_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17) << "update,epoch,pool_mu,indicators,selected_index,selected_mu,note\n";
    for (const auto& r : log) {
        out << r.update << ',' << r.epoch << ',';
        for (std::size_t i = 0; i < r.pool.size(); ++i) out << (i ? ";" : "") << join_mu(r.pool[i]);
        out << ',';
        for (std::size_t i = 0; i < r.indicators.size(); ++i) out << (i ? ";" : "") << r.indicators[i];
        out << ',' << r.selected << ',' << (r.selected >= 0 ? join_mu(r.selected_mu) : "") << ',' << r.note << '\n';
    }
}

ActiveResult active_train(const TrajectoryDataset& initial, const AutoEncoder& ae, const PGFinn& model,
                          const LossWeights& weights, const TrainSchedule& schedule, const ActiveConfig& active,
                          const SystemConfig& cfg, const std::filesystem::path& run_dir,
                          std::function<void(const std::string&)> log) {
    active.validate();
    if (active.lower.size() != model.param_dim()) throw ConfigError("active.domain", "dimension differs from the model");
    Trainer trainer(initial, ae, model, weights, schedule);
    if (!run_dir.empty()) trainer.set_run_dir(run_dir);
    std::vector<SamplingRecord> records;
    int added = 0;
    bool stopped = false;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    trainer.set_epoch_hook([&](int done, Trainer& tr) {
        if (stopped || added >= active.budget || done % active.update_every != 0) return;
        for (int attempt = 0; attempt <= active.max_redraws; ++attempt) {
            SamplingRecord rec;
            rec.update = static_cast<int>(records.size());
            rec.epoch = done;
            std::seed_seq seq{static_cast<std::uint32_t>(active.seed), static_cast<std::uint32_t>(active.seed >> 32),
                              static_cast<std::uint32_t>(rec.update), 0xac71u};
            std::mt19937_64 rng(seq);
            for (int i = 0; i < active.pool_size; ++i) {
                Vector mu(active.lower.size());
                for (Eigen::Index k = 0; k < mu.size(); ++k)
                    mu[k] = active.lower[k] + (active.upper[k] - active.lower[k]) * unit(rng);
                rec.pool.push_back(mu);
            }
            const Selection sel = greedy_select(tr.autoencoder(), tr.model(), rec.pool, cfg, active.stride,
                                                weights.scheme, schedule.jobs);
            for (const auto& r : sel.indicators) rec.indicators.push_back(r.value);
            if (active.target_indicator > 0.0 && rec.indicators[static_cast<std::size_t>(sel.index)] < active.target_indicator) {
                rec.note = "target reached";
                records.push_back(rec);
                stopped = true;
                if (log) log("active: indicator below target at epoch " + std::to_string(done) + ", sampling stops");
                return;
            }
            const Vector chosen = rec.pool[static_cast<std::size_t>(sel.index)];
            try {
                TrajectoryDataset fresh = generate_dataset(cfg, {chosen});
                tr.dataset().trajectories.push_back(std::move(fresh.trajectories.front()));
            } catch (const std::exception& e) {
                rec.note = std::string("full-order solve failed: ") + e.what();
                records.push_back(rec);
                if (log) log("active: warning: " + rec.note + "; redrawing the pool");
                continue;
            }
            rec.selected = sel.index;
            rec.selected_mu = chosen;
            records.push_back(rec);
            ++added;
            if (log) log("active: epoch " + std::to_string(done) + " added mu = (" + join_mu(chosen) + "), indicator " +
                         std::to_string(rec.indicators[static_cast<std::size_t>(sel.index)]));
            return;
        }
    });
    trainer.run();
    ActiveResult out{trainer.autoencoder(), trainer.model(), trainer.history(), trainer.dataset(), std::move(records)};
    if (!run_dir.empty()) out.write_log_csv(run_dir / "sampling_log.csv");
    return out;
}

}  // namespace thermorom
