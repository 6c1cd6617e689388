// thermorom command-line driver.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "thermorom/active.hpp"
#include "thermorom/config.hpp"
#include "thermorom/errors.hpp"
#include "thermorom/evalkit.hpp"
#include "thermorom/parallel.hpp"
#include "thermorom/snapshots.hpp"
#include "thermorom/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace thermorom;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string out_dir;
    std::vector<std::string> overrides;
    bool quiet = false;
};

struct ModelOpts {
    std::string model_dir;
};

// Thrown while assembling the configuration; mapped to the config exit code.
struct ConfigStageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json mu_json(const Vector& mu) { return std::vector<double>(mu.data(), mu.data() + mu.size()); }

std::vector<Vector> mus_from_json(const json& j) {
    std::vector<Vector> out;
    for (const auto& m : j) {
        const auto v = m.get<std::vector<double>>();
        out.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return out;
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << std::setw(2) << j << '\n';
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ParseError("cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

class Run {
public:
    Run(std::string command, const Globals& g, const fs::path& config_fallback = {})
        : command_(std::move(command)), quiet_(g.quiet), start_(std::chrono::steady_clock::now()) {
        try {
            json tree = json::object();
            fs::path source;
            if (!g.config.empty()) source = g.config;
            else if (!config_fallback.empty() && fs::exists(config_fallback)) source = config_fallback;
            if (!source.empty()) tree = load_toml(source);
            for (const auto& o : g.overrides) apply_override(tree, o);
            if (g.seed) tree["seed"] = *g.seed;
            if (g.jobs) tree["jobs"] = *g.jobs;
            merged_ = merged_config(tree);
            cfg_ = run_config_from_json(merged_);
            config_source_ = source.string();
        } catch (const ConfigError& e) {
            throw ConfigStageError(std::string("configuration error at ") + e.what());
        } catch (const ParseError& e) {
            throw ConfigStageError(std::string("configuration error: ") + e.what());
        }
        dir_ = g.out_dir.empty() ? fs::path("runs") / command_ : fs::path(g.out_dir);
        fs::create_directories(dir_);
        std::ofstream(dir_ / "config.toml") << "# resolved configuration (defaults + file + overrides)\n"
                                            << to_toml(merged_);
        manifest_ = {{"command", command_},
                     {"config_source", config_source_},
                     {"overrides", g.overrides},
                     {"seed", cfg_.seed},
                     {"jobs", cfg_.jobs},
                     {"started", now_utc()},
                     {"status", "running"},
                     {"outputs", json::array()}};
        write_manifest();
    }

    const RunConfig& cfg() const { return cfg_; }
    const fs::path& dir() const { return dir_; }
    fs::path out(const fs::path& rel) {
        manifest_["outputs"].push_back(rel.generic_string());
        fs::create_directories((dir_ / rel).parent_path());
        return dir_ / rel;
    }
    json& metrics() { return metrics_; }
    void set(const std::string& key, json v) { manifest_[key] = std::move(v); }

    void log(const std::string& msg) const {
        if (!quiet_) std::cerr << "[" << command_ << "] " << msg << '\n';
    }

    Run(const Run&) = delete;
    Run& operator=(const Run&) = delete;

    // a command that throws leaves a manifest saying so
    ~Run() {
        if (finished_ || dir_.empty()) return;
        try {
            manifest_["status"] = "failed";
            manifest_["finished"] = now_utc();
            write_manifest();
        } catch (...) {
        }
    }

    void finish(const std::string& status) {
        finished_ = true;
        if (!metrics_.is_null()) {
            write_json(dir_ / "metrics.json", metrics_);
            manifest_["outputs"].push_back("metrics.json");
        }
        manifest_["status"] = status;
        manifest_["finished"] = now_utc();
        manifest_["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_manifest();
    }

private:
    void write_manifest() const { write_json(dir_ / "manifest.json", manifest_); }

    std::string command_;
    bool quiet_;
    std::chrono::steady_clock::time_point start_;
    json merged_;
    RunConfig cfg_;
    std::string config_source_;
    bool finished_ = false;
    fs::path dir_;
    json manifest_;
    json metrics_;
};

struct LoadedModel {
    AutoEncoder ae;
    PGFinn model;
    std::vector<Vector> training_mus;
};

LoadedModel load_model(const fs::path& run_dir) {
    const fs::path final_dir = run_dir / "final";
    if (!fs::exists(final_dir)) throw ParseError("no trained model under " + final_dir.string());
    LoadedModel m{AutoEncoder::load(final_dir / "autoencoder"), PGFinn::load(final_dir / "model", resolve_known_function),
                  {}};
    if (fs::exists(run_dir / "training_mu.json")) m.training_mus = mus_from_json(read_json(run_dir / "training_mu.json"));
    return m;
}

void check_model(const RunConfig& cfg, const LoadedModel& m) {
    if (m.ae.state_dim() != cfg.system.state_dim())
        throw ConfigStageError("configuration error: model state dimension " + std::to_string(m.ae.state_dim()) +
                               " differs from the system's " + std::to_string(cfg.system.state_dim()));
    if (m.model.param_dim() != cfg.system.param_dim())
        throw ConfigStageError("configuration error: model parameter dimension differs from the system's");
}

void save_final(Run& run, const AutoEncoder& ae, const PGFinn& model, const std::vector<Vector>& mus) {
    ae.save(run.dir() / "final" / "autoencoder");
    model.save(run.dir() / "final" / "model");
    run.set("final", "final");
    json list = json::array();
    for (const auto& mu : mus) list.push_back(mu_json(mu));
    write_json(run.out("training_mu.json"), list);
}

json error_summary(const ErrorMap& map) {
    json j = {{"mean", map.mean}, {"max", map.max}};
    const auto worst = std::max_element(map.entries.begin(), map.entries.end(),
                                        [](const auto& a, const auto& b) { return a.error < b.error; });
    if (worst != map.entries.end()) j["worst_mu"] = mu_json(worst->mu);
    int diverged = 0;
    for (const auto& e : map.entries) diverged += e.diverged;
    j["diverged"] = diverged;
    return j;
}

double rom_error(const AutoEncoder& ae, const PGFinn& model, const Trajectory& truth, const SystemConfig& sys,
                 Scheme scheme) {
    const RomRollout r = rom_rollout(ae, model, truth.states.col(0), truth.mu, sys.snapshot_dt(),
                                     static_cast<int>(truth.states.cols()) - 1, scheme);
    return r.diverged ? std::numeric_limits<double>::infinity() : max_relative_error(r.states, truth.states);
}

std::string mu_label(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "mu_%03d", i);
    return buf;
}

template <class F>
void with_progress(Run& run, int epochs, int every, F&& setter) {
    setter([&run, epochs, every](const EpochRecord& r) {
        if ((r.epoch + 1) % every == 0 || r.epoch + 1 == epochs) {
            std::ostringstream s;
            s << "epoch " << r.epoch + 1 << "/" << epochs << " loss " << std::setprecision(5) << r.total << " lr "
              << r.lr;
            run.log(s.str());
        }
    });
}

// --- subcommands ------------------------------------------------------------

int cmd_gen_data(const Globals& g, const std::string& grid) {
    Run run("gen-data", g);
    const RunConfig& c = run.cfg();
    std::vector<Vector> mus;
    if (grid == "train") mus = c.training_grid();
    else if (grid == "test") mus = c.test_grid();
    else if (grid == "holdout") mus = c.holdout_points(c.data.holdout);
    else if (grid == "corners") mus = domain_corners(c.data.lower, c.data.upper);
    run.log("generating " + std::to_string(mus.size()) + " trajectories (" + grid + ")");
    TrajectoryDataset data = generate_dataset(c.system, mus, c.jobs);
    data.provenance = "thermorom gen-data --grid " + grid;
    save_snapshots(run.out("data/" + grid + ".json"), data);
    run.metrics() = {{"trajectories", mus.size()}, {"snapshots", c.system.num_snapshots()},
                     {"state_dim", c.system.state_dim()}, {"dt", c.system.snapshot_dt()}};
    run.finish("ok");
    return 0;
}

int cmd_train(const Globals& g, const std::string& data_path, bool resume) {
    Run run("train", g);
    const RunConfig& c = run.cfg();
    const fs::path data_header = run.dir() / "data" / "train.json";
    TrajectoryDataset data;
    fs::path latest_ckpt;
    if (resume) {
        std::ifstream latest(run.dir() / "checkpoints" / "latest.txt");
        std::string name;
        if (!(latest >> name)) throw ParseError("--resume: no checkpoint in " + run.dir().string());
        latest_ckpt = run.dir() / "checkpoints" / name;
        data = load_snapshots(data_header);
        for (const char* f : {"history.csv", "eval_history.csv"})
            if (fs::exists(run.dir() / f))
                fs::rename(run.dir() / f, run.dir() / (std::string(f).insert(std::string(f).size() - 4, ".before_resume")));
    } else if (!data_path.empty()) {
        data = load_snapshots(data_path);
    } else {
        run.log("generating " + std::to_string(c.training_grid().size()) + " training trajectories");
        data = generate_dataset(c.system, c.training_grid(), c.jobs);
    }
    if (data.state_dim() != c.system.state_dim())
        throw ConfigStageError("configuration error: data state dimension differs from the system's");
    if (!resume) {
        data.provenance = data_path.empty() ? "thermorom train" : "copied from " + data_path;
        save_snapshots(run.out("data/train.json"), data);
    }

    std::mt19937_64 rng(c.seed);
    AutoEncoder ae = make_autoencoder(c, rng);
    PGFinn model = make_model(c, rng);
    Trainer trainer(data, ae, model, c.loss, c.training);
    trainer.set_run_dir(run.dir());
    with_progress(run, c.training.total_epochs(), c.training.eval_every,
                  [&](auto fn) { trainer.set_progress(std::move(fn)); });
    if (resume) {
        trainer.load_state(latest_ckpt, resolve_known_function);
        run.log("resuming at epoch " + std::to_string(trainer.epochs_done()));
        run.set("resumed_from", latest_ckpt.filename().string());
    }
    const TrainHistory& h = trainer.run();
    std::vector<Vector> mus;
    for (const auto& t : trainer.dataset().trajectories) mus.push_back(t.mu);
    save_final(run, trainer.autoencoder(), trainer.model(), mus);
    run.out("history.csv");
    run.out("eval_history.csv");

    const ErrorMap map = error_map(trainer.autoencoder(), trainer.model(), trainer.dataset(), mus, c.loss.scheme, c.jobs);
    map.write_csv(run.out("error_train.csv"));
    run.metrics() = {{"epochs", trainer.epochs_done()},
                     {"aborted", h.aborted},
                     {"training_error", error_summary(map)},
                     {"parameters", joint_num_params(trainer.autoencoder(), trainer.model())}};
    if (!h.evals.empty()) run.metrics()["final_loss"] = h.evals.back().total;
    run.log("max relative error over the training set " + std::to_string(map.max));
    if (h.aborted) {
        run.metrics()["abort_reason"] = h.abort_reason;
        run.metrics()["last_good_epoch"] = h.last_good_epoch;
        run.finish("aborted");
        std::cerr << "training aborted: " << h.abort_reason << "; resume with --resume --out-dir " << run.dir()
                  << '\n';
        return exit_numerical;
    }
    run.finish("ok");
    return 0;
}

int cmd_active_train(const Globals& g) {
    Run run("active-train", g);
    const RunConfig& c = run.cfg();
    const auto corners = domain_corners(c.data.lower, c.data.upper);
    run.log("generating " + std::to_string(corners.size()) + " corner trajectories");
    TrajectoryDataset initial = generate_dataset(c.system, corners, c.jobs);
    std::mt19937_64 rng(c.seed);
    AutoEncoder ae = make_autoencoder(c, rng);
    PGFinn model = make_model(c, rng);
    const ActiveResult r =
        active_train(initial, ae, model, c.loss, c.training, c.active, c.system, run.dir(),
                     [&run](const std::string& m) { run.log(m); });
    run.out("sampling_log.csv");
    run.out("history.csv");
    run.out("eval_history.csv");
    TrajectoryDataset final_set = r.dataset;
    final_set.provenance = "thermorom active-train";
    save_snapshots(run.out("data/train.json"), final_set);
    save_final(run, r.ae, r.model, r.training_mus());
    const ErrorMap map = error_map(r.ae, r.model, r.dataset, r.training_mus(), c.loss.scheme, c.jobs);
    map.write_csv(run.out("error_train.csv"));
    json added = json::array();
    for (const auto& rec : r.log)
        if (rec.selected >= 0) added.push_back(mu_json(rec.selected_mu));
    run.metrics() = {{"aborted", r.history.aborted},
                     {"training_points", r.dataset.trajectories.size()},
                     {"added", added},
                     {"training_error", error_summary(map)}};
    if (r.history.aborted) {
        run.metrics()["abort_reason"] = r.history.abort_reason;
        run.finish("aborted");
        return exit_numerical;
    }
    run.finish("ok");
    return 0;
}

int cmd_eval_map(const Globals& g, const ModelOpts& mo, const std::string& data_path) {
    Run run("eval-map", g, fs::path(mo.model_dir) / "config.toml");
    const RunConfig& c = run.cfg();
    const LoadedModel m = load_model(mo.model_dir);
    check_model(c, m);
    TrajectoryDataset truth;
    if (!data_path.empty()) {
        truth = load_snapshots(data_path);
    } else {
        run.log("generating " + std::to_string(c.test_grid().size()) + " test trajectories");
        truth = generate_dataset(c.system, c.test_grid(), c.jobs);
    }
    ErrorMap map = error_map(m.ae, m.model, truth, m.training_mus, c.loss.scheme, c.jobs);
    map.param_names = c.system.param_names;
    map.write_csv(run.out("error_map.csv"));
    run.metrics() = error_summary(map);
    run.metrics()["points"] = map.entries.size();
    run.log("max relative error " + std::to_string(map.max) + ", mean " + std::to_string(map.mean));
    run.finish("ok");
    return 0;
}

std::vector<Vector> eval_mus(const RunConfig& c, const LoadedModel& m) {
    return m.training_mus.empty() ? c.training_grid() : m.training_mus;
}

int cmd_thermo(const Globals& g, const ModelOpts& mo) {
    Run run("thermo", g, fs::path(mo.model_dir) / "config.toml");
    const RunConfig& c = run.cfg();
    const LoadedModel m = load_model(mo.model_dir);
    check_model(c, m);
    const double dt = c.eval.thermo_dt > 0 ? c.eval.thermo_dt : c.system.snapshot_dt();
    const int steps = c.eval.thermo_steps > 0 ? c.eval.thermo_steps : c.system.num_snapshots() - 1;
    const auto mus = eval_mus(c, m);
    std::ofstream summary(run.out("thermo_summary.csv"));
    summary << std::setprecision(17) << "index,mu,min_entropy_rate,energy_drift,energy_drift_half_dt,drift_ratio\n";
    double worst_rate = std::numeric_limits<double>::infinity();
    json rows = json::array();
    for (std::size_t i = 0; i < mus.size(); ++i) {
        const Vector z0 = m.ae.encode(system_initial_state(c.system, mus[i]));
        const ThermoSeries s = thermo_rollout(m.model, z0, mus[i], dt, steps, Scheme::rk4);
        const ThermoSeries h = thermo_rollout(m.model, z0, mus[i], dt / 2, 2 * steps, Scheme::rk4);
        std::ofstream out(run.out("thermo/" + mu_label(static_cast<int>(i)) + ".csv"));
        out << std::setprecision(17) << "t,energy,entropy,entropy_rate\n";
        for (Eigen::Index k = 0; k < s.t.size(); ++k)
            out << s.t[k] << ',' << s.energy[k] << ',' << s.entropy[k] << ',' << s.entropy_rate[k] << '\n';
        auto drift = [](const ThermoSeries& x) { return (x.energy.array() - x.energy[0]).abs().maxCoeff(); };
        const double d1 = drift(s), d2 = drift(h);
        const double rate = s.entropy_rate.minCoeff();
        worst_rate = std::min(worst_rate, rate);
        summary << i << ',' << mu_json(mus[i]).dump() << ',' << rate << ',' << d1 << ',' << d2 << ','
                << (d2 > 0 ? d1 / d2 : std::numeric_limits<double>::infinity()) << '\n';
        rows.push_back({{"mu", mu_json(mus[i])}, {"min_entropy_rate", rate}, {"drift", d1}, {"drift_half_dt", d2},
                        {"diverged", s.diverged}});
    }
    run.metrics() = {{"dt", dt}, {"steps", steps}, {"min_entropy_rate", worst_rate}, {"trajectories", rows}};
    run.finish("ok");
    return 0;
}

int cmd_spectrum(const Globals& g, const ModelOpts& mo) {
    Run run("spectrum", g, fs::path(mo.model_dir) / "config.toml");
    const RunConfig& c = run.cfg();
    const LoadedModel m = load_model(mo.model_dir);
    check_model(c, m);
    const auto mus = eval_mus(c, m);
    std::ofstream cent(run.out("spectrum_centroids.csv"));
    cent << std::setprecision(17) << "index,mu";
    for (int k = 0; k < m.model.latent_dim(); ++k) cent << ",centroid_z" << k;
    cent << '\n';
    for (std::size_t i = 0; i < mus.size(); ++i) {
        const RomRollout r = rom_rollout(m.ae, m.model, system_initial_state(c.system, mus[i]), mus[i],
                                         c.system.snapshot_dt(), c.system.num_snapshots() - 1, c.loss.scheme);
        if (r.diverged) {
            run.log("rollout diverged for " + mu_json(mus[i]).dump() + ", skipped");
            continue;
        }
        const Spectrum s = latent_spectrum(r.latent, c.system.snapshot_dt());
        std::ofstream out(run.out("spectrum/" + mu_label(static_cast<int>(i)) + ".csv"));
        out << std::setprecision(17) << "frequency";
        for (Eigen::Index k = 0; k < s.magnitude.rows(); ++k) out << ",magnitude_z" << k;
        out << '\n';
        for (Eigen::Index b = 0; b < s.frequency.size(); ++b) {
            out << s.frequency[b];
            for (Eigen::Index k = 0; k < s.magnitude.rows(); ++k) out << ',' << s.magnitude(k, b);
            out << '\n';
        }
        cent << i << ",\"" << mu_json(mus[i]).dump() << '"';
        for (Eigen::Index k = 0; k < s.centroid.size(); ++k) cent << ',' << s.centroid[k];
        cent << '\n';
    }
    run.finish("ok");
    return 0;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bound(const Globals& g, const ModelOpts& mo) {
    Run run("bound", g, fs::path(mo.model_dir) / "config.toml");
    const RunConfig& c = run.cfg();
    const LoadedModel m = load_model(mo.model_dir);
    check_model(c, m);
    const auto mus = eval_mus(c, m);
    const TrajectoryDataset truth = generate_dataset(c.system, mus, c.jobs);
    std::vector<double> ratios;
    bool monotone = true, non_negative = true;
    json rows = json::array();
    for (std::size_t i = 0; i < mus.size(); ++i) {
        const Trajectory& tr = truth.trajectories[i];
        const RomRollout r = rom_rollout(m.ae, m.model, tr.states.col(0), tr.mu, c.system.snapshot_dt(),
                                         tr.num_snapshots() - 1, c.loss.scheme);
        if (r.diverged) {
            run.log("rollout diverged for " + mu_json(mus[i]).dump() + ", skipped");
            continue;
        }
        const BoundReport b = bound_terms(m.ae, m.model, tr, c.system.snapshot_dt(), r.latent);
        b.write_csv(run.out("bound/" + mu_label(static_cast<int>(i)) + ".csv"));
        for (const Vector* e : {&b.eps_int, &b.eps_rec, &b.eps_jac, &b.eps_mod}) {
            non_negative = non_negative && (e->array() >= 0.0).all();
            for (Eigen::Index k = 1; k < e->size(); ++k) monotone = monotone && (*e)[k] >= (*e)[k - 1];
        }
        ratios.push_back(b.ratio);
        rows.push_back({{"mu", mu_json(mus[i])}, {"ratio", b.ratio}});
    }
    run.metrics() = {{"non_negative", non_negative}, {"monotone", monotone}, {"trajectories", rows}};
    if (!ratios.empty()) {
        const double med = median(ratios);
        run.metrics()["ratio_max"] = *std::max_element(ratios.begin(), ratios.end());
        run.metrics()["ratio_median"] = med;
        run.metrics()["ratio_spread"] = *std::max_element(ratios.begin(), ratios.end()) / med;
    }
    run.finish("ok");
    return 0;
}

int cmd_indicator_corr(const Globals& g, const ModelOpts& mo, int count) {
    Run run("indicator-corr", g, fs::path(mo.model_dir) / "config.toml");
    const RunConfig& c = run.cfg();
    const LoadedModel m = load_model(mo.model_dir);
    check_model(c, m);
    const auto mus = c.holdout_points(count > 0 ? count : c.data.holdout);
    std::vector<double> ind(mus.size()), err(mus.size());
    parallel_for(static_cast<int>(mus.size()), c.jobs, [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        ind[k] = error_indicator(m.ae, m.model, mus[k], c.system, c.active.stride, c.loss.scheme).value;
        err[k] = rom_error(m.ae, m.model, simulate(c.system, mus[k]), c.system, c.loss.scheme);
    });
    std::ofstream out(run.out("indicator_corr.csv"));
    out << std::setprecision(17);
    for (const auto& n : c.system.param_names) out << n << ',';
    out << "indicator,max_relative_error\n";
    std::vector<double> x, y;
    for (std::size_t i = 0; i < mus.size(); ++i) {
        for (Eigen::Index k = 0; k < mus[i].size(); ++k) out << mus[i][k] << ',';
        out << ind[i] << ',' << err[i] << '\n';
        if (std::isfinite(ind[i]) && std::isfinite(err[i])) {
            x.push_back(ind[i]);
            y.push_back(err[i]);
        }
    }
    run.metrics() = {{"points", mus.size()}, {"excluded_diverged", mus.size() - x.size()}};
    const Correlation r = correlate(x, y);
    run.metrics()["pearson"] = r.pearson;
    run.metrics()["spearman"] = r.spearman;
    run.log("pearson " + std::to_string(r.pearson) + ", spearman " + std::to_string(r.spearman));
    run.finish("ok");
    return 0;
}

int cmd_timing(const Globals& g, const ModelOpts& mo, const std::vector<double>& mu_arg) {
    Run run("timing", g, fs::path(mo.model_dir) / "config.toml");
    const RunConfig& c = run.cfg();
    const LoadedModel m = load_model(mo.model_dir);
    check_model(c, m);
    Vector mu = 0.5 * (c.data.lower + c.data.upper);
    if (!mu_arg.empty()) {
        if (static_cast<int>(mu_arg.size()) != c.system.param_dim())
            throw ConfigStageError("configuration error: --mu needs " + std::to_string(c.system.param_dim()) + " values");
        mu = Eigen::Map<const Vector>(mu_arg.data(), static_cast<Eigen::Index>(mu_arg.size()));
    }
    const TimingReport t = timing_report(m.ae, m.model, c.system, mu, c.loss.scheme, c.eval.timing_repeats);
    std::ofstream out(run.out("timing.csv"));
    out << std::setprecision(9) << "repeat,fom_seconds,rom_seconds\n";
    for (std::size_t i = 0; i < t.fom_seconds.size(); ++i)
        out << i << ',' << t.fom_seconds[i] << ',' << t.rom_seconds[i] << '\n';
    run.metrics() = {{"mu", mu_json(mu)},
                     {"fom_median_seconds", t.fom_median},
                     {"rom_median_seconds", t.rom_median},
                     {"speedup", t.speedup}};
    run.log("speed-up " + std::to_string(t.speedup) + "x");
    run.finish("ok");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermodynamically consistent latent reduced-order models"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "TOML configuration file");
    app.add_option("--seed", g.seed, "seed for every random choice (overrides the config)");
    app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "run directory (default runs/<command>)");
    app.add_option("--set", g.overrides, "override a key, e.g. --set training.epochs=3000")->allow_extra_args(false);
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    std::string grid = "train";
    auto* gen = app.add_subcommand("gen-data", "generate full-order trajectories");
    gen->add_option("--grid", grid, "which parameter set")->check(CLI::IsMember({"train", "test", "holdout", "corners"}));

    std::string data_path;
    bool resume = false;
    auto* train = app.add_subcommand("train", "train on a fixed parameter set");
    train->add_option("--data", data_path, "snapshot archive header (default: generate the training grid)");
    train->add_flag("--resume", resume, "continue from the latest checkpoint in --out-dir");

    auto* active = app.add_subcommand("active-train", "train with greedy residual-based sampling");

    ModelOpts mo;
    auto with_model = [&](CLI::App* sub) {
        sub->add_option("--model", mo.model_dir, "run directory of a train or active-train run")->required();
        return sub;
    };
    std::string eval_data;
    auto* emap = with_model(app.add_subcommand("eval-map", "relative error over the test grid"));
    emap->add_option("--data", eval_data, "snapshot archive header of the truth (default: generate)");
    auto* thermo = with_model(app.add_subcommand("thermo", "energy and entropy along latent rollouts"));
    auto* spectrum = with_model(app.add_subcommand("spectrum", "Fourier spectrum of latent trajectories"));
    auto* bound = with_model(app.add_subcommand("bound", "terms of the a-posteriori error bound"));
    int count = 0;
    auto* corr = with_model(app.add_subcommand("indicator-corr", "residual indicator versus true error"));
    corr->add_option("--count", count, "held-out points (default data.holdout)");
    std::vector<double> mu_arg;
    auto* timing = with_model(app.add_subcommand("timing", "full-order versus reduced-order wall time"));
    timing->add_option("--mu", mu_arg, "parameter point (default: centre of the box)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    }

    try {
        if (*gen) return cmd_gen_data(g, grid);
        if (*train) return cmd_train(g, data_path, resume);
        if (*active) return cmd_active_train(g);
        if (*emap) return cmd_eval_map(g, mo, eval_data);
        if (*thermo) return cmd_thermo(g, mo);
        if (*spectrum) return cmd_spectrum(g, mo);
        if (*bound) return cmd_bound(g, mo);
        if (*corr) return cmd_indicator_corr(g, mo, count);
        if (*timing) return cmd_timing(g, mo, mu_arg);
    } catch (const ConfigStageError& e) {
        std::cerr << e.what() << '\n';
        return exit_config;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error at " << e.what() << '\n';
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << app.help();
    return 1;
}
