// Acceptance checks: one PASS/FAIL line per criterion.
//
//   acceptance [--cache DIR] [--only 1,4,...] [--jobs N]
//
// Trained models for criteria 4-9 are cached under DIR keyed by a hash of the
// resolved configuration, so repeated runs reuse them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "oracles.hpp"
#include "thermorom/active.hpp"
#include "thermorom/config.hpp"
#include "thermorom/errors.hpp"
#include "thermorom/evalkit.hpp"
#include "thermorom/losses.hpp"
#include "thermorom/parallel.hpp"
#include "thermorom/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace thermorom;

namespace {

// ---- pinned tolerances ------------------------------------------------------
constexpr double c1_sym_tol = 1e-12;
constexpr double c1_deg_tol = 1e-10;
constexpr double c1_psd_tol = 1e-12;
constexpr int c1_draws = 1000;
constexpr double c2_grad_tol = 1e-4;
constexpr double c3_drift_tol = 1e-8;
constexpr double c3_entropy_step_tol = 1e-12;  // allowed decrease per step, absolute
constexpr double c3_gap_reduction = 0.90;
constexpr double c3_momentum_tol = 1e-12;      // relative to max(1, |p1 + p2|)
constexpr double c4_uniform_tol = 0.08;
constexpr double c5_error_tol = 0.10;
constexpr int c5_epochs = 3000;
constexpr double c6_pearson_min = 0.5;
constexpr int c6_holdout = 16;
constexpr double c7_spread_max = 50.0;
constexpr double c8_rate_tol = -1e-12;
constexpr double c8_drift_ratio_min = 8.0;
constexpr double c9_speedup_min = 10.0;

struct Line {
    int id;
    bool pass;
    std::string title;
    std::string detail;
    double seconds;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
    return h;
}

RunConfig load_config(const std::string& name, const std::vector<std::string>& overrides, std::string* resolved) {
    json tree = load_toml(fs::path(THERMOROM_CONFIG_DIR) / name);
    for (const auto& o : overrides) apply_override(tree, o);
    const json merged = merged_config(tree);
    if (resolved) *resolved = to_toml(merged);
    return run_config_from_json(merged);
}

struct Trained {
    AutoEncoder ae;
    PGFinn model;
    std::vector<Vector> training_mus;
    bool cached = false;
    double train_seconds = 0.0;
};

json mus_to_json(const std::vector<Vector>& mus) {
    json out = json::array();
    for (const auto& m : mus) out.push_back(std::vector<double>(m.data(), m.data() + m.size()));
    return out;
}

std::vector<Vector> mus_from_json(const json& j) {
    std::vector<Vector> out;
    for (const auto& m : j) {
        const auto v = m.get<std::vector<double>>();
        out.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return out;
}

class Cache {
public:
    Cache(fs::path root, int jobs) : root_(std::move(root)), jobs_(jobs) {}

    // Plain training on the configured grid (resumes from a partial run).
    Trained train(const std::string& tag, const std::string& config, const std::vector<std::string>& overrides) {
        std::string resolved;
        RunConfig rc = load_config(config, overrides, &resolved);
        rc.jobs = rc.training.jobs = jobs_;
        const fs::path dir = entry(tag, resolved);
        if (auto t = load(dir)) return *t;
        const auto t0 = std::chrono::steady_clock::now();
        const TrajectoryDataset data = generate_dataset(rc.system, rc.training_grid(), jobs_);
        std::mt19937_64 rng(rc.seed);
        AutoEncoder ae = make_autoencoder(rc, rng);
        PGFinn model = make_model(rc, rng);
        Trainer tr(data, ae, model, rc.loss, rc.training);
        tr.set_run_dir(dir);
        std::ifstream latest(dir / "checkpoints" / "latest.txt");
        std::string name;
        if (latest >> name) {
            tr.load_state(dir / "checkpoints" / name, resolve_known_function);
            std::cerr << "  [" << tag << "] resuming cached run at epoch " << tr.epochs_done() << '\n';
        }
        tr.set_progress([&](const EpochRecord& r) {
            if ((r.epoch + 1) % 500 == 0)
                std::cerr << "  [" << tag << "] epoch " << r.epoch + 1 << " loss " << fmt(r.total) << '\n';
        });
        const TrainHistory& h = tr.run();
        if (h.aborted) throw NumericalError(tag + ": training aborted: " + h.abort_reason);
        std::vector<Vector> mus;
        for (const auto& t : tr.dataset().trajectories) mus.push_back(t.mu);
        return store(dir, tr.autoencoder(), tr.model(), mus, t0);
    }

    Trained active(const std::string& tag, const std::string& config, const std::vector<std::string>& overrides) {
        std::string resolved;
        RunConfig rc = load_config(config, overrides, &resolved);
        rc.jobs = rc.training.jobs = jobs_;
        const fs::path dir = entry(tag, resolved);
        if (auto t = load(dir)) return *t;
        const auto t0 = std::chrono::steady_clock::now();
        const TrajectoryDataset corners = generate_dataset(rc.system, domain_corners(rc.data.lower, rc.data.upper));
        std::mt19937_64 rng(rc.seed);
        AutoEncoder ae = make_autoencoder(rc, rng);
        PGFinn model = make_model(rc, rng);
        const ActiveResult r = active_train(corners, ae, model, rc.loss, rc.training, rc.active, rc.system, dir,
                                            [&](const std::string& m) { std::cerr << "  [" << tag << "] " << m << '\n'; });
        if (r.history.aborted) throw NumericalError(tag + ": training aborted: " + r.history.abort_reason);
        return store(dir, r.ae, r.model, r.training_mus(), t0);
    }

private:
    fs::path entry(const std::string& tag, const std::string& resolved) const {
        char hex[20];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(resolved)));
        const fs::path dir = root_ / (tag + "-" + hex);
        fs::create_directories(dir);
        std::ofstream(dir / "config.toml") << resolved;
        return dir;
    }

    static std::optional<Trained> load(const fs::path& dir) {
        if (!fs::exists(dir / "done.json")) return std::nullopt;
        const json done = json::parse(std::ifstream(dir / "done.json"));
        Trained t{AutoEncoder::load(dir / "final" / "autoencoder"),
                  PGFinn::load(dir / "final" / "model", resolve_known_function), mus_from_json(done["training_mu"]),
                  true, done["seconds"].get<double>()};
        return t;
    }

    static Trained store(const fs::path& dir, const AutoEncoder& ae, const PGFinn& model,
                         const std::vector<Vector>& mus, std::chrono::steady_clock::time_point t0) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ae.save(dir / "final" / "autoencoder");
        model.save(dir / "final" / "model");
        std::ofstream(dir / "done.json") << json{{"training_mu", mus_to_json(mus)}, {"seconds", secs}}.dump(2);
        return {ae, model, mus, false, secs};
    }

    fs::path root_;
    int jobs_;
};

// ---- criteria ---------------------------------------------------------------

Line criterion1() {
    std::mt19937_64 rng(20240101);
    std::uniform_int_distribution<int> np_dist(1, 3);
    std::normal_distribution<double> normal(0.0, 1.0);
    StructureReport worst;
    double worst_quadratic = 0.0;
    int failures = 0;
    const int dims[] = {3, 5, 10};
    for (int i = 0; i < c1_draws; ++i) {
        const int d = dims[i % 3];
        PGFinnShape s;
        s.latent_dim = d;
        s.param_dim = np_dist(rng);
        s.depth = 3;
        s.width = 12;
        PGFinn m(s, rng);
        // theta: Glorot draw, then the skew bases rescaled so the operators are O(1) or larger
        std::vector<double> p = m.params();
        const double amp = std::exp(normal(rng));
        for (std::size_t k = m.blocks().basis_l; k < p.size(); ++k) p[k] *= amp;
        m.set_params(p);
        Matrix z(d, 1), mu(s.param_dim, 1);
        for (int k = 0; k < d; ++k) z(k, 0) = 2.0 * normal(rng);
        for (int k = 0; k < s.param_dim; ++k) mu(k, 0) = normal(rng);
        const StructureReport r = check_structure(m, z, mu);
        worst.merge(r);
        // direct quadratic-form probe, independent of the eigen-decomposition
        const Matrix M = m.operator_m(z.col(0), mu.col(0));
        for (int t = 0; t < 4; ++t) {
            Vector v(d);
            for (int k = 0; k < d; ++k) v[k] = normal(rng);
            worst_quadratic = std::max(worst_quadratic, -v.dot(M * v) / v.squaredNorm());
        }
        if (!r.ok(c1_sym_tol, c1_deg_tol, c1_psd_tol)) ++failures;
    }
    const bool pass = failures == 0 && worst_quadratic <= c1_psd_tol;
    return {1, pass, "structural guarantees",
            std::to_string(c1_draws) + " draws over d in {3,5,10}: max |L+L^T| " + fmt(worst.skew_l) + ", |M-M^T| " +
                fmt(worst.sym_m) + ", |L gradS|/scale " + fmt(worst.degeneracy_l) + ", |M gradE|/scale " +
                fmt(worst.degeneracy_m) + ", -v^T M v/|v|^2 " + fmt(std::max(worst.psd, worst_quadratic)) +
                ", violating draws " + std::to_string(failures),
            0};
}

Line criterion2() {
    std::mt19937_64 rng(77);
    const AutoEncoder ae = AutoEncoder::symmetric(6, {5}, 2, Activation::tanh, rng);
    PGFinnShape s;
    s.latent_dim = 2;
    s.param_dim = 1;
    s.num_basis = 2;
    s.depth = 3;
    s.width = 6;
    const PGFinn m(s, rng);
    LossBatch b;
    b.dt = 0.05;
    b.u.resize(6, 6);
    b.u_next.resize(6, 6);
    b.udot.resize(6, 6);
    b.mu.resize(1, 6);
    for (int c = 0; c < 6; ++c) {
        b.u.col(c) = oracle::random_vector(6, rng);
        b.u_next.col(c) = b.u.col(c) + 0.05 * oracle::random_vector(6, rng);
        b.udot.col(c) = oracle::random_vector(6, rng);
        b.mu.col(c) = oracle::random_vector(1, rng);
    }
    double worst = 0.0;
    std::string worst_case;
    const char* names[] = {"L_int", "L_rec", "L_Jac", "L_mod"};
    for (JacMode mode : {JacMode::with_derivatives, JacMode::frobenius}) {
        for (Scheme scheme : {Scheme::forward_euler, Scheme::rk4}) {
            for (int term = 0; term < 4; ++term) {
                LossWeights w;
                w.integration = term == 0;
                w.rec = term == 1;
                w.jac = term == 2;
                w.mod = term == 3;
                w.jac_mode = mode;
                w.scheme = scheme;
                const LossEval e = total_loss(b, ae, m, w, true);
                const auto fd = oracle::fd_gradient(
                    [&](const std::vector<double>& p) {
                        AutoEncoder a2 = ae;
                        PGFinn m2 = m;
                        set_joint_params(a2, m2, p);
                        return total_loss(b, a2, m2, w, false).total;
                    },
                    joint_params(ae, m));
                const double err = oracle::rel_err(e.grad, fd, 1e-6);
                if (err >= worst) {
                    worst = err;
                    worst_case = std::string(names[term]) + "/" + to_string(mode) + "/" + to_string(scheme);
                }
            }
        }
    }
    return {2, worst <= c2_grad_tol, "differentiation correctness",
            "toy N_u=6 d=2 K=2, " + std::to_string(joint_num_params(ae, m)) +
                " parameters, every term x Jacobian mode x scheme: worst relative error " + fmt(worst) + " (" +
                worst_case + ")",
            0};
}

Line criterion3() {
    SystemConfig gas = default_system(SystemKind::gas_containers);
    gas.stride = 1;
    const Vector mu = Vector::Constant(1, 10.0);
    const Trajectory t = simulate(gas, mu);
    double e0 = 0.0, drift = 0.0, s_prev = -INFINITY, worst_drop = 0.0;
    for (int n = 0; n < t.num_snapshots(); ++n) {
        const auto [e, s] = system_energy_entropy("gas_containers", t.states.col(n), gas, mu);
        if (n == 0) e0 = e;
        drift = std::max(drift, std::abs(e - e0) / std::abs(e0));
        if (n > 0) worst_drop = std::max(worst_drop, s_prev - s);
        s_prev = s;
    }
    const GasThermo a = gas_thermo(t.states.col(0)), b = gas_thermo(t.states.rightCols(1));
    const double reduction = 1.0 - std::abs(b.t1 - b.t2) / std::abs(a.t1 - a.t2);

    const SystemConfig tm = default_system(SystemKind::thermo_mass);
    const Trajectory u = simulate(tm, Vector::Constant(1, tm.thermo.alpha));
    const double p0 = u.states(2, 0) + u.states(3, 0);
    double pdev = 0.0;
    for (int n = 0; n < u.num_snapshots(); ++n) pdev = std::max(pdev, std::abs(u.states(2, n) + u.states(3, n) - p0));
    pdev /= std::max(1.0, std::abs(p0));

    const bool pass = drift <= c3_drift_tol && worst_drop <= c3_entropy_step_tol && reduction >= c3_gap_reduction &&
                      pdev <= c3_momentum_tol;
    return {3, pass, "reference physics",
            "gas RK4 dt=1e-3 t in [0,8]: energy drift " + fmt(drift) + ", largest entropy decrease " +
                fmt(worst_drop) + ", |T1-T2| reduced by " + fmt(100 * reduction) + "%; thermo-mass momentum deviation " +
                fmt(pdev),
            0};
}

ErrorMap gas_error_map(const Trained& t, const RunConfig& rc, const TrajectoryDataset& truth) {
    return error_map(t.ae, t.model, truth, t.training_mus, rc.loss.scheme, rc.jobs);
}

Line criterion4(Cache& cache, int jobs) {
    RunConfig rc = load_config("gas_alpha.toml", {}, nullptr);
    rc.jobs = jobs;
    const Trained uni = cache.train("gas_uniform", "gas_alpha.toml", {});
    const Trained act = cache.active("gas_active", "gas_alpha.toml", {});
    const TrajectoryDataset truth = generate_dataset(rc.system, rc.test_grid(), jobs);
    const ErrorMap mu_map = gas_error_map(uni, rc, truth);
    const ErrorMap ma_map = gas_error_map(act, rc, truth);
    std::ostringstream pts;
    for (std::size_t i = 0; i < act.training_mus.size(); ++i) pts << (i ? " " : "") << fmt(act.training_mus[i][0], 3);
    const bool pass = mu_map.max <= c4_uniform_tol && ma_map.max <= mu_map.max;
    return {4, pass, "gas-containers training",
            "21-point test grid, alpha in [1,50]: uniform 7 points max error " + fmt(100 * mu_map.max, 3) +
                "%, active " + std::to_string(act.training_mus.size()) + " points {" + pts.str() + "} max error " +
                fmt(100 * ma_map.max, 3) + "% (train " + fmt(uni.train_seconds, 3) + " s + " +
                fmt(act.train_seconds, 3) + " s" + (uni.cached && act.cached ? ", cached" : "") + ")",
            0};
}

const std::vector<std::string> burgers_overrides{"training.epochs=" + std::to_string(c5_epochs),
                                                  "training.checkpoint_every=500"};

Line criterion5(Cache& cache, const Trained& t, const RunConfig& rc) {
    (void)cache;
    const TrajectoryDataset truth = generate_dataset(rc.system, t.training_mus, rc.jobs);
    const ErrorMap map = error_map(t.ae, t.model, truth, t.training_mus, rc.loss.scheme, rc.jobs);
    return {5, map.max <= c5_error_tol, "Burgers desk-scale training",
            std::to_string(c5_epochs) + " epochs of the 200-100-5 schedule: max relative error over the 3x3 grid " +
                fmt(100 * map.max, 3) + "%, mean " + fmt(100 * map.mean, 3) + "% (train " +
                fmt(t.train_seconds / 60, 3) + " min" + (t.cached ? ", cached" : "") + ")",
            0};
}

Line criterion6(const Trained& t, const RunConfig& rc) {
    const auto mus = rc.holdout_points(c6_holdout);
    std::vector<double> ind(mus.size()), err(mus.size());
    parallel_for(static_cast<int>(mus.size()), rc.jobs, [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        ind[k] = error_indicator(t.ae, t.model, mus[k], rc.system, rc.active.stride, rc.loss.scheme).value;
        const Trajectory truth = simulate(rc.system, mus[k]);
        const RomRollout r = rom_rollout(t.ae, t.model, truth.states.col(0), mus[k], rc.system.snapshot_dt(),
                                         truth.num_snapshots() - 1, rc.loss.scheme);
        err[k] = r.diverged ? INFINITY : max_relative_error(r.states, truth.states);
    });
    int diverged = 0;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < mus.size(); ++i) {
        if (std::isfinite(ind[i]) && std::isfinite(err[i])) {
            x.push_back(ind[i]);
            y.push_back(err[i]);
        } else {
            ++diverged;
        }
    }
    const Correlation c = correlate(x, y);
    const auto [emin, emax] = std::minmax_element(y.begin(), y.end());
    return {6, c.pearson >= c6_pearson_min && diverged == 0, "indicator validity",
            std::to_string(c6_holdout) + " held-out mu: Pearson " + fmt(c.pearson, 3) + ", Spearman " +
                fmt(c.spearman, 3) + ", true errors " + fmt(100 * *emin, 3) + "%.." + fmt(100 * *emax, 3) +
                "%, diverged " + std::to_string(diverged),
            0};
}

Line criterion7(const Trained& t, const RunConfig& rc) {
    bool non_negative = true, monotone = true;
    std::vector<double> ratios;
    const TrajectoryDataset data = generate_dataset(rc.system, t.training_mus);
    for (const Trajectory& truth : data.trajectories) {
        const Vector& mu = truth.mu;
        const RomRollout r = rom_rollout(t.ae, t.model, truth.states.col(0), mu, rc.system.snapshot_dt(),
                                         truth.num_snapshots() - 1, rc.loss.scheme);
        if (r.diverged) {
            monotone = false;
            continue;
        }
        const BoundReport b = bound_terms(t.ae, t.model, truth, rc.system.snapshot_dt(), r.latent);
        for (const Vector* e : {&b.eps_int, &b.eps_rec, &b.eps_jac, &b.eps_mod}) {
            non_negative = non_negative && (e->array() >= 0.0).all();
            for (Eigen::Index k = 1; k < e->size(); ++k) monotone = monotone && (*e)[k] >= (*e)[k - 1];
        }
        ratios.push_back(b.ratio);
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n == 0 ? NAN : (n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]));
    const double spread = n == 0 ? INFINITY : sorted.back() / median;
    return {7, non_negative && monotone && spread < c7_spread_max, "error-bound diagnostic",
            std::to_string(n) + " training trajectories: eps terms non-negative " + (non_negative ? "yes" : "no") +
                ", non-decreasing " + (monotone ? "yes" : "no") + ", ratio |e|/sum(eps) min " +
                fmt(n ? sorted.front() : NAN, 3) + " median " + fmt(median, 3) + " max " +
                fmt(n ? sorted.back() : NAN, 3) + ", max/median " + fmt(spread, 3),
            0};
}

Line criterion8(const Trained& t, const RunConfig& rc) {
    double min_rate = INFINITY, min_ratio = INFINITY, max_drift = 0.0;
    const double dt = rc.system.snapshot_dt();
    const int steps = rc.system.num_snapshots() - 1;
    int rollouts = 0;
    for (const auto& mu : t.training_mus) {
        const Vector z0 = t.ae.encode(system_initial_state(rc.system, mu));
        const ThermoSeries a = thermo_rollout(t.model, z0, mu, dt, steps, Scheme::rk4);
        const ThermoSeries b = thermo_rollout(t.model, z0, mu, dt / 2, 2 * steps, Scheme::rk4);
        rollouts += 2;
        min_rate = std::min({min_rate, a.entropy_rate.minCoeff(), b.entropy_rate.minCoeff()});
        const double da = (a.energy.array() - a.energy[0]).abs().maxCoeff();
        const double db = (b.energy.array() - b.energy[0]).abs().maxCoeff();
        max_drift = std::max(max_drift, da);
        min_ratio = std::min(min_ratio, da / db);
    }
    return {8, min_rate >= c8_rate_tol && min_ratio >= c8_drift_ratio_min, "thermodynamic rollout",
            std::to_string(rollouts) + " RK4 latent rollouts of the Burgers model: min dS/dt " + fmt(min_rate) +
                ", max energy drift at dt=" + fmt(dt) + " " + fmt(max_drift) + ", smallest drift(dt)/drift(dt/2) " +
                fmt(min_ratio, 3),
            0};
}

Line criterion9(const Trained& t, const RunConfig& rc) {
    const Vector mu = 0.5 * (rc.data.lower + rc.data.upper);
    const TimingReport r = timing_report(t.ae, t.model, rc.system, mu, rc.loss.scheme, 15);
    return {9, r.speedup >= c9_speedup_min, "ROM speed-up",
            "Burgers N_u=200, 201 steps, single thread, median of 15: FOM " + fmt(1e3 * r.fom_median, 4) + " ms, ROM " +
                fmt(1e3 * r.rom_median, 4) + " ms, speed-up " + fmt(r.speedup, 3) + "x",
            0};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::string cache_dir = "acceptance_cache";
    std::vector<int> only;
    int jobs = 1;
    app.add_option("--cache", cache_dir, "directory for trained models");
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    app.add_option("--jobs", jobs, "worker threads for data generation and evaluation");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> want(only.begin(), only.end());
    auto enabled = [&](int i) { return want.empty() || want.count(i); };

    Cache cache(cache_dir, jobs);
    std::vector<Line> lines;
    auto run = [&](int id, const std::function<Line()>& f) {
        if (!enabled(id)) return;
        const auto t0 = std::chrono::steady_clock::now();
        Line l;
        try {
            l = f();
        } catch (const std::exception& e) {
            l = {id, false, "error", e.what(), 0};
        }
        l.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s  %s: %s [%.1f s]\n", l.id, l.pass ? "PASS" : "FAIL", l.title.c_str(),
                    l.detail.c_str(), l.seconds);
        std::fflush(stdout);
        lines.push_back(l);
    };

    run(1, criterion1);
    run(2, criterion2);
    run(3, criterion3);
    run(4, [&] { return criterion4(cache, jobs); });

    std::optional<Trained> burgers;
    RunConfig brc;
    bool need_burgers = false;
    for (int i = 5; i <= 9; ++i) need_burgers = need_burgers || enabled(i);
    std::string burgers_error;
    if (need_burgers) {
        try {
            brc = load_config("burgers.toml", burgers_overrides, nullptr);
            brc.jobs = jobs;
            burgers = cache.train("burgers", "burgers.toml", burgers_overrides);
        } catch (const std::exception& e) {
            burgers_error = e.what();
        }
    }
    auto with_burgers = [&](int id, const std::function<Line()>& f) {
        run(id, [&]() -> Line {
            if (!burgers) return {id, false, "Burgers model unavailable", burgers_error, 0};
            return f();
        });
    };
    with_burgers(5, [&] { return criterion5(cache, *burgers, brc); });
    with_burgers(6, [&] { return criterion6(*burgers, brc); });
    with_burgers(7, [&] { return criterion7(*burgers, brc); });
    with_burgers(8, [&] { return criterion8(*burgers, brc); });
    with_burgers(9, [&] { return criterion9(*burgers, brc); });

    const auto passed = std::count_if(lines.begin(), lines.end(), [](const Line& l) { return l.pass; });
    std::printf("%ld/%zu criteria passed\n", static_cast<long>(passed), lines.size());
    return passed == static_cast<long>(lines.size()) ? 0 : 1;
}
