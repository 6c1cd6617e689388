#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "thermorom/active.hpp"
#include "thermorom/errors.hpp"

using namespace thermorom;

namespace {

PGFinn gas_model(std::uint64_t seed, const SystemConfig& cfg) {
    std::mt19937_64 rng(seed);
    PGFinnShape s;
    s.latent_dim = 4;
    s.param_dim = 1;
    s.depth = 3;
    s.width = 10;
    PGFinn m(s, rng, known_energy(cfg), known_entropy(cfg));
    m.set_param_normalization(Vector::Constant(1, 25.5), Vector::Constant(1, 24.5));
    return m;
}

SystemConfig short_gas() {
    SystemConfig cfg = default_system(SystemKind::gas_containers);
    cfg.horizon = 1.0;
    return cfg;
}

// Backward Euler at the stored resolution: the exact discrete solution of the residual.
Matrix burgers_be_trajectory(const SystemConfig& cfg, const Vector& mu, int steps) {
    const double dx = cfg.burgers.dx() * cfg.burgers.spatial_stride;
    Matrix u(cfg.state_dim(), steps + 1);
    u.col(0) = system_initial_state(cfg, mu);
    for (int n = 1; n <= steps; ++n) u.col(n) = backward_euler_solve(u.col(n - 1), cfg.snapshot_dt(), dx);
    return u;
}

}  // namespace

TEST_CASE("residual indicator") {
    const SystemConfig cfg = default_system(SystemKind::burgers);
    const Vector mu = (Vector(2) << 0.8, 1.0).finished();
    const Matrix u = burgers_be_trajectory(cfg, mu, 200);

    const IndicatorResult exact = residual_indicator(u, mu, cfg, cfg.snapshot_dt(), 10);
    CHECK(exact.kept_steps == 20);
    CHECK(exact.value <= exact.kept_steps * 1e-10);

    const IndicatorResult full = residual_indicator(u, mu, cfg, cfg.snapshot_dt(), 1);
    const IndicatorResult one = residual_indicator(u, mu, cfg, cfg.snapshot_dt(), 200);
    CHECK(one.kept_steps == 1);
    CHECK(full.kept_steps == 200);
    const Matrix noisy = u + 1e-3 * Matrix::Random(u.rows(), u.cols());
    CHECK(residual_indicator(noisy, mu, cfg, cfg.snapshot_dt(), 200).value <=
          residual_indicator(noisy, mu, cfg, cfg.snapshot_dt(), 1).value);
    CHECK(residual_indicator(noisy, mu, cfg, cfg.snapshot_dt(), 10).value <=
          residual_indicator(noisy, mu, cfg, cfg.snapshot_dt(), 1).value);

    Matrix corrupted = u;
    corrupted.rightCols(100).array() += 0.1;
    CHECK(residual_indicator(corrupted, mu, cfg, cfg.snapshot_dt(), 10).value > exact.value);

    Matrix bad = u;
    bad(3, 50) = std::numeric_limits<double>::quiet_NaN();
    const IndicatorResult nan = residual_indicator(bad, mu, cfg, cfg.snapshot_dt(), 10);
    CHECK(nan.diverged);
    CHECK(std::isinf(nan.value));

    // gas containers: a wall position outside (0, 2) is outside the model's domain
    const SystemConfig gas = short_gas();
    Matrix g = simulate(gas, Vector::Constant(1, 5.0)).states;
    g(0, 20) = 2.5;
    CHECK(std::isinf(residual_indicator(g, Vector::Constant(1, 5.0), gas, gas.snapshot_dt(), 10).value));
    CHECK_THROWS_AS(residual_indicator(u, mu, cfg, cfg.snapshot_dt(), 0), DimensionError);
}

TEST_CASE("greedy selection") {
    CHECK(argmax_first({3.0, 7.1, 7.1}) == 1);
    CHECK(argmax_first({5.0}) == 0);
    CHECK(argmax_first({1.0, std::numeric_limits<double>::infinity(), 2.0}) == 1);
    CHECK_THROWS_AS(argmax_first({}), DimensionError);

    const SystemConfig cfg = short_gas();
    const PGFinn m = gas_model(1, cfg);
    const AutoEncoder ae = AutoEncoder::identity(4);
    std::vector<Vector> pool;
    for (double a : {1.5, 12.0, 25.0, 40.0, 49.0}) pool.push_back(Vector::Constant(1, a));
    const Selection s = greedy_select(ae, m, pool, cfg, 5, Scheme::rk4, 2);
    REQUIRE(s.indicators.size() == pool.size());
    int brute = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double v = error_indicator(ae, m, pool[i], cfg, 5, Scheme::rk4).value;
        CHECK(s.indicators[i].value == v);
        if (v > error_indicator(ae, m, pool[static_cast<std::size_t>(brute)], cfg, 5, Scheme::rk4).value)
            brute = static_cast<int>(i);
    }
    CHECK(s.index == brute);
    CHECK(greedy_select(ae, m, {pool[2]}, cfg, 5, Scheme::rk4).index == 0);
    CHECK_THROWS_AS(greedy_select(ae, m, {}, cfg), DimensionError);
}

TEST_CASE("domain corners") {
    const auto c1 = domain_corners(Vector::Constant(1, 1.0), Vector::Constant(1, 50.0));
    REQUIRE(c1.size() == 2);
    CHECK(c1[0][0] == 1.0);
    CHECK(c1[1][0] == 50.0);
    const auto c2 = domain_corners((Vector(2) << 0.7, 0.9).finished(), (Vector(2) << 0.9, 1.1).finished());
    REQUIRE(c2.size() == 4);
    CHECK(c2[1] == (Vector(2) << 0.7, 1.1).finished());
    CHECK(c2[3] == (Vector(2) << 0.9, 1.1).finished());
}

TEST_CASE("active training loop") {
    const SystemConfig cfg = short_gas();
    const Vector lo = Vector::Constant(1, 1.0), hi = Vector::Constant(1, 50.0);
    const TrajectoryDataset corners = generate_dataset(cfg, domain_corners(lo, hi));
    LossWeights w;
    w.scheme = Scheme::rk4;
    TrainSchedule sched;
    sched.phases = {{8, 25}};
    sched.adam.learning_rate = 1e-3;
    sched.seed = 3;
    sched.eval_every = 2;
    sched.checkpoint_every = 4;
    ActiveConfig ac;
    ac.lower = lo;
    ac.upper = hi;
    ac.update_every = 2;
    ac.pool_size = 6;
    ac.stride = 5;
    ac.seed = 11;

    SUBCASE("zero budget is plain training on the corners") {
        ac.budget = 0;
        const ActiveResult r = active_train(corners, AutoEncoder::identity(4), gas_model(2, cfg), w, sched, ac, cfg);
        CHECK(r.log.empty());
        CHECK(r.dataset.trajectories.size() == 2);
        Trainer plain(corners, AutoEncoder::identity(4), gas_model(2, cfg), w, sched);
        plain.run();
        CHECK(plain.model().params() == r.model.params());
    }
    SUBCASE("budgeted sampling") {
        ac.budget = 3;
        const ActiveResult r = active_train(corners, AutoEncoder::identity(4), gas_model(2, cfg), w, sched, ac, cfg);
        REQUIRE(r.log.size() == 3);
        CHECK(r.dataset.trajectories.size() == 5);
        std::set<double> seen{1.0, 50.0};
        for (std::size_t u = 0; u < r.log.size(); ++u) {
            const auto& rec = r.log[u];
            CHECK(rec.epoch == 2 * static_cast<int>(u + 1));
            CHECK(rec.pool.size() == 6);
            REQUIRE(rec.selected >= 0);
            CHECK(rec.selected == argmax_first(rec.indicators));
            CHECK(rec.selected_mu == rec.pool[static_cast<std::size_t>(rec.selected)]);
            CHECK(seen.insert(rec.selected_mu[0]).second);
            CHECK(r.dataset.trajectories[2 + u].mu == rec.selected_mu);
        }
        // the trajectory added at epoch 2 enters the pair pool at epoch 3
        CHECK(r.history.evals[1].num_pairs == 100);
        CHECK(r.history.evals[2].num_pairs == 150);
    }
    SUBCASE("reproducible") {
        ac.budget = 1;
        const ActiveResult a = active_train(corners, AutoEncoder::identity(4), gas_model(2, cfg), w, sched, ac, cfg);
        const ActiveResult b = active_train(corners, AutoEncoder::identity(4), gas_model(2, cfg), w, sched, ac, cfg);
        CHECK(a.model.params() == b.model.params());
        CHECK(a.log[0].selected_mu == b.log[0].selected_mu);
    }
    SUBCASE("config validation") {
        ac.update_every = 0;
        CHECK_THROWS_AS(ac.validate(), ConfigError);
    }
}
