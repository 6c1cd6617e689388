#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "thermorom/errors.hpp"
#include "thermorom/pgfinn.hpp"
#include "thermorom/systems.hpp"

using namespace thermorom;

namespace {

PGFinn small_model(int d, int np, int k, std::uint64_t seed, int depth = 3, int width = 8) {
    std::mt19937_64 rng(seed);
    PGFinnShape s;
    s.latent_dim = d;
    s.param_dim = np;
    s.num_basis = k;
    s.depth = depth;
    s.width = width;
    PGFinn m(s, rng);
    // nonzero biases so nothing sits at a symmetric point
    auto p = m.params();
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto& x : p) x += u(rng);
    m.set_params(p);
    return m;
}

std::vector<double> slice(const std::vector<double>& p, std::size_t a, std::size_t b) {
    return {p.begin() + static_cast<long>(a), p.begin() + static_cast<long>(b)};
}

std::vector<int> sizes(int in, int out, int depth, int width) {
    std::vector<int> s{in};
    for (int i = 0; i + 1 < depth; ++i) s.push_back(width);
    s.push_back(out);
    return s;
}

// Field assembled from scratch: straight-line nets, finite-difference gradients,
// explicit triangles, explicit Q rows and dense operators.
Vector field_oracle(const PGFinn& m, const Vector& z, const Vector& mu) {
    const int d = m.latent_dim(), np = m.param_dim(), k = m.num_basis();
    const int depth = m.shape().depth, width = m.shape().width;
    const auto p = m.params();
    const auto blk = m.blocks();
    auto input = [&](const Vector& zz) {
        Vector x(d + np);
        x.head(d) = zz;
        for (int i = 0; i < np; ++i) x[d + i] = (mu[i] - m.param_offset()[i]) / m.param_scale()[i];
        return x;
    };
    auto e_fn = [&](const Vector& zz) {
        return oracle::mlp(sizes(d + np, 1, depth, width), slice(p, blk.energy, blk.entropy), "tanh", input(zz))[0];
    };
    auto s_fn = [&](const Vector& zz) {
        return oracle::mlp(sizes(d + np, 1, depth, width), slice(p, blk.entropy, blk.poisson), "tanh", input(zz))[0];
    };
    const Vector ge = oracle::fd_gradient(e_fn, z, 1e-5);
    const Vector gs = oracle::fd_gradient(s_fn, z, 1e-5);
    Matrix tl = Matrix::Zero(k, k), tm = Matrix::Zero(k, k);
    if (k >= 2) {
        const Vector out =
            oracle::mlp(sizes(d + np, k * (k - 1) / 2, depth, width), slice(p, blk.poisson, blk.friction), "tanh", input(z));
        int idx = 0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) tl(i, j) = out[idx++];
    }
    const Vector outm =
        oracle::mlp(sizes(d + np, k * (k + 1) / 2, depth, width), slice(p, blk.friction, blk.basis_l), "tanh", input(z));
    int idx = 0;
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) tm(i, j) = outm[idx++];
    Matrix qs(k, d), qe(k, d);
    for (int j = 0; j < k; ++j) {
        Matrix wl(d, d), wm(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                wl(r, c) = p[blk.basis_l + static_cast<std::size_t>(j * d * d + r * d + c)];
                wm(r, c) = p[blk.basis_m + static_cast<std::size_t>(j * d * d + r * d + c)];
            }
        qs.row(j) = ((wl - wl.transpose()) * gs).transpose();
        qe.row(j) = ((wm - wm.transpose()) * ge).transpose();
    }
    const Matrix l = qs.transpose() * (tl.transpose() - tl) * qs;
    const Matrix mm = qe.transpose() * (tm.transpose() * tm) * qe;
    return l * ge + mm * gs;
}

}  // namespace

TEST_CASE("assemble_q: 2x2 skew identity") {
    // K = 1, d = 2, known entropy with gradient (a, b)
    std::mt19937_64 rng(1);
    PGFinnShape s;
    s.latent_dim = 2;
    s.num_basis = 1;
    s.depth = 2;
    s.width = 4;
    KnownScalar ks;
    const double a = 0.7, b = -1.3;
    ks.value = [=](const Vector& z, const Vector&) { return a * z[0] + b * z[1]; };
    ks.gradient = [=](const Vector&, const Vector&) { return Vector((Vector(2) << a, b).finished()); };
    ks.hessian_vec = [](const Vector&, const Vector&, const Vector&) { return Vector(Vector::Zero(2)); };
    PGFinn m(s, rng, std::nullopt, ks);
    m.raw_basis(Operator::poisson)[0] << 0, 1, 0, 0;  // S = [[0,1],[-1,0]]
    const Matrix q = m.assemble_q(Operator::poisson, Vector::Zero(2), Vector());
    CHECK(q.rows() == 1);
    CHECK(q(0, 0) == doctest::Approx(b));
    CHECK(q(0, 1) == doctest::Approx(-a));
    CHECK(q.row(0).dot(Eigen::Vector2d(a, b)) == 0.0);
}

TEST_CASE("assemble_q kills the generating gradient and matches finite differences") {
    const PGFinn m = small_model(4, 2, 3, 9);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const Vector z = oracle::random_vector(4, rng);
        const Vector mu = oracle::random_vector(2, rng);
        for (auto which : {Operator::poisson, Operator::friction}) {
            const Vector g = which == Operator::poisson ? m.entropy_gradient(z, mu) : m.energy_gradient(z, mu);
            const Matrix q = m.assemble_q(which, z, mu);
            CHECK((q * g).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()));
            const Vector gfd = oracle::fd_gradient(
                [&](const Vector& zz) { return which == Operator::poisson ? m.entropy(zz, mu) : m.energy(zz, mu); }, z);
            for (int j = 0; j < m.num_basis(); ++j) {
                const Vector row_fd = m.skew_basis(which, j) * gfd;
                CHECK(oracle::rel_err(Vector(q.row(j).transpose()), row_fd) <= 1e-6);
            }
        }
    }
}

TEST_CASE("operators: skewness, symmetry, PSD, degeneracy") {
    std::mt19937_64 rng(4);
    for (int d : {3, 5}) {
        const PGFinn m = small_model(d, 2, d, 100 + d);
        for (int t = 0; t < 50; ++t) {
            const Vector z = oracle::random_vector(d, rng, 2.0);
            const Vector mu = oracle::random_vector(2, rng);
            const Matrix l = m.operator_l(z, mu);
            const Matrix mm = m.operator_m(z, mu);
            const double scale = std::max({1.0, l.cwiseAbs().maxCoeff(), mm.cwiseAbs().maxCoeff()});
            CHECK((l + l.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
            CHECK((mm - mm.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
            const Vector ge = m.energy_gradient(z, mu), gs = m.entropy_gradient(z, mu);
            CHECK((l * gs).cwiseAbs().maxCoeff() <= 1e-10 * scale * std::max(1.0, gs.norm()));
            CHECK((mm * ge).cwiseAbs().maxCoeff() <= 1e-10 * scale * std::max(1.0, ge.norm()));
            const Vector v = oracle::random_vector(d, rng);
            CHECK(v.dot(mm * v) >= -1e-12 * v.squaredNorm() * scale);
        }
    }
}

TEST_CASE("vector_field identities and dense assembly oracle") {
    const PGFinn m = small_model(3, 1, 2, 33);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        const Vector z = oracle::random_vector(3, rng);
        const Vector mu = oracle::random_vector(1, rng);
        const Vector f = m.vector_field(z, mu);
        const Vector ge = m.energy_gradient(z, mu), gs = m.entropy_gradient(z, mu);
        CHECK(std::abs(ge.dot(f)) <= 1e-10 * std::max(1.0, f.norm() * ge.norm()));
        CHECK(gs.dot(f) >= -1e-12);
        CHECK(gs.dot(f) == doctest::Approx(m.entropy_production(z, mu)).epsilon(1e-9));
        CHECK(oracle::rel_err(f, field_oracle(m, z, mu), 1e-6) <= 1e-6);
        // time argument ignored
        CHECK(m.vector_field(z, mu, 3.0) == f);
        // pointwise path agrees with the traced batch path
        CHECK(oracle::rel_err(f, Vector(m.trace_field(z, mu).field.col(0)), 1e-12) <= 1e-12);
    }
}

TEST_CASE("zero-weight energy net gives its bias") {
    PGFinn m = small_model(3, 1, 3, 8);
    DenseNet& e = m.energy_net();
    for (auto& p : e.params()) p = 0.0;
    e.bias(e.num_affine() - 1)[0] = 2.5;
    std::mt19937_64 rng(1);
    for (int t = 0; t < 5; ++t) CHECK(m.energy(oracle::random_vector(3, rng), oracle::random_vector(1, rng)) == 2.5);
}

TEST_CASE("known entropy for gas containers at the initial state") {
    const SystemConfig cfg = default_system(SystemKind::gas_containers);
    std::mt19937_64 rng(1);
    PGFinnShape s;
    s.latent_dim = 4;
    s.param_dim = 1;
    PGFinn m(s, rng, known_energy(cfg), known_entropy(cfg));
    const Vector z0 = gas_default_initial_state();
    const Vector mu = Vector::Constant(1, 10.0);
    CHECK(m.entropy(z0, mu) == doctest::Approx(2.60).epsilon(1e-15));
    const auto [e, sv] = system_energy_entropy("gas_containers", z0, cfg, mu);
    CHECK(m.energy(z0, mu) == doctest::Approx(e));
}

TEST_CASE("field parameter gradient vs finite differences on every block") {
    PGFinn m = small_model(3, 1, 2, 77);
    std::mt19937_64 rng(6);
    const int B = 3;
    Matrix z(3, B), mu(1, B), c(3, B);
    for (int b = 0; b < B; ++b) {
        z.col(b) = oracle::random_vector(3, rng);
        mu.col(b) = oracle::random_vector(1, rng);
        c.col(b) = oracle::random_vector(3, rng);
    }
    auto value_at = [&](const std::vector<double>& p) {
        PGFinn m2 = m;
        m2.set_params(p);
        double s = 0.0;
        for (int b = 0; b < B; ++b) s += c.col(b).dot(m2.vector_field(z.col(b), mu.col(b)));
        return s;
    };
    const FieldTrace tr = m.trace_field(z, mu);
    std::vector<double> g(m.num_params(), 0.0);
    const Matrix zadj = m.backprop_field(tr, c, g);
    const auto p = m.params();
    const auto fd = oracle::fd_gradient(value_at, p);
    const auto blk = m.blocks();
    const std::pair<std::size_t, std::size_t> ranges[] = {{blk.energy, blk.entropy},   {blk.entropy, blk.poisson},
                                                          {blk.poisson, blk.friction}, {blk.friction, blk.basis_l},
                                                          {blk.basis_l, blk.basis_m},  {blk.basis_m, blk.end}};
    for (const auto& [a, b] : ranges) {
        CAPTURE(a);
        CHECK(oracle::rel_err(slice(g, a, b), slice(fd, a, b), 1e-6) <= 1e-4);
    }
    // z adjoint
    for (int b = 0; b < B; ++b) {
        const Vector fdz = oracle::fd_gradient(
            [&](const Vector& zz) { return c.col(b).dot(m.vector_field(zz, mu.col(b))); }, Vector(z.col(b)));
        CHECK(oracle::rel_err(Vector(zadj.col(b)), fdz, 1e-6) <= 1e-4);
    }
}

TEST_CASE("field gradient with known energy and entropy") {
    const SystemConfig cfg = default_system(SystemKind::gas_containers);
    std::mt19937_64 rng(12);
    PGFinnShape s;
    s.latent_dim = 4;
    s.param_dim = 1;
    s.depth = 3;
    s.width = 6;
    PGFinn m(s, rng, known_energy(cfg), known_entropy(cfg));
    m.set_param_normalization(Vector::Constant(1, 25.5), Vector::Constant(1, 24.5));
    const int B = 2;
    Matrix z(4, B), mu(1, B), c(4, B);
    z.col(0) << 0.87, 0.44, 1.0, 1.6;
    z.col(1) << 1.1, -0.2, 1.3, 1.2;
    mu << 10.0, 33.0;
    for (int b = 0; b < B; ++b) c.col(b) = oracle::random_vector(4, rng);
    auto value_at = [&](const std::vector<double>& p) {
        PGFinn m2 = m;
        m2.set_params(p);
        double v = 0.0;
        for (int b = 0; b < B; ++b) v += c.col(b).dot(m2.vector_field(z.col(b), mu.col(b)));
        return v;
    };
    const FieldTrace tr = m.trace_field(z, mu);
    std::vector<double> g(m.num_params(), 0.0);
    const Matrix zadj = m.backprop_field(tr, c, g);
    CHECK(oracle::rel_err(g, oracle::fd_gradient(value_at, m.params()), 1e-6) <= 1e-4);
    for (int b = 0; b < B; ++b) {
        const Vector fdz = oracle::fd_gradient(
            [&](const Vector& zz) { return c.col(b).dot(m.vector_field(zz, mu.col(b))); }, Vector(z.col(b)));
        CHECK(oracle::rel_err(Vector(zadj.col(b)), fdz, 1e-6) <= 1e-4);
    }
}

TEST_CASE("B_M scaling doubles the irreversible part only") {
    PGFinn m = small_model(3, 1, 3, 55);
    const Vector z = (Vector(3) << 0.3, -0.4, 0.9).finished();
    const Vector mu = Vector::Constant(1, 0.2);
    const Vector rev = m.operator_l(z, mu) * m.energy_gradient(z, mu);
    const Vector irr = m.operator_m(z, mu) * m.entropy_gradient(z, mu);
    DenseNet& f = m.friction_net();
    const int last = f.num_affine() - 1;
    f.weight(last) *= std::sqrt(2.0);
    f.bias(last) *= std::sqrt(2.0);
    const Vector f2 = m.vector_field(z, mu);
    CHECK((f2 - (rev + 2.0 * irr)).norm() <= 1e-12 * std::max(1.0, f2.norm()));
}

TEST_CASE("entropy-only dependence leaves the friction basis untouched") {
    // d(S value)/d(theta) only touches the entropy block
    PGFinn m = small_model(3, 1, 3, 56);
    const auto blk = m.blocks();
    const Vector z = Vector::Constant(3, 0.1), mu = Vector::Constant(1, 0.3);
    auto value_at = [&](const std::vector<double>& p) {
        PGFinn m2 = m;
        m2.set_params(p);
        return m2.entropy(z, mu);
    };
    const auto fd = oracle::fd_gradient(value_at, m.params());
    for (std::size_t i = blk.basis_m; i < blk.end; ++i) CHECK(fd[i] == 0.0);
}

TEST_CASE("dimension checks") {
    const PGFinn m = small_model(3, 1, 3, 1);
    CHECK_THROWS_AS(m.vector_field(Vector::Zero(2), Vector::Zero(1)), DimensionError);
    CHECK_THROWS_AS(m.energy(Vector::Zero(3), Vector::Zero(2)), DimensionError);
}

TEST_CASE("save and load round trip") {
    PGFinn m = small_model(3, 2, 3, 91);
    m.set_param_normalization((Vector(2) << 0.8, 1.0).finished(), (Vector(2) << 0.1, 0.1).finished());
    const auto dir = std::filesystem::temp_directory_path() / "thermorom_pgfinn_test";
    std::filesystem::remove_all(dir);
    m.save(dir);
    const PGFinn back = PGFinn::load(dir);
    CHECK(back.params() == m.params());
    const Vector z = Vector::Constant(3, 0.2), mu = (Vector(2) << 0.75, 1.05).finished();
    CHECK(back.vector_field(z, mu) == m.vector_field(z, mu));

    const SystemConfig cfg = default_system(SystemKind::gas_containers);
    std::mt19937_64 rng(3);
    PGFinnShape s;
    s.latent_dim = 4;
    s.param_dim = 1;
    s.depth = 2;
    s.width = 5;
    PGFinn known(s, rng, known_energy(cfg), known_entropy(cfg));
    const auto dir2 = dir / "known";
    known.save(dir2);
    const PGFinn kb = PGFinn::load(dir2, resolve_known_function);
    CHECK(kb.has_known_energy());
    CHECK(kb.has_known_entropy());
    const Vector z0 = gas_default_initial_state(), a = Vector::Constant(1, 10.0);
    CHECK(kb.vector_field(z0, a) == known.vector_field(z0, a));
}
