#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "thermorom/autoencoder.hpp"
#include "thermorom/errors.hpp"

using namespace thermorom;

TEST_CASE("identity autoencoder") {
    const AutoEncoder ae = AutoEncoder::identity(5);
    std::mt19937_64 rng(1);
    const Vector u = oracle::random_vector(5, rng);
    const Vector v = oracle::random_vector(5, rng);
    CHECK(ae.reconstruct(u) == u);
    CHECK(ae.ae_jvp(u, v) == v);
    CHECK(ae.num_params() == 0);
    CHECK(ae.params().empty());
}

TEST_CASE("reconstruct is decode after encode") {
    std::mt19937_64 rng(2);
    const AutoEncoder ae = AutoEncoder::symmetric(12, {8}, 3, Activation::relu, rng);
    CHECK(ae.encoder().layer_sizes() == std::vector<int>{12, 8, 3});
    CHECK(ae.decoder().layer_sizes() == std::vector<int>{3, 8, 12});
    const Vector u = oracle::random_vector(12, rng);
    CHECK(ae.reconstruct(u) == ae.decoder().forward(ae.encoder().forward(u)));
    CHECK_THROWS_AS(ae.encode(Vector::Zero(11)), DimensionError);
    CHECK_THROWS_AS(ae.decode(Vector::Zero(4)), DimensionError);
}

TEST_CASE("Burgers architecture") {
    std::mt19937_64 rng(3);
    const AutoEncoder ae = AutoEncoder::symmetric(200, {100}, 5, Activation::relu, rng);
    CHECK(ae.num_params() == 2 * (200 * 100 + 100 + 100 * 5) + 5 + 200);
    CHECK(ae.encoder().activation() == Activation::relu);
}

TEST_CASE("Jacobian actions") {
    std::mt19937_64 rng(4);
    const AutoEncoder ae = AutoEncoder::symmetric(8, {6}, 2, Activation::relu, rng);
    for (int t = 0; t < 10; ++t) {
        const Vector u = oracle::random_vector(8, rng);
        const Vector v = oracle::random_vector(8, rng);
        const Matrix j = ae.jacobian(u);
        // rank deficiency
        Eigen::FullPivLU<Matrix> lu(j);
        lu.setThreshold(1e-10);
        CHECK(lu.rank() <= 2);
        // JVP vs directional finite differences (ReLU kinks: a step this small stays on one side)
        const double h = 1e-7;
        const Vector fd = (ae.reconstruct(u + h * v) - ae.reconstruct(u - h * v)) / (2 * h);
        CHECK(oracle::rel_err(ae.ae_jvp(u, v), fd, 1e-6) <= 1e-4);
        CHECK((ae.ae_jvp(u, v) - ae.decoder_jvp(ae.encode(u), ae.encoder_jvp(u, v))).norm() <= 1e-12);
        // (I - J) v via JVPs and via the assembled Jacobian
        CHECK(((v - ae.ae_jvp(u, v)) - (v - j * v)).norm() <= 1e-10);
    }
}

TEST_CASE("parameter flattening and save/load") {
    std::mt19937_64 rng(5);
    AutoEncoder ae = AutoEncoder::symmetric(6, {4}, 2, Activation::tanh, rng);
    auto p = ae.params();
    CHECK(p.size() == ae.num_params());
    for (auto& x : p) x *= 0.5;
    ae.set_params(p);
    CHECK(ae.params() == p);
    const auto dir = std::filesystem::temp_directory_path() / "thermorom_ae_test";
    ae.save(dir);
    const AutoEncoder back = AutoEncoder::load(dir);
    CHECK(back.params() == p);
    const Vector u = Vector::LinSpaced(6, -1, 1);
    CHECK(back.reconstruct(u) == ae.reconstruct(u));
}
