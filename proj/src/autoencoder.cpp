#include "thermorom/autoencoder.hpp"

#include <fstream>

#include <json.hpp>

#include "thermorom/checkpoint.hpp"
#include "thermorom/errors.hpp"

namespace thermorom {

AutoEncoder::AutoEncoder(DenseNet encoder, DenseNet decoder, bool trainable)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)), trainable_(trainable) {
    if (encoder_.input_size() != decoder_.output_size() || encoder_.output_size() != decoder_.input_size()) {
        throw DimensionError("autoencoder: encoder and decoder shapes do not mirror each other");
    }
}

AutoEncoder AutoEncoder::symmetric(int state_dim, const std::vector<int>& hidden, int latent_dim, Activation act,
                                   std::mt19937_64& rng) {
    if (latent_dim <= 0 || state_dim <= 0) throw DimensionError("autoencoder: dimensions must be positive");
    std::vector<int> enc{state_dim};
    enc.insert(enc.end(), hidden.begin(), hidden.end());
    enc.push_back(latent_dim);
    std::vector<int> dec(enc.rbegin(), enc.rend());
    DenseNet e = DenseNet::glorot_uniform(enc, act, rng);
    DenseNet d = DenseNet::glorot_uniform(dec, act, rng);
    return AutoEncoder(std::move(e), std::move(d));
}

AutoEncoder AutoEncoder::identity(int dim) {
    DenseNet e({dim, dim}, Activation::linear);
    DenseNet d({dim, dim}, Activation::linear);
    e.weight(0).setIdentity();
    d.weight(0).setIdentity();
    return AutoEncoder(std::move(e), std::move(d), false);
}

std::size_t AutoEncoder::num_params() const {
    return trainable_ ? encoder_.num_params() + decoder_.num_params() : 0;
}

std::vector<double> AutoEncoder::params() const {
    std::vector<double> out;
    if (!trainable_) return out;
    out.reserve(num_params());
    out.insert(out.end(), encoder_.params().begin(), encoder_.params().end());
    out.insert(out.end(), decoder_.params().begin(), decoder_.params().end());
    return out;
}

void AutoEncoder::set_params(std::span<const double> values) {
    if (values.size() != num_params()) throw DimensionError("autoencoder: parameter vector has the wrong length");
    if (!trainable_) return;
    encoder_.set_params(values.first(encoder_.num_params()));
    decoder_.set_params(values.subspan(encoder_.num_params()));
}

void AutoEncoder::check_state(Eigen::Index n) const {
    if (n != state_dim()) throw DimensionError("autoencoder: state has " + std::to_string(n) + " entries, expected " +
                                               std::to_string(state_dim()));
}

void AutoEncoder::check_latent(Eigen::Index n) const {
    if (n != latent_dim()) throw DimensionError("autoencoder: latent vector has " + std::to_string(n) +
                                                " entries, expected " + std::to_string(latent_dim()));
}

Vector AutoEncoder::encode(const Vector& u) const {
    check_state(u.size());
    return encoder_.forward(u);
}

Vector AutoEncoder::decode(const Vector& z) const {
    check_latent(z.size());
    return decoder_.forward(z);
}

Vector AutoEncoder::reconstruct(const Vector& u) const { return decode(encode(u)); }

Matrix AutoEncoder::encode_batch(const Matrix& u) const {
    check_state(u.rows());
    return encoder_.forward_batch(u);
}

Matrix AutoEncoder::decode_batch(const Matrix& z) const {
    check_latent(z.rows());
    return decoder_.forward_batch(z);
}

Vector AutoEncoder::encoder_jvp(const Vector& u, const Vector& v) const {
    check_state(u.size());
    check_state(v.size());
    return encoder_.jvp(u, v);
}

Vector AutoEncoder::decoder_jvp(const Vector& z, const Vector& w) const {
    check_latent(z.size());
    check_latent(w.size());
    return decoder_.jvp(z, w);
}

Vector AutoEncoder::ae_jvp(const Vector& u, const Vector& v) const {
    check_state(u.size());
    check_state(v.size());
    const Matrix tangent = v;
    const NetTrace te = encoder_.trace(u, std::span<const Matrix>(&tangent, 1));
    const Matrix zt = te.tangent_output(0);
    const NetTrace td = decoder_.trace(te.output(), std::span<const Matrix>(&zt, 1));
    return td.tangent_output(0);
}

Matrix AutoEncoder::jacobian(const Vector& u) const {
    check_state(u.size());
    return decoder_.jacobian(encoder_.forward(u)) * encoder_.jacobian(u);
}

void AutoEncoder::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    save_net(dir / "encoder.ckpt", encoder_);
    save_net(dir / "decoder.ckpt", decoder_);
    nlohmann::json j{{"format", "thermorom-autoencoder"},
                     {"state_dim", state_dim()},
                     {"latent_dim", latent_dim()},
                     {"trainable", trainable_}};
    std::ofstream(dir / "autoencoder.json") << j.dump(2) << '\n';
}

AutoEncoder AutoEncoder::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "autoencoder.json");
    if (!in) throw ParseError("autoencoder manifest missing in " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("autoencoder manifest: ") + e.what());
    }
    return AutoEncoder(load_net(dir / "encoder.ckpt"), load_net(dir / "decoder.ckpt"), j.value("trainable", true));
}

}  // namespace thermorom
