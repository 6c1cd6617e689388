#pragma once

// Encoder / decoder pair and the Jacobian actions of J = J_d(phi_e(u)) J_e(u).

#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "thermorom/diffcore.hpp"

namespace thermorom {

class AutoEncoder {
public:
    AutoEncoder() = default;
    AutoEncoder(DenseNet encoder, DenseNet decoder, bool trainable = true);

    /// Encoder n_u -> hidden... -> d, decoder the mirror image d -> ... -> n_u.
    static AutoEncoder symmetric(int state_dim, const std::vector<int>& hidden, int latent_dim, Activation act,
                                 std::mt19937_64& rng);
    /// Linear identity maps with no trainable parameters.
    static AutoEncoder identity(int dim);

    int state_dim() const { return encoder_.input_size(); }
    int latent_dim() const { return encoder_.output_size(); }
    bool trainable() const { return trainable_; }

    const DenseNet& encoder() const { return encoder_; }
    const DenseNet& decoder() const { return decoder_; }
    DenseNet& encoder() { return encoder_; }
    DenseNet& decoder() { return decoder_; }

    /// Encoder parameters followed by decoder parameters; zero when frozen.
    std::size_t num_params() const;
    std::vector<double> params() const;
    void set_params(std::span<const double> values);

    Vector encode(const Vector& u) const;
    Vector decode(const Vector& z) const;
    Vector reconstruct(const Vector& u) const;
    Matrix encode_batch(const Matrix& u) const;
    Matrix decode_batch(const Matrix& z) const;

    Vector encoder_jvp(const Vector& u, const Vector& v) const;
    Vector decoder_jvp(const Vector& z, const Vector& w) const;
    /// J_d(phi_e(u)) (J_e(u) v)
    Vector ae_jvp(const Vector& u, const Vector& v) const;
    /// Full n_u x n_u Jacobian of reconstruct, assembled column by column.
    Matrix jacobian(const Vector& u) const;

    void save(const std::filesystem::path& dir) const;
    static AutoEncoder load(const std::filesystem::path& dir);

private:
    void check_state(Eigen::Index n) const;
    void check_latent(Eigen::Index n) const;

    DenseNet encoder_, decoder_;
    bool trainable_ = true;
};

}  // namespace thermorom
