#pragma once

// Parametric GENERIC surrogate.
//
//   dz/dt = L(z, mu) grad E(z, mu) + M(z, mu) grad S(z, mu)
//
// with L skew-symmetric, M symmetric positive semi-definite and the
// degeneracy conditions L grad S = 0, M grad E = 0 holding for every
// parameter value:
//
//   L = Q_S^T B_L Q_S,   row j of Q_S = (S^L_j grad S)^T,   B_L = T_L^T - T_L
//   M = Q_E^T B_M Q_E,   row j of Q_E = (S^M_j grad E)^T,   B_M = T_M^T T_M
//
// S^L_j, S^M_j are constant skew matrices W_j - W_j^T. T_L (strictly upper)
// and T_M (upper incl. diagonal) are K x K triangular matrices produced by
// networks of (z, mu). E and S are scalar networks of (z, mu), or known
// closed-form functions when the physics is available.

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermorom/diffcore.hpp"

namespace thermorom {

/// A closed-form scalar of (z, mu) with first and second derivatives in z.
struct KnownScalar {
    std::function<double(const Vector& z, const Vector& mu)> value;
    std::function<Vector(const Vector& z, const Vector& mu)> gradient;
    /// Hessian (in z) applied to v.
    std::function<Vector(const Vector& z, const Vector& mu, const Vector& v)> hessian_vec;
    /// Serializable description, used to rebuild the closure on load.
    nlohmann::json spec;
};

using KnownResolver = std::function<KnownScalar(const nlohmann::json& spec)>;

struct PGFinnShape {
    int latent_dim = 0;
    int param_dim = 0;
    int num_basis = 0;  // K; 0 selects latent_dim
    int depth = 5;      // affine layers per network
    int width = 40;
    Activation activation = Activation::tanh;
};

enum class Operator { poisson, friction };  // L and M

/// Per-sample intermediates of a batched field evaluation.
struct FieldSample {
    Vector grad_e, grad_s;
    Matrix q_s, q_e;         // K x d
    Matrix b_l, b_m, t_m;    // K x K
    Vector a, b, c, e;       // a = Q_S gE, b = B_L a, c = Q_E gS, e = B_M c
};

struct FieldTrace {
    Matrix inputs;  // (d + N_mu) x B, parameters already normalized
    Matrix z;       // d x B
    Matrix mu;      // N_mu x B, raw
    NetTrace energy, entropy, poisson, friction;
    std::vector<FieldSample> samples;
    Matrix field;   // d x B
};

class PGFinn {
public:
    PGFinn() = default;
    PGFinn(const PGFinnShape& shape, std::mt19937_64& rng, std::optional<KnownScalar> known_energy = std::nullopt,
           std::optional<KnownScalar> known_entropy = std::nullopt);

    int latent_dim() const { return shape_.latent_dim; }
    int param_dim() const { return shape_.param_dim; }
    int num_basis() const { return shape_.num_basis; }
    const PGFinnShape& shape() const { return shape_; }
    bool has_known_energy() const { return known_energy_.has_value(); }
    bool has_known_entropy() const { return known_entropy_.has_value(); }

    /// Affine normalization of mu before it enters the networks: (mu - offset) / scale.
    void set_param_normalization(Vector offset, Vector scale);
    const Vector& param_offset() const { return mu_offset_; }
    const Vector& param_scale() const { return mu_scale_; }

    // --- trainable parameters, flat ---------------------------------------
    // Order: energy net, entropy net (each omitted when known), poisson
    // triangle net (omitted when K < 2), friction triangle net, then the K raw
    // W matrices for L and the K for M, each row-major d x d.
    std::size_t num_params() const;
    std::vector<double> params() const;
    void set_params(std::span<const double> values);

    struct Blocks {
        std::size_t energy = 0, entropy = 0, poisson = 0, friction = 0, basis_l = 0, basis_m = 0, end = 0;
    };
    Blocks blocks() const;

    DenseNet& energy_net() { return energy_net_; }
    DenseNet& entropy_net() { return entropy_net_; }
    DenseNet& poisson_net() { return poisson_net_; }
    DenseNet& friction_net() { return friction_net_; }
    const DenseNet& energy_net() const { return energy_net_; }
    const DenseNet& entropy_net() const { return entropy_net_; }
    const DenseNet& poisson_net() const { return poisson_net_; }
    const DenseNet& friction_net() const { return friction_net_; }
    std::vector<Matrix>& raw_basis(Operator which) { return which == Operator::poisson ? raw_l_ : raw_m_; }
    const std::vector<Matrix>& raw_basis(Operator which) const { return which == Operator::poisson ? raw_l_ : raw_m_; }

    /// Realized skew matrix S_j = W_j - W_j^T.
    Matrix skew_basis(Operator which, int j) const;

    // --- pointwise evaluation ---------------------------------------------
    double energy(const Vector& z, const Vector& mu) const;
    double entropy(const Vector& z, const Vector& mu) const;
    Vector energy_gradient(const Vector& z, const Vector& mu) const;
    Vector entropy_gradient(const Vector& z, const Vector& mu) const;

    /// K x d; rows (S_j grad G)^T with G = S for the poisson operator and G = E for friction.
    Matrix assemble_q(Operator which, const Vector& z, const Vector& mu) const;
    /// K x K inner factor B_L or B_M.
    Matrix inner_factor(Operator which, const Vector& z, const Vector& mu) const;
    Matrix operator_l(const Vector& z, const Vector& mu) const;
    Matrix operator_m(const Vector& z, const Vector& mu) const;

    /// dz/dt. The time argument is accepted for interface symmetry and ignored.
    Vector vector_field(const Vector& z, const Vector& mu, double t = 0.0) const;
    /// grad S^T M grad S
    double entropy_production(const Vector& z, const Vector& mu) const;

    // --- batched evaluation with reverse mode ------------------------------
    FieldTrace trace_field(const Matrix& z, const Matrix& mu) const;
    /// Accumulates d(sum_b field_adj[:, b] . field[:, b]) into `grad` (length
    /// num_params(), or empty) and returns the adjoint with respect to z.
    Matrix backprop_field(const FieldTrace& tr, const Matrix& field_adj, std::span<double> grad) const;

    // --- persistence -------------------------------------------------------
    void save(const std::filesystem::path& dir) const;
    static PGFinn load(const std::filesystem::path& dir, const KnownResolver& resolver = {});

private:
    Matrix network_inputs(const Matrix& z, const Matrix& mu) const;
    Matrix scalar_gradients(const DenseNet& net, const std::optional<KnownScalar>& known, const Matrix& inputs,
                            const Matrix& z, const Matrix& mu, NetTrace* tr) const;
    Matrix triangle_poisson(const Vector& entries) const;
    Matrix triangle_friction(const Vector& entries) const;
    void check_point(const Vector& z, const Vector& mu) const;

    PGFinnShape shape_;
    DenseNet energy_net_, entropy_net_, poisson_net_, friction_net_;
    std::optional<KnownScalar> known_energy_, known_entropy_;
    std::vector<Matrix> raw_l_, raw_m_;
    Vector mu_offset_, mu_scale_;
};

/// Worst violations of the structural identities over a set of points.
/// Degeneracy residuals are divided by max(1, |L| |grad S|) and
/// max(1, |M| |grad E|) (infinity norms); the PSD entry is the largest
/// -v^T M v / |v|^2 over the supplied probe directions and the eigenvectors.
struct StructureReport {
    double skew_l = 0.0;       // |L + L^T|_inf
    double sym_m = 0.0;        // |M - M^T|_inf
    double degeneracy_l = 0.0; // |L grad S|_inf / scale
    double degeneracy_m = 0.0; // |M grad E|_inf / scale
    double psd = 0.0;          // max(0, -lambda_min(M)) relative to |v|^2

    bool ok(double sym_tol = 1e-12, double deg_tol = 1e-10, double psd_tol = 1e-12) const {
        return skew_l <= sym_tol && sym_m <= sym_tol && degeneracy_l <= deg_tol && degeneracy_m <= deg_tol &&
               psd <= psd_tol;
    }
    void merge(const StructureReport& o);
};

/// Columns of z and mu are paired points.
StructureReport check_structure(const PGFinn& model, const Matrix& z, const Matrix& mu);

}  // namespace thermorom
