#pragma once

// Dense multilayer perceptrons with exact derivatives.
//
// A DenseNet maps R^{n0} -> R^{nL} through L affine layers; hidden layers
// apply the configured activation, the output layer is affine. Batches are
// column-major: one sample per column.
//
// Derivatives are hand-written reverse mode over a "dual" forward pass that
// carries any number of tangent directions alongside the values. This one
// mechanism gives input gradients, Jacobian actions (JVP / VJP), parameter
// gradients, and the second-order terms needed when a loss depends on an
// input-gradient or a Jacobian-vector product.
//
// Canonical flat parameter order: layer-major; within a layer the weight
// matrix (rows = outputs) in row-major order, followed by the bias.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace thermorom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { tanh, relu, linear };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Values and tangents recorded by DenseNet::trace, consumed by backprop.
struct NetTrace {
    // h[l] is the input of affine layer l; h[L] is the network output.
    std::vector<Matrix> h;
    // a[l] is the pre-activation of layer l.
    std::vector<Matrix> a;
    // hd[k][l], ad[k][l]: tangent k of h[l], a[l].
    std::vector<std::vector<Matrix>> hd;
    std::vector<std::vector<Matrix>> ad;

    const Matrix& output() const { return h.back(); }
    const Matrix& tangent_output(std::size_t k) const { return hd[k].back(); }
    Eigen::Index batch() const { return h.front().cols(); }
};

/// Adjoint seeds for the trace outputs. An empty (0x0) matrix stands for zero.
struct NetAdjoint {
    Matrix output;
    std::vector<Matrix> tangents;
};

/// Adjoints propagated back to the trace inputs.
struct NetInputAdjoint {
    Matrix input;
    std::vector<Matrix> tangents;
};

class DenseNet {
public:
    using WeightMap = Eigen::Map<RowMajorMatrix>;
    using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
    using BiasMap = Eigen::Map<Vector>;
    using ConstBiasMap = Eigen::Map<const Vector>;

    DenseNet() = default;
    /// All parameters zero.
    DenseNet(std::vector<int> layer_sizes, Activation hidden);

    /// Glorot-uniform weights, zero biases.
    static DenseNet glorot_uniform(std::vector<int> layer_sizes, Activation hidden, std::mt19937_64& rng);

    static std::size_t param_count(const std::vector<int>& layer_sizes);

    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    int num_affine() const { return static_cast<int>(sizes_.size()) - 1; }
    const std::vector<int>& layer_sizes() const { return sizes_; }
    Activation activation() const { return act_; }

    std::size_t num_params() const { return params_.size(); }
    std::span<const double> params() const { return params_; }
    std::span<double> params() { return params_; }
    void set_params(std::span<const double> values);

    WeightMap weight(int layer);
    ConstWeightMap weight(int layer) const;
    BiasMap bias(int layer);
    ConstBiasMap bias(int layer) const;

    /// Offset of layer `layer`'s weights in the flat vector; its bias follows the weights.
    std::size_t weight_offset(int layer) const { return offsets_[layer]; }

    Vector forward(const Vector& x) const;
    Matrix forward_batch(const Matrix& x) const;

    /// Gradient of a scalar-output net with respect to its input.
    Vector grad_input(const Vector& x) const;
    /// Input gradients for a batch of scalar outputs, one column per sample.
    Matrix grad_input_batch(const Matrix& x) const;

    /// J(x) v
    Vector jvp(const Vector& x, const Vector& v) const;
    /// w^T J(x), returned as a column vector
    Vector vjp(const Vector& x, const Vector& w) const;
    Matrix jacobian(const Vector& x) const;

    /// Dual forward pass: values of `x` plus each tangent direction in `tangents`
    /// (each the same shape as `x`).
    NetTrace trace(const Matrix& x, std::span<const Matrix> tangents = {}) const;

    /// Reverse sweep through a trace. Parameter adjoints are accumulated into
    /// `grad` (length num_params(), or empty to skip).
    NetInputAdjoint backprop(const NetTrace& tr, const NetAdjoint& seed, std::span<double> grad) const;

private:
    Activation layer_activation(int layer) const { return layer + 1 == num_affine() ? Activation::linear : act_; }
    void check_input(Eigen::Index rows, const char* what) const;

    std::vector<int> sizes_;
    Activation act_ = Activation::linear;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;
};

/// Value-and-gradient callback over a flat parameter vector. The callback
/// writes the gradient into its second argument and returns the loss.
using ParamLoss = std::function<double(std::span<const double>, std::span<double>)>;

/// Evaluates `loss` and returns its gradient. Throws NumericalError when the
/// loss or any gradient entry is non-finite.
std::vector<double> grad_params(const ParamLoss& loss, std::span<const double> params, double* value = nullptr);

// ---------------------------------------------------------------------------
// Adaptive-moment optimizer with step-decay learning rate.

struct AdamConfig {
    double learning_rate = 1e-4;
    double decay_factor = 0.99;
    int decay_period = 2000;  // epochs
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimState {
    AdamConfig config;
    std::uint64_t step = 0;
    Vector first_moment;
    Vector second_moment;

    OptimState() = default;
    OptimState(AdamConfig cfg, std::size_t num_params);
};

/// base * factor^floor(epoch / period)
double effective_rate(const AdamConfig& cfg, std::int64_t epoch);

/// One bias-corrected Adam update. On a non-finite gradient the state and
/// parameters are left untouched and NumericalError is thrown.
void opt_step(OptimState& state, std::span<double> params, std::span<const double> grad, std::int64_t epoch);

}  // namespace thermorom
