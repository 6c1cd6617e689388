#include "thermorom/diffcore.hpp"

#include <cmath>
#include <stdexcept>

#include "thermorom/errors.hpp"

namespace thermorom {

std::string to_string(Activation act) {
    switch (act) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::linear: return "linear";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "linear") return Activation::linear;
    throw ParseError("unknown activation '" + name + "'");
}

namespace {

// 1 - 2/(e^{2a}+1): vectorised exp is cheaper than Eigen's scalar tanh for doubles,
// agrees to ~2e-16 and saturates cleanly (e^{2a} = inf gives exactly 1)
template <class Derived>
auto tanh_of(const Eigen::MatrixBase<Derived>& a) {
    return (1.0 - 2.0 / ((2.0 * a.array()).exp() + 1.0)).matrix();
}

void apply_activation(Activation act, const Matrix& a, Matrix& h) {
    switch (act) {
        case Activation::tanh: h = tanh_of(a); break;
        case Activation::relu: h = a.cwiseMax(0.0); break;
        case Activation::linear: h = a; break;
    }
}

// First derivative of the activation, given pre-activation a and output h.
Matrix activation_slope(Activation act, const Matrix& a, const Matrix& h) {
    switch (act) {
        case Activation::tanh: return (1.0 - h.array().square()).matrix();
        // subgradient 0 at the kink
        case Activation::relu: return (a.array() > 0.0).cast<double>().matrix();
        case Activation::linear: return Matrix::Ones(a.rows(), a.cols());
    }
    return {};
}

// Second derivative of tanh in terms of its output; relu and linear have none.
Matrix tanh_curvature(const Matrix& h) { return (-2.0 * h.array() * (1.0 - h.array().square())).matrix(); }

bool is_zero_seed(const Matrix& m) { return m.size() == 0; }

}  // namespace

std::size_t DenseNet::param_count(const std::vector<int>& sizes) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        n += static_cast<std::size_t>(sizes[i]) * sizes[i + 1] + sizes[i + 1];
    }
    return n;
}

DenseNet::DenseNet(std::vector<int> layer_sizes, Activation hidden)
    : sizes_(std::move(layer_sizes)), act_(hidden) {
    if (sizes_.size() < 2) throw DimensionError("DenseNet needs at least an input and an output size");
    for (int s : sizes_) {
        if (s <= 0) throw DimensionError("DenseNet layer sizes must be positive");
    }
    params_.assign(param_count(sizes_), 0.0);
    offsets_.resize(sizes_.size() - 1);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_[l] = off;
        off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
    }
}

DenseNet DenseNet::glorot_uniform(std::vector<int> layer_sizes, Activation hidden, std::mt19937_64& rng) {
    DenseNet net(std::move(layer_sizes), hidden);
    for (int l = 0; l < net.num_affine(); ++l) {
        const int fan_in = net.sizes_[l];
        const int fan_out = net.sizes_[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        auto w = net.weight(l);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
        }
    }
    return net;
}

void DenseNet::set_params(std::span<const double> values) {
    if (values.size() != params_.size()) throw DimensionError("DenseNet::set_params: size mismatch");
    std::copy(values.begin(), values.end(), params_.begin());
}

DenseNet::WeightMap DenseNet::weight(int l) {
    return WeightMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
}
DenseNet::ConstWeightMap DenseNet::weight(int l) const {
    return ConstWeightMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
}
DenseNet::BiasMap DenseNet::bias(int l) {
    return BiasMap(params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1], sizes_[l + 1]);
}
DenseNet::ConstBiasMap DenseNet::bias(int l) const {
    return ConstBiasMap(params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1],
                        sizes_[l + 1]);
}

void DenseNet::check_input(Eigen::Index rows, const char* what) const {
    if (sizes_.empty()) throw DimensionError(std::string(what) + ": empty network");
    if (rows != sizes_.front()) {
        throw DimensionError(std::string(what) + ": input has " + std::to_string(rows) + " rows, network expects " +
                             std::to_string(sizes_.front()));
    }
}

Matrix DenseNet::forward_batch(const Matrix& x) const {
    check_input(x.rows(), "DenseNet::forward");
    Matrix h = x;
    Matrix a;
    for (int l = 0; l < num_affine(); ++l) {
        a.noalias() = weight(l) * h;
        a.colwise() += bias(l);
        apply_activation(layer_activation(l), a, h);
    }
    return h;
}

Vector DenseNet::forward(const Vector& x) const { return forward_batch(x); }

NetTrace DenseNet::trace(const Matrix& x, std::span<const Matrix> tangents) const {
    check_input(x.rows(), "DenseNet::trace");
    const int L = num_affine();
    const std::size_t K = tangents.size();
    NetTrace tr;
    tr.h.resize(L + 1);
    tr.a.resize(L);
    tr.hd.assign(K, std::vector<Matrix>(L + 1));
    tr.ad.assign(K, std::vector<Matrix>(L));
    tr.h[0] = x;
    for (std::size_t k = 0; k < K; ++k) {
        if (tangents[k].rows() != x.rows() || tangents[k].cols() != x.cols()) {
            throw DimensionError("DenseNet::trace: tangent shape differs from input shape");
        }
        tr.hd[k][0] = tangents[k];
    }
    for (int l = 0; l < L; ++l) {
        const auto w = weight(l);
        const Activation act = layer_activation(l);
        tr.a[l].noalias() = w * tr.h[l];
        tr.a[l].colwise() += bias(l);
        apply_activation(act, tr.a[l], tr.h[l + 1]);
        if (K == 0) continue;
        const Matrix slope = activation_slope(act, tr.a[l], tr.h[l + 1]);
        for (std::size_t k = 0; k < K; ++k) {
            tr.ad[k][l].noalias() = w * tr.hd[k][l];
            tr.hd[k][l + 1] = act == Activation::linear ? tr.ad[k][l] : slope.cwiseProduct(tr.ad[k][l]);
        }
    }
    return tr;
}

NetInputAdjoint DenseNet::backprop(const NetTrace& tr, const NetAdjoint& seed, std::span<double> grad) const {
    const int L = num_affine();
    const std::size_t K = tr.hd.size();
    const Eigen::Index B = tr.batch();
    if (!grad.empty() && grad.size() != params_.size()) throw DimensionError("DenseNet::backprop: gradient size");
    if (seed.tangents.size() > K) throw DimensionError("DenseNet::backprop: more tangent seeds than traced tangents");

    Matrix hbar = is_zero_seed(seed.output) ? Matrix::Zero(output_size(), B) : seed.output;
    if (hbar.rows() != output_size() || hbar.cols() != B) throw DimensionError("DenseNet::backprop: output seed shape");
    std::vector<Matrix> hdbar(K);
    std::vector<bool> active(K, false);
    for (std::size_t k = 0; k < seed.tangents.size(); ++k) {
        if (is_zero_seed(seed.tangents[k])) continue;
        if (seed.tangents[k].rows() != output_size() || seed.tangents[k].cols() != B) {
            throw DimensionError("DenseNet::backprop: tangent seed shape");
        }
        hdbar[k] = seed.tangents[k];
        active[k] = true;
    }

    Matrix abar;
    std::vector<Matrix> adbar(K);
    for (int l = L - 1; l >= 0; --l) {
        const Activation act = layer_activation(l);
        const auto w = weight(l);
        if (act == Activation::linear) {
            abar = std::move(hbar);
            for (std::size_t k = 0; k < K; ++k) {
                if (active[k]) adbar[k] = std::move(hdbar[k]);
            }
        } else {
            const Matrix slope = activation_slope(act, tr.a[l], tr.h[l + 1]);
            abar = slope.cwiseProduct(hbar);
            Matrix curvature;
            if (act == Activation::tanh) curvature = tanh_curvature(tr.h[l + 1]);
            for (std::size_t k = 0; k < K; ++k) {
                if (!active[k]) continue;
                if (act == Activation::tanh) {
                    abar.array() += curvature.array() * tr.ad[k][l].array() * hdbar[k].array();
                }
                adbar[k] = slope.cwiseProduct(hdbar[k]);
            }
        }
        if (!grad.empty()) {
            const int rows = sizes_[l + 1];
            const int cols = sizes_[l];
            Eigen::Map<RowMajorMatrix> gw(grad.data() + offsets_[l], rows, cols);
            Eigen::Map<Vector> gb(grad.data() + offsets_[l] + static_cast<std::size_t>(rows) * cols, rows);
            gw.noalias() += abar * tr.h[l].transpose();
            gb.noalias() += abar.rowwise().sum();
            for (std::size_t k = 0; k < K; ++k) {
                if (active[k]) gw.noalias() += adbar[k] * tr.hd[k][l].transpose();
            }
        }
        hbar.noalias() = w.transpose() * abar;
        for (std::size_t k = 0; k < K; ++k) {
            if (active[k]) hdbar[k].noalias() = w.transpose() * adbar[k];
        }
    }

    NetInputAdjoint out;
    out.input = std::move(hbar);
    out.tangents.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        out.tangents[k] = active[k] ? std::move(hdbar[k]) : Matrix::Zero(input_size(), B);
    }
    return out;
}

Matrix DenseNet::grad_input_batch(const Matrix& x) const {
    if (output_size() != 1) throw DimensionError("DenseNet::grad_input: network output is not scalar");
    const NetTrace tr = trace(x);
    NetAdjoint seed;
    seed.output = Matrix::Ones(1, x.cols());
    return backprop(tr, seed, {}).input;
}

Vector DenseNet::grad_input(const Vector& x) const {
    if (output_size() != 1) throw DimensionError("DenseNet::grad_input: network output is not scalar");
    check_input(x.size(), "DenseNet::grad_input");
    // single point: keep only the activation slopes, then sweep back
    const int L = num_affine();
    std::vector<Vector> slope(L);
    Vector h = x;
    for (int l = 0; l < L; ++l) {
        Vector a = weight(l) * h + bias(l);
        switch (layer_activation(l)) {
            case Activation::tanh:
                h = tanh_of(a);
                slope[l] = (1.0 - h.array().square()).matrix();
                break;
            case Activation::relu:
                h = a.cwiseMax(0.0);
                slope[l] = (a.array() > 0.0).cast<double>().matrix();
                break;
            case Activation::linear:
                h = std::move(a);
                slope[l] = Vector::Ones(h.size());
                break;
        }
    }
    Vector g = Vector::Ones(1);
    for (int l = L - 1; l >= 0; --l) g = weight(l).transpose() * g.cwiseProduct(slope[l]);
    return g;
}

Vector DenseNet::jvp(const Vector& x, const Vector& v) const {
    if (v.size() != x.size()) throw DimensionError("DenseNet::jvp: direction size");
    const Matrix tangent = v;
    const NetTrace tr = trace(x, std::span<const Matrix>(&tangent, 1));
    return tr.tangent_output(0);
}

Vector DenseNet::vjp(const Vector& x, const Vector& w) const {
    if (w.size() != output_size()) throw DimensionError("DenseNet::vjp: cotangent size");
    const NetTrace tr = trace(x);
    NetAdjoint seed;
    seed.output = w;
    return backprop(tr, seed, {}).input;
}

Matrix DenseNet::jacobian(const Vector& x) const {
    Matrix jac(output_size(), input_size());
    for (int j = 0; j < input_size(); ++j) jac.col(j) = jvp(x, Vector::Unit(input_size(), j));
    return jac;
}

std::vector<double> grad_params(const ParamLoss& loss, std::span<const double> params, double* value) {
    std::vector<double> grad(params.size(), 0.0);
    const double v = loss(params, grad);
    if (!std::isfinite(v)) throw NumericalError("grad_params: loss is not finite");
    for (double g : grad) {
        if (!std::isfinite(g)) throw NumericalError("grad_params: gradient is not finite");
    }
    if (value) *value = v;
    return grad;
}

OptimState::OptimState(AdamConfig cfg, std::size_t num_params)
    : config(cfg), first_moment(Vector::Zero(num_params)), second_moment(Vector::Zero(num_params)) {}

double effective_rate(const AdamConfig& cfg, std::int64_t epoch) {
    if (cfg.decay_period <= 0) return cfg.learning_rate;
    return cfg.learning_rate * std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.decay_period));
}

void opt_step(OptimState& state, std::span<double> params, std::span<const double> grad, std::int64_t epoch) {
    const auto n = static_cast<Eigen::Index>(params.size());
    if (grad.size() != params.size() || state.first_moment.size() != n || state.second_moment.size() != n) {
        throw DimensionError("opt_step: parameter, gradient and moment sizes differ");
    }
    for (double g : grad) {
        if (!std::isfinite(g)) throw NumericalError("opt_step: non-finite gradient, step rejected");
    }
    const AdamConfig& c = state.config;
    const std::uint64_t t = state.step + 1;
    const double lr = effective_rate(c, epoch);
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double g = grad[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
    state.step = t;
}

}  // namespace thermorom
