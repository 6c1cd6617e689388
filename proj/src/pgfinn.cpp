#include "thermorom/pgfinn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "thermorom/checkpoint.hpp"
#include "thermorom/errors.hpp"

namespace thermorom {

namespace {

std::vector<int> net_sizes(const PGFinnShape& s, int out) {
    std::vector<int> sizes{s.latent_dim + s.param_dim};
    for (int i = 0; i + 1 < s.depth; ++i) sizes.push_back(s.width);
    sizes.push_back(out);
    return sizes;
}

int strict_upper_count(int k) { return k * (k - 1) / 2; }
int upper_count(int k) { return k * (k + 1) / 2; }

void copy_into(std::span<const double> src, std::vector<double>& dst) { dst.insert(dst.end(), src.begin(), src.end()); }

}  // namespace

PGFinn::PGFinn(const PGFinnShape& shape, std::mt19937_64& rng, std::optional<KnownScalar> known_energy,
               std::optional<KnownScalar> known_entropy)
    : shape_(shape), known_energy_(std::move(known_energy)), known_entropy_(std::move(known_entropy)) {
    if (shape_.latent_dim <= 0) throw DimensionError("PGFinn: latent dimension must be positive");
    if (shape_.param_dim < 0) throw DimensionError("PGFinn: negative parameter dimension");
    if (shape_.num_basis <= 0) shape_.num_basis = shape_.latent_dim;
    if (shape_.depth < 1 || shape_.width < 1) throw DimensionError("PGFinn: bad network shape");
    const int d = shape_.latent_dim;
    const int k = shape_.num_basis;

    if (!known_energy_) energy_net_ = DenseNet::glorot_uniform(net_sizes(shape_, 1), shape_.activation, rng);
    if (!known_entropy_) entropy_net_ = DenseNet::glorot_uniform(net_sizes(shape_, 1), shape_.activation, rng);
    if (k >= 2) {
        poisson_net_ = DenseNet::glorot_uniform(net_sizes(shape_, strict_upper_count(k)), shape_.activation, rng);
    }
    friction_net_ = DenseNet::glorot_uniform(net_sizes(shape_, upper_count(k)), shape_.activation, rng);

    const double limit = std::sqrt(6.0 / (2.0 * d));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto* basis : {&raw_l_, &raw_m_}) {
        basis->assign(k, Matrix(d, d));
        for (auto& w : *basis) {
            // row-major fill keeps the draw order aligned with the flat layout
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) w(i, j) = dist(rng);
            }
        }
    }
    mu_offset_ = Vector::Zero(shape_.param_dim);
    mu_scale_ = Vector::Ones(shape_.param_dim);
}

void PGFinn::set_param_normalization(Vector offset, Vector scale) {
    if (offset.size() != shape_.param_dim || scale.size() != shape_.param_dim) {
        throw DimensionError("PGFinn::set_param_normalization: size mismatch");
    }
    if ((scale.array() == 0.0).any()) throw DimensionError("PGFinn::set_param_normalization: zero scale");
    mu_offset_ = std::move(offset);
    mu_scale_ = std::move(scale);
}

PGFinn::Blocks PGFinn::blocks() const {
    Blocks b;
    std::size_t off = 0;
    b.energy = off;
    if (!known_energy_) off += energy_net_.num_params();
    b.entropy = off;
    if (!known_entropy_) off += entropy_net_.num_params();
    b.poisson = off;
    if (shape_.num_basis >= 2) off += poisson_net_.num_params();
    b.friction = off;
    off += friction_net_.num_params();
    const std::size_t dd = static_cast<std::size_t>(shape_.latent_dim) * shape_.latent_dim;
    b.basis_l = off;
    off += shape_.num_basis * dd;
    b.basis_m = off;
    off += shape_.num_basis * dd;
    b.end = off;
    return b;
}

std::size_t PGFinn::num_params() const { return blocks().end; }

std::vector<double> PGFinn::params() const {
    std::vector<double> out;
    out.reserve(num_params());
    if (!known_energy_) copy_into(energy_net_.params(), out);
    if (!known_entropy_) copy_into(entropy_net_.params(), out);
    if (shape_.num_basis >= 2) copy_into(poisson_net_.params(), out);
    copy_into(friction_net_.params(), out);
    for (const auto* basis : {&raw_l_, &raw_m_}) {
        for (const auto& w : *basis) {
            for (int i = 0; i < w.rows(); ++i) {
                for (int j = 0; j < w.cols(); ++j) out.push_back(w(i, j));
            }
        }
    }
    return out;
}

void PGFinn::set_params(std::span<const double> v) {
    const Blocks b = blocks();
    if (v.size() != b.end) throw DimensionError("PGFinn::set_params: size mismatch");
    if (!known_energy_) energy_net_.set_params(v.subspan(b.energy, energy_net_.num_params()));
    if (!known_entropy_) entropy_net_.set_params(v.subspan(b.entropy, entropy_net_.num_params()));
    if (shape_.num_basis >= 2) poisson_net_.set_params(v.subspan(b.poisson, poisson_net_.num_params()));
    friction_net_.set_params(v.subspan(b.friction, friction_net_.num_params()));
    std::size_t off = b.basis_l;
    for (auto* basis : {&raw_l_, &raw_m_}) {
        for (auto& w : *basis) {
            for (int i = 0; i < w.rows(); ++i) {
                for (int j = 0; j < w.cols(); ++j) w(i, j) = v[off++];
            }
        }
    }
}

Matrix PGFinn::skew_basis(Operator which, int j) const {
    const Matrix& w = raw_basis(which).at(j);
    return w - w.transpose();
}

void PGFinn::check_point(const Vector& z, const Vector& mu) const {
    if (z.size() != shape_.latent_dim) throw DimensionError("PGFinn: latent state has wrong size");
    if (mu.size() != shape_.param_dim) throw DimensionError("PGFinn: parameter vector has wrong size");
}

Matrix PGFinn::network_inputs(const Matrix& z, const Matrix& mu) const {
    if (z.rows() != shape_.latent_dim || mu.rows() != shape_.param_dim || z.cols() != mu.cols()) {
        throw DimensionError("PGFinn: batch shapes do not conform");
    }
    Matrix x(shape_.latent_dim + shape_.param_dim, z.cols());
    x.topRows(shape_.latent_dim) = z;
    if (shape_.param_dim > 0) {
        x.bottomRows(shape_.param_dim) =
            ((mu.colwise() - mu_offset_).array().colwise() / mu_scale_.array()).matrix();
    }
    return x;
}

double PGFinn::energy(const Vector& z, const Vector& mu) const {
    check_point(z, mu);
    if (known_energy_) return known_energy_->value(z, mu);
    return energy_net_.forward_batch(network_inputs(z, mu))(0, 0);
}

double PGFinn::entropy(const Vector& z, const Vector& mu) const {
    check_point(z, mu);
    if (known_entropy_) return known_entropy_->value(z, mu);
    return entropy_net_.forward_batch(network_inputs(z, mu))(0, 0);
}

Matrix PGFinn::scalar_gradients(const DenseNet& net, const std::optional<KnownScalar>& known, const Matrix& inputs,
                                const Matrix& z, const Matrix& mu, NetTrace* tr) const {
    const int d = shape_.latent_dim;
    Matrix g(d, z.cols());
    if (known) {
        for (Eigen::Index b = 0; b < z.cols(); ++b) g.col(b) = known->gradient(z.col(b), mu.col(b));
        return g;
    }
    *tr = net.trace(inputs);
    NetAdjoint seed;
    seed.output = Matrix::Ones(1, z.cols());
    return net.backprop(*tr, seed, {}).input.topRows(d);
}

Vector PGFinn::energy_gradient(const Vector& z, const Vector& mu) const {
    check_point(z, mu);
    NetTrace tr;
    return scalar_gradients(energy_net_, known_energy_, network_inputs(z, mu), z, mu, &tr).col(0);
}

Vector PGFinn::entropy_gradient(const Vector& z, const Vector& mu) const {
    check_point(z, mu);
    NetTrace tr;
    return scalar_gradients(entropy_net_, known_entropy_, network_inputs(z, mu), z, mu, &tr).col(0);
}

Matrix PGFinn::triangle_poisson(const Vector& entries) const {
    const int k = shape_.num_basis;
    Matrix t = Matrix::Zero(k, k);
    int idx = 0;
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) t(i, j) = entries[idx++];
    }
    return t;
}

Matrix PGFinn::triangle_friction(const Vector& entries) const {
    const int k = shape_.num_basis;
    Matrix t = Matrix::Zero(k, k);
    int idx = 0;
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) t(i, j) = entries[idx++];
    }
    return t;
}

Matrix PGFinn::assemble_q(Operator which, const Vector& z, const Vector& mu) const {
    const Vector g = which == Operator::poisson ? entropy_gradient(z, mu) : energy_gradient(z, mu);
    Matrix q(shape_.num_basis, shape_.latent_dim);
    for (int j = 0; j < shape_.num_basis; ++j) q.row(j) = (skew_basis(which, j) * g).transpose();
    return q;
}

Matrix PGFinn::inner_factor(Operator which, const Vector& z, const Vector& mu) const {
    check_point(z, mu);
    const int k = shape_.num_basis;
    const Matrix x = network_inputs(z, mu);
    if (which == Operator::poisson) {
        if (k < 2) return Matrix::Zero(k, k);
        const Matrix t = triangle_poisson(poisson_net_.forward_batch(x).col(0));
        return t.transpose() - t;
    }
    const Matrix t = triangle_friction(friction_net_.forward_batch(x).col(0));
    return t.transpose() * t;
}

Matrix PGFinn::operator_l(const Vector& z, const Vector& mu) const {
    const Matrix q = assemble_q(Operator::poisson, z, mu);
    return q.transpose() * inner_factor(Operator::poisson, z, mu) * q;
}

Matrix PGFinn::operator_m(const Vector& z, const Vector& mu) const {
    const Matrix q = assemble_q(Operator::friction, z, mu);
    return q.transpose() * inner_factor(Operator::friction, z, mu) * q;
}

Vector PGFinn::vector_field(const Vector& z, const Vector& mu, double /*t*/) const {
    check_point(z, mu);
    // pointwise path without the reverse-mode bookkeeping of trace_field
    const int d = shape_.latent_dim;
    const int k = shape_.num_basis;
    const Vector x = network_inputs(z, mu).col(0);
    const Vector ge = known_energy_ ? known_energy_->gradient(z, mu) : Vector(energy_net_.grad_input(x).head(d));
    const Vector gs = known_entropy_ ? known_entropy_->gradient(z, mu) : Vector(entropy_net_.grad_input(x).head(d));
    Matrix q_s(k, d), q_e(k, d);
    const auto& wl = raw_basis(Operator::poisson);
    const auto& wm = raw_basis(Operator::friction);
    for (int j = 0; j < k; ++j) {
        q_s.row(j).noalias() = (wl[j] * gs - wl[j].transpose() * gs).transpose();
        q_e.row(j).noalias() = (wm[j] * ge - wm[j].transpose() * ge).transpose();
    }
    Vector field = Vector::Zero(d);
    if (k >= 2) {
        const Matrix t = triangle_poisson(poisson_net_.forward(x));
        const Vector a = q_s * ge;
        field.noalias() += q_s.transpose() * (t.transpose() * a - t * a);
    }
    const Matrix t = triangle_friction(friction_net_.forward(x));
    const Vector c = q_e * gs;
    field.noalias() += q_e.transpose() * (t.transpose() * (t * c));
    if (!field.allFinite()) throw NumericalError("PGFinn: non-finite vector field");
    return field;
}

double PGFinn::entropy_production(const Vector& z, const Vector& mu) const {
    const Vector gs = entropy_gradient(z, mu);
    const Matrix q = assemble_q(Operator::friction, z, mu);
    const Vector c = q * gs;
    const Matrix t = triangle_friction(friction_net_.forward_batch(network_inputs(z, mu)).col(0));
    // c^T T^T T c = |T c|^2
    return (t * c).squaredNorm();
}

FieldTrace PGFinn::trace_field(const Matrix& z, const Matrix& mu) const {
    const int d = shape_.latent_dim;
    const int k = shape_.num_basis;
    FieldTrace tr;
    tr.inputs = network_inputs(z, mu);
    tr.z = z;
    tr.mu = mu;
    const Matrix ge = scalar_gradients(energy_net_, known_energy_, tr.inputs, z, mu, &tr.energy);
    const Matrix gs = scalar_gradients(entropy_net_, known_entropy_, tr.inputs, z, mu, &tr.entropy);
    Matrix tl_entries;
    if (k >= 2) {
        tr.poisson = poisson_net_.trace(tr.inputs);
        tl_entries = tr.poisson.output();
    }
    tr.friction = friction_net_.trace(tr.inputs);
    const Matrix& tm_entries = tr.friction.output();

    std::vector<Matrix> sl(k), sm(k);
    for (int j = 0; j < k; ++j) {
        sl[j] = skew_basis(Operator::poisson, j);
        sm[j] = skew_basis(Operator::friction, j);
    }

    const Eigen::Index batch = z.cols();
    tr.samples.resize(batch);
    tr.field.resize(d, batch);
    for (Eigen::Index col = 0; col < batch; ++col) {
        FieldSample& s = tr.samples[col];
        s.grad_e = ge.col(col);
        s.grad_s = gs.col(col);
        s.q_s.resize(k, d);
        s.q_e.resize(k, d);
        for (int j = 0; j < k; ++j) {
            s.q_s.row(j) = (sl[j] * s.grad_s).transpose();
            s.q_e.row(j) = (sm[j] * s.grad_e).transpose();
        }
        if (k >= 2) {
            const Matrix t = triangle_poisson(tl_entries.col(col));
            s.b_l = t.transpose() - t;
        } else {
            s.b_l = Matrix::Zero(k, k);
        }
        s.t_m = triangle_friction(tm_entries.col(col));
        s.b_m = s.t_m.transpose() * s.t_m;
        s.a = s.q_s * s.grad_e;
        s.b = s.b_l * s.a;
        s.c = s.q_e * s.grad_s;
        s.e = s.b_m * s.c;
        tr.field.col(col) = s.q_s.transpose() * s.b + s.q_e.transpose() * s.e;
        if (!tr.field.col(col).allFinite()) throw NumericalError("PGFinn: non-finite vector field value");
    }
    return tr;
}

Matrix PGFinn::backprop_field(const FieldTrace& tr, const Matrix& field_adj, std::span<double> grad) const {
    const int d = shape_.latent_dim;
    const int k = shape_.num_basis;
    const Eigen::Index batch = tr.z.cols();
    if (field_adj.rows() != d || field_adj.cols() != batch) throw DimensionError("PGFinn::backprop_field: adjoint shape");
    const Blocks blk = blocks();
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != blk.end) throw DimensionError("PGFinn::backprop_field: gradient size");

    std::vector<Matrix> sl(k), sm(k);
    for (int j = 0; j < k; ++j) {
        sl[j] = skew_basis(Operator::poisson, j);
        sm[j] = skew_basis(Operator::friction, j);
    }
    std::vector<Matrix> sl_bar(k, Matrix::Zero(d, d)), sm_bar(k, Matrix::Zero(d, d));

    Matrix ge_bar(d, batch), gs_bar(d, batch);
    Matrix tl_bar(std::max(strict_upper_count(k), 0), batch);
    Matrix tm_bar(upper_count(k), batch);

    for (Eigen::Index col = 0; col < batch; ++col) {
        const FieldSample& s = tr.samples[col];
        const Vector p = field_adj.col(col);

        // field = Q_S^T b + Q_E^T e
        Matrix qs_bar = s.b * p.transpose();
        const Vector b_bar = s.q_s * p;
        const Matrix bl_bar = b_bar * s.a.transpose();
        const Vector a_bar = s.b_l.transpose() * b_bar;
        qs_bar.noalias() += a_bar * s.grad_e.transpose();
        Vector ge = s.q_s.transpose() * a_bar;

        Matrix qe_bar = s.e * p.transpose();
        const Vector e_bar = s.q_e * p;
        const Matrix bm_bar = e_bar * s.c.transpose();
        const Vector c_bar = s.b_m * e_bar;
        qe_bar.noalias() += c_bar * s.grad_s.transpose();
        Vector gs = s.q_e.transpose() * c_bar;

        for (int j = 0; j < k; ++j) {
            const Vector rs = qs_bar.row(j).transpose();
            const Vector re = qe_bar.row(j).transpose();
            gs.noalias() -= sl[j] * rs;
            ge.noalias() -= sm[j] * re;
            if (want_grad) {
                sl_bar[j].noalias() += rs * s.grad_s.transpose();
                sm_bar[j].noalias() += re * s.grad_e.transpose();
            }
        }
        ge_bar.col(col) = ge;
        gs_bar.col(col) = gs;

        if (k >= 2) {
            int idx = 0;
            for (int i = 0; i < k; ++i) {
                for (int j = i + 1; j < k; ++j) tl_bar(idx++, col) = bl_bar(j, i) - bl_bar(i, j);
            }
        }
        const Matrix tm_full = s.t_m * (bm_bar + bm_bar.transpose());
        int idx = 0;
        for (int i = 0; i < k; ++i) {
            for (int j = i; j < k; ++j) tm_bar(idx++, col) = tm_full(i, j);
        }
    }

    if (want_grad) {
        std::size_t off = blk.basis_l;
        for (const auto* sbar : {&sl_bar, &sm_bar}) {
            for (const Matrix& m : *sbar) {
                const Matrix wbar = m - m.transpose();
                for (int i = 0; i < d; ++i) {
                    for (int j = 0; j < d; ++j) grad[off++] += wbar(i, j);
                }
            }
        }
    }

    Matrix z_adj = Matrix::Zero(d, batch);
    auto sub = [&](std::size_t offset, std::size_t n) {
        return want_grad ? grad.subspan(offset, n) : std::span<double>{};
    };

    if (k >= 2) {
        NetAdjoint seed;
        seed.output = tl_bar;
        z_adj += poisson_net_.backprop(tr.poisson, seed, sub(blk.poisson, poisson_net_.num_params())).input.topRows(d);
    }
    {
        NetAdjoint seed;
        seed.output = tm_bar;
        z_adj +=
            friction_net_.backprop(tr.friction, seed, sub(blk.friction, friction_net_.num_params())).input.topRows(d);
    }

    // Adjoint of an input gradient: d/d(theta, z) of gbar^T grad_z G, i.e. the
    // reverse sweep of a tangent pass along gbar.
    auto scalar_second_order = [&](const DenseNet& net, const std::optional<KnownScalar>& known, const Matrix& gbar,
                                   std::size_t offset) {
        if (known) {
            for (Eigen::Index col = 0; col < batch; ++col) {
                z_adj.col(col) += known->hessian_vec(tr.z.col(col), tr.mu.col(col), gbar.col(col));
            }
            return;
        }
        Matrix tangent = Matrix::Zero(tr.inputs.rows(), batch);
        tangent.topRows(d) = gbar;
        const NetTrace dual = net.trace(tr.inputs, std::span<const Matrix>(&tangent, 1));
        NetAdjoint seed;
        seed.tangents.push_back(Matrix::Ones(1, batch));
        z_adj += net.backprop(dual, seed, sub(offset, net.num_params())).input.topRows(d);
    };
    scalar_second_order(energy_net_, known_energy_, ge_bar, blk.energy);
    scalar_second_order(entropy_net_, known_entropy_, gs_bar, blk.entropy);
    return z_adj;
}

void PGFinn::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json m;
    m["format"] = "thermorom-pgfinn";
    m["version"] = 1;
    m["latent_dim"] = shape_.latent_dim;
    m["param_dim"] = shape_.param_dim;
    m["num_basis"] = shape_.num_basis;
    m["depth"] = shape_.depth;
    m["width"] = shape_.width;
    m["activation"] = to_string(shape_.activation);
    m["known_energy"] = known_energy_ ? known_energy_->spec : nlohmann::json(nullptr);
    m["known_entropy"] = known_entropy_ ? known_entropy_->spec : nlohmann::json(nullptr);
    m["param_offset"] = std::vector<double>(mu_offset_.data(), mu_offset_.data() + mu_offset_.size());
    m["param_scale"] = std::vector<double>(mu_scale_.data(), mu_scale_.data() + mu_scale_.size());
    std::ofstream(dir / "manifest.json") << m.dump(2) << "\n";

    if (!known_energy_) save_net(dir / "energy.ckpt", energy_net_);
    if (!known_entropy_) save_net(dir / "entropy.ckpt", entropy_net_);
    if (shape_.num_basis >= 2) save_net(dir / "poisson.ckpt", poisson_net_);
    save_net(dir / "friction.ckpt", friction_net_);
    const int d = shape_.latent_dim;
    for (auto which : {Operator::poisson, Operator::friction}) {
        CheckpointRecord rec;
        rec.header.kind = CheckpointKind::tensor;
        rec.header.shape = {shape_.num_basis, d, d};
        for (const auto& w : raw_basis(which)) {
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) rec.values.push_back(w(i, j));
            }
        }
        write_checkpoint(dir / (which == Operator::poisson ? "basis_l.ckpt" : "basis_m.ckpt"), rec);
    }
}

PGFinn PGFinn::load(const std::filesystem::path& dir, const KnownResolver& resolver) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ParseError("missing PGFinn manifest in " + dir.string());
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("PGFinn manifest: ") + e.what());
    }
    PGFinn model;
    try {
        model.shape_.latent_dim = m.at("latent_dim");
        model.shape_.param_dim = m.at("param_dim");
        model.shape_.num_basis = m.at("num_basis");
        model.shape_.depth = m.at("depth");
        model.shape_.width = m.at("width");
        model.shape_.activation = activation_from_string(m.at("activation"));
        auto resolve = [&](const nlohmann::json& spec) -> std::optional<KnownScalar> {
            if (spec.is_null()) return std::nullopt;
            if (!resolver) throw ParseError("PGFinn manifest uses known functions but no resolver was given");
            return resolver(spec);
        };
        model.known_energy_ = resolve(m.at("known_energy"));
        model.known_entropy_ = resolve(m.at("known_entropy"));
        const auto off = m.at("param_offset").get<std::vector<double>>();
        const auto sc = m.at("param_scale").get<std::vector<double>>();
        model.mu_offset_ = Eigen::Map<const Vector>(off.data(), static_cast<Eigen::Index>(off.size()));
        model.mu_scale_ = Eigen::Map<const Vector>(sc.data(), static_cast<Eigen::Index>(sc.size()));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("PGFinn manifest: ") + e.what());
    }
    if (!model.known_energy_) model.energy_net_ = load_net(dir / "energy.ckpt");
    if (!model.known_entropy_) model.entropy_net_ = load_net(dir / "entropy.ckpt");
    if (model.shape_.num_basis >= 2) model.poisson_net_ = load_net(dir / "poisson.ckpt");
    model.friction_net_ = load_net(dir / "friction.ckpt");
    const int d = model.shape_.latent_dim;
    const int k = model.shape_.num_basis;
    for (auto which : {Operator::poisson, Operator::friction}) {
        const CheckpointRecord rec =
            read_checkpoint(dir / (which == Operator::poisson ? "basis_l.ckpt" : "basis_m.ckpt"));
        if (rec.values.size() != static_cast<std::size_t>(k) * d * d) throw ParseError("PGFinn: basis size mismatch");
        auto& basis = model.raw_basis(which);
        basis.assign(k, Matrix(d, d));
        std::size_t idx = 0;
        for (auto& w : basis) {
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) w(i, j) = rec.values[idx++];
            }
        }
    }
    return model;
}

void StructureReport::merge(const StructureReport& o) {
    skew_l = std::max(skew_l, o.skew_l);
    sym_m = std::max(sym_m, o.sym_m);
    degeneracy_l = std::max(degeneracy_l, o.degeneracy_l);
    degeneracy_m = std::max(degeneracy_m, o.degeneracy_m);
    psd = std::max(psd, o.psd);
}

StructureReport check_structure(const PGFinn& model, const Matrix& z, const Matrix& mu) {
    if (z.cols() != mu.cols()) throw DimensionError("check_structure: z and mu column counts differ");
    StructureReport rep;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const Vector zc = z.col(c), mc = mu.col(c);
        const Matrix l = model.operator_l(zc, mc);
        const Matrix m = model.operator_m(zc, mc);
        const Vector ge = model.energy_gradient(zc, mc);
        const Vector gs = model.entropy_gradient(zc, mc);
        StructureReport r;
        r.skew_l = (l + l.transpose()).cwiseAbs().maxCoeff();
        r.sym_m = (m - m.transpose()).cwiseAbs().maxCoeff();
        const double scale_l = std::max(1.0, l.cwiseAbs().rowwise().sum().maxCoeff() * gs.cwiseAbs().maxCoeff());
        const double scale_m = std::max(1.0, m.cwiseAbs().rowwise().sum().maxCoeff() * ge.cwiseAbs().maxCoeff());
        r.degeneracy_l = (l * gs).cwiseAbs().maxCoeff() / scale_l;
        r.degeneracy_m = (m * ge).cwiseAbs().maxCoeff() / scale_m;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
        r.psd = std::max(0.0, -eig.eigenvalues().minCoeff());
        rep.merge(r);
    }
    return rep;
}

}  // namespace thermorom
