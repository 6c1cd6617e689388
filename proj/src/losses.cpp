#include "thermorom/losses.hpp"

#include <cmath>

#include "thermorom/errors.hpp"
#include "thermorom/parallel.hpp"

namespace thermorom {

namespace {

constexpr int kChunk = 32;

bool empty(const Matrix& m) { return m.size() == 0; }

// Forward and reverse through one latent step starting at z.
struct StepTrace {
    Scheme scheme = Scheme::forward_euler;
    std::vector<FieldTrace> stages;  // stage 0 evaluates at z itself
    Matrix next;
};

StepTrace trace_step(const PGFinn& model, Scheme scheme, const Matrix& z, const Matrix& mu, double dt,
                     FieldTrace first) {
    StepTrace st;
    st.scheme = scheme;
    st.stages.reserve(4);
    st.stages.push_back(std::move(first));
    const Matrix& k1 = st.stages[0].field;
    if (scheme == Scheme::forward_euler) {
        st.next = z + dt * k1;
        return st;
    }
    st.stages.push_back(model.trace_field(z + 0.5 * dt * k1, mu));
    st.stages.push_back(model.trace_field(z + 0.5 * dt * st.stages[1].field, mu));
    st.stages.push_back(model.trace_field(z + dt * st.stages[2].field, mu));
    st.next = z + (dt / 6.0) * (k1 + 2.0 * st.stages[1].field + 2.0 * st.stages[2].field + st.stages[3].field);
    return st;
}

// Given the adjoint of step(z) and an extra adjoint on stage-0's field,
// accumulates model gradients and returns the adjoint of z.
Matrix backprop_step(const PGFinn& model, const StepTrace& st, double dt, const Matrix& next_adj,
                     const Matrix& k1_extra, std::span<double> grad) {
    if (st.scheme == Scheme::forward_euler) {
        Matrix k1_adj = dt * next_adj;
        if (!empty(k1_extra)) k1_adj += k1_extra;
        return next_adj + model.backprop_field(st.stages[0], k1_adj, grad);
    }
    const double w = dt / 6.0;
    const Matrix y4 = model.backprop_field(st.stages[3], w * next_adj, grad);
    const Matrix y3 = model.backprop_field(st.stages[2], 2.0 * w * next_adj + dt * y4, grad);
    const Matrix y2 = model.backprop_field(st.stages[1], 2.0 * w * next_adj + 0.5 * dt * y3, grad);
    Matrix k1_adj = w * next_adj + 0.5 * dt * y2;
    if (!empty(k1_extra)) k1_adj += k1_extra;
    const Matrix y1 = model.backprop_field(st.stages[0], k1_adj, grad);
    return next_adj + y1 + y2 + y3 + y4;
}

// Columns of the identity, repeated over the batch: tangent k has e_k in every column.
std::vector<Matrix> unit_tangents(int n, Eigen::Index batch) {
    std::vector<Matrix> out(n);
    for (int k = 0; k < n; ++k) {
        out[k] = Matrix::Zero(n, batch);
        out[k].row(k).setOnes();
    }
    return out;
}

LossEval evaluate_chunk(const LossBatch& b, const AutoEncoder& ae, const PGFinn& model, const LossWeights& w,
                        bool with_grad) {
    const int nu = ae.state_dim();
    const int d = ae.latent_dim();
    const Eigen::Index B = b.u.cols();
    const bool has_udot = !empty(b.udot);
    const bool frob = w.jac_mode == JacMode::frobenius;
    if (!has_udot && !frob) throw DimensionError("loss: the Jacobian loss with derivatives needs udot in the batch");

    // --- forward -----------------------------------------------------------
    std::vector<Matrix> enc_tangents;
    if (has_udot) enc_tangents.push_back(b.udot);
    const std::size_t enc_frob = enc_tangents.size();
    if (frob) {
        auto unit = unit_tangents(nu, B);
        for (auto& m : unit) enc_tangents.push_back(std::move(m));
    }
    const NetTrace te = ae.encoder().trace(b.u, enc_tangents);
    const NetTrace te_next = ae.encoder().trace(b.u_next);
    const Matrix& z = te.output();
    const Matrix& z_next = te_next.output();

    FieldTrace ft = model.trace_field(z, b.mu);
    const StepTrace st = trace_step(model, w.scheme, z, b.mu, b.dt, std::move(ft));
    const Matrix& psi = st.stages[0].field;

    std::vector<Matrix> dec_tangents;
    if (has_udot) dec_tangents.push_back(te.tangent_output(0));
    const std::size_t dec_psi = dec_tangents.size();
    dec_tangents.push_back(psi);
    const std::size_t dec_frob = dec_tangents.size();
    if (frob) {
        auto unit = unit_tangents(d, B);
        for (auto& m : unit) dec_tangents.push_back(std::move(m));
    }
    const NetTrace td = ae.decoder().trace(z, dec_tangents);

    LossEval out;
    const Matrix r_int = z_next - st.next;
    const Matrix r_rec = b.u - td.output();
    out.terms.integration = r_int.squaredNorm();
    out.terms.reconstruction = r_rec.squaredNorm();

    Matrix r_jac, r_mod_full, r_mod_latent;
    if (has_udot) {
        const Matrix& zdot = te.tangent_output(0);
        r_mod_full = b.udot - td.tangent_output(dec_psi);
        r_mod_latent = zdot - psi;
        out.terms.model = r_mod_full.squaredNorm() + r_mod_latent.squaredNorm();
        if (!frob) {
            r_jac = b.udot - td.tangent_output(0);
            out.terms.jacobian = r_jac.squaredNorm();
        }
    } else if (w.mod != 0.0) {
        throw DimensionError("loss: the model loss needs udot in the batch");
    }

    // ||I - J||_F^2 = N_u - 2 tr(J_e J_d) + tr(J_d^T J_d J_e J_e^T)
    std::vector<Matrix> je, jd;
    if (frob) {
        je.resize(B);
        jd.resize(B);
        for (Eigen::Index s = 0; s < B; ++s) {
            je[s].resize(d, nu);
            jd[s].resize(nu, d);
            for (int k = 0; k < nu; ++k) je[s].col(k) = te.tangent_output(enc_frob + k).col(s);
            for (int k = 0; k < d; ++k) jd[s].col(k) = td.tangent_output(dec_frob + k).col(s);
            const Matrix g = jd[s].transpose() * jd[s];
            const Matrix h = je[s] * je[s].transpose();
            out.terms.jacobian += nu - 2.0 * (je[s] * jd[s]).trace() + (g.cwiseProduct(h)).sum();
        }
    }
    out.total = out.terms.total(w);
    if (!std::isfinite(out.total)) throw NumericalError("loss: non-finite value");
    if (!with_grad) return out;

    // --- reverse -----------------------------------------------------------
    const std::size_t n_ae = ae.num_params();
    out.grad.assign(n_ae + model.num_params(), 0.0);
    std::span<double> g_all(out.grad);
    std::span<double> g_enc, g_dec;
    if (ae.trainable()) {
        g_enc = g_all.first(ae.encoder().num_params());
        g_dec = g_all.subspan(ae.encoder().num_params(), ae.decoder().num_params());
    }
    std::span<double> g_model = g_all.subspan(n_ae);

    NetAdjoint dec_seed;
    dec_seed.output = -2.0 * w.rec * r_rec;
    dec_seed.tangents.resize(dec_tangents.size());
    if (has_udot) {
        if (!frob) dec_seed.tangents[0] = -2.0 * w.jac * r_jac;
        dec_seed.tangents[dec_psi] = -2.0 * w.mod * r_mod_full;
    }
    if (frob) {
        for (int k = 0; k < d; ++k) dec_seed.tangents[dec_frob + k] = Matrix(nu, B);
        for (Eigen::Index s = 0; s < B; ++s) {
            const Matrix h = je[s] * je[s].transpose();
            const Matrix adj = w.jac * (-2.0 * je[s].transpose() + 2.0 * jd[s] * h);
            for (int k = 0; k < d; ++k) dec_seed.tangents[dec_frob + k].col(s) = adj.col(k);
        }
    }
    const NetInputAdjoint dec_adj = ae.decoder().backprop(td, dec_seed, g_dec);

    Matrix psi_adj = dec_adj.tangents[dec_psi];
    Matrix zdot_adj;
    if (has_udot) {
        zdot_adj = dec_adj.tangents[0] + 2.0 * w.mod * r_mod_latent;
        psi_adj -= 2.0 * w.mod * r_mod_latent;
    }
    const Matrix next_adj = -2.0 * w.integration * r_int;
    const Matrix z_adj = dec_adj.input + backprop_step(model, st, b.dt, next_adj, psi_adj, g_model);

    NetAdjoint enc_seed;
    enc_seed.output = z_adj;
    enc_seed.tangents.resize(enc_tangents.size());
    if (has_udot) enc_seed.tangents[0] = zdot_adj;
    if (frob) {
        for (int k = 0; k < nu; ++k) enc_seed.tangents[enc_frob + k] = Matrix(d, B);
        for (Eigen::Index s = 0; s < B; ++s) {
            const Matrix g = jd[s].transpose() * jd[s];
            const Matrix adj = w.jac * (-2.0 * jd[s].transpose() + 2.0 * g * je[s]);
            for (int k = 0; k < nu; ++k) enc_seed.tangents[enc_frob + k].col(s) = adj.col(k);
        }
    }
    ae.encoder().backprop(te, enc_seed, g_enc);
    NetAdjoint next_seed;
    next_seed.output = 2.0 * w.integration * r_int;
    ae.encoder().backprop(te_next, next_seed, g_enc);
    return out;
}

void check_batch(const LossBatch& b, const AutoEncoder& ae, const PGFinn& model) {
    const auto n = b.u.cols();
    if (b.u.rows() != ae.state_dim() || b.u_next.rows() != ae.state_dim() || b.u_next.cols() != n) {
        throw DimensionError("loss: snapshot pair shape does not match the autoencoder");
    }
    if (!empty(b.udot) && (b.udot.rows() != b.u.rows() || b.udot.cols() != n)) {
        throw DimensionError("loss: derivative shape does not match the snapshots");
    }
    if (b.mu.rows() != model.param_dim() || b.mu.cols() != n) throw DimensionError("loss: parameter block shape");
    if (model.latent_dim() != ae.latent_dim()) throw DimensionError("loss: latent dimensions of autoencoder and model differ");
}

}  // namespace

std::string to_string(JacMode m) { return m == JacMode::frobenius ? "frobenius" : "with_derivatives"; }

JacMode jac_mode_from_string(const std::string& name) {
    if (name == "with_derivatives") return JacMode::with_derivatives;
    if (name == "frobenius") return JacMode::frobenius;
    throw ParseError("unknown Jacobian loss mode '" + name + "'");
}

void LossWeights::validate() const {
    const std::pair<const char*, double> entries[] = {
        {"loss.integration", integration}, {"loss.lambda_rec", rec}, {"loss.lambda_jac", jac}, {"loss.lambda_mod", mod}};
    for (const auto& [name, v] : entries) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError(name, "weight must be finite and non-negative");
    }
}

LossTerms& LossTerms::operator+=(const LossTerms& o) {
    integration += o.integration;
    reconstruction += o.reconstruction;
    jacobian += o.jacobian;
    model += o.model;
    return *this;
}

LossBatch LossBatch::columns(int first, int count) const {
    LossBatch out;
    out.u = u.middleCols(first, count);
    out.u_next = u_next.middleCols(first, count);
    if (!empty(udot)) out.udot = udot.middleCols(first, count);
    out.mu = mu.middleCols(first, count);
    out.dt = dt;
    return out;
}

LossBatch gather_batch(const TrajectoryDataset& data, std::span<const PairIndex> pairs) {
    const int nu = data.state_dim();
    const auto n = static_cast<Eigen::Index>(pairs.size());
    const bool deriv = data.has_derivatives();
    LossBatch b;
    b.dt = data.dt;
    b.u.resize(nu, n);
    b.u_next.resize(nu, n);
    if (deriv) b.udot.resize(nu, n);
    b.mu.resize(static_cast<Eigen::Index>(data.param_names.size()), n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto& p = pairs[c];
        if (p.trajectory < 0 || p.trajectory >= static_cast<int>(data.trajectories.size())) {
            throw DimensionError("gather_batch: trajectory index out of range");
        }
        const auto& t = data.trajectories[p.trajectory];
        if (p.step < 0 || p.step + 1 >= t.num_snapshots()) throw DimensionError("gather_batch: no consecutive pair at this step");
        b.u.col(c) = t.states.col(p.step);
        b.u_next.col(c) = t.states.col(p.step + 1);
        if (deriv) b.udot.col(c) = t.derivatives.col(p.step);
        b.mu.col(c) = t.mu;
    }
    return b;
}

LossEval total_loss(const LossBatch& batch, const AutoEncoder& ae, const PGFinn& model, const LossWeights& weights,
                    bool with_grad, int jobs) {
    weights.validate();
    check_batch(batch, ae, model);
    const int n = batch.size();
    const int chunks = (n + kChunk - 1) / kChunk;
    std::vector<LossEval> parts(chunks);
    parallel_for(chunks, jobs, [&](int c) {
        const int first = c * kChunk;
        parts[c] = evaluate_chunk(batch.columns(first, std::min(kChunk, n - first)), ae, model, weights, with_grad);
    });
    LossEval out;
    if (with_grad) out.grad.assign(joint_num_params(ae, model), 0.0);
    for (const auto& p : parts) {
        out.terms += p.terms;
        if (with_grad) {
            for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += p.grad[i];
        }
    }
    out.total = out.terms.total(weights);
    if (!std::isfinite(out.total)) throw NumericalError("loss: non-finite value");
    for (double g : out.grad) {
        if (!std::isfinite(g)) throw NumericalError("loss: non-finite gradient");
    }
    return out;
}

double loss_int(const LossBatch& batch, const AutoEncoder& ae, const PGFinn& model, Scheme scheme) {
    check_batch(batch, ae, model);
    const Field field = [&model](const Vector& z, const Vector& mu, double t) { return model.vector_field(z, mu, t); };
    double total = 0.0;
    for (Eigen::Index c = 0; c < batch.u.cols(); ++c) {
        const Vector z = ae.encode(batch.u.col(c));
        const Vector pred = step(scheme, field, z, batch.mu.col(c), 0.0, batch.dt);
        total += (ae.encode(batch.u_next.col(c)) - pred).squaredNorm();
    }
    return total;
}

double loss_rec(const LossBatch& batch, const AutoEncoder& ae) {
    if (batch.u.rows() != ae.state_dim()) throw DimensionError("loss_rec: snapshot shape does not match the autoencoder");
    return (batch.u - ae.decode_batch(ae.encode_batch(batch.u))).squaredNorm();
}

double loss_jac(const LossBatch& batch, const AutoEncoder& ae, JacMode mode) {
    if (mode == JacMode::with_derivatives) {
        if (empty(batch.udot)) throw DimensionError("loss_jac: derivatives missing from the batch");
        double total = 0.0;
        for (Eigen::Index c = 0; c < batch.u.cols(); ++c) {
            total += (batch.udot.col(c) - ae.ae_jvp(batch.u.col(c), batch.udot.col(c))).squaredNorm();
        }
        return total;
    }
    double total = 0.0;
    const int nu = ae.state_dim();
    const int d = ae.latent_dim();
    for (Eigen::Index c = 0; c < batch.u.cols(); ++c) {
        const Vector u = batch.u.col(c);
        const Vector z = ae.encode(u);
        Matrix jd(nu, d);
        for (int k = 0; k < d; ++k) jd.col(k) = ae.decoder_jvp(z, Vector::Unit(d, k));
        Matrix je(d, nu);
        for (int k = 0; k < nu; ++k) je.col(k) = ae.encoder_jvp(u, Vector::Unit(nu, k));
        const Matrix g = jd.transpose() * jd;
        const Matrix h = je * je.transpose();
        total += nu - 2.0 * (je * jd).trace() + g.cwiseProduct(h).sum();
    }
    return total;
}

double loss_model(const LossBatch& batch, const AutoEncoder& ae, const PGFinn& model) {
    if (empty(batch.udot)) throw DimensionError("loss_model: derivatives missing from the batch");
    double total = 0.0;
    for (Eigen::Index c = 0; c < batch.u.cols(); ++c) {
        const Vector u = batch.u.col(c);
        const Vector udot = batch.udot.col(c);
        const Vector z = ae.encode(u);
        const Vector psi = model.vector_field(z, batch.mu.col(c));
        total += (udot - ae.decoder_jvp(z, psi)).squaredNorm() + (ae.encoder_jvp(u, udot) - psi).squaredNorm();
    }
    return total;
}

std::size_t joint_num_params(const AutoEncoder& ae, const PGFinn& model) { return ae.num_params() + model.num_params(); }

std::vector<double> joint_params(const AutoEncoder& ae, const PGFinn& model) {
    std::vector<double> p = ae.params();
    const std::vector<double> m = model.params();
    p.insert(p.end(), m.begin(), m.end());
    return p;
}

void set_joint_params(AutoEncoder& ae, PGFinn& model, std::span<const double> values) {
    if (values.size() != joint_num_params(ae, model)) throw DimensionError("set_joint_params: wrong parameter count");
    ae.set_params(values.first(ae.num_params()));
    model.set_params(values.subspan(ae.num_params()));
}

}  // namespace thermorom
