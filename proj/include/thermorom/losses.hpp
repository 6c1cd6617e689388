#pragma once

// The four training losses and their weighted total
//
//   L = w_int L_int + w_rec L_rec + w_jac L_jac + w_mod L_mod
//
//   L_int  sum ||phi_e(u_{n+1}) - step(phi_e(u_n))||^2
//   L_rec  sum ||u_n - phi_d(phi_e(u_n))||^2
//   L_jac  sum ||(I - J(u_n)) udot_n||^2        (with_derivatives)
//          sum ||I - J(u_n)||_F^2               (frobenius)
//   L_mod  sum ||udot_n - J_d psi||^2 + ||J_e udot_n - psi||^2
//
// with psi = psi(phi_e(u_n), mu) and step() one step of the latent scheme.
// All terms are sums over the batch. w_int is 1 in the training objective.

#include <span>
#include <vector>

#include "thermorom/autoencoder.hpp"
#include "thermorom/integrate.hpp"
#include "thermorom/pgfinn.hpp"
#include "thermorom/systems.hpp"

namespace thermorom {

enum class JacMode { with_derivatives, frobenius };

std::string to_string(JacMode m);
JacMode jac_mode_from_string(const std::string& name);

struct LossWeights {
    double integration = 1.0;
    double rec = 1e-1;
    double jac = 1e-9;
    double mod = 1e-7;
    JacMode jac_mode = JacMode::with_derivatives;
    Scheme scheme = Scheme::forward_euler;

    /// Throws ConfigError when a weight is negative or non-finite.
    void validate() const;
};

/// Consecutive snapshot pairs, one per column.
struct LossBatch {
    Matrix u;       // N_u x B, u_n
    Matrix u_next;  // N_u x B, u_{n+1}
    Matrix udot;    // N_u x B, or empty when derivatives are unavailable
    Matrix mu;      // N_mu x B
    double dt = 0.0;

    int size() const { return static_cast<int>(u.cols()); }
    LossBatch columns(int first, int count) const;
};

struct PairIndex {
    int trajectory = 0;
    int step = 0;  // pair (step, step + 1)
    bool operator==(const PairIndex&) const = default;
};

LossBatch gather_batch(const TrajectoryDataset& data, std::span<const PairIndex> pairs);

struct LossTerms {
    double integration = 0.0, reconstruction = 0.0, jacobian = 0.0, model = 0.0;

    double total(const LossWeights& w) const {
        return w.integration * integration + w.rec * reconstruction + w.jac * jacobian + w.mod * model;
    }
    LossTerms& operator+=(const LossTerms& o);
};

struct LossEval {
    LossTerms terms;
    double total = 0.0;
    // Gradient over the joint parameter vector: autoencoder then pGFINN.
    std::vector<double> grad;
};

double loss_int(const LossBatch& batch, const AutoEncoder& ae, const PGFinn& model, Scheme scheme = Scheme::forward_euler);
double loss_rec(const LossBatch& batch, const AutoEncoder& ae);
double loss_jac(const LossBatch& batch, const AutoEncoder& ae, JacMode mode);
double loss_model(const LossBatch& batch, const AutoEncoder& ae, const PGFinn& model);

/// All four terms; the gradient is filled when `with_grad`. The batch is
/// split into fixed chunks evaluated on up to `jobs` threads and summed in
/// chunk order. Throws NumericalError on a non-finite loss or gradient.
LossEval total_loss(const LossBatch& batch, const AutoEncoder& ae, const PGFinn& model, const LossWeights& weights,
                    bool with_grad = true, int jobs = 1);

std::size_t joint_num_params(const AutoEncoder& ae, const PGFinn& model);
std::vector<double> joint_params(const AutoEncoder& ae, const PGFinn& model);
void set_joint_params(AutoEncoder& ae, PGFinn& model, std::span<const double> values);

}  // namespace thermorom
