#pragma once

// Post-hoc diagnostics of a trained model.

#include <filesystem>
#include <string>
#include <vector>

#include "thermorom/autoencoder.hpp"
#include "thermorom/integrate.hpp"
#include "thermorom/pgfinn.hpp"
#include "thermorom/systems.hpp"

namespace thermorom {

/// max_n |rom_n - truth_n| / |truth_n| over snapshot columns. Columns with a
/// zero-norm truth are skipped; their count goes to `skipped`.
double max_relative_error(const Matrix& rom, const Matrix& truth, int* skipped = nullptr);

struct RomRollout {
    Matrix latent;  // d x (steps + 1)
    Matrix states;  // N_u x (steps + 1), decoded
    bool diverged = false;
};

/// Encode u0, integrate the latent field, decode every kept step.
RomRollout rom_rollout(const AutoEncoder& ae, const PGFinn& model, const Vector& u0, const Vector& mu, double dt,
                       int steps, Scheme scheme);

struct ErrorMapEntry {
    Vector mu;
    double error = 0.0;
    bool training = false;
    bool diverged = false;
};

struct ErrorMap {
    std::vector<std::string> param_names;
    std::vector<ErrorMapEntry> entries;
    double mean = 0.0;
    double max = 0.0;

    /// (mu..., error, training, diverged) rows.
    void write_csv(const std::filesystem::path& path) const;
};

/// One entry per truth trajectory; a diverged rollout scores +inf.
ErrorMap error_map(const AutoEncoder& ae, const PGFinn& model, const TrajectoryDataset& truth,
                   const std::vector<Vector>& training_mus, Scheme scheme, int jobs = 1);

struct ThermoSeries {
    Vector t, energy, entropy, entropy_rate;
    Matrix latent;
    bool diverged = false;
};

/// E, S and dS/dt = grad S^T M grad S along a latent rollout.
ThermoSeries thermo_rollout(const PGFinn& model, const Vector& z0, const Vector& mu, double dt, int steps,
                            Scheme scheme = Scheme::rk4);

struct Spectrum {
    Vector frequency;  // Hz, one-sided, N/2 + 1 bins
    Matrix magnitude;  // d x bins, |X_k| of the raw signal
    Vector centroid;   // per dimension, magnitude-weighted mean frequency of the mean-removed signal
};

Spectrum latent_spectrum(const Matrix& latent, double dt);

struct BoundReport {
    Vector t;
    Vector eps_int, eps_rec, eps_jac, eps_mod;
    Vector error;  // |u(t) - phi_d(z(t))|
    double ratio = 0.0;  // sup over t > t0 of error / (sum of the four terms), where the sum is positive

    void write_csv(const std::filesystem::path& path) const;
};

/// Trapezoid quadrature of the integral terms on the snapshot grid. The
/// reconstruction term uses the running maximum of |e_AE| so that it is
/// monotone in t.
BoundReport bound_terms(const AutoEncoder& ae, const PGFinn& model, const Trajectory& truth, double dt,
                        const Matrix& latent);

struct Correlation {
    double pearson = 0.0;
    double spearman = 0.0;
};

Correlation correlate(const std::vector<double>& x, const std::vector<double>& y);

struct TimingReport {
    std::vector<double> fom_seconds, rom_seconds;
    double fom_median = 0.0, rom_median = 0.0, speedup = 0.0;
};

/// Median-of-`repeats` wall time of the full-order solver producing the
/// stored trajectory versus encode + latent rollout + decode of all steps.
TimingReport timing_report(const AutoEncoder& ae, const PGFinn& model, const SystemConfig& cfg, const Vector& mu,
                           Scheme scheme, int repeats = 5);

}  // namespace thermorom
