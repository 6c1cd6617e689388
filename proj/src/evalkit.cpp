#include "thermorom/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "thermorom/errors.hpp"
#include "thermorom/parallel.hpp"

namespace thermorom {

double max_relative_error(const Matrix& rom, const Matrix& truth, int* skipped) {
    if (rom.rows() != truth.rows() || rom.cols() != truth.cols())
        throw DimensionError("max_relative_error: shapes differ");
    double worst = 0.0;
    int skip = 0;
    for (Eigen::Index n = 0; n < truth.cols(); ++n) {
        const double denom = truth.col(n).norm();
        if (denom == 0.0) {
            ++skip;
            continue;
        }
        worst = std::max(worst, (rom.col(n) - truth.col(n)).norm() / denom);
    }
    if (skipped) *skipped = skip;
    return worst;
}

RomRollout rom_rollout(const AutoEncoder& ae, const PGFinn& model, const Vector& u0, const Vector& mu, double dt,
                       int steps, Scheme scheme) {
    const Field f = [&](const Vector& z, const Vector& m, double) { return model.vector_field(z, m); };
    Rollout r = integrate(scheme, f, ae.encode(u0), mu, dt, steps);
    RomRollout out;
    out.diverged = r.diverged;
    out.states = ae.decode_batch(r.states);
    out.latent = std::move(r.states);
    return out;
}

void ErrorMap::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17);
    for (const auto& n : param_names) out << n << ',';
    out << "max_rel_error,training,diverged\n";
    for (const auto& e : entries) {
        for (double v : e.mu) out << v << ',';
        out << e.error << ',' << int(e.training) << ',' << int(e.diverged) << '\n';
    }
}

ErrorMap error_map(const AutoEncoder& ae, const PGFinn& model, const TrajectoryDataset& truth,
                   const std::vector<Vector>& training_mus, Scheme scheme, int jobs) {
    if (truth.trajectories.empty()) throw DimensionError("error_map: no truth trajectories");
    ErrorMap map;
    map.param_names = truth.param_names;
    map.entries.resize(truth.trajectories.size());
    parallel_for(static_cast<int>(truth.trajectories.size()), jobs, [&](int i) {
        const Trajectory& tr = truth.trajectories[static_cast<std::size_t>(i)];
        if (tr.states.cols() == 0) throw DimensionError("error_map: empty truth trajectory");
        ErrorMapEntry& e = map.entries[static_cast<std::size_t>(i)];
        e.mu = tr.mu;
        for (const auto& m : training_mus)
            if (m.size() == tr.mu.size() && (m - tr.mu).cwiseAbs().maxCoeff() <= 1e-12) e.training = true;
        const int steps = static_cast<int>(tr.states.cols()) - 1;
        const RomRollout r = rom_rollout(ae, model, tr.states.col(0), tr.mu, truth.dt, steps, scheme);
        e.diverged = r.diverged;
        e.error = r.diverged ? std::numeric_limits<double>::infinity() : max_relative_error(r.states, tr.states);
    });
    double sum = 0.0;
    for (const auto& e : map.entries) {
        sum += e.error;
        map.max = std::max(map.max, e.error);
    }
    map.mean = sum / static_cast<double>(map.entries.size());
    return map;
}

ThermoSeries thermo_rollout(const PGFinn& model, const Vector& z0, const Vector& mu, double dt, int steps,
                            Scheme scheme) {
    const Field f = [&](const Vector& z, const Vector& m, double) { return model.vector_field(z, m); };
    Rollout r = integrate(scheme, f, z0, mu, dt, steps);
    ThermoSeries s;
    s.diverged = r.diverged;
    const Eigen::Index n = r.states.cols();
    s.t = Vector::LinSpaced(n, 0.0, dt * static_cast<double>(n - 1));
    s.energy.resize(n);
    s.entropy.resize(n);
    s.entropy_rate.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Vector z = r.states.col(k);
        s.energy[k] = model.energy(z, mu);
        s.entropy[k] = model.entropy(z, mu);
        s.entropy_rate[k] = model.entropy_production(z, mu);
    }
    s.latent = std::move(r.states);
    return s;
}

Spectrum latent_spectrum(const Matrix& latent, double dt) {
    const Eigen::Index n = latent.cols();
    if (n < 4) throw DimensionError("latent_spectrum: need at least 4 samples");
    if (!(dt > 0.0)) throw DomainError("latent_spectrum: dt must be positive");
    const Eigen::Index bins = n / 2 + 1;
    Spectrum sp;
    sp.frequency = Vector::LinSpaced(bins, 0.0, static_cast<double>(bins - 1)) / (static_cast<double>(n) * dt);
    sp.magnitude.resize(latent.rows(), bins);
    sp.centroid.resize(latent.rows());
    Eigen::FFT<double> fft;
    std::vector<double> sig(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> spec;
    for (Eigen::Index r = 0; r < latent.rows(); ++r) {
        for (Eigen::Index k = 0; k < n; ++k) sig[static_cast<std::size_t>(k)] = latent(r, k);
        fft.fwd(spec, sig);
        double weighted = 0.0, total = 0.0;
        for (Eigen::Index k = 0; k < bins; ++k) {
            const double mag = std::abs(spec[static_cast<std::size_t>(k)]);
            sp.magnitude(r, k) = mag;
            // removing the mean only changes bin 0
            if (k > 0) {
                weighted += sp.frequency[k] * mag;
                total += mag;
            }
        }
        sp.centroid[r] = total > 0.0 ? weighted / total : 0.0;
    }
    return sp;
}

void BoundReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17) << "t,eps_int,eps_rec,eps_jac,eps_mod,error\n";
    for (Eigen::Index k = 0; k < t.size(); ++k)
        out << t[k] << ',' << eps_int[k] << ',' << eps_rec[k] << ',' << eps_jac[k] << ',' << eps_mod[k] << ','
            << error[k] << '\n';
}

BoundReport bound_terms(const AutoEncoder& ae, const PGFinn& model, const Trajectory& truth, double dt,
                        const Matrix& latent) {
    const Eigen::Index n = truth.states.cols();
    if (latent.cols() != n) throw DimensionError("bound_terms: latent rollout and truth have different time grids");
    if (truth.derivatives.cols() != n) throw DimensionError("bound_terms: truth derivatives missing");
    if (latent.rows() != ae.latent_dim()) throw DimensionError("bound_terms: latent dimension mismatch");
    // pointwise integrands
    Vector g_int(n), g_jac(n), g_mod(n), e_ae(n);
    BoundReport b;
    b.t = Vector::LinSpaced(n, 0.0, dt * static_cast<double>(n - 1));
    b.error.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Vector u = truth.states.col(k);
        const Vector udot = truth.derivatives.col(k);
        const Vector z = latent.col(k);
        const Vector ze = ae.encode(u);
        g_int[k] = (ze - z).norm();
        e_ae[k] = (u - ae.decode(ze)).norm();
        g_jac[k] = (udot - ae.ae_jvp(u, udot)).norm();
        const Vector fr = model.vector_field(z, truth.mu);
        g_mod[k] = (ae.encoder_jvp(u, udot) - fr).norm() + (udot - ae.decoder_jvp(z, fr)).norm();
        b.error[k] = (u - ae.decode(z)).norm();
    }
    auto trapezoid = [&](const Vector& g) {
        Vector out(n);
        out[0] = 0.0;
        for (Eigen::Index k = 1; k < n; ++k) out[k] = out[k - 1] + 0.5 * dt * (g[k - 1] + g[k]);
        return out;
    };
    b.eps_int = trapezoid(g_int);
    b.eps_jac = trapezoid(g_jac);
    b.eps_mod = trapezoid(g_mod);
    b.eps_rec.resize(n);
    double running = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        running = std::max(running, e_ae[k]);
        b.eps_rec[k] = e_ae[0] + running;
    }
    // at t0 the ratio is 1/2 by construction (e = e_AE, eps_rec = 2 |e_AE|), so it is left out
    for (Eigen::Index k = n > 1 ? 1 : 0; k < n; ++k) {
        const double sum = b.eps_int[k] + b.eps_rec[k] + b.eps_jac[k] + b.eps_mod[k];
        if (sum > 0.0) b.ratio = std::max(b.ratio, b.error[k] / sum);
    }
    return b;
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("correlate: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

// Average ranks, 1-based.
std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

Correlation correlate(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("correlate: series lengths differ");
    if (x.size() < 3) throw DimensionError("correlate: need at least 3 points");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DomainError("correlate: non-finite value");
    return {pearson(x, y), pearson(ranks(x), ranks(y))};
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TimingReport timing_report(const AutoEncoder& ae, const PGFinn& model, const SystemConfig& cfg, const Vector& mu,
                           Scheme scheme, int repeats) {
    if (repeats <= 0) throw DimensionError("timing_report: repeats must be positive");
    using clock = std::chrono::steady_clock;
    const int steps = cfg.num_snapshots() - 1;
    const double dt = cfg.snapshot_dt();
    TimingReport rep;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = clock::now();
        const Trajectory fom = simulate(cfg, mu);
        rep.fom_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        // the initial state is an input to both pipelines
        const Vector u0 = fom.states.col(0);
        t0 = clock::now();
        const RomRollout rom = rom_rollout(ae, model, u0, mu, dt, steps, scheme);
        rep.rom_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        if (rom.diverged) throw NumericalError("timing_report: ROM rollout diverged");
    }
    rep.fom_median = median(rep.fom_seconds);
    rep.rom_median = median(rep.rom_seconds);
    rep.speedup = rep.rom_median > 0.0 ? rep.fom_median / rep.rom_median : 0.0;
    return rep;
}

}  // namespace thermorom
