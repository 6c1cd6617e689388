#include "thermorom/systems.hpp"

#include <cmath>
#include <stdexcept>

#include "thermorom/errors.hpp"
#include "thermorom/parallel.hpp"
#include "thermorom/integrate.hpp"

namespace thermorom {

std::string to_string(SystemKind kind) {
    switch (kind) {
        case SystemKind::gas_containers: return "gas_containers";
        case SystemKind::thermo_mass: return "thermo_mass";
        case SystemKind::burgers: return "burgers";
    }
    return "unknown";
}

SystemKind system_from_tag(const std::string& tag) {
    if (tag == "gas_containers") return SystemKind::gas_containers;
    if (tag == "thermo_mass") return SystemKind::thermo_mass;
    if (tag == "burgers") return SystemKind::burgers;
    throw std::invalid_argument("unknown system tag '" + tag + "'");
}

int SystemConfig::state_dim() const {
    switch (kind) {
        case SystemKind::gas_containers: return 4;
        case SystemKind::thermo_mass: return 6;
        case SystemKind::burgers: return burgers.nx / burgers.spatial_stride;
    }
    return 0;
}

double SystemConfig::snapshot_dt() const {
    if (kind == SystemKind::burgers) return burgers.dt * burgers.temporal_stride;
    return fine_dt * stride;
}

int SystemConfig::num_snapshots() const {
    if (kind == SystemKind::burgers) {
        const int steps = static_cast<int>(std::lround(burgers.final_time / burgers.dt));
        return steps / burgers.temporal_stride + 1;
    }
    const int steps = static_cast<int>(std::lround(horizon / fine_dt));
    return steps / stride + 1;
}

SystemConfig default_system(SystemKind kind) {
    SystemConfig cfg;
    cfg.kind = kind;
    switch (kind) {
        case SystemKind::gas_containers:
            cfg.param_names = {"alpha"};
            cfg.horizon = 8.0;
            break;
        case SystemKind::thermo_mass:
            cfg.param_names = {"alpha"};
            cfg.horizon = 10.0;
            break;
        case SystemKind::burgers: cfg.param_names = {"a", "w"}; break;
    }
    return cfg;
}

namespace {

void check_mu(const SystemConfig& cfg, const Vector& mu) {
    if (mu.size() != cfg.param_dim()) {
        throw DimensionError("parameter vector has " + std::to_string(mu.size()) + " entries, system expects " +
                             std::to_string(cfg.param_dim()));
    }
}

[[noreturn]] void unknown_param(const std::string& name, SystemKind kind) {
    throw std::invalid_argument("parameter '" + name + "' does not exist for system " + to_string(kind));
}

}  // namespace

GasContainersParams gas_params(const SystemConfig& cfg, const Vector& mu) {
    check_mu(cfg, mu);
    GasContainersParams p = cfg.gas;
    for (int i = 0; i < cfg.param_dim(); ++i) {
        const auto& name = cfg.param_names[i];
        if (name == "alpha") {
            p.alpha = mu[i];
        } else if (name == "mass" || name == "m") {
            p.mass = mu[i];
        } else {
            unknown_param(name, cfg.kind);
        }
    }
    return p;
}

ThermoMassParams thermo_params(const SystemConfig& cfg, const Vector& mu) {
    check_mu(cfg, mu);
    ThermoMassParams p = cfg.thermo;
    for (int i = 0; i < cfg.param_dim(); ++i) {
        const auto& name = cfg.param_names[i];
        if (name == "alpha") {
            p.alpha = mu[i];
        } else if (name == "k") {
            p.k = mu[i];
        } else if (name == "beta") {
            p.beta = mu[i];
        } else {
            unknown_param(name, cfg.kind);
        }
    }
    return p;
}

std::pair<double, double> burgers_pulse(const SystemConfig& cfg, const Vector& mu) {
    check_mu(cfg, mu);
    double a = 0.8, w = 1.0;
    for (int i = 0; i < cfg.param_dim(); ++i) {
        const auto& name = cfg.param_names[i];
        if (name == "a") {
            a = mu[i];
        } else if (name == "w") {
            w = mu[i];
        } else {
            unknown_param(name, cfg.kind);
        }
    }
    return {a, w};
}

// --- gas containers -----------------------------------------------------------

GasThermo gas_thermo(const Vector& s) {
    if (s.size() != 4) throw DimensionError("gas containers state has 4 entries");
    const double q = s[0];
    if (!(q > 0.0 && q < 2.0)) throw DomainError("gas containers: wall position q must lie in (0, 2)");
    GasThermo g;
    g.e1 = std::exp(2.0 * s[2] / 3.0) * std::pow(q, -2.0 / 3.0);
    g.e2 = std::exp(2.0 * s[3] / 3.0) * std::pow(2.0 - q, -2.0 / 3.0);
    g.t1 = 2.0 * g.e1 / 3.0;
    g.t2 = 2.0 * g.e2 / 3.0;
    return g;
}

Vector gas_rhs(const Vector& s, const GasContainersParams& p) {
    const GasThermo g = gas_thermo(s);
    const double q = s[0];
    Vector f(4);
    f[0] = s[1] / p.mass;
    f[1] = 2.0 / 3.0 * (g.e1 / q - g.e2 / (2.0 - q));
    f[2] = p.alpha / g.t1 * (1.0 / g.t1 - 1.0 / g.t2);
    f[3] = p.alpha / g.t2 * (1.0 / g.t2 - 1.0 / g.t1);
    return f;
}

Vector gas_default_initial_state() { return (Vector(4) << 0.87, 0.44, 1.00, 1.60).finished(); }

// --- thermo-mass ----------------------------------------------------------------

Vector thermo_mass_rhs(const Vector& s, const ThermoMassParams& p) {
    if (s.size() != 6) throw DimensionError("thermo-mass state has 6 entries");
    // m_i = c_i = 1, so T_i = 1
    constexpr double m1 = 1.0, m2 = 1.0, t1 = 1.0, t2 = 1.0;
    const double v = s[2] / m1 - s[3] / m2;
    Vector f(6);
    f[0] = s[2] / m1;
    f[1] = s[3] / m2;
    f[2] = -p.k * (s[0] - s[1]) - p.alpha * v;
    f[3] = -p.k * (s[1] - s[0]) + p.alpha * v;
    f[4] = p.alpha / (2.0 * t1) * v * v + p.beta * (1.0 / t2 - 1.0 / t1);
    f[5] = p.alpha / (2.0 * t2) * v * v + p.beta * (1.0 / t1 - 1.0 / t2);
    return f;
}

Vector thermo_mass_default_initial_state() { return (Vector(6) << 4.98, 0.04, 0.0, 9.96, 1.93, 1.92).finished(); }

std::pair<double, double> system_energy_entropy(const std::string& tag, const Vector& s, const SystemConfig& cfg,
                                                const Vector& mu) {
    switch (system_from_tag(tag)) {
        case SystemKind::gas_containers: {
            const auto p = gas_params(cfg, mu);
            const GasThermo g = gas_thermo(s);
            return {s[1] * s[1] / (2.0 * p.mass) + g.e1 + g.e2, s[2] + s[3]};
        }
        case SystemKind::thermo_mass: {
            const auto p = thermo_params(cfg, mu);
            if (s.size() != 6) throw DimensionError("thermo-mass state has 6 entries");
            const double dq = s[0] - s[1];
            return {0.5 * s[2] * s[2] + 0.5 * s[3] * s[3] + 0.5 * p.k * dq * dq + s[4] + s[5], s[4] + s[5]};
        }
        case SystemKind::burgers: break;
    }
    throw std::invalid_argument("system_energy_entropy: no closed-form energy for '" + tag + "'");
}

// --- Burgers -------------------------------------------------------------------

Vector burgers_grid(int nx, double x_min, double x_max) {
    if (nx < 3) throw DimensionError("Burgers grid needs at least 3 cells");
    const double dx = (x_max - x_min) / nx;
    Vector x(nx);
    for (int i = 0; i < nx; ++i) x[i] = x_min + i * dx;
    return x;
}

Vector burgers_initial(double a, double w, const Vector& grid) {
    if (!(w > 0.0)) throw DomainError("Burgers pulse width must be positive");
    return (a * (-grid.array().square() / (2.0 * w * w)).exp()).matrix();
}

Vector burgers_rhs(const Vector& u, double dx) {
    const Eigen::Index n = u.size();
    Vector f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double left = u[(i + n - 1) % n];
        f[i] = -u[i] * (u[i] - left) / dx;
    }
    return f;
}

Vector backward_euler_solve(const Vector& u_prev, double dt, double dx, double tol, int max_iter,
                            NewtonReport* report) {
    const Eigen::Index n = u_prev.size();
    if (n < 2) throw DimensionError("backward_euler_solve: need at least two cells");
    if (!u_prev.allFinite()) throw NumericalError("backward_euler_solve: previous state is not finite");
    const double c = dt / dx;
    Vector u = u_prev;
    Vector r(n), diag(n), lower(n), alpha(n), beta(n);
    double rnorm = 0.0;
    for (int it = 0; it <= max_iter; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double left = u[(i + n - 1) % n];
            r[i] = u[i] - u_prev[i] + c * u[i] * (u[i] - left);
        }
        rnorm = r.norm();
        if (report) {
            report->iterations = it;
            report->residual_norm = rnorm;
        }
        if (rnorm <= tol) return u;
        if (it == max_iter) break;
        // J = I - dt df/du: diagonal 1 + c (2u_i - u_{i-1}), sub-diagonal -c u_i,
        // with row 0's sub-diagonal entry wrapping to column n-1.
        for (Eigen::Index i = 0; i < n; ++i) {
            const double left = u[(i + n - 1) % n];
            diag[i] = 1.0 + c * (2.0 * u[i] - left);
            lower[i] = -c * u[i];
        }
        // Cyclic bidiagonal solve of J delta = -r: write delta_i = alpha_i + beta_i delta_{n-1}.
        alpha[0] = -r[0] / diag[0];
        beta[0] = -lower[0] / diag[0];
        for (Eigen::Index i = 1; i < n; ++i) {
            alpha[i] = (-r[i] - lower[i] * alpha[i - 1]) / diag[i];
            beta[i] = -lower[i] * beta[i - 1] / diag[i];
        }
        const double last = alpha[n - 1] / (1.0 - beta[n - 1]);
        for (Eigen::Index i = 0; i < n; ++i) u[i] += alpha[i] + beta[i] * last;
        if (!u.allFinite()) break;
    }
    throw NumericalError("backward_euler_solve: Newton did not converge, last residual norm " + std::to_string(rnorm));
}

// --- dispatch ----------------------------------------------------------------

Vector system_rhs(const SystemConfig& cfg, const Vector& state, const Vector& mu) {
    switch (cfg.kind) {
        case SystemKind::gas_containers: return gas_rhs(state, gas_params(cfg, mu));
        case SystemKind::thermo_mass: return thermo_mass_rhs(state, thermo_params(cfg, mu));
        case SystemKind::burgers: {
            check_mu(cfg, mu);
            const double dx = cfg.burgers.dx() * cfg.burgers.spatial_stride;
            return burgers_rhs(state, dx);
        }
    }
    return {};
}

Vector system_initial_state(const SystemConfig& cfg, const Vector& mu) {
    switch (cfg.kind) {
        case SystemKind::gas_containers:
            check_mu(cfg, mu);
            return cfg.initial_state.size() ? cfg.initial_state : gas_default_initial_state();
        case SystemKind::thermo_mass:
            check_mu(cfg, mu);
            return cfg.initial_state.size() ? cfg.initial_state : thermo_mass_default_initial_state();
        case SystemKind::burgers: {
            const auto [a, w] = burgers_pulse(cfg, mu);
            const auto& b = cfg.burgers;
            return burgers_initial(a, w, burgers_grid(b.nx / b.spatial_stride, b.x_min, b.x_max));
        }
    }
    return {};
}

// --- datasets --------------------------------------------------------------

bool TrajectoryDataset::has_derivatives() const {
    if (trajectories.empty()) return false;
    for (const auto& t : trajectories) {
        if (t.derivatives.size() == 0) return false;
    }
    return true;
}

void TrajectoryDataset::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParseError("dataset: dt must be positive and finite");
    const int n_u = state_dim();
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const auto& t = trajectories[i];
        const std::string where = "dataset entry " + std::to_string(i);
        if (t.states.rows() != n_u) throw ParseError(where + ": state dimension differs from entry 0");
        if (t.states.cols() < 2) throw ParseError(where + ": fewer than two snapshots");
        if (t.mu.size() != static_cast<Eigen::Index>(param_names.size())) {
            throw ParseError(where + ": parameter vector length differs from the declared parameter names");
        }
        if (t.derivatives.size() != 0 && (t.derivatives.rows() != t.states.rows() || t.derivatives.cols() != t.states.cols())) {
            throw ParseError(where + ": derivative shape differs from snapshot shape");
        }
        if (!t.states.allFinite()) throw ParseError(where + ": non-finite snapshot values");
        if (t.derivatives.size() != 0 && !t.derivatives.allFinite()) throw ParseError(where + ": non-finite derivatives");
        if (!t.mu.allFinite()) throw ParseError(where + ": non-finite parameter values");
    }
}

Matrix backward_difference(const Matrix& states, double dt) {
    if (states.cols() < 2) throw DimensionError("backward_difference: need at least two snapshots");
    Matrix d(states.rows(), states.cols());
    for (Eigen::Index n = 1; n < states.cols(); ++n) d.col(n) = (states.col(n) - states.col(n - 1)) / dt;
    d.col(0) = (states.col(1) - states.col(0)) / dt;
    return d;
}

Trajectory simulate(const SystemConfig& cfg, const Vector& mu) {
    Trajectory traj;
    traj.mu = mu;
    if (cfg.kind == SystemKind::burgers) {
        const auto& b = cfg.burgers;
        if (b.nx % b.spatial_stride != 0) throw DimensionError("Burgers: nx must be divisible by the spatial stride");
        const auto [a, w] = burgers_pulse(cfg, mu);
        const Vector grid = burgers_grid(b.nx, b.x_min, b.x_max);
        Vector u = burgers_initial(a, w, grid);
        const int steps = static_cast<int>(std::lround(b.final_time / b.dt));
        const int n_out = b.nx / b.spatial_stride;
        traj.states.resize(n_out, steps / b.temporal_stride + 1);
        auto store = [&](int col) {
            for (int j = 0; j < n_out; ++j) traj.states(j, col) = u[j * b.spatial_stride];
        };
        store(0);
        for (int n = 1; n <= steps; ++n) {
            u = backward_euler_solve(u, b.dt, b.dx(), b.newton_tol, b.newton_max_iter);
            if (n % b.temporal_stride == 0) store(n / b.temporal_stride);
        }
        return traj;
    }

    const Vector z0 = system_initial_state(cfg, mu);
    Field field;
    if (cfg.kind == SystemKind::gas_containers) {
        const auto p = gas_params(cfg, mu);
        field = [p](const Vector& z, const Vector&, double) { return gas_rhs(z, p); };
    } else {
        const auto p = thermo_params(cfg, mu);
        field = [p](const Vector& z, const Vector&, double) { return thermo_mass_rhs(z, p); };
    }
    const int steps = static_cast<int>(std::lround(cfg.horizon / cfg.fine_dt));
    traj.states.resize(z0.size(), steps / cfg.stride + 1);
    traj.states.col(0) = z0;
    Vector z = z0;
    for (int n = 1; n <= steps; ++n) {
        z = step(Scheme::rk4, field, z, mu, (n - 1) * cfg.fine_dt, cfg.fine_dt);
        if (!z.allFinite()) throw NumericalError("simulate: reference trajectory diverged");
        if (n % cfg.stride == 0) traj.states.col(n / cfg.stride) = z;
    }
    return traj;
}

TrajectoryDataset generate_dataset(const SystemConfig& cfg, const std::vector<Vector>& mus, int jobs) {
    TrajectoryDataset ds;
    ds.system = to_string(cfg.kind);
    ds.param_names = cfg.param_names;
    ds.dt = cfg.snapshot_dt();
    ds.provenance = "generated:" + ds.system;
    ds.trajectories.resize(mus.size());
    parallel_for(static_cast<int>(mus.size()), jobs, [&](int i) {
        Trajectory t = simulate(cfg, mus[static_cast<std::size_t>(i)]);
        t.derivatives = backward_difference(t.states, ds.dt);
        ds.trajectories[static_cast<std::size_t>(i)] = std::move(t);
    });
    return ds;
}

// --- known functions --------------------------------------------------------

namespace {

nlohmann::json known_spec(const SystemConfig& cfg, const char* quantity) {
    nlohmann::json j = system_to_json(cfg);
    j["quantity"] = quantity;
    return j;
}

}  // namespace

KnownScalar known_energy(const SystemConfig& cfg) {
    KnownScalar k;
    k.spec = known_spec(cfg, "energy");
    switch (cfg.kind) {
        case SystemKind::gas_containers:
            k.value = [cfg](const Vector& z, const Vector& mu) {
                return system_energy_entropy("gas_containers", z, cfg, mu).first;
            };
            k.gradient = [cfg](const Vector& z, const Vector& mu) {
                const double m = gas_params(cfg, mu).mass;
                const GasThermo g = gas_thermo(z);
                const double q = z[0];
                Vector grad(4);
                grad << -2.0 / 3.0 * g.e1 / q + 2.0 / 3.0 * g.e2 / (2.0 - q), z[1] / m, g.t1, g.t2;
                return grad;
            };
            k.hessian_vec = [cfg](const Vector& z, const Vector& mu, const Vector& v) {
                const double m = gas_params(cfg, mu).mass;
                const GasThermo g = gas_thermo(z);
                const double q = z[0], r = 2.0 - q;
                Matrix h = Matrix::Zero(4, 4);
                h(0, 0) = 10.0 / 9.0 * (g.e1 / (q * q) + g.e2 / (r * r));
                h(1, 1) = 1.0 / m;
                h(2, 2) = 4.0 / 9.0 * g.e1;
                h(3, 3) = 4.0 / 9.0 * g.e2;
                h(0, 2) = h(2, 0) = -4.0 / 9.0 * g.e1 / q;
                h(0, 3) = h(3, 0) = 4.0 / 9.0 * g.e2 / r;
                return Vector(h * v);
            };
            return k;
        case SystemKind::thermo_mass:
            k.value = [cfg](const Vector& z, const Vector& mu) {
                return system_energy_entropy("thermo_mass", z, cfg, mu).first;
            };
            k.gradient = [cfg](const Vector& z, const Vector& mu) {
                const double kk = thermo_params(cfg, mu).k;
                const double dq = z[0] - z[1];
                Vector grad(6);
                grad << kk * dq, -kk * dq, z[2], z[3], 1.0, 1.0;
                return grad;
            };
            k.hessian_vec = [cfg](const Vector& /*z*/, const Vector& mu, const Vector& v) {
                const double kk = thermo_params(cfg, mu).k;
                Vector hv = Vector::Zero(6);
                hv[0] = kk * (v[0] - v[1]);
                hv[1] = -hv[0];
                hv[2] = v[2];
                hv[3] = v[3];
                return hv;
            };
            return k;
        case SystemKind::burgers: break;
    }
    throw std::invalid_argument("no known energy for system " + to_string(cfg.kind));
}

KnownScalar known_entropy(const SystemConfig& cfg) {
    KnownScalar k;
    k.spec = known_spec(cfg, "entropy");
    int first = 0;
    int n = 0;
    switch (cfg.kind) {
        case SystemKind::gas_containers: first = 2, n = 4; break;
        case SystemKind::thermo_mass: first = 4, n = 6; break;
        case SystemKind::burgers: throw std::invalid_argument("no known entropy for system burgers");
    }
    k.value = [first](const Vector& z, const Vector&) { return z[first] + z[first + 1]; };
    k.gradient = [first, n](const Vector&, const Vector&) {
        Vector g = Vector::Zero(n);
        g[first] = g[first + 1] = 1.0;
        return g;
    };
    k.hessian_vec = [n](const Vector&, const Vector&, const Vector&) { return Vector(Vector::Zero(n)); };
    return k;
}

KnownScalar resolve_known_function(const nlohmann::json& spec) {
    const SystemConfig cfg = system_from_json(spec);
    const std::string q = spec.at("quantity");
    if (q == "energy") return known_energy(cfg);
    if (q == "entropy") return known_entropy(cfg);
    throw ParseError("unknown known-function quantity '" + q + "'");
}

nlohmann::json system_to_json(const SystemConfig& cfg) {
    nlohmann::json j;
    j["system"] = to_string(cfg.kind);
    j["param_names"] = cfg.param_names;
    j["gas"] = {{"alpha", cfg.gas.alpha}, {"mass", cfg.gas.mass}};
    j["thermo"] = {{"alpha", cfg.thermo.alpha}, {"k", cfg.thermo.k}, {"beta", cfg.thermo.beta}};
    const auto& b = cfg.burgers;
    j["burgers"] = {{"nx", b.nx},
                    {"x_min", b.x_min},
                    {"x_max", b.x_max},
                    {"dt", b.dt},
                    {"final_time", b.final_time},
                    {"spatial_stride", b.spatial_stride},
                    {"temporal_stride", b.temporal_stride}};
    j["initial_state"] = std::vector<double>(cfg.initial_state.data(), cfg.initial_state.data() + cfg.initial_state.size());
    j["fine_dt"] = cfg.fine_dt;
    j["horizon"] = cfg.horizon;
    j["stride"] = cfg.stride;
    return j;
}

SystemConfig system_from_json(const nlohmann::json& j) {
    try {
        SystemConfig cfg = default_system(system_from_tag(j.at("system")));
        cfg.param_names = j.at("param_names").get<std::vector<std::string>>();
        cfg.gas.alpha = j.at("gas").at("alpha");
        cfg.gas.mass = j.at("gas").at("mass");
        cfg.thermo.alpha = j.at("thermo").at("alpha");
        cfg.thermo.k = j.at("thermo").at("k");
        cfg.thermo.beta = j.at("thermo").at("beta");
        const auto& b = j.at("burgers");
        cfg.burgers.nx = b.at("nx");
        cfg.burgers.x_min = b.at("x_min");
        cfg.burgers.x_max = b.at("x_max");
        cfg.burgers.dt = b.at("dt");
        cfg.burgers.final_time = b.at("final_time");
        cfg.burgers.spatial_stride = b.at("spatial_stride");
        cfg.burgers.temporal_stride = b.at("temporal_stride");
        const auto init = j.at("initial_state").get<std::vector<double>>();
        cfg.initial_state = Eigen::Map<const Vector>(init.data(), static_cast<Eigen::Index>(init.size()));
        cfg.fine_dt = j.at("fine_dt");
        cfg.horizon = j.at("horizon");
        cfg.stride = j.at("stride");
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("system description: ") + e.what());
    }
}

}  // namespace thermorom
