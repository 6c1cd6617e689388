#pragma once

// Full-order reference models and trajectory datasets.
//
//   gas_containers  two ideal-gas containers separated by a movable wall,
//                   state (q, p, S1, S2)
//   thermo_mass     two masses on a spring with damping and heat exchange,
//                   state (q1, q2, p1, p2, S1, S2)
//   burgers         1D inviscid Burgers on [-3, 3) with periodic boundary,
//                   first-order upwind in space, backward Euler in time
//
// A SystemConfig fixes every physical constant and names which of them are
// varied by the parameter vector mu (`param_names`, in order).

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermorom/diffcore.hpp"
#include "thermorom/pgfinn.hpp"

namespace thermorom {

enum class SystemKind { gas_containers, thermo_mass, burgers };

std::string to_string(SystemKind kind);
/// Throws std::invalid_argument for unknown tags.
SystemKind system_from_tag(const std::string& tag);

struct GasContainersParams {
    double alpha = 10.0;  // heat-exchange coefficient
    double mass = 1.0;    // wall mass
};

struct ThermoMassParams {
    double alpha = 0.5;  // damping
    double k = 10.0;     // spring constant
    double beta = 1.0;   // heat conductivity
};

struct BurgersConfig {
    int nx = 1000;  // fine grid
    double x_min = -3.0;
    double x_max = 3.0;
    double dt = 1e-3;  // fine backward-Euler step
    double final_time = 1.0;
    int spatial_stride = 5;
    int temporal_stride = 5;
    double newton_tol = 1e-10;
    int newton_max_iter = 20;

    double dx() const { return (x_max - x_min) / nx; }
};

struct SystemConfig {
    SystemKind kind = SystemKind::burgers;
    std::vector<std::string> param_names;
    GasContainersParams gas;
    ThermoMassParams thermo;
    BurgersConfig burgers;
    // ODE systems
    Vector initial_state;  // empty selects the default initial condition
    double fine_dt = 1e-3;
    double horizon = 8.0;
    int stride = 20;  // fine steps per stored snapshot

    int param_dim() const { return static_cast<int>(param_names.size()); }
    /// Dimension of stored snapshots.
    int state_dim() const;
    /// Time between stored snapshots.
    double snapshot_dt() const;
    /// Number of stored snapshots per trajectory.
    int num_snapshots() const;
};

/// Defaults: gas containers alpha in the parameter vector, thermo-mass alpha,
/// Burgers (a, w).
SystemConfig default_system(SystemKind kind);

GasContainersParams gas_params(const SystemConfig& cfg, const Vector& mu);
ThermoMassParams thermo_params(const SystemConfig& cfg, const Vector& mu);
/// (a, w) of the Gaussian pulse.
std::pair<double, double> burgers_pulse(const SystemConfig& cfg, const Vector& mu);

// --- gas containers ---------------------------------------------------------

struct GasThermo {
    double e1, e2, t1, t2;
};
/// Sackur-Tetrode inversion with N k_B = c = 1: E_i = (e^{S_i} / V_i)^{2/3}, T_i = 2 E_i / 3.
GasThermo gas_thermo(const Vector& state);
Vector gas_rhs(const Vector& state, const GasContainersParams& params);
Vector gas_default_initial_state();

// --- thermo-mechanical two-mass system --------------------------------------

Vector thermo_mass_rhs(const Vector& state, const ThermoMassParams& params);
Vector thermo_mass_default_initial_state();

/// Total energy and entropy of an ODE benchmark state.
std::pair<double, double> system_energy_entropy(const std::string& tag, const Vector& state, const SystemConfig& cfg,
                                                const Vector& mu);

// --- Burgers ------------------------------------------------------------------

Vector burgers_grid(int nx, double x_min = -3.0, double x_max = 3.0);
Vector burgers_initial(double a, double w, const Vector& grid);
/// f_i = -u_i (u_i - u_{i-1}) / dx, periodic.
Vector burgers_rhs(const Vector& u, double dx);

struct NewtonReport {
    int iterations = 0;
    double residual_norm = 0.0;
};
/// Solves u - u_prev - dt f(u) = 0 by Newton with the exact cyclic-bidiagonal
/// Jacobian. Throws NumericalError (carrying the last residual) on failure.
Vector backward_euler_solve(const Vector& u_prev, double dt, double dx, double tol = 1e-10, int max_iter = 20,
                            NewtonReport* report = nullptr);

// --- generic dispatch at snapshot resolution ----------------------------------

/// Right-hand side of the stored-resolution system (for Burgers the
/// subsampled grid), used by residuals and error indicators.
Vector system_rhs(const SystemConfig& cfg, const Vector& state, const Vector& mu);
Vector system_initial_state(const SystemConfig& cfg, const Vector& mu);

// --- datasets -------------------------------------------------------------------

struct Trajectory {
    Vector mu;
    Matrix states;       // state_dim x num_snapshots, one snapshot per column
    Matrix derivatives;  // same shape; empty when unavailable
    int num_snapshots() const { return static_cast<int>(states.cols()); }
};

struct TrajectoryDataset {
    std::string system;
    std::vector<std::string> param_names;
    double dt = 0.0;
    double t0 = 0.0;
    std::string provenance;
    std::vector<Trajectory> trajectories;

    int state_dim() const { return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().states.rows()); }
    bool has_derivatives() const;
    /// Validates shapes and finiteness; throws ParseError naming the problem.
    void validate() const;
};

/// Backward differences (U_n - U_{n-1}) / dt for n >= 1; column 0 uses the
/// forward difference (U_1 - U_0) / dt.
Matrix backward_difference(const Matrix& states, double dt);

/// Full-order trajectory for one mu at the stored resolution.
Trajectory simulate(const SystemConfig& cfg, const Vector& mu);

/// One trajectory per mu, with backward-difference derivatives; `jobs` solves run concurrently.
TrajectoryDataset generate_dataset(const SystemConfig& cfg, const std::vector<Vector>& mus, int jobs = 1);

// --- known energy / entropy for pGFINN ----------------------------------------

KnownScalar known_energy(const SystemConfig& cfg);
KnownScalar known_entropy(const SystemConfig& cfg);
/// Rebuilds a known function from its serialized spec.
KnownScalar resolve_known_function(const nlohmann::json& spec);

nlohmann::json system_to_json(const SystemConfig& cfg);
SystemConfig system_from_json(const nlohmann::json& j);

}  // namespace thermorom
