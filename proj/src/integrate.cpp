#include "thermorom/integrate.hpp"

#include "thermorom/errors.hpp"
#include "thermorom/systems.hpp"

namespace thermorom {

std::string to_string(Scheme s) { return s == Scheme::rk4 ? "rk4" : "forward_euler"; }

Scheme scheme_from_string(const std::string& name) {
    if (name == "forward_euler" || name == "euler") return Scheme::forward_euler;
    if (name == "rk4") return Scheme::rk4;
    throw ParseError("unknown integration scheme '" + name + "'");
}

Vector step(Scheme scheme, const Field& field, const Vector& z, const Vector& mu, double t, double dt) {
    if (scheme == Scheme::forward_euler) return z + dt * field(z, mu, t);
    const Vector k1 = field(z, mu, t);
    const Vector k2 = field(z + 0.5 * dt * k1, mu, t + 0.5 * dt);
    const Vector k3 = field(z + 0.5 * dt * k2, mu, t + 0.5 * dt);
    const Vector k4 = field(z + dt * k3, mu, t + dt);
    return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Rollout integrate(Scheme scheme, const Field& field, const Vector& z0, const Vector& mu, double dt, int steps) {
    if (steps < 0) throw DimensionError("integrate: negative step count");
    Rollout out;
    out.states.resize(z0.size(), steps + 1);
    out.states.col(0) = z0;
    Vector z = z0;
    for (int n = 0; n < steps; ++n) {
        Vector next;
        try {
            next = step(scheme, field, z, mu, n * dt, dt);
        } catch (const NumericalError&) {
            out.states.conservativeResize(Eigen::NoChange, n + 1);
            out.diverged = true;
            return out;
        }
        if (!next.allFinite()) {
            out.states.conservativeResize(Eigen::NoChange, n + 1);
            out.diverged = true;
            return out;
        }
        out.states.col(n + 1) = next;
        z = std::move(next);
    }
    return out;
}

Rollout forward_euler(const Field& field, const Vector& z0, const Vector& mu, double dt, int steps) {
    return integrate(Scheme::forward_euler, field, z0, mu, dt, steps);
}

Rollout rk4(const Field& field, const Vector& z0, const Vector& mu, double dt, int steps) {
    return integrate(Scheme::rk4, field, z0, mu, dt, steps);
}

double fom_residual(const Vector& u_n, const Vector& u_prev, double dt, const SystemConfig& cfg, const Vector& mu) {
    if (u_n.size() != u_prev.size() || u_n.size() != cfg.state_dim()) {
        throw DimensionError("fom_residual: state sizes do not match the system");
    }
    return (u_n - u_prev - dt * system_rhs(cfg, u_n, mu)).norm();
}

}  // namespace thermorom
