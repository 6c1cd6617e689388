#pragma once

// Explicit time integrators and the full-order residual.

#include <functional>
#include <string>

#include "thermorom/diffcore.hpp"

namespace thermorom {

struct SystemConfig;

/// dz/dt = field(z, mu, t)
using Field = std::function<Vector(const Vector& z, const Vector& mu, double t)>;

enum class Scheme { forward_euler, rk4 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct Rollout {
    Matrix states;  // d x (completed steps + 1)
    bool diverged = false;

    int steps() const { return static_cast<int>(states.cols()) - 1; }
};

/// z_{n+1} = z_n + dt field(z_n)
Rollout forward_euler(const Field& field, const Vector& z0, const Vector& mu, double dt, int steps);
/// Classical four-stage Runge-Kutta.
Rollout rk4(const Field& field, const Vector& z0, const Vector& mu, double dt, int steps);
Rollout integrate(Scheme scheme, const Field& field, const Vector& z0, const Vector& mu, double dt, int steps);

/// One step of the scheme.
Vector step(Scheme scheme, const Field& field, const Vector& z, const Vector& mu, double t, double dt);

/// || u_n - u_prev - dt f(u_n) ||_2 for the system's stored-resolution rhs.
double fom_residual(const Vector& u_n, const Vector& u_prev, double dt, const SystemConfig& cfg, const Vector& mu);

}  // namespace thermorom
