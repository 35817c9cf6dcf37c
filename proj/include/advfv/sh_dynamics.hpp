#pragma once

#include "advfv/model.hpp"

#include <optional>
#include <vector>

namespace advfv {

enum class OdeScheme { Nsfd, Euler };

/// One step of the nonstandard scheme; every update is a positive rational
/// expression, so the output stays in the invariant rectangle for any dt.
Vec5 nsfd_step(const ModelParams& p, const Vec5& u, double dt);

/// u + dt F(u), evaluated without the sign check.
Vec5 euler_step(const ModelParams& p, const Vec5& u, double dt);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec5> states;
    std::vector<bool> in_rectangle;
    std::optional<std::size_t> first_violation;
};

struct IntegrateOptions {
    /// Keep every `stride`-th step (the final step is always kept).
    std::size_t stride = 1;
    /// Slack used for the in-rectangle flag.
    double tol = 1e-12;
};

/// Steps N = ceil(T / dt) times so that N dt covers [0, T].
Trajectory integrate(const ModelParams& p, OdeScheme scheme, const Vec5& u0, double dt, double T,
                     const IntegrateOptions& opts = {});

/// Jacobian of the NSFD map at an equilibrium E: I + dt / (1 + dt rate_i) J^C(E).
Mat5 discrete_jacobian(const ModelParams& p, const Vec5& E, double dt);

/// Closed-form eigenvalues 1 / (1 + rate dt) at the disease-free equilibrium,
/// cross-checked against an eigensolve of discrete_jacobian(E0). For very
/// large dt the tiny eigenvalues are clustered and the matrix is far from
/// normal, so the eigensolve itself is only accurate to about 1e-9 there.
Vec5 dfe_eigenvalues(const ModelParams& p, double dt, double verify_tol = 1e-10);

/// Moduli of the eigenvalues of a 5x5 matrix, sorted ascending.
Vec5 eigenvalue_moduli(const Mat5& m);

}  // namespace advfv
