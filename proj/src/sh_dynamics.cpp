#include "advfv/sh_dynamics.hpp"

#include "advfv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace advfv {

namespace {

void require_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
}

/// Implicit loss rates Q_i in the NSFD splitting F_i = P_i - Q_i u_i.
Vec5 nsfd_rates(const ModelParams& p, const Vec5& u) {
    const double act4 = p.alpha1 * u[0] / (1.0 + p.alpha2 * u[0]);
    return {
        gamma_eval(p, u[3]) + p.tau0,
        p.tau_p,
        p.d + p.r2 * u[0] + p.r1 * u[2],
        act4 * u[3] + p.sigma,
        p.tau3,
    };
}

Eigen::Matrix<std::complex<double>, 5, 1> eigenvalues_of(const Mat5& m) {
    Eigen::EigenSolver<Mat5> es(m, false);
    if (es.info() != Eigen::Success)
        throw SolverError("eigenvalue iteration did not converge", std::numeric_limits<double>::infinity());
    return es.eigenvalues();
}

}  // namespace

Vec5 nsfd_step(const ModelParams& p, const Vec5& u, double dt) {
    require_dt(dt);
    for (std::size_t i = 0; i < kSpecies; ++i)
        if (!(u[i] >= 0.0)) throw InvalidArgument("nsfd_step: state must be nonnegative");
    const auto [u1, u2, u3, u4, u5] = u;
    const double gamma = gamma_eval(p, u4);
    const double act4 = p.alpha1 * u1 / (1.0 + p.alpha2 * u1);
    const double act5 = p.tau1 * u1 / (1.0 + p.tau2 * u1);
    const double s = stress_s(p, u1, u5);
    return {
        (u1 + dt * p.r1 * u3 * u3) / (1.0 + dt * (gamma + p.tau0)),
        (u2 + dt * gamma * u1) / (1.0 + dt * p.tau_p),
        (u3 + dt * s) / (1.0 + dt * (p.d + p.r2 * u1 + p.r1 * u3)),
        (u4 + dt * act4 * p.m_hat * u4 + dt * p.lambda_m) / (1.0 + dt * (act4 * u4 + p.sigma)),
        (u5 + dt * act5 * u4) / (1.0 + dt * p.tau3),
    };
}

Vec5 euler_step(const ModelParams& p, const Vec5& u, double dt) {
    require_dt(dt);
    const Vec5 f = reaction_f_unchecked(p, u, p.lambda_m);
    Vec5 out;
    for (std::size_t i = 0; i < kSpecies; ++i) out[i] = u[i] + dt * f[i];
    return out;
}

Trajectory integrate(const ModelParams& p, OdeScheme scheme, const Vec5& u0, double dt, double T,
                     const IntegrateOptions& opts) {
    require_dt(dt);
    if (!(T >= 0.0)) throw InvalidArgument("final time must be >= 0");
    if (opts.stride == 0) throw InvalidArgument("trajectory stride must be >= 1");
    const RectangleBounds bounds = invariant_bounds(p);
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));

    Trajectory traj;
    Vec5 u = u0;
    const auto record = [&](std::size_t n, bool ok) {
        if (n % opts.stride == 0 || n == steps) {
            traj.times.push_back(static_cast<double>(n) * dt);
            traj.states.push_back(u);
            traj.in_rectangle.push_back(ok);
        }
    };
    const auto check = [&](std::size_t n) {
        const bool ok = bounds.contains(u, opts.tol);
        if (!ok && !traj.first_violation) traj.first_violation = n;
        return ok;
    };

    record(0, check(0));
    for (std::size_t n = 1; n <= steps; ++n) {
        // Once the Euler iterate leaves the rectangle it may reach states where
        // the NSFD sign check would reject; Euler keeps going without checks.
        u = scheme == OdeScheme::Nsfd ? nsfd_step(p, u, dt) : euler_step(p, u, dt);
        record(n, check(n));
    }
    return traj;
}

Mat5 discrete_jacobian(const ModelParams& p, const Vec5& E, double dt) {
    require_dt(dt);
    const double res = sup_norm(reaction_f(p, E, p.lambda_m));
    if (!(res < 1e-8)) {
        std::ostringstream msg;
        msg << "discrete_jacobian: state is not an equilibrium (|F| = " << res << ")";
        throw PreconditionError(msg.str());
    }
    const Mat5 jc = continuous_jacobian(p, E);
    const Vec5 rates = nsfd_rates(p, E);
    Mat5 jd = Mat5::Identity();
    for (int i = 0; i < 5; ++i) {
        const double g = dt / (1.0 + dt * rates[static_cast<std::size_t>(i)]);
        jd.row(i) += g * jc.row(i);
    }
    return jd;
}

Vec5 eigenvalue_moduli(const Mat5& m) {
    const auto ev = eigenvalues_of(m);
    Vec5 out;
    for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i)] = std::abs(ev(i));
    std::sort(out.begin(), out.end());
    return out;
}

Vec5 dfe_eigenvalues(const ModelParams& p, double dt, double verify_tol) {
    require_dt(dt);
    if (!p.gamma_is_constant() || p.tau0 != 0.0)
        throw PreconditionError("dfe_eigenvalues requires constant gamma and tau0 = 0");
    const Vec5 closed{
        1.0 / (1.0 + p.gamma0() * dt), 1.0 / (1.0 + p.tau_p * dt), 1.0 / (1.0 + p.d * dt),
        1.0 / (1.0 + p.sigma * dt),    1.0 / (1.0 + p.tau3 * dt),
    };

    const auto evs = eigenvalues_of(discrete_jacobian(p, disease_free_equilibrium(p), dt));
    std::vector<double> numeric;
    for (int i = 0; i < 5; ++i) {
        const auto ev = evs(i);
        if (std::abs(ev.imag()) > 1e-10)
            throw SolverError("dfe_eigenvalues: complex eigenvalue at the disease-free state",
                              std::abs(ev.imag()));
        numeric.push_back(ev.real());
    }
    std::vector<double> expected(closed.begin(), closed.end());
    std::sort(numeric.begin(), numeric.end());
    std::sort(expected.begin(), expected.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i)
        worst = std::max(worst, std::abs(numeric[i] - expected[i]));
    if (worst > verify_tol)
        throw SolverError("dfe_eigenvalues: closed forms disagree with the eigensolve", worst);
    return closed;
}

}  // namespace advfv
