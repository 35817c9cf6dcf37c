#pragma once

// Scenario drivers shared by the fv_solver unit tests and the acceptance runner.

#include "advfv/fv_solver.hpp"
#include "advfv/sh_dynamics.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace advfv::testing {

inline Mesh bundled_mesh(const std::string& name) {
    return load_msh(std::string(ADVFV_TEST_DATA_DIR) + "/" + name);
}

inline StateField random_admissible(const Mesh& mesh, const RectangleBounds& b, Rng& rng) {
    StateField s = StateField::uniform(mesh.n_cells(), Vec5{});
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) s.set(k, random_in(b, rng));
    return s;
}

inline double rectangle_excess(const StateField& s, const RectangleBounds& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < kSpecies; ++i)
        for (double v : s.u[i]) worst = std::max({worst, -v, v - b.beta[i]});
    return worst;
}

struct MaxPrincipleOutcome {
    double worst_excess = 0.0;
    int max_newton_iters = 0;
    int max_newton_iters_after_first = 0;
    double max_newton_residual = 0.0;
    std::size_t steps = 0;
};

/// Random admissible data, fixed compliant step, `steps` steps.
inline MaxPrincipleOutcome max_principle_run(const Mesh& mesh, const ModelParams& p, std::uint64_t seed,
                                             std::size_t steps, double cfl = 0.9) {
    const FvScheme scheme(mesh, p);
    const RectangleBounds& b = *scheme.bounds();
    const double dt = compute_dt(p, b, cfl);
    Rng rng(seed);
    StateField s = random_admissible(mesh, b, rng);
    MaxPrincipleOutcome out;
    for (std::size_t n = 0; n < steps; ++n) {
        auto [next, d] = scheme.advance(s, dt);
        s = std::move(next);
        out.worst_excess = std::max(out.worst_excess, rectangle_excess(s, b));
        out.max_newton_iters = std::max(out.max_newton_iters, d.newton_iters);
        if (n > 0) out.max_newton_iters_after_first = std::max(out.max_newton_iters_after_first, d.newton_iters);
        out.max_newton_residual = std::max(out.max_newton_residual, d.newton_residual);
        ++out.steps;
    }
    return out;
}

/// Largest column-wise relative gap between the assembled u4 Jacobian and
/// central differences of the residual. Columns whose cell sits within
/// `margin` of a flux kink are skipped.
inline double u4_jacobian_fd_error(const FvScheme& scheme, const StateField& s,
                                   const std::vector<double>& u1_new, const std::vector<double>& M,
                                   double dt, double h = 1e-6, double margin = 1e-4,
                                   std::size_t* checked = nullptr) {
    const FluxKind& fk = scheme.flux();
    std::vector<double> kinks{0.0, std::min(fk.beta4, fk.m_hat)};
    if (fk.kind == ChiKind::Logistic) kinks.push_back(0.5 * fk.m_hat);
    else kinks.back() = fk.beta4;

    const SparseMatrix J = scheme.u4_jacobian(s, u1_new, M, dt);
    const std::size_t n = M.size();
    double worst = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const bool near_kink = std::any_of(kinks.begin(), kinks.end(),
                                           [&](double z) { return std::abs(M[j] - z) < margin; });
        if (near_kink) continue;
        std::vector<double> mp = M, mm = M;
        mp[j] += h;
        mm[j] -= h;
        const auto rp = scheme.u4_residual(s, u1_new, mp, dt);
        const auto rm = scheme.u4_residual(s, u1_new, mm, dt);
        double gap = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fd = (rp[i] - rm[i]) / (2.0 * h);
            const double a = J.coeff(i, j);
            gap = std::max(gap, std::abs(a - fd));
            scale = std::max(scale, std::abs(a));
        }
        worst = std::max(worst, gap / scale);
        ++used;
    }
    if (checked) *checked = used;
    return worst;
}

/// Max over cells and species of |PDE - ODE| for a uniform start.
inline double uniform_oracle_gap(const Mesh& mesh, const ModelParams& p, const Vec5& u0, double dt,
                                 std::size_t steps) {
    const FvScheme scheme(mesh, p);
    StateField s = StateField::uniform(mesh.n_cells(), u0);
    Vec5 ode = u0;
    double worst = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        s = scheme.advance(s, dt).first;
        ode = nsfd_step(p, ode, dt);
        for (std::size_t i = 0; i < kSpecies; ++i)
            for (double v : s.u[i]) worst = std::max(worst, std::abs(v - ode[i]));
    }
    return worst;
}

}  // namespace advfv::testing
