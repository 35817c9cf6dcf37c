#include "advfv/fv_solver.hpp"

#include "advfv/errors.hpp"
#include "advfv/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace advfv {

Vec5 StateField::at(std::size_t cell) const {
    Vec5 v;
    for (std::size_t i = 0; i < kSpecies; ++i) v[i] = u[i][cell];
    return v;
}

void StateField::set(std::size_t cell, const Vec5& v) {
    for (std::size_t i = 0; i < kSpecies; ++i) u[i][cell] = v[i];
}

StateField StateField::uniform(std::size_t n_cells, const Vec5& value, double t) {
    StateField s;
    for (std::size_t i = 0; i < kSpecies; ++i) s.u[i].assign(n_cells, value[i]);
    s.t = t;
    return s;
}

double compute_dt(const ModelParams& p, const RectangleBounds& bounds, double cfl) {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidArgument("cfl must lie in (0, 1]");
    const double gmax = gamma_range(p).max;
    double m = std::numeric_limits<double>::infinity();
    if (gmax > 0.0) m = std::min(m, 1.0 / gmax);
    m = std::min(m, 1.0 / (p.r1 * bounds.beta[2] + p.tau_s));
    m = std::min(m, p.alpha2 / (p.alpha2 + p.m_hat * p.alpha1));
    m = std::min(m, p.tau2 / p.tau1);
    return cfl * m;
}

namespace {

// Reaction coefficients evaluated without sign checks: the linear solves can
// leave roundoff-sized negatives in cells whose exact value is zero.
double gamma_of(const ModelParams& p, double u4) {
    if (const auto* mm = std::get_if<GammaMichaelisMenten>(&p.gamma)) {
        const double v = std::max(u4, 0.0);
        return mm->gamma0 + mm->gamma1 * v / (1.0 + mm->gamma2 * v);
    }
    return std::get<GammaConstant>(p.gamma).gamma0;
}

double act4_of(const ModelParams& p, double u1) { return p.alpha1 * u1 / (1.0 + p.alpha2 * u1); }

double act5_of(const ModelParams& p, double u1) { return p.tau1 * u1 / (1.0 + p.tau2 * u1); }

double stress_coeff(const ModelParams& p, double u1) {
    return p.tau_s / (1.0 + p.C * std::pow(std::max(u1, 0.0), p.nu));
}

void require_size(const std::vector<double>& v, std::size_t n, const char* what) {
    if (v.size() != n) throw InvalidArgument(std::string(what) + ": field size does not match the mesh");
}

}  // namespace

FvScheme::FvScheme(const Mesh& mesh, ModelParams params)
    : mesh_(mesh), p_(std::move(params)), stiffness_(assemble_stiffness(mesh)),
      flux_(FluxKind::from_params(p_)) {
    if (!p_.lambda_m_field.empty() && p_.lambda_m_field.size() != mesh.n_cells())
        throw InvalidArgument("lambda_m field size does not match the mesh");
    try {
        bounds_ = invariant_bounds(p_);
        flux_.beta4 = bounds_->beta[3];
    } catch (const PreconditionError&) {
        bounds_.reset();
    }
    mass_.assign(mesh.cell_area().begin(), mesh.cell_area().end());
}

std::vector<double> FvScheme::implicit_solve(double diffusion, const std::vector<double>& rate,
                                             const std::vector<double>& rhs, double dt) const {
    const std::size_t n = mass_.size();
    std::vector<double> diag(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
        diag[k] = mass_[k] * (1.0 + dt * rate[k]);
        b[k] = mass_[k] * rhs[k];
    }
    return solve_spd(stiffness_.scaled_plus_diagonal(dt * diffusion, diag), b);
}

std::vector<double> FvScheme::step_u1(const StateField& s, double dt) const {
    const std::size_t n = mass_.size();
    require_size(s.u[0], n, "step_u1");
    std::vector<double> rate(n), rhs(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u3 = s.u[2][k];
        rate[k] = gamma_of(p_, s.u[3][k]) + p_.tau0;
        rhs[k] = s.u[0][k] + dt * p_.r1 * u3 * u3;
    }
    return implicit_solve(p_.d1, rate, rhs, dt);
}

std::vector<double> FvScheme::step_u2(const StateField& s, double dt) const {
    const std::size_t n = mass_.size();
    require_size(s.u[1], n, "step_u2");
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = (s.u[1][k] + dt * gamma_of(p_, s.u[3][k]) * s.u[0][k]) / (1.0 + dt * p_.tau_p);
    return out;
}

std::vector<double> FvScheme::step_u3(const StateField& s, double dt) const {
    const std::size_t n = mass_.size();
    require_size(s.u[2], n, "step_u3");
    std::vector<double> rate(n), rhs(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u1 = s.u[0][k];
        rate[k] = p_.d + p_.r2 * u1 + p_.r1 * s.u[2][k];
        rhs[k] = s.u[2][k] + dt * stress_coeff(p_, u1) * s.u[4][k];
    }
    return implicit_solve(p_.d3, rate, rhs, dt);
}

std::vector<double> FvScheme::step_u5(const StateField& s, double dt) const {
    const std::size_t n = mass_.size();
    require_size(s.u[4], n, "step_u5");
    std::vector<double> rate(n, p_.tau3), rhs(n);
    for (std::size_t k = 0; k < n; ++k)
        rhs[k] = s.u[4][k] + dt * act5_of(p_, s.u[0][k]) * s.u[3][k];
    return implicit_solve(p_.d5, rate, rhs, dt);
}

std::vector<double> FvScheme::u4_residual(const StateField& s, const std::vector<double>& u1_new,
                                          const std::vector<double>& M, double dt) const {
    const std::size_t n = mass_.size();
    require_size(u1_new, n, "u4_residual");
    require_size(M, n, "u4_residual");
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double sn = act4_of(p_, s.u[0][k]) * s.u[3][k];
        const double f4 = sn * (p_.m_hat - M[k]) - p_.sigma * M[k] + p_.lambda_at(k);
        r[k] = mass_[k] * (M[k] - s.u[3][k]) - dt * mass_[k] * f4;
    }
    for (const auto& e : mesh_.edges()) {
        const std::size_t a = e.cell_a, b = e.cell_b;
        const double tau = e.transmissibility;
        const double diff = dt * p_.d4 * tau * (M[a] - M[b]);
        const double conv = dt * tau * flux_g(flux_, M[a], M[b], u1_new[b] - u1_new[a]);
        r[a] += diff + conv;
        r[b] -= diff + conv;
    }
    return r;
}

SparseMatrix FvScheme::u4_jacobian(const StateField& s, const std::vector<double>& u1_new,
                                   const std::vector<double>& M, double dt) const {
    const std::size_t n = mass_.size();
    require_size(u1_new, n, "u4_jacobian");
    require_size(M, n, "u4_jacobian");
    std::vector<Triplet> t;
    t.reserve(n + 4 * mesh_.n_interior_edges());
    for (std::size_t k = 0; k < n; ++k) {
        const double sn = act4_of(p_, s.u[0][k]) * s.u[3][k];
        t.push_back({k, k, mass_[k] * (1.0 + dt * (sn + p_.sigma))});
    }
    for (const auto& e : mesh_.edges()) {
        const std::size_t a = e.cell_a, b = e.cell_b;
        const double tau = e.transmissibility;
        const double dd = dt * p_.d4 * tau;
        const FluxPartials g = flux_g_partials(flux_, M[a], M[b], u1_new[b] - u1_new[a]);
        const double ga = dt * tau * g.d_a;
        const double gb = dt * tau * g.d_b;
        t.push_back({a, a, dd + ga});
        t.push_back({a, b, -dd + gb});
        t.push_back({b, a, -dd - ga});
        t.push_back({b, b, dd - gb});
    }
    return SparseMatrix::from_triplets(n, std::move(t), false);
}

double FvScheme::residual_norm(const std::vector<double>& r) const {
    double m = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) m = std::max(m, std::abs(r[k]) / mass_[k]);
    return m;
}

NewtonResult FvScheme::newton_u4(const StateField& s, const std::vector<double>& u1_new, double dt,
                                 const NewtonOptions& opts) const {
    const auto merit = [this](const std::vector<double>& r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) acc += r[k] * r[k] / mass_[k];
        return std::sqrt(acc);
    };
    NewtonResult res;
    res.u4 = s.u[3];
    std::vector<double> r = u4_residual(s, u1_new, res.u4, dt);
    res.residual = residual_norm(r);
    double phi = merit(r);
    while (!(res.residual < opts.tol)) {
        if (res.iterations >= opts.max_iterations) {
            std::ostringstream msg;
            msg << "Newton for u4 did not converge in " << opts.max_iterations
                << " iterations (residual " << res.residual << ")";
            throw NewtonFailure(msg.str(), res.residual);
        }
        const SparseMatrix jac = u4_jacobian(s, u1_new, res.u4, dt);
        std::vector<double> neg(r.size());
        for (std::size_t k = 0; k < r.size(); ++k) neg[k] = -r[k];
        const std::vector<double> delta = solve_general(jac, neg);

        double lambda = 1.0;
        std::vector<double> trial(res.u4.size());
        std::vector<double> trial_r;
        double trial_phi = 0.0;
        for (int h = 0;; ++h, lambda *= 0.5) {
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = res.u4[k] + lambda * delta[k];
            trial_r = u4_residual(s, u1_new, trial, dt);
            trial_phi = merit(trial_r);
            if (!opts.line_search || trial_phi <= (1.0 - opts.armijo * lambda) * phi ||
                h >= opts.max_halvings)
                break;
        }
        res.u4 = std::move(trial);
        r = std::move(trial_r);
        phi = trial_phi;
        res.residual = residual_norm(r);
        ++res.iterations;
    }
    return res;
}

std::pair<StateField, StepDiagnostics> FvScheme::advance(const StateField& s, double dt,
                                                         const NewtonOptions& opts) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
    for (const auto& f : s.u) {
        require_size(f, mass_.size(), "advance");
        for (double v : f)
            if (!std::isfinite(v)) throw InvalidArgument("advance: state has non-finite entries");
    }
    StateField next;
    next.u[0] = step_u1(s, dt);
    next.u[1] = step_u2(s, dt);
    next.u[2] = step_u3(s, dt);
    next.u[4] = step_u5(s, dt);
    NewtonResult nr = newton_u4(s, next.u[0], dt, opts);
    next.u[3] = std::move(nr.u4);
    next.t = s.t + dt;

    StepDiagnostics d = diagnose(next);
    d.newton_iters = nr.iterations;
    d.newton_residual = nr.residual;
    return {std::move(next), d};
}

bool FvScheme::in_rectangle(const StateField& s, double slack) const {
    if (!bounds_) return false;
    for (std::size_t i = 0; i < kSpecies; ++i)
        for (double v : s.u[i])
            if (!(v >= -slack && v <= bounds_->beta[i] + slack)) return false;
    return true;
}

double FvScheme::gradient_energy(const std::vector<double>& u) const {
    double e = 0.0;
    for (const auto& edge : mesh_.edges()) {
        const double du = u[edge.cell_b] - u[edge.cell_a];
        e += edge.transmissibility * du * du;
    }
    return e;
}

StepDiagnostics FvScheme::diagnose(const StateField& s) const {
    StepDiagnostics d;
    d.t = s.t;
    double area = 0.0;
    for (double m : mass_) area += m;
    for (std::size_t i = 0; i < kSpecies; ++i) {
        const auto& f = s.u[i];
        SpeciesStats st;
        st.min = *std::min_element(f.begin(), f.end());
        st.max = *std::max_element(f.begin(), f.end());
        double acc = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) acc += mass_[k] * f[k];
        st.mean = acc / area;
        d.stats[i] = st;
    }
    for (std::size_t i : {0u, 2u, 3u, 4u}) d.gradient_energy += gradient_energy(s.u[i]);
    double var = 0.0;
    for (std::size_t k = 0; k < mass_.size(); ++k) {
        const double dv = s.u[0][k] - d.stats[0].mean;
        var += mass_[k] * dv * dv;
    }
    d.spatial_variance_u1 = var / area;
    d.rectangle_ok = in_rectangle(s);
    return d;
}

RunResult run(const Mesh& mesh, const ModelParams& p, const StateField& initial,
              const RunOptions& opts, RunSink* sink) {
    if (!(opts.T >= 0.0)) throw InvalidArgument("final time must be >= 0");
    if (opts.T > 0.0 && !(opts.dt > 0.0)) throw InvalidArgument("time step must be positive");
    if (opts.diagnostics_stride == 0) throw InvalidArgument("diagnostics stride must be >= 1");

    const FvScheme scheme(mesh, p);
    RunResult out;
    out.final_state = initial;
    const std::size_t steps =
        opts.T > 0.0 ? static_cast<std::size_t>(std::ceil(opts.T / opts.dt - 1e-12)) : 0;

    std::vector<double> pending = opts.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snapshot = 0, snapshot_index = 0;
    const auto take_snapshots = [&](const StateField& s, bool last) {
        bool due = false;
        while (next_snapshot < pending.size() &&
               (pending[next_snapshot] <= s.t + 1e-9 * std::max(opts.dt, 1.0) || last)) {
            ++next_snapshot;
            due = true;
        }
        if (due && sink) sink->on_snapshot(snapshot_index++, s);
    };
    const auto emit = [&](const StepDiagnostics& d) {
        out.diagnostics.push_back(d);
        if (sink) sink->on_diagnostics(d);
    };

    StepDiagnostics d0 = scheme.diagnose(initial);
    out.initial_admissible = d0.rectangle_ok;
    if (!out.initial_admissible)
        log_warning("initial data lie outside the invariant rectangle; rectangle_ok is informational");
    emit(d0);
    take_snapshots(initial, steps == 0);

    try {
        for (std::size_t n = 1; n <= steps; ++n) {
            auto [next, d] = scheme.advance(out.final_state, opts.dt, opts.newton);
            d.step = n;
            out.final_state = std::move(next);
            out.steps = n;
            out.max_newton_iters = std::max(out.max_newton_iters, d.newton_iters);
            if (!d.rectangle_ok && !out.first_rectangle_violation) {
                out.first_rectangle_violation = n;
                if (out.initial_admissible) {
                    std::ostringstream msg;
                    msg << "step " << n << ": state left the invariant rectangle";
                    log_warning(msg.str());
                }
            }
            if (n % opts.diagnostics_stride == 0 || n == steps) emit(d);
            take_snapshots(out.final_state, n == steps);
        }
    } catch (...) {
        if (sink) sink->flush();
        throw;
    }
    if (sink) sink->flush();
    return out;
}

}  // namespace advfv
