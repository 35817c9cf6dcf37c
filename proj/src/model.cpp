#include "advfv/model.hpp"

#include "advfv/errors.hpp"
#include "advfv/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace advfv {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidArgument(std::string("parameter ") + name + " must be positive and finite");
}

void require_nonnegative_state(const Vec5& u, const char* where) {
    for (std::size_t i = 0; i < kSpecies; ++i) {
        if (!(u[i] >= 0.0)) {
            std::ostringstream msg;
            msg << where << ": component u" << i + 1 << " = " << u[i] << " is negative";
            throw InvalidArgument(msg.str());
        }
    }
}

/// alpha1 u1 / (1 + alpha2 u1)
double microglia_activation(const ModelParams& p, double u1) {
    return p.alpha1 * u1 / (1.0 + p.alpha2 * u1);
}

/// tau1 u1 / (1 + tau2 u1)
double interleukin_activation(const ModelParams& p, double u1) {
    return p.tau1 * u1 / (1.0 + p.tau2 * u1);
}

Vec5 reaction_terms(const ModelParams& p, const Vec5& u, double lambda_local, double gamma,
                    double stress) {
    const auto [u1, u2, u3, u4, u5] = u;
    return {
        p.r1 * u3 * u3 - gamma * u1 - p.tau0 * u1,
        gamma * u1 - p.tau_p * u2,
        stress - p.d * u3 - p.r2 * u1 * u3 - p.r1 * u3 * u3,
        microglia_activation(p, u1) * (p.m_hat - u4) * u4 - p.sigma * u4 + lambda_local,
        interleukin_activation(p, u1) * u4 - p.tau3 * u5,
    };
}

}  // namespace

void ModelParams::validate() const {
    require_positive(r1, "r1");
    require_positive(r2, "r2");
    if (std::isnan(d)) throw InvalidArgument("parameter d must be set explicitly");
    require_positive(d, "d");
    if (!(tau0 >= 0.0)) throw InvalidArgument("parameter tau0 must be >= 0");
    if (const auto* mm = std::get_if<GammaMichaelisMenten>(&gamma)) {
        require_positive(mm->gamma0, "gamma0");
        require_positive(mm->gamma1, "gamma1");
        require_positive(mm->gamma2, "gamma2");
    } else {
        require_positive(std::get<GammaConstant>(gamma).gamma0, "gamma0");
    }
    require_positive(tau1, "tau1");
    require_positive(tau2, "tau2");
    require_positive(tau3, "tau3");
    require_positive(tau_p, "tau_p");
    require_positive(tau_s, "tau_s");
    require_positive(C, "C");
    require_positive(nu, "nu");
    require_positive(alpha1, "alpha1");
    require_positive(alpha2, "alpha2");
    require_positive(sigma, "sigma");
    require_positive(m_hat, "m_hat");
    if (lambda_m_field.empty()) {
        require_positive(lambda_m, "lambda_m");
    } else {
        for (double v : lambda_m_field)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw InvalidArgument("lambda_m field values must be finite and >= 0");
    }
    for (auto [v, name] : {std::pair{d1, "d1"}, {d3, "d3"}, {d4, "d4"}, {d5, "d5"}})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidArgument(std::string("diffusion ") + name + " must be >= 0");
    require_positive(chi_alpha, "chi_alpha");
}

double ModelParams::lambda_sup() const {
    if (lambda_m_field.empty()) return lambda_m;
    return *std::max_element(lambda_m_field.begin(), lambda_m_field.end());
}

double ModelParams::gamma0() const {
    return std::visit([](const auto& g) { return g.gamma0; }, gamma);
}

ModelParams standard_params(double d) {
    ModelParams p;
    p.d = d;
    return p;
}

GammaRange gamma_range(const ModelParams& p) {
    if (const auto* mm = std::get_if<GammaMichaelisMenten>(&p.gamma))
        return {mm->gamma0, mm->gamma0 + mm->gamma1 / mm->gamma2, mm->gamma1};
    const double g0 = std::get<GammaConstant>(p.gamma).gamma0;
    return {g0, g0, 0.0};
}

double gamma_eval(const ModelParams& p, double u4) {
    if (!(u4 >= 0.0)) throw InvalidArgument("gamma_eval: u4 must be >= 0");
    if (const auto* mm = std::get_if<GammaMichaelisMenten>(&p.gamma))
        return mm->gamma0 + mm->gamma1 * u4 / (1.0 + mm->gamma2 * u4);
    return std::get<GammaConstant>(p.gamma).gamma0;
}

double chi_eval(const ModelParams& p, double u) {
    if (p.chi_kind == ChiKind::Linear) return u > 0.0 ? p.chi_alpha * u : 0.0;
    if (!(u > 0.0) || !(u < p.m_hat)) return 0.0;
    return p.chi_alpha * u * (p.m_hat - u);
}

double stress_s(const ModelParams& p, double u1, double u5) {
    if (!(u1 >= 0.0) || !(u5 >= 0.0)) throw InvalidArgument("stress_s: inputs must be >= 0");
    return p.tau_s * u5 / (1.0 + p.C * std::pow(u1, p.nu));
}

Vec5 reaction_f(const ModelParams& p, const Vec5& u, double lambda_local) {
    require_nonnegative_state(u, "reaction_f");
    return reaction_terms(p, u, lambda_local, gamma_eval(p, u[3]), stress_s(p, u[0], u[4]));
}

Vec5 reaction_f_unchecked(const ModelParams& p, const Vec5& u, double lambda_local) {
    const double u1 = u[0];
    double gamma = p.gamma0();
    if (const auto* mm = std::get_if<GammaMichaelisMenten>(&p.gamma)) {
        const double den = 1.0 + mm->gamma2 * u[3];
        if (std::abs(den) < 1e-12) throw PreconditionError("gamma denominator vanished");
        gamma = mm->gamma0 + mm->gamma1 * u[3] / den;
    }
    const double stress_den = 1.0 + p.C * std::pow(u1, p.nu);
    const double act4_den = 1.0 + p.alpha2 * u1;
    const double act5_den = 1.0 + p.tau2 * u1;
    for (double den : {stress_den, act4_den, act5_den}) {
        if (!(std::abs(den) >= 1e-12)) {
            std::ostringstream msg;
            msg << "reaction denominator vanished at u = (" << u[0] << ", " << u[1] << ", "
                << u[2] << ", " << u[3] << ", " << u[4] << ")";
            throw PreconditionError(msg.str());
        }
    }
    return reaction_terms(p, u, lambda_local, gamma, p.tau_s * u[4] / stress_den);
}

RectangleBounds invariant_bounds(const ModelParams& p) {
    const double lam = p.lambda_sup();
    if (!(p.m_hat >= lam / p.sigma)) {
        std::ostringstream msg;
        msg << "invariant rectangle requires m_hat >= lambda_M / sigma (m_hat = " << p.m_hat
            << ", lambda_M / sigma = " << lam / p.sigma << ")";
        throw PreconditionError(msg.str());
    }
    const GammaRange g = gamma_range(p);
    if (!(g.min + p.tau0 > 0.0) || !(p.d > 0.0) || !(p.tau2 > 0.0) || !(p.tau3 > 0.0) ||
        !(p.tau_p > 0.0))
        throw PreconditionError("invariant rectangle requires gamma_min + tau0, d, tau2, tau3, tau_p > 0");
    RectangleBounds r;
    auto& b = r.beta;
    b[3] = p.m_hat;
    b[4] = p.tau1 / (p.tau2 * p.tau3) * b[3];
    b[2] = p.tau_s / p.d * b[4];
    b[0] = p.r1 / (p.tau0 + g.min) * b[2] * b[2];
    b[1] = g.max / p.tau_p * b[0];
    return r;
}

Mat5 continuous_jacobian(const ModelParams& p, const Vec5& u) {
    if (!p.gamma_is_constant())
        throw UnsupportedVariant("continuous_jacobian supports constant gamma only");
    require_nonnegative_state(u, "continuous_jacobian");
    const auto [u1, u2, u3, u4, u5] = u;
    (void)u2;
    const double g0 = p.gamma0();

    const double denom_s = 1.0 + p.C * std::pow(u1, p.nu);
    double ds_du1 = 0.0;
    if (u1 > 0.0) {
        ds_du1 = -p.tau_s * u5 * p.C * p.nu * std::pow(u1, p.nu - 1.0) / (denom_s * denom_s);
    } else if (p.nu == 1.0) {
        ds_du1 = -p.tau_s * u5 * p.C;
    } else if (p.nu < 1.0 && u5 > 0.0) {
        throw PreconditionError("stress term is not differentiable at u1 = 0 for nu < 1");
    }
    const double act4 = microglia_activation(p, u1);
    const double act4_d = p.alpha1 / ((1.0 + p.alpha2 * u1) * (1.0 + p.alpha2 * u1));
    const double act5 = interleukin_activation(p, u1);
    const double act5_d = p.tau1 / ((1.0 + p.tau2 * u1) * (1.0 + p.tau2 * u1));

    Mat5 j = Mat5::Zero();
    j(0, 0) = -g0 - p.tau0;
    j(0, 2) = 2.0 * p.r1 * u3;
    j(1, 0) = g0;
    j(1, 1) = -p.tau_p;
    j(2, 0) = ds_du1 - p.r2 * u3;
    j(2, 2) = -p.d - p.r2 * u1 - 2.0 * p.r1 * u3;
    j(2, 4) = p.tau_s / denom_s;
    j(3, 0) = act4_d * (p.m_hat - u4) * u4;
    j(3, 3) = act4 * (p.m_hat - 2.0 * u4) - p.sigma;
    j(4, 0) = act5_d * u4;
    j(4, 3) = act5;
    j(4, 4) = -p.tau3;
    return j;
}

Vec5 disease_free_equilibrium(const ModelParams& p) {
    return {0.0, 0.0, 0.0, p.lambda_m / p.sigma, 0.0};
}

double sup_norm(const Vec5& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<Vec5> find_equilibria(const ModelParams& p, std::span<const Vec5> seeds,
                                  const EquilibriumOptions& opts) {
    if (!p.gamma_is_constant() || p.tau0 != 0.0)
        throw PreconditionError("find_equilibria requires constant gamma and tau0 = 0");
    if (!p.lambda_m_field.empty())
        throw PreconditionError("find_equilibria requires a scalar lambda_M");

    const auto residual = [&](const Vec5& x) { return reaction_f(p, x, p.lambda_m); };
    std::vector<Vec5> roots;

    for (std::size_t s = 0; s < seeds.size(); ++s) {
        Vec5 x = seeds[s];
        for (auto& v : x) v = std::max(v, 0.0);
        Vec5 f = residual(x);
        double norm = sup_norm(f);
        bool converged = norm < opts.tol;
        for (int it = 0; it < opts.max_iterations && !converged; ++it) {
            const Mat5 jac = continuous_jacobian(p, x);
            Eigen::Matrix<double, 5, 1> rhs;
            for (std::size_t i = 0; i < kSpecies; ++i) rhs(static_cast<Eigen::Index>(i)) = -f[i];
            const Eigen::Matrix<double, 5, 1> step = jac.fullPivLu().solve(rhs);
            if (!step.allFinite()) break;

            double lambda = 1.0;
            bool accepted = false;
            for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
                Vec5 trial;
                for (std::size_t i = 0; i < kSpecies; ++i)
                    trial[i] = std::max(0.0, x[i] + lambda * step(static_cast<Eigen::Index>(i)));
                const Vec5 ft = residual(trial);
                const double nt = sup_norm(ft);
                if (nt < norm) {
                    x = trial;
                    f = ft;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            converged = norm < opts.tol;
        }
        if (!converged) {
            std::ostringstream msg;
            msg << "find_equilibria: seed " << s << " did not converge (|F| = " << norm << ")";
            log_info(msg.str());
            continue;
        }
        const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const Vec5& r) {
            double diff = 0.0;
            for (std::size_t i = 0; i < kSpecies; ++i) diff = std::max(diff, std::abs(r[i] - x[i]));
            return diff < opts.dedup_spacing;
        });
        if (!duplicate) roots.push_back(x);
    }
    return roots;
}

}  // namespace advfv
