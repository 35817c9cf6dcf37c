#pragma once

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <span>
#include <variant>
#include <vector>

namespace advfv {

/// Species order: oligomers, plaques, monomers, microglia, interleukins.
using Vec5 = std::array<double, 5>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

inline constexpr std::size_t kSpecies = 5;

struct GammaConstant {
    double gamma0 = 0.05;
};

/// gamma(u4) = gamma0 + gamma1 u4 / (1 + gamma2 u4)
struct GammaMichaelisMenten {
    double gamma0 = 0.05;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
};

using GammaVariant = std::variant<GammaConstant, GammaMichaelisMenten>;

enum class ChiKind { Logistic, Linear };

struct ModelParams {
    double r1 = 0.1;
    double r2 = 0.1;
    /// Monomer degradation; varies between experiments and must be set.
    double d = std::numeric_limits<double>::quiet_NaN();
    double tau0 = 0.0;
    GammaVariant gamma = GammaConstant{};
    double tau1 = 1.0;
    double tau2 = 1.0;
    double tau3 = 1.0;
    double tau_p = 0.03;
    double tau_s = 1.0;
    double C = 1.0;
    double nu = 2.0;
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double sigma = 0.001;
    double m_hat = 1.0;
    /// Scalar microglia source; used when lambda_m_field is empty.
    double lambda_m = 0.001;
    /// Optional per-cell averages of the microglia source.
    std::vector<double> lambda_m_field;
    double d1 = 1.0;
    double d3 = 1.0;
    double d4 = 1.0;
    double d5 = 1.0;
    ChiKind chi_kind = ChiKind::Logistic;
    double chi_alpha = 24.0;

    /// Throws InvalidArgument on non-positive rates or an unset `d`.
    void validate() const;

    double lambda_at(std::size_t cell) const {
        return lambda_m_field.empty() ? lambda_m : lambda_m_field[cell];
    }
    double lambda_sup() const;
    bool gamma_is_constant() const { return std::holds_alternative<GammaConstant>(gamma); }
    double gamma0() const;
};

/// Reference parameter set of the numerical experiments, with the given
/// monomer degradation rate and logistic sensitivity alpha = 24.
ModelParams standard_params(double d);

struct GammaRange {
    double min;
    double max;
    double lipschitz;
};

GammaRange gamma_range(const ModelParams& p);

double gamma_eval(const ModelParams& p, double u4);

/// Sensitivity of the chemotactic term. Logistic: alpha u (m_hat - u) on
/// [0, m_hat] and 0 outside. Linear: alpha u for u >= 0, 0 below.
double chi_eval(const ModelParams& p, double u);

/// Unfolded-protein stress term tau_S u5 / (1 + C u1^nu).
double stress_s(const ModelParams& p, double u1, double u5);

/// Reaction right-hand side (F1..F5). Rejects negative components.
Vec5 reaction_f(const ModelParams& p, const Vec5& u, double lambda_local);
/// Same formulas without the sign check, for the explicit Euler baseline.
/// Throws PreconditionError if a rational denominator collapses (< 1e-12).
Vec5 reaction_f_unchecked(const ModelParams& p, const Vec5& u, double lambda_local);

/// Upper corners of the invariant rectangle [0, beta_1] x ... x [0, beta_5].
struct RectangleBounds {
    Vec5 beta{};

    bool contains(const Vec5& u, double tol = 0.0) const {
        for (std::size_t i = 0; i < kSpecies; ++i)
            if (!(u[i] >= -tol && u[i] <= beta[i] + tol)) return false;
        return true;
    }
};

/// Throws PreconditionError unless m_hat >= sup(lambda_M) / sigma.
RectangleBounds invariant_bounds(const ModelParams& p);

/// Analytic Jacobian of the spatially homogeneous system (constant gamma only).
Mat5 continuous_jacobian(const ModelParams& p, const Vec5& u);

struct EquilibriumOptions {
    double tol = 1e-10;
    int max_iterations = 100;
    int max_halvings = 30;
    double dedup_spacing = 1e-6;
};

/// Damped Newton on F = 0 from every seed; converged roots deduplicated.
std::vector<Vec5> find_equilibria(const ModelParams& p, std::span<const Vec5> seeds,
                                  const EquilibriumOptions& opts = {});

/// Disease-free equilibrium (0, 0, 0, lambda_M / sigma, 0).
Vec5 disease_free_equilibrium(const ModelParams& p);

double sup_norm(const Vec5& v);

}  // namespace advfv
