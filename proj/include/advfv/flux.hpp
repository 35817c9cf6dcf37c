#pragma once

#include "advfv/model.hpp"

namespace advfv {

struct FluxKind {
    ChiKind kind = ChiKind::Logistic;
    double alpha = 24.0;
    /// Crowding capacity of the logistic sensitivity.
    double m_hat = 1.0;
    /// Upper truncation bound applied to the microglia argument.
    double beta4 = 1.0;

    static FluxKind from_params(const ModelParams& p);
};

struct ChiSplit {
    double up;
    double down;
};

/// Nondecreasing and nonincreasing parts of the truncated sensitivity.
ChiSplit chi_split(const FluxKind& k, double z);

/// Truncated sensitivity chi(clamp(z, 0, beta4)) = up + down.
double chi_truncated(const FluxKind& k, double z);

/// G(a, b; c) = c+ (chi_up(a) + chi_down(b)) - c- (chi_up(b) + chi_down(a)).
double flux_g(const FluxKind& k, double a, double b, double c);

struct FluxPartials {
    double d_a;
    double d_b;
};

/// One-sided (from the left) derivatives at kinks.
FluxPartials flux_g_partials(const FluxKind& k, double a, double b, double c);

/// sup |chi'| on the truncation interval.
double flux_lipschitz(const FluxKind& k);

/// Integral of |chi'| over [0, beta4]; |G| <= |c| times this.
double flux_bound(const FluxKind& k);

}  // namespace advfv
