#include "advfv/flux.hpp"

#include <algorithm>

namespace advfv {

namespace {

double logistic(const FluxKind& k, double z) { return k.alpha * z * (k.m_hat - z); }

double logistic_top(const FluxKind& k) { return logistic(k, 0.5 * k.m_hat); }

/// chi_up(x) + chi_down(y), arranged so that the diagonal x == y reproduces
/// chi(x) without cancellation.
double combine(const FluxKind& k, double x, double y) {
    if (k.kind == ChiKind::Linear) return k.alpha * std::clamp(x, 0.0, k.beta4);
    const double h = 0.5 * k.m_hat;
    const double top = std::min(k.beta4, k.m_hat);
    const double xt = std::clamp(x, 0.0, top);
    const double yt = std::clamp(y, 0.0, top);
    if (xt >= h) return yt >= h ? logistic(k, yt) : logistic_top(k);
    if (yt < h) return logistic(k, xt);
    return logistic(k, xt) - k.alpha * (yt - h) * (yt - h);
}

double up_slope(const FluxKind& k, double z) {
    if (k.kind == ChiKind::Linear) return (z > 0.0 && z <= k.beta4) ? k.alpha : 0.0;
    const double h = 0.5 * k.m_hat;
    return (z > 0.0 && z <= h && z <= k.beta4) ? k.alpha * (k.m_hat - 2.0 * z) : 0.0;
}

double down_slope(const FluxKind& k, double z) {
    if (k.kind == ChiKind::Linear) return 0.0;
    const double h = 0.5 * k.m_hat;
    const double top = std::min(k.beta4, k.m_hat);
    return (z > h && z <= top) ? k.alpha * (k.m_hat - 2.0 * z) : 0.0;
}

}  // namespace

FluxKind FluxKind::from_params(const ModelParams& p) {
    return {p.chi_kind, p.chi_alpha, p.m_hat, p.m_hat};
}

ChiSplit chi_split(const FluxKind& k, double z) {
    if (k.kind == ChiKind::Linear) return {k.alpha * std::clamp(z, 0.0, k.beta4), 0.0};
    const double h = 0.5 * k.m_hat;
    const double zt = std::clamp(z, 0.0, std::min(k.beta4, k.m_hat));
    if (zt <= h) return {logistic(k, zt), 0.0};
    return {logistic_top(k), -k.alpha * (zt - h) * (zt - h)};
}

double chi_truncated(const FluxKind& k, double z) { return combine(k, z, z); }

double flux_g(const FluxKind& k, double a, double b, double c) {
    const double cp = std::max(c, 0.0);
    const double cm = std::max(-c, 0.0);
    return cp * combine(k, a, b) - cm * combine(k, b, a);
}

FluxPartials flux_g_partials(const FluxKind& k, double a, double b, double c) {
    const double cp = std::max(c, 0.0);
    const double cm = std::max(-c, 0.0);
    return {cp * up_slope(k, a) - cm * down_slope(k, a), cp * down_slope(k, b) - cm * up_slope(k, b)};
}

double flux_lipschitz(const FluxKind& k) {
    return k.kind == ChiKind::Linear ? k.alpha : k.alpha * k.m_hat;
}

double flux_bound(const FluxKind& k) {
    if (k.kind == ChiKind::Linear) return k.alpha * k.beta4;
    const double top = std::min(k.beta4, k.m_hat);
    const double h = 0.5 * k.m_hat;
    if (top <= h) return logistic(k, top);
    return 2.0 * logistic_top(k) - logistic(k, top);
}

}  // namespace advfv
