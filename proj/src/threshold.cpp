#include "distlasso/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "distlasso/debias.hpp"
#include "distlasso/error.hpp"

namespace distlasso {

void ThresholdRule::validate(std::size_t p) const {
    switch (kind) {
        case Kind::hard:
        case Kind::soft:
            if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("threshold must be >= 0");
            break;
        case Kind::topk:
            if (k < 1 || k > p) throw InvalidInput("top-k needs 1 <= k <= p");
            break;
    }
}

Vector ThresholdRule::apply(std::span<const double> beta) const {
    validate(beta.size());
    switch (kind) {
        case Kind::hard: return hard_threshold(beta, t);
        case Kind::soft: return soft_threshold(beta, t);
        case Kind::topk: return topk_threshold(beta, k);
    }
    return {};
}

Vector hard_threshold(std::span<const double> beta, double t) {
    if (!(t >= 0.0)) throw InvalidInput("threshold must be >= 0");
    Vector out(beta.size(), 0.0);
    for (std::size_t j = 0; j < beta.size(); ++j)
        if (std::fabs(beta[j]) >= t) out[j] = beta[j];
    return out;
}

Vector soft_threshold(std::span<const double> beta, double t) {
    if (!(t >= 0.0)) throw InvalidInput("threshold must be >= 0");
    Vector out(beta.size());
    for (std::size_t j = 0; j < beta.size(); ++j) out[j] = distlasso::soft_threshold(beta[j], t);
    return out;
}

Vector topk_threshold(std::span<const double> beta, std::size_t k) {
    const std::size_t p = beta.size();
    if (k < 1 || k > p) throw InvalidInput("top-k needs 1 <= k <= p");
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(beta[a]) > std::fabs(beta[b]);
    });
    Vector out(p, 0.0);
    for (std::size_t i = 0; i < k; ++i) out[idx[i]] = beta[idx[i]];
    return out;
}

std::size_t empirical_sparsity(const Dataset& data, const LassoFit& fit, double eps) {
    const Vector g = score(data, fit.beta_hat);
    const double cut = fit.lambda * (1.0 - eps);
    std::size_t count = 0;
    for (double v : g) count += std::fabs(v) >= cut;
    return count;
}

double default_threshold(double sigma_y, std::size_t total_n, std::size_t p, double c) {
    return c * sigma_y * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(total_n));
}

ThresholdBoundCheck check_threshold_bounds(std::span<const double> estimate,
                                           std::span<const double> thresholded,
                                           const GroundTruth& truth, double t) {
    ThresholdBoundCheck c;
    c.premise = t > error_norms(estimate, truth.beta_star).linf;
    if (!c.premise) return c;
    for (std::size_t j = 0; j < thresholded.size(); ++j)
        if (thresholded[j] != 0.0 && truth.beta_star[j] == 0.0) c.support_subset = false;
    const ErrorReport e = error_norms(thresholded, truth.beta_star);
    const double s = static_cast<double>(truth.sparsity());
    // Relative slack only for rounding in the norms themselves.
    const double slack = 1e-12 * (1.0 + t);
    c.linf_ok = e.linf <= 2.0 * t + slack;
    c.l2_ok = e.l2 <= 2.0 * std::sqrt(2.0 * s) * t + slack;
    c.l1_ok = e.l1 <= 2.0 * std::sqrt(2.0) * s * t + slack;
    return c;
}

}  // namespace distlasso
