#pragma once

#include <cstddef>
#include <span>

#include "distlasso/core.hpp"
#include "distlasso/qls.hpp"

namespace distlasso {

struct ThresholdRule {
    enum class Kind { hard, soft, topk };
    Kind kind = Kind::hard;
    double t = 0.0;     // hard / soft
    std::size_t k = 0;  // topk

    static ThresholdRule hard(double t) { return {Kind::hard, t, 0}; }
    static ThresholdRule soft(double t) { return {Kind::soft, t, 0}; }
    static ThresholdRule topk(std::size_t k) { return {Kind::topk, 0.0, k}; }

    void validate(std::size_t p) const;
    Vector apply(std::span<const double> beta) const;
};

/// Keeps beta_j when |beta_j| >= t.
Vector hard_threshold(std::span<const double> beta, double t);

/// sign(beta_j) * max(|beta_j| - t, 0)
Vector soft_threshold(std::span<const double> beta, double t);

/// Keeps the k largest magnitudes; among equal magnitudes the lower index wins.
Vector topk_threshold(std::span<const double> beta, std::size_t k);

/// Size of the equicorrelation set
///   { j : |(1/n) x_j^T (y - X beta_hat)| >= lambda (1 - eps) }.
std::size_t empirical_sparsity(const Dataset& data, const LassoFit& fit, double eps = 1e-6);

/// c * sigma_y * sqrt(log p / N)
double default_threshold(double sigma_y, std::size_t total_n, std::size_t p, double c = 2.0);

/// Error bounds that hold for HT_t / ST_t of an estimate whenever
/// t > ||estimate - beta_star||_inf: support inside the true support,
/// linf <= 2t, l2 <= 2 sqrt(2s) t, l1 <= 2 sqrt(2) s t.
struct ThresholdBoundCheck {
    bool premise = false;
    bool support_subset = true;
    bool linf_ok = true;
    bool l2_ok = true;
    bool l1_ok = true;

    /// Vacuously true when the premise fails.
    bool holds() const noexcept {
        return !premise || (support_subset && linf_ok && l2_ok && l1_ok);
    }
};

ThresholdBoundCheck check_threshold_bounds(std::span<const double> estimate,
                                           std::span<const double> thresholded,
                                           const GroundTruth& truth, double t);

}  // namespace distlasso
