#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "distlasso/core.hpp"
#include "distlasso/distributed.hpp"
#include "distlasso/qls.hpp"

namespace distlasso {

/// Smooth per-observation loss rho(y, a), convex in the linear predictor a.
class LossModel {
public:
    virtual ~LossModel() = default;
    virtual std::string name() const = 0;
    virtual double rho(double y, double a) const = 0;
    virtual double rho_dot(double y, double a) const = 0;
    virtual double rho_ddot(double y, double a) const = 0;
    /// Constant unit curvature: the quadratic model is the loss itself.
    virtual bool quadratic() const { return false; }
};

/// rho = 1/2 (y - a)^2
class SquaredLoss final : public LossModel {
public:
    std::string name() const override { return "squared"; }
    double rho(double y, double a) const override { return 0.5 * (y - a) * (y - a); }
    double rho_dot(double y, double a) const override { return a - y; }
    double rho_ddot(double, double) const override { return 1.0; }
    bool quadratic() const override { return true; }
};

/// rho = log(1 + e^a) - y a, y in {0, 1}
class LogisticLoss final : public LossModel {
public:
    std::string name() const override { return "logistic"; }
    double rho(double y, double a) const override;
    double rho_dot(double y, double a) const override;
    double rho_ddot(double y, double a) const override;
};

std::unique_ptr<LossModel> make_loss(const std::string& name);

double sigmoid(double a) noexcept;

struct WeightedDesign {
    Matrix x_beta;   // row i scaled by weights[i]
    Vector weights;  // rho_ddot(y_i, x_i^T beta)^(1/2)
};

struct MEstimatorConfig {
    SolverConfig inner;
    std::size_t max_outer = 50;
    double outer_tol = 1e-7;
};

/// (1/n) sum rho(y_i, x_i^T beta)
double empirical_loss(const Dataset& data, const LossModel& loss, std::span<const double> beta);

/// Gradient of empirical_loss.
Vector loss_gradient(const Dataset& data, const LossModel& loss, std::span<const double> beta);

/// minimize (1/n) sum rho(y_i, x_i^T beta) + lambda ||beta||_1 by a
/// proximal Newton loop around the coordinate descent engine. The
/// returned kkt_violation measures the first-order conditions on the
/// true loss.
LassoFit solve_l1_mestimator(const Dataset& data, const LossModel& loss, double lambda,
                             const MEstimatorConfig& cfg = {});

WeightedDesign weighted_design(const Dataset& data, std::span<const double> beta,
                               const LossModel& loss);

/// Single-machine debiased M-estimator beta_hat - Theta grad l(beta_hat).
Vector debias_mestimator(const LassoFit& fit, const Matrix& theta, const Dataset& data,
                         const LossModel& loss);

struct GlmOptions {
    MEstimatorConfig mest;
    double nodewise_c = 0.5;
    std::size_t threads = 1;
};

/// Mean of local l1 M-estimators; one upload of p floats per worker.
AggregateEstimate naive_average_glm(const std::vector<Shard>& shards, const LossModel& loss,
                                    double lambda, const GlmOptions& opts = {});

/// Two-round averaged estimator: mean local fit minus Theta times the mean
/// local gradient, with Theta rows built blockwise by nodewise regression
/// on each worker's weighted design.
AggregateEstimate average_glm(const std::vector<Shard>& shards, const LossModel& loss,
                              double lambda, const GlmOptions& opts = {});

}  // namespace distlasso
