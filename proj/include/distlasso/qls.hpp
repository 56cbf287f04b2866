#pragma once

// Coordinate descent for l1-penalized quadratics. One engine serves the
// lasso, nodewise regression and the dual of the row-wise precision
// program.

#include <cstddef>
#include <optional>
#include <span>

#include "distlasso/core.hpp"

namespace distlasso {

struct SolverConfig {
    /// Converged when the largest coordinate change in a full pass is at
    /// most tol * max(1, ||beta||_inf) and the KKT residual is at most
    /// kkt_tol.
    double tol = 1e-8;
    std::size_t max_sweeps = 10000;
    std::optional<Vector> warm_start;
    /// 0 means "same as tol".
    double kkt_tol = 0.0;
    /// Evaluate the objective after every sweep and throw std::logic_error
    /// if it ever increases. Costs one extra O(p) or O(np) pass per sweep.
    bool check_monotone = false;

    void validate() const;
    double kkt_target() const noexcept { return kkt_tol > 0.0 ? kkt_tol : tol; }
};

struct LassoFit {
    Vector beta_hat;
    double lambda = 0.0;
    std::size_t sweeps_used = 0;
    double kkt_violation = 0.0;
};

/// minimize (1/2n) ||y - X beta||^2 + lambda ||beta||_1
///
/// Uses covariance (gram) updates when p <= n and residual updates
/// otherwise. No intercept and no standardization.
LassoFit solve_lasso(const Dataset& data, double lambda, const SolverConfig& cfg = {});

/// minimize 1/2 g^T A g - b^T g + lambda ||g||_1 for symmetric PSD A.
Vector solve_penalized_quadratic(const Matrix& a, std::span<const double> b, double lambda,
                                 const SolverConfig& cfg = {});

/// max_j of max(0, |(1/n) x_j^T (y - X beta)| - lambda) over inactive j and
/// |(1/n) x_j^T (y - X beta) - lambda sign(beta_j)| over active j.
double kkt_residual(const Dataset& data, std::span<const double> beta, double lambda);

/// Same residual for the quadratic problem, with gradient b - A g.
double quadratic_kkt_residual(const Matrix& a, std::span<const double> b,
                              std::span<const double> gamma, double lambda);

double lasso_objective(const Dataset& data, std::span<const double> beta, double lambda);
double quadratic_objective(const Matrix& a, std::span<const double> b,
                           std::span<const double> gamma, double lambda);

namespace detail {

struct QuadraticSolution {
    Vector gamma;
    std::size_t sweeps = 0;
    double kkt = 0.0;
};

/// Quadratic solve with one coordinate held at zero. Used by nodewise
/// regression, where the problem for column j is the gram problem on
/// Sigma_hat with row/column j removed.
QuadraticSolution solve_quadratic_excluding(const Matrix& a, std::span<const double> b,
                                            double lambda, const SolverConfig& cfg,
                                            std::optional<std::size_t> excluded);

}  // namespace detail

}  // namespace distlasso
