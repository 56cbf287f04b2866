#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "distlasso/core.hpp"
#include "distlasso/qls.hpp"

namespace distlasso {

enum class PrecisionMethod { jm_program, nodewise };

std::string to_string(PrecisionMethod m);
PrecisionMethod parse_precision_method(const std::string& s);

struct PrecisionRow {
    Vector theta;            // length p
    double tuning = 0.0;     // delta actually used (jm) or lambda_j (nodewise)
    double tau_sq = 0.0;     // nodewise only; 0 for jm rows
    double kkt_bound = 0.0;  // certified bound on ||theta Sigma_hat - e_j||_inf
    double kkt_measured = 0.0;
};

struct PrecisionEstimate {
    PrecisionMethod method = PrecisionMethod::nodewise;
    std::size_t p = 0;
    std::map<std::size_t, PrecisionRow> rows;

    bool complete() const noexcept { return rows.size() == p; }
    /// Dense p x p matrix; throws InvalidInput if any row is missing.
    Matrix dense() const;

    /// One line per row: row_j,tau_sq,lambda_j,kkt_bound
    std::string to_csv() const;
};

struct DebiasedEstimate {
    Vector beta_d;
    Vector beta_lasso;
    Vector correction;
};

struct BiasDiagnostics {
    Vector delta_hat;
    double delta_inf = 0.0;
    double coherence = 0.0;
};

/// All indices 0..p-1.
std::vector<std::size_t> all_rows(std::size_t p);

/// delta = c * sqrt(log p / n).
double default_jm_delta(std::size_t n, std::size_t p, double c = 2.0);

/// lambda_j = c * sd(X_j) * sqrt(log p / n) for every column.
Vector default_nodewise_lambdas(const Matrix& x, double c = 0.5);

/// Rows of the constrained program
///   minimize theta^T Sigma theta  s.t.  ||Sigma theta - e_j||_inf <= delta
/// solved through its l1-penalized dual. An infeasible row doubles delta,
/// at most five times, before InfeasibleRow is thrown.
PrecisionEstimate precision_jm(const Matrix& sigma_hat, double delta, const SolverConfig& cfg,
                               std::span<const std::size_t> rows);

/// Nodewise lasso rows. lambdas is indexed by predictor (length p).
PrecisionEstimate precision_nodewise(const Matrix& x, std::span<const double> lambdas,
                                     const SolverConfig& cfg,
                                     std::span<const std::size_t> rows);

/// Same as above with Sigma_hat already computed from x.
PrecisionEstimate precision_nodewise(const Matrix& x, const Matrix& sigma_hat,
                                     std::span<const double> lambdas, const SolverConfig& cfg,
                                     std::span<const std::size_t> rows);

/// (1/n) X^T (y - X beta)
Vector score(const Dataset& data, std::span<const double> beta);

/// beta_d = beta_hat + (1/n) Theta X^T (y - X beta_hat)
DebiasedEstimate debias(const LassoFit& fit, const PrecisionEstimate& theta,
                        const Dataset& data);

/// Same correction with an explicit dense Theta (e.g. an exact inverse).
DebiasedEstimate debias(const LassoFit& fit, const Matrix& theta, const Dataset& data);

/// Delta_hat = beta_d - beta_star - (1/n) Theta X^T noise.
BiasDiagnostics decompose_error(const DebiasedEstimate& est, const GroundTruth& truth,
                                const Matrix& theta, const Dataset& data,
                                std::span<const double> noise);

BiasDiagnostics decompose_error(const DebiasedEstimate& est, const GroundTruth& truth,
                                const PrecisionEstimate& theta, const Dataset& data,
                                std::span<const double> noise);

}  // namespace distlasso
