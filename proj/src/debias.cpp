#include "distlasso/debias.hpp"

#include <cmath>
#include <cstdio>

#include "distlasso/error.hpp"
#include "distlasso/kernels.hpp"

namespace distlasso {

namespace {

constexpr int kMaxDeltaDoublings = 5;
constexpr double kTauFloor = 1e-12;
constexpr double kIdentitySlack = 1e-8;

// Precision rows feed a bound that is checked to 1e-8, so the inner
// solves are held to a tighter KKT target than the caller's tol.
SolverConfig row_config(const SolverConfig& cfg) {
    SolverConfig inner = cfg;
    inner.warm_start.reset();
    if (inner.kkt_tol == 0.0) inner.kkt_tol = 1e-2 * cfg.tol;
    return inner;
}

double row_violation(const Matrix& sigma_hat, std::span<const double> theta, std::size_t j) {
    Vector r = matvec(sigma_hat, theta);
    r[j] -= 1.0;
    return kernels::max_abs(r);
}

void check_rows(std::span<const std::size_t> rows, std::size_t p) {
    for (std::size_t j : rows)
        if (j >= p) throw InvalidInput("precision row index " + std::to_string(j) + " out of range");
}

Vector noise_term(const PrecisionEstimate& theta, std::span<const double> score_vec) {
    Vector out(theta.p);
    for (const auto& [j, row] : theta.rows) out[j] = kernels::dot(row.theta, score_vec);
    return out;
}

Vector noise_term(const Matrix& theta, std::span<const double> score_vec) {
    return matvec(theta, score_vec);
}

template <class Theta>
DebiasedEstimate debias_impl(const LassoFit& fit, const Theta& theta, const Dataset& data) {
    if (fit.beta_hat.size() != data.p()) throw InvalidInput("debias: fit has wrong length");
    DebiasedEstimate est;
    est.beta_lasso = fit.beta_hat;
    est.correction = noise_term(theta, score(data, fit.beta_hat));
    est.beta_d.resize(data.p());
    for (std::size_t j = 0; j < data.p(); ++j) est.beta_d[j] = est.beta_lasso[j] + est.correction[j];
    return est;
}

template <class Theta>
BiasDiagnostics decompose_impl(const DebiasedEstimate& est, const GroundTruth& truth,
                               const Theta& theta, const Matrix& theta_dense,
                               const Dataset& data, std::span<const double> noise) {
    const std::size_t p = data.p();
    if (est.beta_d.size() != p || truth.beta_star.size() != p)
        throw InvalidInput("decompose_error: coefficient length mismatch");
    if (noise.size() != data.n()) throw InvalidInput("decompose_error: noise length mismatch");

    Vector noise_score = matvec_transpose(data.x, noise);
    const double inv_n = 1.0 / static_cast<double>(data.n());
    for (double& v : noise_score) v *= inv_n;
    const Vector propagated = noise_term(theta, noise_score);

    BiasDiagnostics d;
    d.delta_hat.resize(p);
    for (std::size_t j = 0; j < p; ++j)
        d.delta_hat[j] = est.beta_d[j] - truth.beta_star[j] - propagated[j];
    d.delta_inf = kernels::max_abs(d.delta_hat);
    d.coherence = generalized_coherence(empirical_covariance(data.x), theta_dense);
    return d;
}

}  // namespace

std::string to_string(PrecisionMethod m) {
    return m == PrecisionMethod::jm_program ? "jm" : "nodewise";
}

PrecisionMethod parse_precision_method(const std::string& s) {
    if (s == "jm" || s == "jm_program") return PrecisionMethod::jm_program;
    if (s == "nodewise") return PrecisionMethod::nodewise;
    throw InvalidInput("unknown precision method '" + s + "' (expected jm or nodewise)");
}

Matrix PrecisionEstimate::dense() const {
    if (!complete())
        throw InvalidInput("precision estimate holds " + std::to_string(rows.size()) + " of " +
                           std::to_string(p) + " rows");
    Matrix m(p, p);
    for (const auto& [j, row] : rows)
        for (std::size_t k = 0; k < p; ++k) m(j, k) = row.theta[k];
    return m;
}

std::string PrecisionEstimate::to_csv() const {
    std::string out = "row_j,tau_sq,lambda_j,kkt_bound\n";
    char buf[128];
    for (const auto& [j, row] : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", j, row.tau_sq, row.tuning,
                      row.kkt_bound);
        out += buf;
    }
    return out;
}

std::vector<std::size_t> all_rows(std::size_t p) {
    std::vector<std::size_t> r(p);
    for (std::size_t j = 0; j < p; ++j) r[j] = j;
    return r;
}

double default_jm_delta(std::size_t n, std::size_t p, double c) {
    return c * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

Vector default_nodewise_lambdas(const Matrix& x, double c) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    const double rate = std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
    const Matrix xt = x.transpose();
    Vector lambdas(p);
    for (std::size_t j = 0; j < p; ++j) lambdas[j] = c * stddev(xt.row(j)) * rate;
    return lambdas;
}

PrecisionEstimate precision_jm(const Matrix& sigma_hat, double delta, const SolverConfig& cfg,
                               std::span<const std::size_t> rows) {
    const std::size_t p = sigma_hat.rows();
    if (sigma_hat.cols() != p || p == 0) throw InvalidInput("precision_jm needs a square matrix");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidInput("delta must be positive");
    check_rows(rows, p);
    const SolverConfig inner = row_config(cfg);

    PrecisionEstimate est;
    est.method = PrecisionMethod::jm_program;
    est.p = p;
    Vector e(p, 0.0);
    for (std::size_t j : rows) {
        e[j] = 1.0;
        double d = delta;
        bool done = false;
        for (int attempt = 0; attempt <= kMaxDeltaDoublings && !done; ++attempt, d *= 2.0) {
            Vector theta;
            try {
                // Lagrange dual of the row program; its minimizer is the
                // primal row itself.
                theta = solve_penalized_quadratic(sigma_hat, e, d, inner);
            } catch (const NonConvergence&) {
                continue;
            }
            const double v = row_violation(sigma_hat, theta, j);
            if (v <= d + kIdentitySlack) {
                est.rows[j] = PrecisionRow{std::move(theta), d, 0.0, d, v};
                done = true;
            }
        }
        e[j] = 0.0;
        if (!done)
            throw InfeasibleRow(j, "precision row " + std::to_string(j) +
                                       " infeasible after doubling delta " +
                                       std::to_string(kMaxDeltaDoublings) + " times");
    }
    return est;
}

PrecisionEstimate precision_nodewise(const Matrix& x, std::span<const double> lambdas,
                                     const SolverConfig& cfg,
                                     std::span<const std::size_t> rows) {
    return precision_nodewise(x, empirical_covariance(x), lambdas, cfg, rows);
}

PrecisionEstimate precision_nodewise(const Matrix& x, const Matrix& sigma_hat,
                                     std::span<const double> lambdas, const SolverConfig& cfg,
                                     std::span<const std::size_t> rows) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n < 2 || p < 2) throw InvalidInput("nodewise regression needs n >= 2 and p >= 2");
    if (sigma_hat.rows() != p || sigma_hat.cols() != p)
        throw InvalidInput("nodewise: covariance shape does not match design");
    if (lambdas.size() != p) throw InvalidInput("nodewise: need one lambda per predictor");
    check_rows(rows, p);
    const SolverConfig inner = row_config(cfg);
    const Matrix xt = x.transpose();
    const double inv_n = 1.0 / static_cast<double>(n);

    PrecisionEstimate est;
    est.method = PrecisionMethod::nodewise;
    est.p = p;
    for (std::size_t j : rows) {
        // A zero column has tau^2 = 0 whatever lambda is, including the
        // zero default its standard deviation gives.
        if (!(kernels::sum_squares(xt.row(j)) * inv_n >= kTauFloor))
            throw DegenerateColumn(j, "column " + std::to_string(j) + " is zero");
        const double lambda = lambdas[j];
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw InvalidInput("nodewise lambda for row " + std::to_string(j) + " must be positive");

        // Regressing X_j on X_{-j} is the gram problem on Sigma_hat with
        // coordinate j pinned at zero and linear term Sigma_hat[., j].
        detail::QuadraticSolution sol;
        try {
            sol = detail::solve_quadratic_excluding(sigma_hat, sigma_hat.row(j), lambda, inner, j);
        } catch (Error& e) {
            e.set_row(j);
            throw;
        }
        const Vector& gamma = sol.gamma;

        Vector resid(xt.row(j).begin(), xt.row(j).end());
        for (std::size_t k = 0; k < p; ++k)
            if (gamma[k] != 0.0) kernels::axpy(-gamma[k], xt.row(k), resid);
        const double tau_sq = kernels::sum_squares(resid) * inv_n + lambda * kernels::abs_sum(gamma);
        if (!(tau_sq >= kTauFloor))
            throw DegenerateColumn(j, "nodewise residual variance for column " +
                                          std::to_string(j) + " is degenerate");

        Vector theta(p);
        for (std::size_t k = 0; k < p; ++k) theta[k] = -gamma[k] / tau_sq;
        theta[j] = 1.0 / tau_sq;

        const double bound = lambda / tau_sq;
        const double measured = row_violation(sigma_hat, theta, j);
        if (measured > bound + kIdentitySlack) {
            Error err(ErrorKind::non_convergence,
                      "nodewise row " + std::to_string(j) + " violates its KKT bound");
            err.set_row(j);
            throw err;
        }
        est.rows[j] = PrecisionRow{std::move(theta), lambda, tau_sq, bound, measured};
    }
    return est;
}

Vector score(const Dataset& data, std::span<const double> beta) {
    Vector resid = data.y;
    const Vector fitted = matvec(data.x, beta);
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= fitted[i];
    Vector g = matvec_transpose(data.x, resid);
    const double inv_n = 1.0 / static_cast<double>(data.n());
    for (double& v : g) v *= inv_n;
    return g;
}

DebiasedEstimate debias(const LassoFit& fit, const PrecisionEstimate& theta, const Dataset& data) {
    if (theta.p != data.p() || !theta.complete())
        throw InvalidInput("debias needs all " + std::to_string(data.p()) + " precision rows");
    return debias_impl(fit, theta, data);
}

DebiasedEstimate debias(const LassoFit& fit, const Matrix& theta, const Dataset& data) {
    if (theta.rows() != data.p() || theta.cols() != data.p())
        throw InvalidInput("debias: precision matrix shape mismatch");
    return debias_impl(fit, theta, data);
}

BiasDiagnostics decompose_error(const DebiasedEstimate& est, const GroundTruth& truth,
                                const Matrix& theta, const Dataset& data,
                                std::span<const double> noise) {
    return decompose_impl(est, truth, theta, theta, data, noise);
}

BiasDiagnostics decompose_error(const DebiasedEstimate& est, const GroundTruth& truth,
                                const PrecisionEstimate& theta, const Dataset& data,
                                std::span<const double> noise) {
    return decompose_impl(est, truth, theta, theta.dense(), data, noise);
}

}  // namespace distlasso
