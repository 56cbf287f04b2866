#include "distlasso/qls.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "distlasso/error.hpp"
#include "distlasso/kernels.hpp"

namespace distlasso {

void SolverConfig::validate() const {
    if (!(tol > 0.0)) throw InvalidInput("solver tol must be positive");
    if (max_sweeps < 1) throw InvalidInput("solver max_sweeps must be >= 1");
    if (kkt_tol < 0.0) throw InvalidInput("solver kkt_tol must be nonnegative");
}

namespace {

double subgradient_violation(double grad, double coef, double lambda) {
    if (coef > 0.0) return std::fabs(grad - lambda);
    if (coef < 0.0) return std::fabs(grad + lambda);
    return std::max(0.0, std::fabs(grad) - lambda);
}

// Gram form: gradient g = b - A gamma is kept up to date.
class QuadraticProblem {
public:
    QuadraticProblem(const Matrix& a, std::span<const double> b, double lambda,
                     std::optional<std::size_t> excluded)
        : a_(a), b_(b), lambda_(lambda), excluded_(excluded), coef_(b.size(), 0.0) {}

    void start(const std::optional<Vector>& warm) {
        if (warm) {
            if (warm->size() != coef_.size()) throw InvalidInput("warm start has wrong length");
            coef_ = *warm;
            if (excluded_) coef_[*excluded_] = 0.0;
        }
        refresh_gradient();
    }

    std::size_t size() const { return coef_.size(); }
    bool excluded(std::size_t k) const { return excluded_ && *excluded_ == k; }

    double update(std::size_t k) {
        const double akk = a_(k, k);
        if (!(akk > 0.0)) {
            if (std::fabs(grad_[k]) > lambda_)
                throw NonConvergence("objective is unbounded below along coordinate " +
                                         std::to_string(k),
                                     coef_, std::fabs(grad_[k]) - lambda_);
            return 0.0;
        }
        const double old = coef_[k];
        const double next = soft_threshold(grad_[k] + akk * old, lambda_) / akk;
        const double d = next - old;
        if (d != 0.0) {
            coef_[k] = next;
            kernels::axpy(-d, a_.row(k), grad_);
        }
        return std::fabs(d);
    }

    void refresh_gradient() {
        grad_ = matvec(a_, coef_);
        for (std::size_t k = 0; k < grad_.size(); ++k) grad_[k] = b_[k] - grad_[k];
    }

    double kkt() const {
        double v = 0.0;
        for (std::size_t k = 0; k < coef_.size(); ++k)
            if (!excluded(k)) v = std::max(v, subgradient_violation(grad_[k], coef_[k], lambda_));
        return v;
    }

    double objective() const {
        // 1/2 g^T A g - b^T g = -1/2 g^T (b + grad)
        double q = 0.0;
        for (std::size_t k = 0; k < coef_.size(); ++k) q -= 0.5 * coef_[k] * (b_[k] + grad_[k]);
        return q + lambda_ * kernels::abs_sum(coef_);
    }

    const Vector& coef() const { return coef_; }
    Vector& coef_mut() { return coef_; }

private:
    const Matrix& a_;
    std::span<const double> b_;
    double lambda_;
    std::optional<std::size_t> excluded_;
    Vector coef_;
    Vector grad_;
};

// Residual form: r = y - X beta is kept up to date; columns come from a
// transposed copy so each is contiguous.
class ResidualProblem {
public:
    ResidualProblem(const Dataset& data, double lambda)
        : xt_(data.x.transpose()),
          y_(data.y),
          lambda_(lambda),
          inv_n_(1.0 / static_cast<double>(data.n())),
          coef_(data.p(), 0.0),
          col_scale_(data.p()) {
        for (std::size_t k = 0; k < data.p(); ++k)
            col_scale_[k] = kernels::sum_squares(xt_.row(k)) * inv_n_;
    }

    void start(const std::optional<Vector>& warm) {
        if (warm) {
            if (warm->size() != coef_.size()) throw InvalidInput("warm start has wrong length");
            coef_ = *warm;
        }
        refresh_gradient();
    }

    std::size_t size() const { return coef_.size(); }
    bool excluded(std::size_t) const { return false; }

    double update(std::size_t k) {
        const double c = col_scale_[k];
        if (!(c > 0.0)) return 0.0;
        const double old = coef_[k];
        const double grad = kernels::dot(xt_.row(k), resid_) * inv_n_;
        const double next = soft_threshold(grad + c * old, lambda_) / c;
        const double d = next - old;
        if (d != 0.0) {
            coef_[k] = next;
            kernels::axpy(-d, xt_.row(k), resid_);
        }
        return std::fabs(d);
    }

    void refresh_gradient() {
        resid_ = y_;
        for (std::size_t k = 0; k < coef_.size(); ++k)
            if (coef_[k] != 0.0) kernels::axpy(-coef_[k], xt_.row(k), resid_);
    }

    double kkt() const {
        double v = 0.0;
        for (std::size_t k = 0; k < coef_.size(); ++k) {
            const double grad = kernels::dot(xt_.row(k), resid_) * inv_n_;
            v = std::max(v, subgradient_violation(grad, coef_[k], lambda_));
        }
        return v;
    }

    double objective() const {
        return 0.5 * kernels::sum_squares(resid_) * inv_n_ + lambda_ * kernels::abs_sum(coef_);
    }

    const Vector& coef() const { return coef_; }

private:
    Matrix xt_;
    const Vector& y_;
    double lambda_;
    double inv_n_;
    Vector coef_;
    Vector col_scale_;
    Vector resid_;
};

struct DriverResult {
    std::size_t sweeps = 0;
    double kkt = 0.0;
};

// Cyclic coordinate descent: a full pass, then passes restricted to the
// active set until they settle, then another full pass to confirm.
template <class Problem>
DriverResult run_coordinate_descent(Problem& prob, const SolverConfig& cfg) {
    const std::size_t p = prob.size();
    std::vector<std::size_t> active;
    active.reserve(p);
    std::size_t sweeps = 0;
    double last_obj = cfg.check_monotone ? prob.objective() : 0.0;

    auto after_sweep = [&] {
        ++sweeps;
        if (cfg.check_monotone) {
            const double obj = prob.objective();
            if (obj > last_obj + 1e-12 * (1.0 + std::fabs(last_obj)))
                throw std::logic_error("coordinate descent objective increased at sweep " +
                                       std::to_string(sweeps));
            last_obj = obj;
        }
    };
    auto threshold = [&] {
        return cfg.tol * std::max(1.0, kernels::max_abs(prob.coef()));
    };
    auto give_up = [&] {
        prob.refresh_gradient();
        throw NonConvergence("coordinate descent did not converge within " +
                                 std::to_string(cfg.max_sweeps) + " sweeps",
                             prob.coef(), prob.kkt());
    };

    while (true) {
        double change = 0.0;
        for (std::size_t k = 0; k < p; ++k)
            if (!prob.excluded(k)) change = std::max(change, prob.update(k));
        after_sweep();
        if (change <= threshold()) {
            prob.refresh_gradient();
            const double kkt = prob.kkt();
            if (kkt <= cfg.kkt_target()) return {sweeps, kkt};
        }
        if (sweeps >= cfg.max_sweeps) give_up();

        active.clear();
        for (std::size_t k = 0; k < p; ++k)
            if (prob.coef()[k] != 0.0) active.push_back(k);
        while (!active.empty()) {
            double c = 0.0;
            for (std::size_t k : active) c = std::max(c, prob.update(k));
            after_sweep();
            if (c <= threshold()) break;
            if (sweeps >= cfg.max_sweeps) give_up();
        }
        if (sweeps >= cfg.max_sweeps) give_up();
    }
}

void check_lambda(double lambda, bool allow_zero) {
    if (!std::isfinite(lambda) || lambda < 0.0 || (!allow_zero && lambda == 0.0))
        throw InvalidInput(allow_zero ? "lambda must be nonnegative" : "lambda must be positive");
}

void check_quadratic(const Matrix& a, std::span<const double> b) {
    const std::size_t p = a.rows();
    if (a.cols() != p) throw InvalidInput("quadratic matrix must be square");
    if (b.size() != p) throw InvalidInput("linear term length does not match matrix");
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            const double s = std::max({1.0, std::fabs(a(i, j)), std::fabs(a(j, i))});
            if (std::fabs(a(i, j) - a(j, i)) > 1e-12 * s)
                throw InvalidInput("quadratic matrix is not symmetric");
        }
}

}  // namespace

namespace detail {

QuadraticSolution solve_quadratic_excluding(const Matrix& a, std::span<const double> b,
                                            double lambda, const SolverConfig& cfg,
                                            std::optional<std::size_t> excluded) {
    cfg.validate();
    QuadraticProblem prob(a, b, lambda, excluded);
    prob.start(cfg.warm_start);
    const DriverResult r = run_coordinate_descent(prob, cfg);
    return {prob.coef(), r.sweeps, r.kkt};
}

}  // namespace detail

Vector solve_penalized_quadratic(const Matrix& a, std::span<const double> b, double lambda,
                                 const SolverConfig& cfg) {
    check_lambda(lambda, true);
    check_quadratic(a, b);
    return detail::solve_quadratic_excluding(a, b, lambda, cfg, std::nullopt).gamma;
}

LassoFit solve_lasso(const Dataset& data, double lambda, const SolverConfig& cfg) {
    data.validate();
    check_lambda(lambda, false);
    cfg.validate();

    LassoFit fit;
    fit.lambda = lambda;
    if (data.p() <= data.n()) {
        const Matrix sigma = empirical_covariance(data.x);
        Vector b = matvec_transpose(data.x, data.y);
        const double inv_n = 1.0 / static_cast<double>(data.n());
        for (double& v : b) v *= inv_n;
        auto sol = detail::solve_quadratic_excluding(sigma, b, lambda, cfg, std::nullopt);
        fit.beta_hat = std::move(sol.gamma);
        fit.sweeps_used = sol.sweeps;
    } else {
        ResidualProblem prob(data, lambda);
        prob.start(cfg.warm_start);
        const DriverResult r = run_coordinate_descent(prob, cfg);
        fit.beta_hat = prob.coef();
        fit.sweeps_used = r.sweeps;
    }
    fit.kkt_violation = kkt_residual(data, fit.beta_hat, lambda);
    return fit;
}

double kkt_residual(const Dataset& data, std::span<const double> beta, double lambda) {
    if (beta.size() != data.p()) throw InvalidInput("kkt_residual: beta has wrong length");
    if (data.y.size() != data.n()) throw InvalidInput("kkt_residual: response has wrong length");
    Vector resid = data.y;
    const Vector fitted = matvec(data.x, beta);
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= fitted[i];
    const Vector grad = matvec_transpose(data.x, resid);
    const double inv_n = 1.0 / static_cast<double>(data.n());
    double v = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j)
        v = std::max(v, subgradient_violation(grad[j] * inv_n, beta[j], lambda));
    return v;
}

double quadratic_kkt_residual(const Matrix& a, std::span<const double> b,
                              std::span<const double> gamma, double lambda) {
    if (a.rows() != gamma.size() || b.size() != gamma.size())
        throw InvalidInput("quadratic_kkt_residual dimension mismatch");
    const Vector ag = matvec(a, gamma);
    double v = 0.0;
    for (std::size_t j = 0; j < gamma.size(); ++j)
        v = std::max(v, subgradient_violation(b[j] - ag[j], gamma[j], lambda));
    return v;
}

double lasso_objective(const Dataset& data, std::span<const double> beta, double lambda) {
    const Vector fitted = matvec(data.x, beta);
    double rss = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) rss += (data.y[i] - fitted[i]) * (data.y[i] - fitted[i]);
    return 0.5 * rss / static_cast<double>(data.n()) + lambda * kernels::abs_sum(beta);
}

double quadratic_objective(const Matrix& a, std::span<const double> b,
                           std::span<const double> gamma, double lambda) {
    const Vector ag = matvec(a, gamma);
    return 0.5 * kernels::dot(gamma, ag) - kernels::dot(b, gamma) +
           lambda * kernels::abs_sum(gamma);
}

}  // namespace distlasso
