#include "distlasso/glm.hpp"

#include <algorithm>
#include <cmath>

#include "distlasso/debias.hpp"
#include "distlasso/error.hpp"
#include "distlasso/kernels.hpp"

namespace distlasso {

double sigmoid(double a) noexcept {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

double LogisticLoss::rho(double y, double a) const {
    const double softplus = a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
    return softplus - y * a;
}

double LogisticLoss::rho_dot(double y, double a) const { return sigmoid(a) - y; }

double LogisticLoss::rho_ddot(double, double a) const {
    // sigma(a) sigma(-a) written so it does not cancel for large |a|.
    const double e = std::exp(-std::fabs(a));
    return e / ((1.0 + e) * (1.0 + e));
}

std::unique_ptr<LossModel> make_loss(const std::string& name) {
    if (name == "squared") return std::make_unique<SquaredLoss>();
    if (name == "logistic") return std::make_unique<LogisticLoss>();
    throw InvalidInput("unknown loss '" + name + "' (expected squared or logistic)");
}

double empirical_loss(const Dataset& data, const LossModel& loss, std::span<const double> beta) {
    const Vector a = matvec(data.x, beta);
    double s = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) s += loss.rho(data.y[i], a[i]);
    return s / static_cast<double>(data.n());
}

Vector loss_gradient(const Dataset& data, const LossModel& loss, std::span<const double> beta) {
    const Vector a = matvec(data.x, beta);
    Vector d(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) d[i] = loss.rho_dot(data.y[i], a[i]);
    Vector g = matvec_transpose(data.x, d);
    const double inv_n = 1.0 / static_cast<double>(data.n());
    for (double& v : g) v *= inv_n;
    return g;
}

namespace {

double penalized(const Dataset& data, const LossModel& loss, std::span<const double> beta,
                 double lambda) {
    return empirical_loss(data, loss, beta) + lambda * kernels::abs_sum(beta);
}

double mestimator_kkt(const Dataset& data, const LossModel& loss, std::span<const double> beta,
                      double lambda) {
    const Vector g = loss_gradient(data, loss, beta);
    double v = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        const double s = -g[j];
        if (beta[j] > 0.0) v = std::max(v, std::fabs(s - lambda));
        else if (beta[j] < 0.0) v = std::max(v, std::fabs(s + lambda));
        else v = std::max(v, std::fabs(s) - lambda);
    }
    return std::max(v, 0.0);
}

}  // namespace

LassoFit solve_l1_mestimator(const Dataset& data, const LossModel& loss, double lambda,
                             const MEstimatorConfig& cfg) {
    data.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be positive");
    cfg.inner.validate();
    const std::size_t n = data.n();
    const std::size_t p = data.p();

    Vector beta = cfg.inner.warm_start ? *cfg.inner.warm_start : Vector(p, 0.0);
    if (beta.size() != p) throw InvalidInput("warm start has wrong length");
    if (loss.quadratic()) {
        // One Newton step is exact; solving on the raw data avoids the
        // rounding of the working response.
        LassoFit fit = solve_lasso(data, lambda, cfg.inner);
        fit.kkt_violation = mestimator_kkt(data, loss, fit.beta_hat, lambda);
        return fit;
    }
    double obj = penalized(data, loss, beta, lambda);
    std::size_t sweeps = 0;

    Dataset work;
    work.x = Matrix(n, p);
    work.y.resize(n);
    for (std::size_t outer = 0; outer < cfg.max_outer; ++outer) {
        // Quadratic model at beta: weighted least squares on the working
        // response z = a - rho_dot / rho_ddot.
        const Vector a = matvec(data.x, beta);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = loss.rho_ddot(data.y[i], a[i]);
            if (!(w > 0.0) || !std::isfinite(w))
                throw InvalidLoss("loss '" + loss.name() + "' has non-positive curvature at row " +
                                  std::to_string(i));
            const double sw = std::sqrt(w);
            const double z = a[i] - loss.rho_dot(data.y[i], a[i]) / w;
            auto src = data.x.row(i);
            auto dst = work.x.row(i);
            for (std::size_t j = 0; j < p; ++j) dst[j] = sw * src[j];
            work.y[i] = sw * z;
        }
        SolverConfig inner = cfg.inner;
        inner.warm_start = beta;
        const LassoFit step = solve_lasso(work, lambda, inner);
        sweeps += step.sweeps_used;

        // Backtrack on the true objective so it never increases.
        Vector next = step.beta_hat;
        double next_obj = penalized(data, loss, next, lambda);
        double t = 1.0;
        while (next_obj > obj + 1e-12 * (1.0 + std::fabs(obj)) && t > 1e-10) {
            t *= 0.5;
            for (std::size_t j = 0; j < p; ++j) next[j] = beta[j] + t * (step.beta_hat[j] - beta[j]);
            next_obj = penalized(data, loss, next, lambda);
        }
        if (next_obj > obj + 1e-12 * (1.0 + std::fabs(obj))) {
            next = beta;
            next_obj = obj;
        }
        double change = 0.0;
        for (std::size_t j = 0; j < p; ++j) change = std::max(change, std::fabs(next[j] - beta[j]));
        beta = std::move(next);
        obj = next_obj;
        if (change <= cfg.outer_tol) {
            LassoFit fit;
            fit.beta_hat = std::move(beta);
            fit.lambda = lambda;
            fit.sweeps_used = sweeps;
            fit.kkt_violation = mestimator_kkt(data, loss, fit.beta_hat, lambda);
            return fit;
        }
    }
    throw NonConvergence("proximal Newton did not converge within " +
                             std::to_string(cfg.max_outer) + " outer iterations",
                         beta, mestimator_kkt(data, loss, beta, lambda));
}

WeightedDesign weighted_design(const Dataset& data, std::span<const double> beta,
                               const LossModel& loss) {
    if (beta.size() != data.p()) throw InvalidInput("weighted_design: beta has wrong length");
    const Vector a = matvec(data.x, beta);
    WeightedDesign wd;
    wd.weights.resize(data.n());
    wd.x_beta = Matrix(data.n(), data.p());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double c = loss.rho_ddot(data.y[i], a[i]);
        if (!(c >= 0.0) || !std::isfinite(c))
            throw InvalidLoss("loss '" + loss.name() + "' has negative curvature at row " +
                              std::to_string(i));
        const double w = std::sqrt(c);
        wd.weights[i] = w;
        auto src = data.x.row(i);
        auto dst = wd.x_beta.row(i);
        for (std::size_t j = 0; j < data.p(); ++j) dst[j] = w * src[j];
    }
    return wd;
}

Vector debias_mestimator(const LassoFit& fit, const Matrix& theta, const Dataset& data,
                         const LossModel& loss) {
    const Vector g = loss_gradient(data, loss, fit.beta_hat);
    const Vector corr = matvec(theta, g);
    Vector out(fit.beta_hat.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = fit.beta_hat[j] - corr[j];
    return out;
}

namespace {

template <class Fn>
void tagged(std::size_t shard_id, Fn&& fn) {
    try {
        fn();
    } catch (Error& e) {
        e.set_shard(shard_id);
        throw;
    }
}

Vector average(const std::vector<Vector>& vs, std::size_t begin, std::size_t len) {
    Vector out(len, 0.0);
    for (const auto& v : vs)
        for (std::size_t j = 0; j < len; ++j) out[j] += v[begin + j];
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (double& v : out) v *= inv;
    return out;
}

LocalFitSummary summarize(std::size_t shard_id, const LassoFit& fit) {
    std::size_t nnz = 0;
    for (double b : fit.beta_hat) nnz += b != 0.0;
    return {shard_id, fit.sweeps_used, fit.kkt_violation, nnz};
}

void check_shards(const std::vector<Shard>& shards) {
    if (shards.empty()) throw InvalidInput("need at least one shard");
    for (std::size_t k = 0; k < shards.size(); ++k) {
        if (shards[k].shard_id != k) throw InvalidInput("shards must be ordered by shard_id");
        if (shards[k].data.p() != shards.front().data.p() ||
            shards[k].data.n() != shards.front().data.n())
            throw InvalidInput("shards must be evenly sized and share p");
    }
}

}  // namespace

AggregateEstimate naive_average_glm(const std::vector<Shard>& shards, const LossModel& loss,
                                    double lambda, const GlmOptions& opts) {
    check_shards(shards);
    const std::size_t m = shards.size();
    const std::size_t p = shards.front().data.p();
    Transport net(m);
    std::vector<LassoFit> fits(m);
    detail::parallel_for(m, opts.threads, [&](std::size_t k) {
        tagged(k, [&] {
            fits[k] = solve_l1_mestimator(shards[k].data, loss, lambda, opts.mest);
            net.upload(k, fits[k].beta_hat);
        });
    });
    AggregateEstimate out;
    out.variant = AggregateVariant::naive_average;
    out.beta = average(net.collect(), 0, p);
    out.ledger = net.ledger();
    for (std::size_t k = 0; k < m; ++k) out.local_fits.push_back(summarize(k, fits[k]));
    return out;
}

AggregateEstimate average_glm(const std::vector<Shard>& shards, const LossModel& loss,
                              double lambda, const GlmOptions& opts) {
    check_shards(shards);
    const std::size_t m = shards.size();
    const std::size_t p = shards.front().data.p();
    if (m > p) throw InvalidInput("average_glm needs m <= p");
    Transport net(m);
    std::vector<LassoFit> fits(m);

    detail::parallel_for(m, opts.threads, [&](std::size_t k) {
        tagged(k, [&] {
            const Dataset& d = shards[k].data;
            fits[k] = solve_l1_mestimator(d, loss, lambda, opts.mest);
            Vector msg = fits[k].beta_hat;
            const Vector g = loss_gradient(d, loss, fits[k].beta_hat);
            msg.insert(msg.end(), g.begin(), g.end());
            net.upload(k, std::move(msg));
        });
    });
    {
        const auto uploads = net.collect();
        net.broadcast({average(uploads, 0, p), average(uploads, p, p)});
    }

    const auto blocks = row_blocks(p, m);
    std::vector<PrecisionEstimate> thetas(m);
    detail::parallel_for(m, opts.threads, [&](std::size_t k) {
        tagged(k, [&] {
            const Dataset& d = shards[k].data;
            const Vector& mean_beta = net.received()[0];
            const Vector& mean_grad = net.received()[1];
            const auto [b, e] = blocks[k];
            Vector msg;
            thetas[k].method = PrecisionMethod::nodewise;
            thetas[k].p = p;
            if (b < e) {
                std::vector<std::size_t> rows;
                for (std::size_t j = b; j < e; ++j) rows.push_back(j);
                const WeightedDesign wd = weighted_design(d, fits[k].beta_hat, loss);
                const Vector lambdas = default_nodewise_lambdas(wd.x_beta, opts.nodewise_c);
                thetas[k] = precision_nodewise(wd.x_beta, lambdas, opts.mest.inner, rows);
                for (std::size_t j : rows)
                    msg.push_back(mean_beta[j] - kernels::dot(thetas[k].rows.at(j).theta, mean_grad));
            }
            net.upload(k, std::move(msg));
        });
    });

    AggregateEstimate out;
    out.variant = AggregateVariant::distributed_debias;
    for (const auto& block : net.collect()) out.beta.insert(out.beta.end(), block.begin(), block.end());
    out.ledger = net.ledger();
    for (std::size_t k = 0; k < m; ++k) out.local_fits.push_back(summarize(k, fits[k]));
    out.precision = std::move(thetas);
    return out;
}

}  // namespace distlasso
