#include "distlasso/distributed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "distlasso/error.hpp"
#include "distlasso/kernels.hpp"

namespace distlasso {

namespace detail {

std::size_t resolve_threads(std::size_t requested, std::size_t tasks) {
    std::size_t t = requested;
    if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DISTLASSO_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) t = std::min<std::size_t>(t, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, std::min(t, tasks));
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    const std::size_t t = resolve_threads(threads, count);
    if (t <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(t);
        for (std::size_t w = 0; w < t; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        pool.clear();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

namespace {

template <class Fn>
auto tagged(std::size_t shard_id, Fn&& fn) {
    try {
        return fn();
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

void check_shards(const std::vector<Shard>& shards) {
    if (shards.empty()) throw InvalidInput("need at least one shard");
    const std::size_t p = shards.front().data.p();
    const std::size_t n = shards.front().data.n();
    for (std::size_t k = 0; k < shards.size(); ++k) {
        if (shards[k].shard_id != k) throw InvalidInput("shards must be ordered by shard_id");
        if (shards[k].data.p() != p) throw InvalidInput("all shards must share p");
        if (shards[k].data.n() != n) throw InvalidInput("shards must be evenly sized");
    }
}

LocalFitSummary summarize(std::size_t shard_id, const LassoFit& fit) {
    std::size_t nnz = 0;
    for (double b : fit.beta_hat) nnz += b != 0.0;
    return {shard_id, fit.sweeps_used, fit.kkt_violation, nnz};
}

PrecisionEstimate local_precision(const Dataset& data, const Matrix& sigma_hat,
                                  std::span<const std::size_t> rows,
                                  const DistributedOptions& opts, PrecisionMethod method) {
    if (method == PrecisionMethod::jm_program)
        return precision_jm(sigma_hat, default_jm_delta(data.n(), data.p(), opts.jm_delta_c),
                            opts.solver, rows);
    const Vector lambdas = default_nodewise_lambdas(data.x, opts.nodewise_c);
    return precision_nodewise(data.x, sigma_hat, lambdas, opts.solver, rows);
}

}  // namespace

std::string to_string(AggregateVariant v) {
    switch (v) {
        case AggregateVariant::naive_average: return "naive_average";
        case AggregateVariant::averaged_debiased: return "averaged_debiased";
        case AggregateVariant::distributed_debias: return "distributed_debias";
    }
    return "unknown";
}

Transport::Transport(std::size_t workers) : slots_(workers) {
    if (workers == 0) throw InvalidInput("transport needs at least one worker");
}

void Transport::upload(std::size_t shard_id, Vector message) {
    std::lock_guard lock(mu_);
    if (shard_id >= slots_.size()) throw InvalidInput("upload from unknown shard");
    if (slots_[shard_id]) throw InvalidInput("shard uploaded twice in one round");
    ledger_.floats_up += message.size();
    slots_[shard_id] = std::move(message);
}

std::vector<Vector> Transport::collect() {
    std::lock_guard lock(mu_);
    for (std::size_t k = 0; k < slots_.size(); ++k)
        if (!slots_[k]) throw InvalidInput("shard " + std::to_string(k) + " did not upload");
    std::vector<Vector> out;
    out.reserve(slots_.size());
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        out.push_back(std::move(*slots_[k]));
        slots_[k].reset();
    }
    ++ledger_.rounds;
    return out;
}

void Transport::broadcast(std::vector<Vector> messages) {
    std::lock_guard lock(mu_);
    std::size_t floats = 0;
    for (const auto& m : messages) floats += m.size();
    ledger_.floats_down += floats * slots_.size();
    broadcast_ = std::move(messages);
}

CommLedger Transport::ledger() const {
    std::lock_guard lock(mu_);
    return ledger_;
}

std::vector<Shard> split(const Dataset& data, std::size_t m) {
    if (m == 0) throw InvalidInput("number of shards must be positive");
    const std::size_t n = data.n();
    if (n % m != 0)
        throw InvalidInput("cannot split " + std::to_string(n) + " rows evenly into " +
                           std::to_string(m) + " shards");
    const std::size_t rows = n / m;
    std::vector<Shard> shards;
    shards.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t b = k * rows;
        const std::size_t e = b + rows;
        Shard s;
        s.shard_id = k;
        s.global_row_range = {b, e};
        s.data.x = data.x.rows_slice(b, e);
        s.data.y.assign(data.y.begin() + static_cast<std::ptrdiff_t>(b),
                        data.y.begin() + static_cast<std::ptrdiff_t>(e));
        shards.push_back(std::move(s));
    }
    return shards;
}

std::vector<Shard> split_drop_remainder(const Dataset& data, std::size_t m) {
    if (m == 0) throw InvalidInput("number of shards must be positive");
    const std::size_t keep = data.n() - data.n() % m;
    if (keep == 0) throw InvalidInput("fewer rows than shards");
    Dataset trimmed;
    trimmed.x = data.x.rows_slice(0, keep);
    trimmed.y.assign(data.y.begin(), data.y.begin() + static_cast<std::ptrdiff_t>(keep));
    return split(trimmed, m);
}

double theory_lambda(double sigma_y, std::size_t n, std::size_t p, double c) {
    return c * sigma_y * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double estimate_noise_scale(const Dataset& data, const SolverConfig& cfg) {
    data.validate();
    const double n = static_cast<double>(data.n());
    const double lambda0 =
        std::sqrt(2.0 * std::log(static_cast<double>(std::max<std::size_t>(data.p(), 2))) / n) *
        stddev(data.y);
    if (!(lambda0 > 0.0)) return 0.0;
    const LassoFit fit = solve_lasso(data, lambda0, cfg);
    Vector resid = data.y;
    const Vector fitted = matvec(data.x, fit.beta_hat);
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= fitted[i];
    return stddev(resid);
}

std::vector<std::pair<std::size_t, std::size_t>> row_blocks(std::size_t p, std::size_t m) {
    if (m == 0) throw InvalidInput("number of shards must be positive");
    const std::size_t size = (p + m - 1) / m;
    std::vector<std::pair<std::size_t, std::size_t>> blocks(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t b = std::min(p, k * size);
        blocks[k] = {b, std::min(p, b + size)};
    }
    return blocks;
}

AggregateEstimate naive_average(const std::vector<Shard>& shards, double lambda,
                                const DistributedOptions& opts) {
    check_shards(shards);
    const std::size_t m = shards.size();
    const std::size_t p = shards.front().data.p();
    Transport net(m);
    std::vector<LassoFit> fits(m);

    detail::parallel_for(m, opts.threads, [&](std::size_t k) {
        fits[k] = tagged(k, [&] { return solve_lasso(shards[k].data, lambda, opts.solver); });
        net.upload(k, fits[k].beta_hat);
    });

    AggregateEstimate out;
    out.variant = AggregateVariant::naive_average;
    out.beta = average(net.collect(), 0, p);
    out.ledger = net.ledger();
    for (std::size_t k = 0; k < m; ++k) out.local_fits.push_back(summarize(k, fits[k]));
    return out;
}

AggregateEstimate averaged_debiased(const std::vector<Shard>& shards, double lambda,
                                    const DistributedOptions& opts) {
    check_shards(shards);
    const std::size_t m = shards.size();
    const std::size_t p = shards.front().data.p();
    if (shards.front().data.n() < 2) throw InvalidInput("averaged_debiased needs n_k >= 2");
    Transport net(m);
    std::vector<LassoFit> fits(m);
    std::vector<PrecisionEstimate> thetas(m);
    const auto rows = all_rows(p);

    detail::parallel_for(m, opts.threads, [&](std::size_t k) {
        tagged(k, [&] {
            const Dataset& d = shards[k].data;
            fits[k] = solve_lasso(d, lambda, opts.solver);
            const Matrix sigma_hat = empirical_covariance(d.x);
            thetas[k] = local_precision(d, sigma_hat, rows, opts, opts.theta_method);
            net.upload(k, debias(fits[k], thetas[k], d).beta_d);
        });
    });

    AggregateEstimate out;
    out.variant = AggregateVariant::averaged_debiased;
    out.beta = average(net.collect(), 0, p);
    out.ledger = net.ledger();
    for (std::size_t k = 0; k < m; ++k) out.local_fits.push_back(summarize(k, fits[k]));
    out.precision = std::move(thetas);
    return out;
}

AggregateEstimate distributed_debias(const std::vector<Shard>& shards, double lambda,
                                     const DistributedOptions& opts) {
    check_shards(shards);
    const std::size_t m = shards.size();
    const std::size_t p = shards.front().data.p();
    if (m > p) throw InvalidInput("distributed_debias needs m <= p");
    Transport net(m);
    std::vector<LassoFit> fits(m);

    // Round 1: local fit and local score (1/n) X_k^T (y_k - X_k beta_k).
    detail::parallel_for(m, opts.threads, [&](std::size_t k) {
        tagged(k, [&] {
            const Dataset& d = shards[k].data;
            fits[k] = solve_lasso(d, lambda, opts.solver);
            Vector msg = fits[k].beta_hat;
            const Vector s = score(d, fits[k].beta_hat);
            msg.insert(msg.end(), s.begin(), s.end());
            net.upload(k, std::move(msg));
        });
    });
    {
        const auto uploads = net.collect();
        net.broadcast({average(uploads, 0, p), average(uploads, p, p)});
    }

    // Round 2: each worker debiases its own block of coordinates.
    const auto blocks = row_blocks(p, m);
    std::vector<PrecisionEstimate> thetas(m);
    detail::parallel_for(m, opts.threads, [&](std::size_t k) {
        tagged(k, [&] {
            const Dataset& d = shards[k].data;
            const Vector& mean_beta = net.received()[0];
            const Vector& mean_score = net.received()[1];
            const auto [b, e] = blocks[k];
            std::vector<std::size_t> rows;
            for (std::size_t j = b; j < e; ++j) rows.push_back(j);
            Vector msg;
            if (!rows.empty()) {
                const Matrix sigma_hat = empirical_covariance(d.x);
                thetas[k] = local_precision(d, sigma_hat, rows, opts, PrecisionMethod::nodewise);
                for (std::size_t j : rows)
                    msg.push_back(mean_beta[j] + kernels::dot(thetas[k].rows.at(j).theta, mean_score));
            } else {
                thetas[k].method = PrecisionMethod::nodewise;
                thetas[k].p = p;
            }
            net.upload(k, std::move(msg));
        });
    });

    AggregateEstimate out;
    out.variant = AggregateVariant::distributed_debias;
    out.beta.reserve(p);
    for (const auto& block : net.collect()) out.beta.insert(out.beta.end(), block.begin(), block.end());
    out.ledger = net.ledger();
    for (std::size_t k = 0; k < m; ++k) out.local_fits.push_back(summarize(k, fits[k]));
    out.precision = std::move(thetas);
    return out;
}

}  // namespace distlasso
