#pragma once

#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distlasso/core.hpp"
#include "distlasso/debias.hpp"
#include "distlasso/qls.hpp"

namespace distlasso {

struct Shard {
    Dataset data;
    std::size_t shard_id = 0;
    std::pair<std::size_t, std::size_t> global_row_range;  // [begin, end)
};

struct CommLedger {
    std::size_t rounds = 0;
    std::size_t floats_up = 0;
    std::size_t floats_down = 0;

    bool operator==(const CommLedger&) const = default;
};

enum class AggregateVariant { naive_average, averaged_debiased, distributed_debias };

std::string to_string(AggregateVariant v);

struct LocalFitSummary {
    std::size_t shard_id = 0;
    std::size_t sweeps_used = 0;
    double kkt_violation = 0.0;
    std::size_t nonzeros = 0;
};

struct AggregateEstimate {
    Vector beta;
    AggregateVariant variant = AggregateVariant::naive_average;
    CommLedger ledger;
    std::vector<LocalFitSummary> local_fits;
    /// Precision rows built during the run (all workers, merged), kept for
    /// diagnostics and invariant checks.
    std::vector<PrecisionEstimate> precision;
};

/// In-process worker/coordinator channel. Every float that crosses it is
/// counted; contents are exactly the protocol vectors.
class Transport {
public:
    explicit Transport(std::size_t workers);

    std::size_t workers() const noexcept { return slots_.size(); }

    /// Worker -> coordinator. Thread safe.
    void upload(std::size_t shard_id, Vector message);

    /// Coordinator takes every pending upload, in shard order, and closes
    /// the round. Missing uploads are an error.
    std::vector<Vector> collect();

    /// Coordinator -> every worker; counted once per worker.
    void broadcast(std::vector<Vector> messages);

    /// What the last broadcast delivered to a worker.
    const std::vector<Vector>& received() const noexcept { return broadcast_; }

    CommLedger ledger() const;

private:
    mutable std::mutex mu_;
    std::vector<std::optional<Vector>> slots_;
    std::vector<Vector> broadcast_;
    CommLedger ledger_;
};

/// Contiguous even split; m must divide n.
std::vector<Shard> split(const Dataset& data, std::size_t m);

/// Drops trailing rows so that m divides n, then splits.
std::vector<Shard> split_drop_remainder(const Dataset& data, std::size_t m);

/// lambda = c * sigma_y * sqrt(log p / n)
double theory_lambda(double sigma_y, std::size_t n, std::size_t p, double c = 1.4142135623730951);

/// Residual standard deviation of a lasso fit at
/// lambda_0 = sqrt(2 log p / n) * sd(y), for data without a known noise scale.
double estimate_noise_scale(const Dataset& data, const SolverConfig& cfg = {});

/// Contiguous row blocks of size ceil(p/m); the last may be smaller
/// (or empty when p is not much larger than m).
std::vector<std::pair<std::size_t, std::size_t>> row_blocks(std::size_t p, std::size_t m);

struct DistributedOptions {
    SolverConfig solver;
    PrecisionMethod theta_method = PrecisionMethod::jm_program;
    double jm_delta_c = 2.0;
    double nodewise_c = 0.5;
    /// Worker threads; 0 means one per shard, capped by the hardware.
    std::size_t threads = 1;
};

AggregateEstimate naive_average(const std::vector<Shard>& shards, double lambda,
                                const DistributedOptions& opts = {});

AggregateEstimate averaged_debiased(const std::vector<Shard>& shards, double lambda,
                                    const DistributedOptions& opts = {});

/// Two-round protocol with a single Theta built blockwise by nodewise
/// regression on each worker's local data.
AggregateEstimate distributed_debias(const std::vector<Shard>& shards, double lambda,
                                     const DistributedOptions& opts = {});

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `threads` threads. Exceptions
/// are rethrown after all tasks finish; the one from the lowest index wins.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

std::size_t resolve_threads(std::size_t requested, std::size_t tasks);

}  // namespace detail

}  // namespace distlasso
