#pragma once

// Simulation sweeps: generate data per (grid point, seed), split it, run
// each estimator and record its errors against the true coefficients.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "distlasso/core.hpp"
#include "distlasso/debias.hpp"
#include "distlasso/io.hpp"
#include "distlasso/qls.hpp"
#include "distlasso/threshold.hpp"

namespace distlasso {

enum class ExperimentKind { fig1, fig2, fig3, glm };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

enum class Estimator {
    centralized_lasso,
    naive_average,
    averaged_debiased,
    distributed_debias,
    thresholded
};

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& s);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::fig1;
    std::size_t p = 200;
    /// Rows per shard; used by fig1, fig3 and glm (N = m * n).
    std::size_t n = 150;
    /// Total rows; used by fig2 (n = N / m).
    std::size_t total_n = 4800;
    std::size_t s = 5;
    std::vector<std::size_t> m_grid = {1, 2, 4, 8, 16};
    CovarianceSpec::Kind cov = CovarianceSpec::Kind::identity;
    double rho = 0.5;
    double sigma_y = 1.0;
    double amplitude = 1.0;
    std::size_t seeds = 20;
    std::uint64_t first_seed = 1;
    std::vector<Estimator> estimators;
    ThresholdRule::Kind threshold = ThresholdRule::Kind::hard;
    double threshold_c = 2.0;
    PrecisionMethod theta = PrecisionMethod::nodewise;
    double lambda_c = 1.4142135623730951;
    SolverConfig solver;
    std::filesystem::path output;  // empty: no file
    std::size_t threads = 0;       // 0: hardware, capped by DISTLASSO_THREADS

    /// Desk-scale defaults for each experiment.
    static ExperimentConfig defaults(ExperimentKind kind);

    void validate() const;

    std::size_t shard_rows(std::size_t m) const;
    std::size_t total_rows(std::size_t m) const;
};

/// Starts from the defaults of kv["experiment"] (or `base` when absent)
/// and applies every recognised key. Unknown keys are an error.
ExperimentConfig config_from_key_values(const io::KeyValues& kv,
                                        ExperimentKind base = ExperimentKind::fig1);

struct ExperimentRow {
    std::string experiment;
    std::uint64_t seed = 0;
    std::size_t p = 0, n = 0, total_n = 0, m = 0, s = 0;
    std::string estimator;
    double l1 = 0.0, l2 = 0.0, linf = 0.0;
    std::size_t floats_up = 0, floats_down = 0;
    double wall_ms = 0.0;
};

/// Invariants checked while running.
struct ExperimentChecks {
    /// Thresholding error bounds, evaluated for hard and soft rules.
    std::size_t threshold_runs = 0;
    std::size_t threshold_premise_held = 0;
    std::size_t threshold_violations = 0;
    /// ||Theta_j Sigma_hat - e_j||_inf <= lambda_j / tau_j^2 + 1e-8.
    std::size_t nodewise_rows = 0;
    std::size_t nodewise_violations = 0;

    bool ok() const noexcept { return threshold_violations == 0 && nodewise_violations == 0; }
    void merge(const ExperimentChecks& o);
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;  // (grid, seed, estimator) order
    ExperimentChecks checks;
};

inline constexpr const char* kExperimentCsvHeader =
    "experiment,seed,p,n,N,m,s,estimator,l1,l2,linf,floats_up,floats_down,wall_ms";

void write_csv_row(std::ostream& out, const ExperimentRow& r);
void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

/// Runs the sweep. When cfg.output is set the CSV is written there, also
/// on failure (completed tasks only) before the error is rethrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Mean of a metric over seeds for one (m, estimator) cell.
enum class Metric { l1, l2, linf };
double mean_metric(const std::vector<ExperimentRow>& rows, std::size_t m,
                   const std::string& estimator, Metric metric);

}  // namespace distlasso
