#include "distlasso/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "distlasso/distributed.hpp"
#include "distlasso/error.hpp"
#include "distlasso/glm.hpp"
#include "distlasso/synth.hpp"

namespace distlasso {

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::fig1: return "fig1";
        case ExperimentKind::fig2: return "fig2";
        case ExperimentKind::fig3: return "fig3";
        case ExperimentKind::glm: return "glm";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
    if (s == "fig1") return ExperimentKind::fig1;
    if (s == "fig2") return ExperimentKind::fig2;
    if (s == "fig3") return ExperimentKind::fig3;
    if (s == "glm") return ExperimentKind::glm;
    throw InvalidInput("unknown experiment '" + s + "' (expected fig1, fig2, fig3 or glm)");
}

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::centralized_lasso: return "centralized_lasso";
        case Estimator::naive_average: return "naive_average";
        case Estimator::averaged_debiased: return "averaged_debiased";
        case Estimator::distributed_debias: return "distributed_debias";
        case Estimator::thresholded: return "thresholded";
    }
    return "unknown";
}

Estimator parse_estimator(const std::string& s) {
    for (auto e : {Estimator::centralized_lasso, Estimator::naive_average,
                   Estimator::averaged_debiased, Estimator::distributed_debias,
                   Estimator::thresholded})
        if (s == to_string(e)) return e;
    throw InvalidInput("unknown estimator '" + s + "'");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    switch (kind) {
        case ExperimentKind::fig1:
            c.estimators = {Estimator::centralized_lasso, Estimator::naive_average,
                            Estimator::averaged_debiased};
            break;
        case ExperimentKind::fig2:
            c.total_n = 4800;
            c.m_grid = {2, 4, 8, 16, 32, 48};
            c.estimators = {Estimator::centralized_lasso, Estimator::naive_average,
                            Estimator::averaged_debiased};
            break;
        case ExperimentKind::fig3:
            c.estimators = {Estimator::centralized_lasso, Estimator::averaged_debiased,
                            Estimator::thresholded};
            break;
        case ExperimentKind::glm:
            c.p = 100;
            c.n = 400;
            c.s = 4;
            c.m_grid = {4};
            c.estimators = {Estimator::centralized_lasso, Estimator::naive_average,
                            Estimator::distributed_debias, Estimator::thresholded};
            break;
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (p < 2) throw InvalidInput("experiment needs p >= 2");
    if (s > p) throw InvalidInput("experiment needs s <= p");
    if (m_grid.empty()) throw InvalidInput("m grid must be non-empty");
    if (seeds < 1) throw InvalidInput("seeds must be >= 1");
    if (estimators.empty()) throw InvalidInput("estimator list must be non-empty");
    if (!(sigma_y >= 0.0)) throw InvalidInput("sigma_y must be >= 0");
    if (!(threshold_c > 0.0) || !(lambda_c > 0.0))
        throw InvalidInput("threshold_c and lambda_c must be positive");
    if (cov == CovarianceSpec::Kind::ar1 && !(std::fabs(rho) < 1.0))
        throw InvalidInput("ar1 requires |rho| < 1");
    solver.validate();
    for (std::size_t m : m_grid) {
        if (m < 1) throw InvalidInput("m must be >= 1");
        if (experiment == ExperimentKind::fig2 && total_n % m != 0)
            throw InvalidInput("N = " + std::to_string(total_n) + " is not divisible by m = " +
                               std::to_string(m));
        if (shard_rows(m) < 2) throw InvalidInput("each shard needs at least 2 rows");
        const bool needs_blocks =
            std::find(estimators.begin(), estimators.end(), Estimator::distributed_debias) !=
                estimators.end() ||
            experiment == ExperimentKind::glm;
        if (needs_blocks && m > p) throw InvalidInput("m must not exceed p");
    }
    if (experiment == ExperimentKind::glm)
        for (Estimator e : estimators)
            if (e == Estimator::averaged_debiased)
                throw InvalidInput("the glm experiment has no averaged_debiased estimator");
}

std::size_t ExperimentConfig::shard_rows(std::size_t m) const {
    return experiment == ExperimentKind::fig2 ? total_n / m : n;
}

std::size_t ExperimentConfig::total_rows(std::size_t m) const {
    return experiment == ExperimentKind::fig2 ? total_n : n * m;
}

namespace {

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw InvalidInput("config key '" + key + "': '" + v + "' is not a non-negative integer");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw InvalidInput("config key '" + key + "': '" + v + "' is not a number");
    return out;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto b = tok.find_first_not_of(" \t");
        const auto e = tok.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(tok.substr(b, e - b + 1));
    }
    return out;
}

ThresholdRule::Kind parse_threshold_kind(const std::string& s) {
    if (s == "hard") return ThresholdRule::Kind::hard;
    if (s == "soft") return ThresholdRule::Kind::soft;
    if (s == "topk") return ThresholdRule::Kind::topk;
    throw InvalidInput("unknown threshold rule '" + s + "' (expected hard, soft or topk)");
}

}  // namespace

ExperimentConfig config_from_key_values(const io::KeyValues& kv, ExperimentKind base) {
    if (auto it = kv.find("experiment"); it != kv.end()) base = parse_experiment_kind(it->second);
    ExperimentConfig c = ExperimentConfig::defaults(base);
    for (const auto& [k, v] : kv) {
        if (k == "experiment") continue;
        else if (k == "p") c.p = parse_uint(k, v);
        else if (k == "n") c.n = parse_uint(k, v);
        else if (k == "N") c.total_n = parse_uint(k, v);
        else if (k == "s") c.s = parse_uint(k, v);
        else if (k == "m") {
            c.m_grid.clear();
            for (const auto& t : split_list(v)) c.m_grid.push_back(parse_uint(k, t));
        } else if (k == "cov") {
            if (v == "identity") c.cov = CovarianceSpec::Kind::identity;
            else if (v == "ar1") c.cov = CovarianceSpec::Kind::ar1;
            else throw InvalidInput("unknown covariance '" + v + "' (expected identity or ar1)");
        } else if (k == "rho") c.rho = parse_real(k, v);
        else if (k == "sigma_y") c.sigma_y = parse_real(k, v);
        else if (k == "amplitude") c.amplitude = parse_real(k, v);
        else if (k == "seeds") c.seeds = parse_uint(k, v);
        else if (k == "first_seed") c.first_seed = parse_uint(k, v);
        else if (k == "estimators") {
            c.estimators.clear();
            for (const auto& t : split_list(v)) c.estimators.push_back(parse_estimator(t));
        } else if (k == "threshold") c.threshold = parse_threshold_kind(v);
        else if (k == "threshold_c") c.threshold_c = parse_real(k, v);
        else if (k == "theta") c.theta = parse_precision_method(v);
        else if (k == "lambda_c") c.lambda_c = parse_real(k, v);
        else if (k == "tol") c.solver.tol = parse_real(k, v);
        else if (k == "max_sweeps") c.solver.max_sweeps = parse_uint(k, v);
        else if (k == "output") c.output = v;
        else if (k == "threads") c.threads = parse_uint(k, v);
        else throw InvalidInput("unknown config key '" + k + "'");
    }
    c.validate();
    return c;
}

void ExperimentChecks::merge(const ExperimentChecks& o) {
    threshold_runs += o.threshold_runs;
    threshold_premise_held += o.threshold_premise_held;
    threshold_violations += o.threshold_violations;
    nodewise_rows += o.nodewise_rows;
    nodewise_violations += o.nodewise_violations;
}

void write_csv_row(std::ostream& out, const ExperimentRow& r) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", r.wall_ms);
    out << r.experiment << ',' << r.seed << ',' << r.p << ',' << r.n << ',' << r.total_n << ','
        << r.m << ',' << r.s << ',' << r.estimator << ',' << io::format_double(r.l1) << ','
        << io::format_double(r.l2) << ',' << io::format_double(r.linf) << ',' << r.floats_up
        << ',' << r.floats_down << ',' << ms << '\n';
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    out << kExperimentCsvHeader << '\n';
    for (const auto& r : rows) write_csv_row(out, r);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct TaskOutput {
    std::vector<ExperimentRow> rows;
    ExperimentChecks checks;
};

void check_nodewise(const AggregateEstimate& est, ExperimentChecks& checks) {
    for (const auto& pe : est.precision) {
        if (pe.method != PrecisionMethod::nodewise) continue;
        for (const auto& [j, row] : pe.rows) {
            ++checks.nodewise_rows;
            if (!(row.kkt_measured <= row.kkt_bound + 1e-8)) ++checks.nodewise_violations;
        }
    }
}

void check_thresholds(const Vector& estimate, const GroundTruth& truth, double t,
                      ExperimentChecks& checks) {
    for (const Vector& thr : {hard_threshold(estimate, t), soft_threshold(estimate, t)}) {
        const ThresholdBoundCheck c = check_threshold_bounds(estimate, thr, truth, t);
        ++checks.threshold_runs;
        if (c.premise) ++checks.threshold_premise_held;
        if (!c.holds()) ++checks.threshold_violations;
    }
}

TaskOutput run_task(const ExperimentConfig& cfg, std::size_t m, std::uint64_t seed) {
    const bool glm = cfg.experiment == ExperimentKind::glm;
    const std::size_t n = cfg.shard_rows(m);
    const std::size_t total = cfg.total_rows(m);

    SynthConfig sc;
    sc.n = total;
    sc.p = cfg.p;
    sc.s = cfg.s;
    sc.cov = cfg.cov == CovarianceSpec::Kind::ar1 ? CovarianceSpec::ar1(cfg.p, cfg.rho)
                                                   : CovarianceSpec::identity(cfg.p);
    sc.sigma_y = cfg.sigma_y;
    sc.amplitude = cfg.amplitude;
    sc.seed = seed;
    sc.response = glm ? SynthConfig::Response::logistic : SynthConfig::Response::linear;
    const SyntheticProblem prob = generate(sc);
    const auto shards = split(prob.data, m);

    // Logistic responses have no noise scale of their own; 1/2 bounds the
    // standard deviation of a Bernoulli draw.
    const double scale = glm ? 0.5 : cfg.sigma_y;
    const double lambda_local = theory_lambda(scale, n, cfg.p, cfg.lambda_c);
    const double lambda_central = theory_lambda(scale, total, cfg.p, cfg.lambda_c);
    const double t = default_threshold(scale, total, cfg.p, cfg.threshold_c);

    DistributedOptions dopts;
    dopts.solver = cfg.solver;
    dopts.theta_method = cfg.theta;
    GlmOptions gopts;
    gopts.mest.inner = cfg.solver;
    LogisticLoss logistic;

    TaskOutput out;
    auto record = [&](Estimator e, const Vector& beta, const CommLedger& ledger, double ms) {
        ExperimentRow r;
        r.experiment = to_string(cfg.experiment);
        r.seed = seed;
        r.p = cfg.p;
        r.n = n;
        r.total_n = total;
        r.m = m;
        r.s = cfg.s;
        r.estimator = to_string(e);
        const ErrorReport er = error_norms(beta, prob.truth.beta_star);
        r.l1 = er.l1;
        r.l2 = er.l2;
        r.linf = er.linf;
        r.floats_up = ledger.floats_up;
        r.floats_down = ledger.floats_down;
        r.wall_ms = ms;
        out.rows.push_back(std::move(r));
    };

    // The thresholded estimator sparsifies the averaged debiased estimate
    // (linear) or the averaged GLM estimate.
    const Estimator source = glm ? Estimator::distributed_debias : Estimator::averaged_debiased;
    std::optional<AggregateEstimate> source_est;
    double source_ms = 0.0;

    for (Estimator e : cfg.estimators) {
        const auto t0 = Clock::now();
        switch (e) {
            case Estimator::centralized_lasso: {
                const LassoFit fit =
                    glm ? solve_l1_mestimator(prob.data, logistic, lambda_central, gopts.mest)
                        : solve_lasso(prob.data, lambda_central, cfg.solver);
                record(e, fit.beta_hat, {}, elapsed_ms(t0));
                break;
            }
            case Estimator::naive_average: {
                const AggregateEstimate est = glm
                    ? naive_average_glm(shards, logistic, lambda_local, gopts)
                    : naive_average(shards, lambda_local, dopts);
                record(e, est.beta, est.ledger, elapsed_ms(t0));
                break;
            }
            case Estimator::averaged_debiased:
            case Estimator::distributed_debias: {
                AggregateEstimate est;
                if (glm) est = average_glm(shards, logistic, lambda_local, gopts);
                else if (e == Estimator::averaged_debiased)
                    est = averaged_debiased(shards, lambda_local, dopts);
                else est = distributed_debias(shards, lambda_local, dopts);
                const double ms = elapsed_ms(t0);
                record(e, est.beta, est.ledger, ms);
                check_nodewise(est, out.checks);
                if (e == source) {
                    source_est = std::move(est);
                    source_ms = ms;
                }
                break;
            }
            case Estimator::thresholded: {
                if (!source_est) {
                    source_est = glm ? average_glm(shards, logistic, lambda_local, gopts)
                                     : averaged_debiased(shards, lambda_local, dopts);
                    check_nodewise(*source_est, out.checks);
                    source_ms = elapsed_ms(t0);
                }
                const auto t1 = Clock::now();
                ThresholdRule rule;
                rule.kind = cfg.threshold;
                rule.t = t;
                if (cfg.threshold == ThresholdRule::Kind::topk) {
                    std::size_t k;
                    if (glm) {
                        k = source_est->local_fits.front().nonzeros;
                    } else {
                        const LassoFit f0 = solve_lasso(shards.front().data, lambda_local, cfg.solver);
                        k = empirical_sparsity(shards.front().data, f0);
                    }
                    rule.k = std::clamp<std::size_t>(k, 1, cfg.p);
                }
                record(e, rule.apply(source_est->beta), source_est->ledger,
                       source_ms + elapsed_ms(t1));
                break;
            }
        }
    }
    if (source_est) check_thresholds(source_est->beta, prob.truth, t, out.checks);
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t tasks = cfg.m_grid.size() * cfg.seeds;
    std::vector<TaskOutput> outputs(tasks);
    std::vector<std::exception_ptr> errors(tasks);
    std::vector<char> done(tasks, 0);  // not vector<bool>: written from several threads

    detail::parallel_for(tasks, cfg.threads, [&](std::size_t i) {
        const std::size_t m = cfg.m_grid[i / cfg.seeds];
        const std::uint64_t seed = cfg.first_seed + i % cfg.seeds;
        try {
            outputs[i] = run_task(cfg, m, seed);
            done[i] = 1;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });

    ExperimentResult result;
    for (std::size_t i = 0; i < tasks; ++i) {
        if (!done[i]) continue;
        result.rows.insert(result.rows.end(), outputs[i].rows.begin(), outputs[i].rows.end());
        result.checks.merge(outputs[i].checks);
    }
    if (!cfg.output.empty()) {
        std::ofstream f(cfg.output);
        if (!f) throw InvalidInput("cannot open for writing: " + cfg.output.string());
        write_experiment_csv(f, result.rows);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return result;
}

double mean_metric(const std::vector<ExperimentRow>& rows, std::size_t m,
                   const std::string& estimator, Metric metric) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : rows) {
        if (r.m != m || r.estimator != estimator) continue;
        sum += metric == Metric::l1 ? r.l1 : metric == Metric::l2 ? r.l2 : r.linf;
        ++count;
    }
    if (count == 0)
        throw InvalidInput("no rows for m = " + std::to_string(m) + ", estimator " + estimator);
    return sum / static_cast<double>(count);
}

}  // namespace distlasso
