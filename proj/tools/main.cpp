// distlasso command-line driver: synth, fit, experiment.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "distlasso/debias.hpp"
#include "distlasso/distributed.hpp"
#include "distlasso/error.hpp"
#include "distlasso/experiment.hpp"
#include "distlasso/glm.hpp"
#include "distlasso/io.hpp"
#include "distlasso/qls.hpp"
#include "distlasso/synth.hpp"

namespace dl = distlasso;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitInvariant = 5;

int exit_code_for(const dl::Error& e) {
    switch (e.kind()) {
        case dl::ErrorKind::non_convergence: return kExitNonConvergence;
        case dl::ErrorKind::infeasible_row: return kExitInfeasible;
        default: return kExitInvalid;
    }
}

struct SynthArgs {
    std::size_t n = 100, p = 50, s = 5;
    std::string cov = "identity";
    double rho = 0.5;
    double sigma_y = 1.0;
    double amplitude = 1.0;
    std::uint64_t seed = 1;
    std::string response = "linear";
    std::string out;
};

struct FitArgs {
    std::string data;
    std::string estimator = "lasso";
    std::optional<double> lambda;
    std::size_t m = 1;
    std::string theta = "jm";
    std::string loss = "squared";
    bool drop_remainder = false;
    std::string out = "coefficients.csv";
    std::string precision_out;
    double tol = 1e-8;
};

struct ExperimentArgs {
    std::string config;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
};

int run_synth(const SynthArgs& a) {
    dl::SynthConfig cfg;
    cfg.n = a.n;
    cfg.p = a.p;
    cfg.s = a.s;
    if (a.cov == "identity") cfg.cov = dl::CovarianceSpec::identity(a.p);
    else if (a.cov == "ar1") cfg.cov = dl::CovarianceSpec::ar1(a.p, a.rho);
    else throw dl::InvalidInput("unknown covariance '" + a.cov + "' (expected identity or ar1)");
    cfg.sigma_y = a.sigma_y;
    cfg.amplitude = a.amplitude;
    cfg.seed = a.seed;
    cfg.response = dl::parse_response(a.response);

    const dl::SyntheticProblem prob = dl::generate(cfg);
    const std::filesystem::path out(a.out);
    if (out.extension() == ".csv") dl::io::write_csv_dataset(out, prob.data);
    else dl::io::write_dataset(out, prob.data);
    const std::filesystem::path meta = out.string() + ".meta";
    dl::io::write_key_values(meta, dl::io::synth_metadata(cfg, prob.truth));
    std::cout << "wrote " << out.string() << " (n=" << cfg.n << ", p=" << cfg.p
              << ", s=" << cfg.s << ") and " << meta.string() << "\n";
    return kExitOk;
}

void print_summary(const std::string& estimator, const dl::Dataset& data, double lambda,
                   std::size_t m, const dl::Vector& beta, double kkt) {
    std::size_t nnz = 0;
    double l1 = 0.0, linf = 0.0;
    for (double b : beta) {
        nnz += b != 0.0;
        l1 += std::fabs(b);
        linf = std::max(linf, std::fabs(b));
    }
    std::cout << "estimator    " << estimator << "\n"
              << "n, p, m      " << data.n() << ", " << data.p() << ", " << m << "\n"
              << "lambda       " << dl::io::format_double(lambda) << "\n"
              << "nonzeros     " << nnz << "\n"
              << "||beta||_1   " << dl::io::format_double(l1) << "\n"
              << "||beta||_inf " << dl::io::format_double(linf) << "\n"
              << "kkt residual " << dl::io::format_double(kkt) << "\n";
}

void print_ledger(const dl::CommLedger& l) {
    std::cout << "rounds       " << l.rounds << "\n"
              << "floats up    " << l.floats_up << "\n"
              << "floats down  " << l.floats_down << "\n";
}

int run_fit(const FitArgs& a) {
    const dl::Dataset data = dl::io::load_dataset(a.data);
    if (a.m < 1) throw dl::InvalidInput("--m must be >= 1");
    const auto shards = a.drop_remainder ? dl::split_drop_remainder(data, a.m) : dl::split(data, a.m);
    const std::size_t nk = shards.front().data.n();
    const auto loss = dl::make_loss(a.loss);
    const bool logistic = a.loss == "logistic";

    dl::SolverConfig solver;
    solver.tol = a.tol;

    double lambda;
    if (a.lambda) {
        lambda = *a.lambda;
        if (!(lambda > 0.0)) throw dl::InvalidInput("--lambda must be positive");
    } else {
        const double scale = logistic ? 0.5 : dl::estimate_noise_scale(shards.front().data, solver);
        lambda = dl::theory_lambda(scale, nk, data.p());
    }

    dl::Vector beta;
    double kkt = 0.0;
    std::optional<dl::CommLedger> ledger;
    std::vector<dl::PrecisionEstimate> precision;

    dl::DistributedOptions dopts;
    dopts.solver = solver;
    dopts.theta_method = dl::parse_precision_method(a.theta);
    dopts.threads = 0;
    dl::GlmOptions gopts;
    gopts.mest.inner = solver;
    gopts.threads = 0;

    const std::string& est = a.estimator;
    if (est == "lasso") {
        if (a.m != 1) throw dl::InvalidInput("the lasso estimator uses all rows; drop --m");
        const dl::LassoFit fit = logistic ? dl::solve_l1_mestimator(data, *loss, lambda, gopts.mest)
                                          : dl::solve_lasso(data, lambda, solver);
        beta = fit.beta_hat;
        kkt = fit.kkt_violation;
    } else {
        dl::AggregateEstimate agg;
        if (est == "naive_average") {
            agg = logistic ? dl::naive_average_glm(shards, *loss, lambda, gopts)
                           : dl::naive_average(shards, lambda, dopts);
        } else if (est == "averaged_debiased") {
            if (logistic)
                throw dl::InvalidInput("averaged_debiased is defined for the squared loss only");
            agg = dl::averaged_debiased(shards, lambda, dopts);
        } else if (est == "distributed_debias") {
            agg = logistic ? dl::average_glm(shards, *loss, lambda, gopts)
                           : dl::distributed_debias(shards, lambda, dopts);
        } else if (est == "glm") {
            agg = dl::average_glm(shards, *loss, lambda, gopts);
        } else {
            throw dl::InvalidInput("unknown estimator '" + est + "'");
        }
        beta = agg.beta;
        for (const auto& f : agg.local_fits) kkt = std::max(kkt, f.kkt_violation);
        ledger = agg.ledger;
        precision = std::move(agg.precision);
    }

    print_summary(est, data, lambda, a.m, beta, kkt);
    if (ledger) print_ledger(*ledger);
    dl::io::write_coefficients(a.out, beta);
    std::cout << "coefficients " << a.out << "\n";
    if (!a.precision_out.empty()) {
        std::ofstream f(a.precision_out);
        if (!f) throw dl::InvalidInput("cannot open for writing: " + a.precision_out);
        bool header = true;
        for (const auto& pe : precision) {
            if (pe.rows.empty()) continue;
            std::string csv = pe.to_csv();
            if (!header) csv = csv.substr(csv.find('\n') + 1);
            f << csv;
            header = false;
        }
        std::cout << "precision    " << a.precision_out << "\n";
    }
    return kExitOk;
}

int run_experiment_cmd(const ExperimentArgs& a) {
    dl::io::KeyValues kv;
    if (!a.config.empty()) kv = dl::io::read_key_values(a.config);
    for (const auto& s : a.sets) {
        const auto parsed = dl::io::parse_key_values(s);
        if (parsed.size() != 1) throw dl::InvalidInput("--set expects key=value, got '" + s + "'");
        for (const auto& [k, v] : parsed) kv[k] = v;
    }
    for (const auto& [k, v] : a.flags) kv[k] = v;
    const dl::ExperimentConfig cfg = dl::config_from_key_values(kv);

    dl::ExperimentResult res;
    res = dl::run_experiment(cfg);

    if (cfg.output.empty()) dl::write_experiment_csv(std::cout, res.rows);
    else std::cout << "wrote " << res.rows.size() << " rows to " << cfg.output.string() << "\n";

    std::cerr << "mean linf error by m:\n";
    for (std::size_t m : cfg.m_grid) {
        std::cerr << "  m=" << m;
        for (auto e : cfg.estimators) {
            const std::string name = dl::to_string(e);
            char buf[64];
            std::snprintf(buf, sizeof buf, "  %s=%.4g", name.c_str(),
                          dl::mean_metric(res.rows, m, name, dl::Metric::linf));
            std::cerr << buf;
        }
        std::cerr << "\n";
    }
    std::cerr << "threshold bound checks: " << res.checks.threshold_premise_held << "/"
              << res.checks.threshold_runs << " with premise, "
              << res.checks.threshold_violations << " violations\n"
              << "nodewise kkt checks: " << res.checks.nodewise_rows << " rows, "
              << res.checks.nodewise_violations << " violations\n";
    if (!res.checks.ok()) {
        std::cerr << "error: invariant violated\n";
        return kExitInvariant;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed sparse regression by debiased lasso averaging"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--n", sa.n, "Rows")->capture_default_str();
    synth->add_option("--p", sa.p, "Predictors")->capture_default_str();
    synth->add_option("--s", sa.s, "Nonzero coefficients")->capture_default_str();
    synth->add_option("--cov", sa.cov, "identity or ar1")->capture_default_str();
    synth->add_option("--rho", sa.rho, "ar1 correlation")->capture_default_str();
    synth->add_option("--sigma-y", sa.sigma_y, "Noise scale")->capture_default_str();
    synth->add_option("--amplitude", sa.amplitude, "Nonzero magnitude")->capture_default_str();
    synth->add_option("--seed", sa.seed, "Seed")->capture_default_str();
    synth->add_option("--response", sa.response, "linear or logistic")->capture_default_str();
    synth->add_option("--out", sa.out, "Output file (.csv for CSV, otherwise DLDS)")->required();

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit an estimator to a dataset");
    fit->add_option("--data", fa.data, "DLDS or CSV dataset")->required();
    fit->add_option("--estimator", fa.estimator,
                    "lasso, naive_average, averaged_debiased, distributed_debias or glm")
        ->capture_default_str();
    fit->add_option("--lambda", fa.lambda, "Penalty (default: theory value, estimated noise)");
    fit->add_option("--m", fa.m, "Number of shards")->capture_default_str();
    fit->add_option("--theta", fa.theta, "Precision rows for averaged_debiased: jm or nodewise")
        ->capture_default_str();
    fit->add_option("--loss", fa.loss, "squared or logistic")->capture_default_str();
    fit->add_flag("--drop-remainder", fa.drop_remainder, "Drop trailing rows so m divides n");
    fit->add_option("--out", fa.out, "Coefficients CSV")->capture_default_str();
    fit->add_option("--precision-out", fa.precision_out, "Dump precision rows as CSV");
    fit->add_option("--tol", fa.tol, "Solver tolerance")->capture_default_str();

    ExperimentArgs ea;
    auto* exp = app.add_subcommand("experiment", "Run a simulation sweep and emit CSV");
    exp->add_option("--config", ea.config, "key=value config file");
    exp->add_option("--set", ea.sets, "Override a config key (key=value), repeatable");
    const std::vector<std::pair<std::string, std::string>> exp_flags = {
        {"experiment", "fig1, fig2, fig3 or glm"},
        {"p", "Predictors"},
        {"n", "Rows per shard (fig1, fig3, glm)"},
        {"N", "Total rows (fig2)"},
        {"s", "Nonzero coefficients"},
        {"m", "Comma-separated shard counts"},
        {"cov", "identity or ar1"},
        {"rho", "ar1 correlation"},
        {"sigma_y", "Noise scale"},
        {"seeds", "Number of seeds"},
        {"estimators", "Comma-separated estimator list"},
        {"threshold", "hard, soft or topk"},
        {"theta", "jm or nodewise"},
        {"threads", "Worker threads (0 = hardware)"},
        {"output", "Output CSV path (default stdout)"},
    };
    for (const auto& [key, help] : exp_flags) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        exp->add_option_function<std::string>(
            flag, [&ea, key](const std::string& v) { ea.flags[key] = v; }, help);
    }
    exp->add_option_function<std::string>(
        "--out", [&ea](const std::string& v) { ea.flags["output"] = v; }, "Alias for --output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    try {
        if (*synth) return run_synth(sa);
        if (*fit) return run_fit(fa);
        if (*exp) return run_experiment_cmd(ea);
    } catch (const dl::Error& e) {
        std::cerr << "error: " << e.describe() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
