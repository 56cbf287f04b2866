// Acceptance suite: one PASS/FAIL line per criterion. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "distlasso/debias.hpp"
#include "distlasso/distributed.hpp"
#include "distlasso/experiment.hpp"
#include "distlasso/glm.hpp"
#include "distlasso/synth.hpp"
#include "test_util.hpp"

using namespace distlasso;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += "failed: " + what;
        }
    }
    void note(const std::string& s) {
        if (!detail.empty()) detail += "; ";
        detail += s;
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int failures = 0;

// Runs fn under a time budget (0: none) and prints its line.
void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.pass = false;
        o.note(std::string("exception: ") + e.what());
    }
    const double s = seconds_since(t0);
    if (budget_s > 0.0 && s > budget_s) o.require(false, "runtime " + fmt("%.1f s", s) + " over budget");
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s) [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", id, name, s,
                o.detail.c_str());
    std::fflush(stdout);
}

SyntheticProblem problem(std::size_t n, std::size_t p, std::size_t s, CovarianceSpec cov,
                         std::uint64_t seed, double sigma = 1.0) {
    SynthConfig c;
    c.n = n;
    c.p = p;
    c.s = s;
    c.cov = cov;
    c.sigma_y = sigma;
    c.seed = seed;
    return generate(c);
}

// 16 x 8 slice of a Sylvester-Hadamard matrix: X^T X = 16 I.
Matrix hadamard_design() {
    Matrix x(16, 8);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 8; ++j)
            x(i, j) = (__builtin_popcount(static_cast<unsigned>(i & (j + 1))) % 2) ? -1.0 : 1.0;
    return x;
}

double brute_inf_l(const Vector& x, std::size_t l) {
    const std::size_t p = x.size();
    double best = 0.0;
    for (unsigned mask = 1; mask < (1u << p); ++mask) {
        const auto k = static_cast<std::size_t>(__builtin_popcount(mask));
        if (k < l) continue;
        double sq = 0.0;
        for (std::size_t j = 0; j < p; ++j)
            if (mask & (1u << j)) sq += x[j] * x[j];
        best = std::max(best, std::sqrt(sq / static_cast<double>(k)));
    }
    return best;
}

Outcome solver_correctness() {
    Outcome o;
    const double tol = SolverConfig{}.tol;
    double worst_kkt = 0.0, worst_orth = 0.0, worst_grid = 0.0;

    const Matrix h = hadamard_design();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Dataset d{h, testutil::random_vector(16, seed, 2.0)};
        for (double lambda : {0.01, 0.2, 0.7}) {
            const LassoFit fit = solve_lasso(d, lambda);
            worst_kkt = std::max(worst_kkt, fit.kkt_violation);
            for (std::size_t j = 0; j < 8; ++j) {
                double ols = 0.0;
                for (std::size_t i = 0; i < 16; ++i) ols += h(i, j) * d.y[i];
                worst_orth = std::max(worst_orth,
                                      std::fabs(fit.beta_hat[j] - soft_threshold(ols / 16.0, lambda)));
            }
        }
    }
    o.require(worst_orth <= 1e-10, "orthogonal design " + fmt("%.2e", worst_orth));

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset d = testutil::correlated_data(30, 2, 0.6, seed);
        const double lambda = 0.1;
        const LassoFit fit = solve_lasso(d, lambda);
        worst_kkt = std::max(worst_kkt, fit.kkt_violation);
        const Vector best = testutil::grid_minimize_refined(
            2, -5.0, 5.0, 0.01, 1e-3, [&](const Vector& b) { return lasso_objective(d, b, lambda); });
        worst_grid = std::max(worst_grid, testutil::max_abs_diff(fit.beta_hat, best));

        const Matrix a = empirical_covariance(testutil::random_matrix(12, 3, seed + 20));
        const Vector b = testutil::random_vector(3, seed + 40);
        const Vector g = solve_penalized_quadratic(a, b, 0.3);
        worst_kkt = std::max(worst_kkt, quadratic_kkt_residual(a, b, g, 0.3));
        const Vector gb = testutil::grid_minimize_refined(
            3, -5.0, 5.0, 0.05, 1e-3, [&](const Vector& x) { return quadratic_objective(a, b, x, 0.3); });
        worst_grid = std::max(worst_grid, testutil::max_abs_diff(g, gb));
    }
    o.require(worst_grid <= 2e-3, "grid oracle " + fmt("%.2e", worst_grid));

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Dataset d = testutil::correlated_data(seed % 2 ? 60 : 25, 40, 0.3, seed);
        const LassoFit fit = solve_lasso(d, 0.05);
        worst_kkt = std::max(worst_kkt, kkt_residual(d, fit.beta_hat, 0.05));
    }
    o.require(worst_kkt <= 10 * tol, "kkt " + fmt("%.2e", worst_kkt));
    o.note("orthogonal " + fmt("%.1e", worst_orth) + ", grid " + fmt("%.1e", worst_grid) +
           ", kkt " + fmt("%.1e", worst_kkt));
    return o;
}

Outcome debias_identities() {
    Outcome o;
    double ols_gap = 0.0, ad_gap = 0.0, dd_gap = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SyntheticProblem prob = problem(100, 20, 4, CovarianceSpec::ar1(20, 0.5), seed);
        const double lambda = theory_lambda(1.0, 100, 20);
        const LassoFit fit = solve_lasso(prob.data, lambda);
        const Matrix sigma = empirical_covariance(prob.data.x);
        const DebiasedEstimate exact = debias(fit, spd_inverse(sigma), prob.data);
        ols_gap = std::max(ols_gap, testutil::max_abs_diff(exact.beta_d, testutil::ols(prob.data)));

        const auto one = split(prob.data, 1);
        const PrecisionEstimate jm =
            precision_jm(sigma, default_jm_delta(100, 20), {}, all_rows(20));
        const AggregateEstimate ad = averaged_debiased(one, lambda);
        ad_gap = std::max(ad_gap, testutil::max_abs_diff(ad.beta, debias(fit, jm, prob.data).beta_d));

        const PrecisionEstimate nw = precision_nodewise(
            prob.data.x, sigma, default_nodewise_lambdas(prob.data.x), {}, all_rows(20));
        const AggregateEstimate dd = distributed_debias(one, lambda);
        dd_gap = std::max(dd_gap, testutil::max_abs_diff(dd.beta, debias(fit, nw, prob.data).beta_d));
    }
    o.require(ols_gap <= 1e-8, "exact inverse vs OLS " + fmt("%.2e", ols_gap));
    o.require(ad_gap <= 1e-12, "m=1 averaged_debiased " + fmt("%.2e", ad_gap));
    o.require(dd_gap <= 1e-12, "m=1 distributed_debias " + fmt("%.2e", dd_gap));
    o.note("OLS " + fmt("%.1e", ols_gap) + ", averaged " + fmt("%.1e", ad_gap) + ", distributed " +
           fmt("%.1e", dd_gap));
    return o;
}

Outcome nodewise_kkt() {
    Outcome o;
    std::size_t rows = 0, bad = 0;
    double worst = -1e300;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const CovarianceSpec cov =
            seed % 2 ? CovarianceSpec::ar1(50, 0.5) : CovarianceSpec::identity(50);
        const SyntheticProblem prob = problem(100, 50, 5, cov, seed);
        const Matrix sigma = empirical_covariance(prob.data.x);
        const Vector lambdas = default_nodewise_lambdas(prob.data.x);
        const PrecisionEstimate th = precision_nodewise(prob.data.x, sigma, lambdas, {}, all_rows(50));
        for (const auto& [j, row] : th.rows) {
            // Independent recomputation of ||theta_j Sigma_hat - e_j||_inf.
            double v = 0.0;
            for (std::size_t k = 0; k < 50; ++k) {
                double s = 0.0;
                for (std::size_t l = 0; l < 50; ++l) s += row.theta[l] * sigma(l, k);
                v = std::max(v, std::fabs(s - (k == j ? 1.0 : 0.0)));
            }
            const double bound = lambdas[j] / row.tau_sq;
            ++rows;
            if (!(v <= bound + 1e-8)) ++bad;
            worst = std::max(worst, v - bound);
        }
    }
    o.require(bad == 0, std::to_string(bad) + " of " + std::to_string(rows) + " rows over the bound");
    o.note(std::to_string(rows) + " rows, max(measured - bound) " + fmt("%.2e", worst));
    return o;
}

Outcome holder_bound() {
    Outcome o;
    std::size_t runs = 0, bad = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (auto cov : {CovarianceSpec::identity(100), CovarianceSpec::ar1(100, 0.5)}) {
            for (std::size_t n : {80, 200}) {
                const SyntheticProblem prob = problem(n, 100, 5, cov, seed);
                const LassoFit fit = solve_lasso(prob.data, theory_lambda(1.0, n, 100));
                const Matrix sigma = empirical_covariance(prob.data.x);
                const PrecisionEstimate jm =
                    precision_jm(sigma, default_jm_delta(n, 100), {}, all_rows(100));
                const PrecisionEstimate nw = precision_nodewise(
                    prob.data.x, sigma, default_nodewise_lambdas(prob.data.x), {}, all_rows(100));
                for (const PrecisionEstimate* th : {&jm, &nw}) {
                    const DebiasedEstimate est = debias(fit, *th, prob.data);
                    const BiasDiagnostics bd =
                        decompose_error(est, prob.truth, *th, prob.data, prob.noise);
                    const double l1 = error_norms(fit.beta_hat, prob.truth.beta_star).l1;
                    ++runs;
                    if (!(bd.delta_inf <= bd.coherence * l1 + 1e-10)) ++bad;
                }
            }
        }
    }
    o.require(bad == 0, std::to_string(bad) + " of " + std::to_string(runs) + " debiases");
    o.note(std::to_string(runs) + " debiases checked");
    return o;
}

struct Fig1Run {
    std::string cov;
    ExperimentResult result;
    double seconds = 0.0;
};

Fig1Run run_fig1(CovarianceSpec::Kind cov) {
    ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::fig1);
    c.cov = cov;
    c.estimators = {Estimator::centralized_lasso, Estimator::naive_average,
                    Estimator::averaged_debiased, Estimator::thresholded};
    const auto t0 = Clock::now();
    Fig1Run r{cov == CovarianceSpec::Kind::ar1 ? "ar1" : "identity", run_experiment(c), 0.0};
    r.seconds = seconds_since(t0);
    return r;
}

double linf(const ExperimentResult& r, std::size_t m, const char* est) {
    return mean_metric(r.rows, m, est, Metric::linf);
}

Outcome fig1_criterion(const std::vector<Fig1Run>& runs) {
    Outcome o;
    for (const auto& run : runs) {
        const auto& r = run.result;
        const double ad1 = linf(r, 1, "averaged_debiased"), ad16 = linf(r, 16, "averaged_debiased");
        const double cl16 = linf(r, 16, "centralized_lasso"), na16 = linf(r, 16, "naive_average");
        o.require(ad16 < ad1, run.cov + " (a) m=16 below m=1");
        o.require(ad16 <= 2.0 * cl16, run.cov + " (b) within 2x centralized");
        o.require(na16 >= 2.0 * ad16, run.cov + " naive at least 2x averaged");
        o.note(run.cov + ": avg m=1 " + fmt("%.4f", ad1) + " m=16 " + fmt("%.4f", ad16) +
               ", central " + fmt("%.4f", cl16) + ", naive " + fmt("%.4f", na16) + " (" +
               fmt("%.0f s", run.seconds) + ")");
    }
    return o;
}

Outcome fig2_criterion(ExperimentChecks& checks) {
    Outcome o;
    const ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::fig2);
    const ExperimentResult r = run_experiment(c);
    checks.merge(r.checks);
    const double a2 = linf(r, 2, "averaged_debiased"), a48 = linf(r, 48, "averaged_debiased");
    o.require(a48 > 1.5 * a2, "m=48 over 1.5x m=2");
    o.note("m=2 " + fmt("%.4f", a2) + ", m=48 " + fmt("%.4f", a48) + ", ratio " +
           fmt("%.2f", a48 / a2));
    return o;
}

Outcome fig3_criterion(const std::vector<Fig1Run>& runs) {
    Outcome o;
    for (const auto& run : runs) {
        const double th = mean_metric(run.result.rows, 8, "thresholded", Metric::l2);
        const double dense = mean_metric(run.result.rows, 8, "averaged_debiased", Metric::l2);
        o.require(th <= 0.3 * dense, run.cov + " thresholded l2 within 0.3x dense");
        o.note(run.cov + ": ratio " + fmt("%.3f", th / dense));
    }
    return o;
}

Outcome rate_criterion(const std::vector<Fig1Run>& runs) {
    Outcome o;
    for (const auto& run : runs) {
        const ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::fig1);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double k = static_cast<double>(c.m_grid.size());
        for (std::size_t m : c.m_grid) {
            const double x = std::log(static_cast<double>(c.total_rows(m)));
            const double y = std::log(linf(run.result, m, "averaged_debiased"));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        o.require(slope >= -0.65 && slope <= -0.35, run.cov + " slope in [-0.65, -0.35]");
        o.note(run.cov + ": slope " + fmt("%.3f", slope));
    }
    return o;
}

Outcome threshold_outcome(const ExperimentChecks& checks) {
    Outcome o;
    o.require(checks.threshold_violations == 0,
              std::to_string(checks.threshold_violations) + " violations");
    o.note(std::to_string(checks.threshold_runs) + " thresholdings, premise held in " +
           std::to_string(checks.threshold_premise_held));
    return o;
}

Outcome ledger_criterion() {
    Outcome o;
    std::size_t cells = 0;
    for (std::size_t p : {16, 50, 100}) {
        for (std::size_t m : {1, 2, 4, 8}) {
            const SyntheticProblem prob = problem(40 * m, p, 3, CovarianceSpec::identity(p), m + p);
            const auto shards = split(prob.data, m);
            const double lambda = theory_lambda(1.0, 40, p);
            DistributedOptions nw;
            nw.theta_method = PrecisionMethod::nodewise;
            const CommLedger ad = averaged_debiased(shards, lambda, nw).ledger;
            const CommLedger dd = distributed_debias(shards, lambda).ledger;
            const std::string cell = "(m=" + std::to_string(m) + ",p=" + std::to_string(p) + ")";
            o.require(ad.floats_up == m * p, "averaged_debiased up " + cell);
            o.require(dd.floats_up == 2 * m * p + p && dd.floats_down == 2 * m * p,
                      "distributed_debias " + cell);
            ++cells;
        }
    }
    o.note(std::to_string(cells) + " (m,p) cells");
    return o;
}

Outcome glm_criterion(ExperimentChecks& checks) {
    Outcome o;
    double gap = 0.0;
    const SquaredLoss sq;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SyntheticProblem prob = problem(200, 40, 4, CovarianceSpec::ar1(40, 0.5), seed);
        const auto shards = split(prob.data, 4);
        const double lambda = theory_lambda(1.0, 50, 40);
        gap = std::max(gap, testutil::max_abs_diff(average_glm(shards, sq, lambda).beta,
                                                   distributed_debias(shards, lambda).beta));
    }
    o.require(gap <= 1e-10, "squared reduction " + fmt("%.2e", gap));

    const LogisticLoss lg;
    double fd = 0.0;
    RandomStream rng(17, 1);
    for (int i = 0; i < 100; ++i) {
        const double a = 8.0 * rng.uniform() - 4.0;
        const double y = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const double h = 1e-5;
        fd = std::max(fd, std::fabs(lg.rho_dot(y, a) - (lg.rho(y, a + h) - lg.rho(y, a - h)) / (2 * h)));
        fd = std::max(fd, std::fabs(lg.rho_ddot(y, a) -
                                    (lg.rho_dot(y, a + h) - lg.rho_dot(y, a - h)) / (2 * h)));
        o.require(lg.rho_ddot(y, a) > 0.0 && lg.rho_ddot(y, a) <= 0.25, "curvature range");
    }
    SynthConfig sc;
    sc.n = 100;
    sc.p = 8;
    sc.s = 3;
    sc.cov = CovarianceSpec::identity(8);
    sc.response = SynthConfig::Response::logistic;
    const SyntheticProblem lp = generate(sc);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Vector beta = testutil::random_vector(8, seed, 0.5);
        const Vector g = loss_gradient(lp.data, lg, beta);
        for (std::size_t j = 0; j < 8; ++j) {
            Vector up = beta, dn = beta;
            up[j] += 1e-5;
            dn[j] -= 1e-5;
            const double num =
                (empirical_loss(lp.data, lg, up) - empirical_loss(lp.data, lg, dn)) / 2e-5;
            fd = std::max(fd, std::fabs(g[j] - num) / std::max(1.0, std::fabs(num)));
        }
    }
    o.require(fd <= 1e-6, "finite differences " + fmt("%.2e", fd));

    const ExperimentResult r = run_experiment(ExperimentConfig::defaults(ExperimentKind::glm));
    checks.merge(r.checks);
    const double th = linf(r, 4, "thresholded"), na = linf(r, 4, "naive_average");
    o.require(th <= na, "thresholded within naive");
    o.note("reduction " + fmt("%.1e", gap) + ", fd " + fmt("%.1e", fd) + ", logistic thresholded " +
           fmt("%.4f", th) + " vs naive " + fmt("%.4f", na));
    return o;
}

Outcome norm_oracle() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const std::size_t p = 1 + seed % 10;
        const Vector x = testutil::random_vector(p, seed + 500);
        for (std::size_t l = 1; l <= p; ++l)
            worst = std::max(worst, std::fabs(norm_inf_l(x, l) - brute_inf_l(x, l)));
    }
    o.require(worst <= 1e-12, "max gap " + fmt("%.2e", worst));
    o.note("100 vectors, max gap " + fmt("%.1e", worst));
    return o;
}

}  // namespace

int main() {
    criterion(1, "solver correctness", 5.0, solver_correctness);
    criterion(2, "debiasing identities", 0.0, debias_identities);
    criterion(3, "nodewise KKT bound", 30.0, nodewise_kkt);
    criterion(4, "Hoelder bias bound", 0.0, holder_bound);

    std::vector<Fig1Run> fig1;
    ExperimentChecks checks;
    // Both covariances share the 3 minute budget.
    criterion(5, "averaging with fixed shard size", 180.0, [&] {
        fig1.push_back(run_fig1(CovarianceSpec::Kind::identity));
        fig1.push_back(run_fig1(CovarianceSpec::Kind::ar1));
        for (const auto& r : fig1) checks.merge(r.result.checks);
        return fig1_criterion(fig1);
    });
    criterion(6, "averaging with fixed total rows", 180.0, [&] { return fig2_criterion(checks); });
    criterion(7, "thresholding the average", 0.0, [&] { return fig3_criterion(fig1); });
    criterion(8, "error rate in N", 0.0, [&] { return rate_criterion(fig1); });
    criterion(10, "communication ledger", 0.0, ledger_criterion);
    criterion(11, "GLM reduction", 180.0, [&] { return glm_criterion(checks); });
    // Runs after every experiment so that it sees all thresholdings.
    criterion(9, "thresholding bounds", 0.0, [&] {
        Outcome o = threshold_outcome(checks);
        o.require(checks.nodewise_violations == 0,
                  std::to_string(checks.nodewise_violations) + " nodewise rows over their bound");
        return o;
    });
    criterion(12, "(inf,l) norm oracle", 0.0, norm_oracle);

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
