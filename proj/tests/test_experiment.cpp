#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "distlasso/error.hpp"
#include "distlasso/experiment.hpp"

using namespace distlasso;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(ExperimentKind kind) {
    ExperimentConfig c = ExperimentConfig::defaults(kind);
    c.p = 30;
    c.s = 3;
    c.seeds = 3;
    if (kind == ExperimentKind::fig2) {
        c.total_n = 240;
        c.m_grid = {2, 4, 8};
    } else {
        c.n = 60;
        c.m_grid = {1, 2, 4};
    }
    return c;
}

// CSV without the wall_ms column, which is the only field that may vary.
std::string strip_timing(const std::vector<ExperimentRow>& rows) {
    std::ostringstream out;
    write_experiment_csv(out, rows);
    std::istringstream in(out.str());
    std::string line, res;
    while (std::getline(in, line)) res += line.substr(0, line.rfind(',')) + "\n";
    return res;
}

}  // namespace

TEST_CASE("defaults per experiment") {
    const auto f1 = ExperimentConfig::defaults(ExperimentKind::fig1);
    CHECK(f1.m_grid == std::vector<std::size_t>{1, 2, 4, 8, 16});
    CHECK(f1.estimators.size() == 3);
    CHECK_NOTHROW(f1.validate());
    const auto f2 = ExperimentConfig::defaults(ExperimentKind::fig2);
    CHECK_NOTHROW(f2.validate());
    CHECK(f2.shard_rows(48) == f2.total_n / 48);
    CHECK(f1.total_rows(16) == 16 * f1.n);
    CHECK_NOTHROW(ExperimentConfig::defaults(ExperimentKind::fig3).validate());
    CHECK_NOTHROW(ExperimentConfig::defaults(ExperimentKind::glm).validate());
}

TEST_CASE("config parsing") {
    const io::KeyValues kv = io::parse_key_values(
        "experiment = fig2\nN = 960\nm = 2, 4,8\ncov = ar1\nrho = 0.3\n"
        "estimators = centralized_lasso,thresholded\nthreshold = soft\ntheta = jm\n"
        "seeds = 4\ntol = 1e-9\n");
    const ExperimentConfig c = config_from_key_values(kv);
    CHECK(c.experiment == ExperimentKind::fig2);
    CHECK(c.total_n == 960);
    CHECK(c.m_grid == std::vector<std::size_t>{2, 4, 8});
    CHECK(c.cov == CovarianceSpec::Kind::ar1);
    CHECK(c.rho == 0.3);
    CHECK(c.estimators == std::vector<Estimator>{Estimator::centralized_lasso, Estimator::thresholded});
    CHECK(c.threshold == ThresholdRule::Kind::soft);
    CHECK(c.theta == PrecisionMethod::jm_program);
    CHECK(c.seeds == 4);
    CHECK(c.solver.tol == 1e-9);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(config_from_key_values(io::parse_key_values("bogus = 1\n")), InvalidInput);
    CHECK_THROWS_AS(config_from_key_values(io::parse_key_values("p = -3\n")), InvalidInput);
    CHECK_THROWS_AS(config_from_key_values(io::parse_key_values("rho = x\n")), InvalidInput);
    CHECK_THROWS_AS(config_from_key_values(io::parse_key_values("cov = toeplitz\n")), InvalidInput);
    CHECK_THROWS_AS(config_from_key_values(io::parse_key_values("experiment = fig9\n")), InvalidInput);
    // N not divisible by an m in the grid.
    CHECK_THROWS_AS(
        config_from_key_values(io::parse_key_values("experiment = fig2\nN = 1000\nm = 3\n")),
        InvalidInput);
    CHECK_THROWS_AS(config_from_key_values(io::parse_key_values("experiment = glm\nm = 1,400\n")), InvalidInput);
    CHECK_THROWS_AS(config_from_key_values(io::parse_key_values("cov = ar1\nrho = 1\n")),
                    InvalidInput);
}

TEST_CASE("row count and schema") {
    const ExperimentConfig c = tiny(ExperimentKind::fig1);
    const ExperimentResult r = run_experiment(c);
    CHECK(r.rows.size() == c.m_grid.size() * c.seeds * c.estimators.size());
    CHECK(r.checks.ok());
    for (const auto& row : r.rows) {
        CHECK(row.experiment == "fig1");
        CHECK(row.total_n == row.m * row.n);
        CHECK(row.l1 >= row.l2);
        CHECK(row.l2 >= row.linf);
        if (row.estimator == "averaged_debiased") {
            CHECK(row.floats_up == row.m * row.p);
            CHECK(row.floats_down == 0);
        }
        if (row.estimator == "centralized_lasso") CHECK(row.floats_up == 0);
    }
    std::ostringstream out;
    write_experiment_csv(out, r.rows);
    CHECK(out.str().rfind(std::string(kExperimentCsvHeader) + "\n", 0) == 0);
    CHECK(mean_metric(r.rows, 2, "naive_average", Metric::linf) > 0.0);
    CHECK_THROWS_AS(mean_metric(r.rows, 3, "naive_average", Metric::linf), InvalidInput);
}

TEST_CASE("fig2 keeps N fixed") {
    const ExperimentConfig c = tiny(ExperimentKind::fig2);
    const ExperimentResult r = run_experiment(c);
    for (const auto& row : r.rows) {
        CHECK(row.total_n == 240);
        CHECK(row.n == 240 / row.m);
    }
}

TEST_CASE("output is reproducible apart from timing") {
    ExperimentConfig c = tiny(ExperimentKind::fig3);
    c.threads = 1;
    const std::string a = strip_timing(run_experiment(c).rows);
    c.threads = 3;
    const std::string b = strip_timing(run_experiment(c).rows);
    CHECK(a == b);
}

TEST_CASE("glm experiment runs") {
    ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::glm);
    c.p = 20;
    c.n = 200;
    c.seeds = 2;
    const ExperimentResult r = run_experiment(c);
    CHECK(r.rows.size() == 2 * c.estimators.size());
    for (const auto& row : r.rows) {
        if (row.estimator == "distributed_debias") {
            CHECK(row.floats_up == 2 * 4 * 20 + 20);
            CHECK(row.floats_down == 2 * 4 * 20);
        }
    }
}

TEST_CASE("csv is written before an error is rethrown") {
    ExperimentConfig c = tiny(ExperimentKind::fig1);
    c.solver.max_sweeps = 1;
    c.solver.tol = 1e-14;
    c.output = fs::temp_directory_path() / "distlasso_partial.csv";
    fs::remove(c.output);
    CHECK_THROWS_AS(run_experiment(c), NonConvergence);
    REQUIRE(fs::exists(c.output));
    std::ifstream in(c.output);
    std::string header;
    std::getline(in, header);
    CHECK(header == kExperimentCsvHeader);
}
