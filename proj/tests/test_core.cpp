#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "distlasso/core.hpp"
#include "distlasso/error.hpp"
#include "test_util.hpp"

using namespace distlasso;

namespace {

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

}  // namespace

TEST_CASE("empirical covariance of small designs") {
    const Matrix s = empirical_covariance(Matrix::identity(2));
    CHECK(s(0, 0) == 0.5);
    CHECK(s(1, 1) == 0.5);
    CHECK(s(0, 1) == 0.0);

    const Matrix one = empirical_covariance(Matrix(3, 1, 1.0));
    CHECK(one(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("empirical covariance matches a double loop") {
    const Matrix x = testutil::random_matrix(20, 5, 3);
    const Matrix s = empirical_covariance(x);
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 5; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < 20; ++i) acc += x(i, j) * x(i, k);
            CHECK(std::fabs(s(j, k) - acc / 20.0) <= 1e-12);
        }
}

TEST_CASE("empirical covariance is exactly symmetric and PSD") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const std::size_t n = 5 + seed * 3, p = 12;
        const Matrix s = empirical_covariance(testutil::random_matrix(n, p, seed));
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < p; ++k) REQUIRE(s(j, k) == s(k, j));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(testutil::to_eigen(s));
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("empirical covariance rejects non-finite entries") {
    Matrix x(3, 2, 1.0);
    x(1, 1) = std::nan("");
    CHECK_THROWS_AS(empirical_covariance(x), InvalidInput);
}

TEST_CASE("generalized coherence") {
    CHECK(generalized_coherence(Matrix::identity(4), Matrix::identity(4)) == 0.0);
    const Matrix s(2, 2, std::vector<double>{1.0, 0.5, 0.5, 1.0});
    CHECK(generalized_coherence(s, Matrix::identity(2)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(generalized_coherence(s, Matrix::identity(3)), InvalidInput);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::size_t p = 10 * seed;
        const Matrix sh = empirical_covariance(testutil::random_matrix(4 * p, p, seed));
        const Matrix inv = testutil::from_eigen(testutil::to_eigen(sh).inverse());
        CHECK(generalized_coherence(sh, inv) <= 1e-10);
    }
}

TEST_CASE("error norms") {
    const ErrorReport z = error_norms(Vector{1, 2, 3}, Vector{1, 2, 3});
    CHECK(z.l1 == 0.0);
    CHECK(z.l2 == 0.0);
    CHECK(z.linf == 0.0);

    const ErrorReport r = error_norms(Vector{3, 4}, Vector{0, 0});
    CHECK(r.l1 == 7.0);
    CHECK(r.l2 == 5.0);
    CHECK(r.linf == 4.0);

    const Vector a = testutil::random_vector(10, 1), b = testutil::random_vector(10, 2);
    const ErrorReport e = error_norms(a, b);
    double l1 = 0, sq = 0, li = 0;
    for (std::size_t j = 0; j < 10; ++j) {
        const double d = std::fabs(a[j] - b[j]);
        l1 += d;
        sq += d * d;
        li = std::max(li, d);
    }
    CHECK(std::fabs(e.l1 - l1) <= 1e-12);
    CHECK(std::fabs(e.l2 - std::sqrt(sq)) <= 1e-12);
    CHECK(std::fabs(e.linf - li) <= 1e-12);
    CHECK(e.linf <= e.l2);
    CHECK(e.l2 <= e.l1);

    CHECK_THROWS_AS(error_norms(Vector{1}, Vector{1, 2}), InvalidInput);
}

TEST_CASE("error report support recovery") {
    const GroundTruth t = GroundTruth::from_beta({0, 1, 0, -1}, 1.0);
    CHECK(error_report(Vector{0, 0.9, 0, -1.2}, t).support_recovered);
    CHECK_FALSE(error_report(Vector{0.1, 0.9, 0, -1.2}, t).support_recovered);
}

TEST_CASE("(inf,l) norm examples") {
    const Vector x{3, 4, 0, 0};
    CHECK(norm_inf_l(x, 1) == 4.0);
    CHECK(norm_inf_l(x, 4) == 2.5);
    CHECK(norm_inf_l(x, 2) == doctest::Approx(brute_inf_l(x, 2)).epsilon(1e-14));
    CHECK_THROWS_AS(norm_inf_l(x, 0), InvalidInput);
    CHECK_THROWS_AS(norm_inf_l(x, 5), InvalidInput);
}

TEST_CASE("(inf,l) norm limits and monotonicity against enumeration") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const std::size_t p = 1 + seed % 16;
        const Vector x = testutil::random_vector(p, seed);
        const ErrorReport r = error_norms(x, Vector(p, 0.0));
        CHECK(norm_inf_l(x, 1) == doctest::Approx(r.linf).epsilon(1e-14));
        CHECK(norm_inf_l(x, p) == doctest::Approx(r.l2 / std::sqrt(double(p))).epsilon(1e-13));
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t l = 1; l <= p; ++l) {
            const double v = norm_inf_l(x, l);
            CHECK(v <= prev);
            prev = v;
            if (p <= 12) CHECK(std::fabs(v - brute_inf_l(x, l)) <= 1e-12);
        }
    }
}

TEST_CASE("cholesky and spd inverse") {
    const Matrix a = CovarianceSpec::ar1(6, 0.5).matrix();
    const Matrix l = cholesky(a);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 6; ++k) s += l(i, k) * l(j, k);
            CHECK(std::fabs(s - a(i, j)) <= 1e-14);
        }
    const Eigen::MatrixXd inv = testutil::to_eigen(a).inverse();
    const Matrix mine = spd_inverse(a);
    CHECK((testutil::to_eigen(mine) - inv).cwiseAbs().maxCoeff() <= 1e-12);

    Matrix bad(2, 2, std::vector<double>{1, 2, 2, 1});
    CHECK_THROWS_AS(cholesky(bad), InvalidCovariance);
}

TEST_CASE("covariance specs") {
    const Matrix s = CovarianceSpec::ar1(4, 0.5).matrix();
    CHECK(s(0, 3) == 0.125);
    CHECK(s(3, 0) == 0.125);
    CHECK(CovarianceSpec::identity(3).matrix() == Matrix::identity(3));
    CHECK_THROWS_AS(CovarianceSpec::ar1(3, 1.0).matrix(), InvalidCovariance);
}

TEST_CASE("dataset validation") {
    Dataset d;
    d.x = Matrix(3, 2, 1.0);
    d.y = {1, 2};
    CHECK_THROWS_AS(d.validate(), InvalidInput);
    d.y = {1, 2, std::nan("")};
    CHECK_THROWS_AS(d.validate(), InvalidInput);
    d.y = {1, 2, 3};
    CHECK_NOTHROW(d.validate());
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), InvalidInput);
}
