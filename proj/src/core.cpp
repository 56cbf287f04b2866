#include "distlasso/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "distlasso/error.hpp"
#include "distlasso/kernels.hpp"

namespace distlasso {

std::string Error::describe() const {
    std::string s = what();
    if (shard_) s += " [shard " + std::to_string(*shard_) + "]";
    if (row_) s += " [row " + std::to_string(*row_) + "]";
    return s;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw InvalidInput("matrix data length does not match its shape");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::rows_slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows_) throw InvalidInput("row slice out of range");
    return Matrix(end - begin, cols_,
                  std::vector<double>(data_.begin() + begin * cols_,
                                      data_.begin() + end * cols_));
}

void Dataset::validate() const {
    if (x.rows() < 1 || x.cols() < 1) throw InvalidInput("dataset needs n >= 1 and p >= 1");
    if (y.size() != x.rows())
        throw InvalidInput("response length " + std::to_string(y.size()) +
                           " does not match design rows " + std::to_string(x.rows()));
    for (double v : x.data())
        if (!std::isfinite(v)) throw InvalidInput("design contains a non-finite entry");
    for (double v : y)
        if (!std::isfinite(v)) throw InvalidInput("response contains a non-finite entry");
}

GroundTruth GroundTruth::from_beta(Vector beta, double sigma_y) {
    GroundTruth t;
    for (std::size_t j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) t.support.push_back(j);
    t.beta_star = std::move(beta);
    t.sigma_y = sigma_y;
    return t;
}

Matrix CovarianceSpec::matrix() const {
    if (p == 0) throw InvalidCovariance("covariance dimension must be positive");
    Matrix s(p, p);
    if (kind == Kind::identity) return Matrix::identity(p);
    if (!(std::fabs(rho) < 1.0)) throw InvalidCovariance("ar1 requires |rho| < 1");
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            s(i, j) = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
    return s;
}

std::string CovarianceSpec::name() const {
    return kind == Kind::identity ? "identity" : "ar1";
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) throw InvalidInput("matvec dimension mismatch");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dot(a.row(i), x);
    return y;
}

Vector matvec_transpose(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.rows()) throw InvalidInput("matvec_transpose dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        if (x[i] != 0.0) kernels::axpy(x[i], a.row(i), y);
    return y;
}

// Plain loops: synthetic designs are built from this factor and must be
// identical whichever kernel backend is active.
Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw InvalidInput("cholesky needs a square matrix");
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d))
            throw InvalidCovariance("matrix is not positive definite (pivot " +
                                    std::to_string(j) + ")");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    if (b.size() != n) throw InvalidInput("cholesky_solve dimension mismatch");
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
        z[i] = s / l(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = z[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

Matrix spd_inverse(const Matrix& a) {
    const Matrix l = cholesky(a);
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vector col = cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = s;
            inv(j, i) = s;
        }
    return inv;
}

double soft_threshold(double z, double t) noexcept {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Matrix empirical_covariance(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n < 1) throw InvalidInput("empirical_covariance needs n >= 1");
    for (double v : x.data())
        if (!std::isfinite(v)) throw InvalidInput("design contains a non-finite entry");

    // Columns are contiguous in the transpose, so every entry is one dot.
    const Matrix xt = x.transpose();
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix s(p, p);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j; k < p; ++k) {
            const double v = kernels::dot(xt.row(j), xt.row(k)) * inv_n;
            s(j, k) = v;
            s(k, j) = v;
        }
    return s;
}

double generalized_coherence(const Matrix& sigma_hat, const Matrix& theta) {
    const std::size_t p = sigma_hat.rows();
    if (sigma_hat.cols() != p || theta.rows() != p || theta.cols() != p)
        throw InvalidInput("generalized_coherence needs two p x p matrices");
    double gc = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        Vector r = matvec(sigma_hat, theta.row(j));
        r[j] -= 1.0;
        gc = std::max(gc, kernels::max_abs(r));
    }
    return gc;
}

ErrorReport error_norms(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidInput("error_norms length mismatch");
    ErrorReport r;
    double sq = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = std::fabs(a[j] - b[j]);
        r.l1 += d;
        sq += d * d;
        r.linf = std::max(r.linf, d);
    }
    r.l2 = std::sqrt(sq);
    return r;
}

ErrorReport error_report(std::span<const double> estimate, const GroundTruth& truth) {
    ErrorReport r = error_norms(estimate, truth.beta_star);
    std::vector<std::size_t> supp;
    for (std::size_t j = 0; j < estimate.size(); ++j)
        if (estimate[j] != 0.0) supp.push_back(j);
    r.support_recovered = supp == truth.support;
    return r;
}

double norm_inf_l(std::span<const double> x, std::size_t l) {
    const std::size_t p = x.size();
    if (l < 1 || l > p) throw InvalidInput("norm_inf_l needs 1 <= l <= len(x)");
    Vector mags(p);
    for (std::size_t j = 0; j < p; ++j) mags[j] = std::fabs(x[j]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double best = 0.0;
    double sq = 0.0;
    for (std::size_t k = 1; k <= p; ++k) {
        sq += mags[k - 1] * mags[k - 1];
        if (k >= l) best = std::max(best, std::sqrt(sq / static_cast<double>(k)));
    }
    return best;
}

}  // namespace distlasso
