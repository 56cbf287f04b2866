#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace distlasso {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    Matrix transpose() const;
    Matrix rows_slice(std::size_t begin, std::size_t end) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Design matrix with n observations (rows) and p predictors, plus the
/// length-n response.
struct Dataset {
    Matrix x;
    Vector y;

    std::size_t n() const noexcept { return x.rows(); }
    std::size_t p() const noexcept { return x.cols(); }

    /// Throws InvalidInput unless n, p >= 1, lengths agree and all
    /// entries are finite.
    void validate() const;
};

struct GroundTruth {
    Vector beta_star;
    std::vector<std::size_t> support;  // ascending
    double sigma_y = 0.0;

    std::size_t sparsity() const noexcept { return support.size(); }

    /// Builds the support from the nonzeros of beta.
    static GroundTruth from_beta(Vector beta, double sigma_y);
};

struct CovarianceSpec {
    enum class Kind { identity, ar1 };
    Kind kind = Kind::identity;
    double rho = 0.0;
    std::size_t p = 0;

    static CovarianceSpec identity(std::size_t p) { return {Kind::identity, 0.0, p}; }
    static CovarianceSpec ar1(std::size_t p, double rho) { return {Kind::ar1, rho, p}; }

    /// Sigma_ij = rho^|i-j| for ar1, delta_ij for identity.
    Matrix matrix() const;
    std::string name() const;
};

struct ErrorReport {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    bool support_recovered = false;
};

// ---------------------------------------------------------------------------
// Dense helpers built on the kernel layer.

/// y = A x
Vector matvec(const Matrix& a, std::span<const double> x);
/// y = A^T x
Vector matvec_transpose(const Matrix& a, std::span<const double> x);

/// Cholesky factor L (lower) with A = L L^T. Throws InvalidCovariance if
/// A is not numerically positive definite.
Matrix cholesky(const Matrix& a);
/// Solves A x = b given the Cholesky factor of A.
Vector cholesky_solve(const Matrix& l, std::span<const double> b);
/// Inverse of a symmetric positive definite matrix.
Matrix spd_inverse(const Matrix& a);

double soft_threshold(double z, double t) noexcept;

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator); 0 for length < 2.
double stddev(std::span<const double> v);

// ---------------------------------------------------------------------------
// Operations.

/// Sigma_hat = (1/n) X^T X. Each (j,k) pair is computed once and mirrored,
/// so the result is exactly symmetric.
Matrix empirical_covariance(const Matrix& x);

/// max over j of || Sigma_hat Theta_j^T - e_j ||_inf.
double generalized_coherence(const Matrix& sigma_hat, const Matrix& theta);

ErrorReport error_norms(std::span<const double> a, std::span<const double> b);

/// Like error_norms, and additionally reports whether the support of
/// estimate equals truth.support exactly.
ErrorReport error_report(std::span<const double> estimate, const GroundTruth& truth);

/// (inf,l) norm: max over k in [l, p] of (l2 norm of the k largest
/// magnitudes) / sqrt(k).
double norm_inf_l(std::span<const double> x, std::size_t l);

}  // namespace distlasso
