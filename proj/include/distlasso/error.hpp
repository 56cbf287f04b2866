#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace distlasso {

enum class ErrorKind {
    invalid_input,
    non_convergence,
    infeasible_row,
    degenerate_column,
    invalid_loss,
    invalid_covariance,
};

/// Base for every error raised by the library. Errors raised inside a
/// worker carry the shard they came from; row-level errors carry the
/// predictor index.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    std::optional<std::size_t> shard_id() const noexcept { return shard_; }
    std::optional<std::size_t> row() const noexcept { return row_; }

    void set_shard(std::size_t shard) { shard_ = shard; }
    void set_row(std::size_t row) { row_ = row; }

    std::string describe() const;

private:
    ErrorKind kind_;
    std::optional<std::size_t> shard_;
    std::optional<std::size_t> row_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what)
        : Error(ErrorKind::invalid_input, what) {}
};

class InvalidLoss : public Error {
public:
    explicit InvalidLoss(const std::string& what)
        : Error(ErrorKind::invalid_loss, what) {}
};

class InvalidCovariance : public Error {
public:
    explicit InvalidCovariance(const std::string& what)
        : Error(ErrorKind::invalid_covariance, what) {}
};

/// Coordinate descent hit its sweep cap. The last iterate and its KKT
/// violation are kept so callers can inspect how far off it was.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> last_iterate,
                   double violation)
        : Error(ErrorKind::non_convergence, what),
          last_iterate_(std::move(last_iterate)),
          violation_(violation) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double violation() const noexcept { return violation_; }

private:
    std::vector<double> last_iterate_;
    double violation_;
};

class InfeasibleRow : public Error {
public:
    InfeasibleRow(std::size_t j, const std::string& what)
        : Error(ErrorKind::infeasible_row, what) { set_row(j); }
};

class DegenerateColumn : public Error {
public:
    DegenerateColumn(std::size_t j, const std::string& what)
        : Error(ErrorKind::degenerate_column, what) { set_row(j); }
};

}  // namespace distlasso
