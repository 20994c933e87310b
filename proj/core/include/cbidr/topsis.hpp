#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cbidr {

/// Cost criteria prefer small values, benefit criteria large ones.
enum class Criterion { cost, benefit };

/// Dense row-major m x n matrix: rows are alternatives, columns criteria.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    /// From nested rows; throws length_mismatch on ragged input.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Matrix of alternatives x criteria with at least one row and column and
/// only finite entries. Validated on construction (throws cbidr::Error).
class DecisionMatrix {
public:
    explicit DecisionMatrix(Matrix values);
    /// Builds an m x n matrix from n equally long columns.
    static DecisionMatrix from_columns(std::span<const std::vector<double>> columns);

    std::size_t alternatives() const noexcept { return values_.rows(); }
    std::size_t criteria() const noexcept { return values_.cols(); }
    const Matrix& values() const noexcept { return values_; }

private:
    Matrix values_;
};

struct TopsisConfig {
    std::vector<double> weights;
    std::vector<Criterion> directions;

    /// Weights non-negative, finite, summing to 1 within 1e-9; directions of
    /// the same length. Throws weight_sum / length_mismatch / invalid_argument.
    void validate() const;
};

inline constexpr double weight_sum_tolerance = 1e-9;

struct IdealSolutions {
    std::vector<double> positive;
    std::vector<double> negative;
};

struct Separations {
    std::vector<double> to_positive;
    std::vector<double> to_negative;
};

struct TopsisResult {
    std::vector<double> closeness;
    /// Alternative indices by descending closeness, ties by ascending index.
    std::vector<std::size_t> ranking;
    Separations separations;
};

/// r_ij = x_ij / sqrt(sum_i x_ij^2). All-zero columns stay zero.
Matrix normalize(const DecisionMatrix& decision);

/// p_ij = w_j * r_ij.
Matrix apply_weights(const Matrix& normalized, const TopsisConfig& config);

/// Best and worst value per column: max/min for benefit, min/max for cost.
IdealSolutions ideal_solutions(const Matrix& weighted, std::span<const Criterion> directions);

/// Euclidean distance of every row to the positive and negative ideals.
Separations separations(const Matrix& weighted, const IdealSolutions& ideals);

/// xi_i = d-_i / (d+_i + d-_i); 0.5 when both separations are zero.
std::vector<double> closeness(const Separations& separations);

/// Full pipeline: normalize, weight, ideals, separations, closeness, ranking.
TopsisResult rank(const DecisionMatrix& decision, const TopsisConfig& config);

}  // namespace cbidr
