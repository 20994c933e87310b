#include "cbidr/topsis.hpp"

#include "cbidr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cbidr {

namespace {

void require_finite(const Matrix& m, const char* what) {
    for (double x : m.data()) {
        if (!std::isfinite(x)) throw Error(ErrorCode::non_finite, std::string(what) + " contains a non-finite entry");
    }
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw Error(ErrorCode::length_mismatch, "ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

DecisionMatrix::DecisionMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() == 0 || values_.cols() == 0) {
        throw Error(ErrorCode::empty_input, "decision matrix needs at least one alternative and one criterion");
    }
    require_finite(values_, "decision matrix");
}

DecisionMatrix DecisionMatrix::from_columns(std::span<const std::vector<double>> columns) {
    if (columns.empty()) throw Error(ErrorCode::empty_input, "decision matrix needs at least one criterion");
    const std::size_t rows = columns.front().size();
    Matrix m(rows, columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].size() != rows) throw Error(ErrorCode::length_mismatch, "criterion columns differ in length");
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = columns[j][i];
    }
    return DecisionMatrix(std::move(m));
}

void TopsisConfig::validate() const {
    if (weights.empty()) throw Error(ErrorCode::empty_input, "no criterion weights");
    if (weights.size() != directions.size()) {
        throw Error(ErrorCode::length_mismatch, std::to_string(weights.size()) + " weights but " +
                                                    std::to_string(directions.size()) + " criterion directions");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
            throw Error(ErrorCode::invalid_argument, "weight " + std::to_string(w) + " outside [0, 1]");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > weight_sum_tolerance) {
        throw Error(ErrorCode::weight_sum, "weights sum to " + std::to_string(sum) + ", expected 1");
    }
}

Matrix normalize(const DecisionMatrix& decision) {
    const Matrix& x = decision.values();
    Matrix r(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) sum_sq += x(i, j) * x(i, j);
        const double norm = std::sqrt(sum_sq);
        if (norm == 0.0) continue;
        for (std::size_t i = 0; i < x.rows(); ++i) r(i, j) = x(i, j) / norm;
    }
    return r;
}

Matrix apply_weights(const Matrix& normalized, const TopsisConfig& config) {
    config.validate();
    if (config.weights.size() != normalized.cols()) {
        throw Error(ErrorCode::length_mismatch, std::to_string(config.weights.size()) + " weights for " +
                                                    std::to_string(normalized.cols()) + " criteria");
    }
    require_finite(normalized, "normalized matrix");
    Matrix p(normalized.rows(), normalized.cols());
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) p(i, j) = config.weights[j] * normalized(i, j);
    }
    return p;
}

IdealSolutions ideal_solutions(const Matrix& weighted, std::span<const Criterion> directions) {
    if (directions.size() != weighted.cols()) {
        throw Error(ErrorCode::length_mismatch, "criterion directions do not match the matrix width");
    }
    if (weighted.rows() == 0) throw Error(ErrorCode::empty_input, "weighted matrix has no alternatives");
    require_finite(weighted, "weighted matrix");

    IdealSolutions ideals{std::vector<double>(weighted.cols()), std::vector<double>(weighted.cols())};
    for (std::size_t j = 0; j < weighted.cols(); ++j) {
        double lo = weighted(0, j);
        double hi = weighted(0, j);
        for (std::size_t i = 1; i < weighted.rows(); ++i) {
            lo = std::min(lo, weighted(i, j));
            hi = std::max(hi, weighted(i, j));
        }
        const bool benefit = directions[j] == Criterion::benefit;
        ideals.positive[j] = benefit ? hi : lo;
        ideals.negative[j] = benefit ? lo : hi;
    }
    return ideals;
}

Separations separations(const Matrix& weighted, const IdealSolutions& ideals) {
    if (ideals.positive.size() != weighted.cols() || ideals.negative.size() != weighted.cols()) {
        throw Error(ErrorCode::length_mismatch, "ideal solutions do not match the matrix width");
    }
    Separations s{std::vector<double>(weighted.rows()), std::vector<double>(weighted.rows())};
    for (std::size_t i = 0; i < weighted.rows(); ++i) {
        double pos = 0.0;
        double neg = 0.0;
        for (std::size_t j = 0; j < weighted.cols(); ++j) {
            const double dp = ideals.positive[j] - weighted(i, j);
            const double dn = ideals.negative[j] - weighted(i, j);
            pos += dp * dp;
            neg += dn * dn;
        }
        s.to_positive[i] = std::sqrt(pos);
        s.to_negative[i] = std::sqrt(neg);
    }
    return s;
}

std::vector<double> closeness(const Separations& separations) {
    const auto& pos = separations.to_positive;
    const auto& neg = separations.to_negative;
    if (pos.size() != neg.size()) throw Error(ErrorCode::length_mismatch, "separation vectors differ in length");
    std::vector<double> xi(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (!(pos[i] >= 0.0) || !(neg[i] >= 0.0) || !std::isfinite(pos[i]) || !std::isfinite(neg[i])) {
            throw Error(ErrorCode::negative_separation,
                        "separations of alternative " + std::to_string(i) + " must be finite and non-negative");
        }
        const double total = pos[i] + neg[i];
        xi[i] = total == 0.0 ? 0.5 : neg[i] / total;
    }
    return xi;
}

TopsisResult rank(const DecisionMatrix& decision, const TopsisConfig& config) {
    config.validate();
    if (config.weights.size() != decision.criteria()) {
        throw Error(ErrorCode::length_mismatch, std::to_string(config.weights.size()) + " weights for " +
                                                    std::to_string(decision.criteria()) + " criteria");
    }
    const Matrix weighted = apply_weights(normalize(decision), config);
    const IdealSolutions ideals = ideal_solutions(weighted, config.directions);

    TopsisResult result;
    result.separations = separations(weighted, ideals);
    result.closeness = closeness(result.separations);
    result.ranking.resize(decision.alternatives());
    std::iota(result.ranking.begin(), result.ranking.end(), std::size_t{0});
    const auto& xi = result.closeness;
    std::stable_sort(result.ranking.begin(), result.ranking.end(),
                     [&xi](std::size_t a, std::size_t b) { return xi[a] > xi[b]; });
    return result;
}

}  // namespace cbidr
