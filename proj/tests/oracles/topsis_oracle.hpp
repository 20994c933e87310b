#pragma once

// Literal, loop-by-loop TOPSIS used only as a test oracle. Shares no code
// with the library: nested vectors, explicit formulas, no helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cbidr::oracle {

struct TopsisOracleResult {
    std::vector<double> xi;
    std::vector<std::size_t> order;
};

// benefit[j] == true marks a benefit criterion; otherwise cost.
inline TopsisOracleResult topsis(const std::vector<std::vector<double>>& x, const std::vector<double>& w,
                                 const std::vector<bool>& benefit) {
    const std::size_t m = x.size();
    const std::size_t n = x[0].size();

    // Normalization.
    std::vector<std::vector<double>> r(m, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += x[i][j] * x[i][j];
        double denom = std::sqrt(s);
        for (std::size_t i = 0; i < m; ++i) r[i][j] = denom == 0.0 ? 0.0 : x[i][j] / denom;
    }

    // Weighting.
    std::vector<std::vector<double>> p(m, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) p[i][j] = w[j] * r[i][j];

    // Ideal and anti-ideal.
    std::vector<double> a_pos(n), a_neg(n);
    for (std::size_t j = 0; j < n; ++j) {
        double mx = p[0][j], mn = p[0][j];
        for (std::size_t i = 0; i < m; ++i) {
            if (p[i][j] > mx) mx = p[i][j];
            if (p[i][j] < mn) mn = p[i][j];
        }
        a_pos[j] = benefit[j] ? mx : mn;
        a_neg[j] = benefit[j] ? mn : mx;
    }

    // Separations and relative closeness.
    TopsisOracleResult out;
    out.xi.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double sp = 0.0, sn = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sp += (a_pos[j] - p[i][j]) * (a_pos[j] - p[i][j]);
            sn += (a_neg[j] - p[i][j]) * (a_neg[j] - p[i][j]);
        }
        double d_pos = std::sqrt(sp);
        double d_neg = std::sqrt(sn);
        out.xi[i] = (d_pos + d_neg) == 0.0 ? 0.5 : d_neg / (d_pos + d_neg);
    }

    // Selection-sort style ordering: highest xi first, lowest index on ties.
    std::vector<bool> taken(m, false);
    for (std::size_t step = 0; step < m; ++step) {
        std::size_t best = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (taken[i]) continue;
            if (best == m || out.xi[i] > out.xi[best]) best = i;
        }
        taken[best] = true;
        out.order.push_back(best);
    }
    return out;
}

}  // namespace cbidr::oracle
