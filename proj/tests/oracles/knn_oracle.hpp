#pragma once

// Naive per-pair Euclidean scan: direct differences, full sort.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace cbidr::oracle {

inline double euclidean(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = double(a[i]) - double(b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

// Returns (distance, id) pairs for every item, sorted by distance then id.
inline std::vector<std::pair<double, std::uint64_t>> scan(const std::vector<std::uint64_t>& ids,
                                                          const std::vector<std::vector<float>>& vectors,
                                                          const std::vector<float>& query) {
    std::vector<std::pair<double, std::uint64_t>> all;
    for (std::size_t i = 0; i < ids.size(); ++i) all.emplace_back(euclidean(vectors[i], query), ids[i]);
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace cbidr::oracle
