#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>

#include <span>
#include <string>
#include <vector>

namespace ddiff {

/// Per-element top-L neighbor ids; row i begins with i.
struct TruncationIndex {
    std::size_t n = 0;
    std::size_t L = 0;
    std::vector<Index> ids;  // n * L, row-major

    std::span<const Index> row(std::size_t i) const { return {ids.data() + i * L, L}; }
};

/// Builds the truncation lists from a self-neighbor table with at least L columns.
inline TruncationIndex truncation_from_neighbors(const KnnResult& self_nn, std::size_t L) {
    if (L == 0) throw InvalidArgument("truncation size L must be positive");
    if (L > self_nn.k) throw InvalidArgument("neighbor table narrower than L");
    TruncationIndex t{self_nn.m, L, {}};
    if (L == self_nn.k) {
        t.ids = self_nn.ids;
    } else {
        t.ids.resize(t.n * L);
        for (std::size_t i = 0; i < t.n; ++i) {
            const auto row = self_nn.row_ids(i).first(L);
            std::copy(row.begin(), row.end(), t.ids.begin() + i * L);
        }
    }
    return t;
}

inline TruncationIndex truncation_from_neighbors(KnnResult&& self_nn, std::size_t L) {
    if (L == self_nn.k && L > 0) return TruncationIndex{self_nn.m, L, std::move(self_nn.ids)};
    return truncation_from_neighbors(static_cast<const KnnResult&>(self_nn), L);
}

/// Exact top-L lists of every database element, self first.
inline TruncationIndex truncation_lists(const FeatureSet& db, std::size_t L, std::size_t threads = 1) {
    if (L == 0) throw InvalidArgument("truncation size L must be positive");
    if (L > db.n()) throw InvalidArgument("L=" + std::to_string(L) + " exceeds database size " + std::to_string(db.n()));
    return truncation_from_neighbors(self_neighbors(db, L, threads), L);
}

}  // namespace ddiff
