#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/graph/similarity.hpp>

#include <string>
#include <vector>

namespace ddiff {

/// Sparse right-hand side y: the query's database neighbors and their weights.
///
/// Weights are s(q, x_id) with the graph's similarity transform and no degree
/// normalization (the query is not a graph node). Entries whose weight clamps
/// to zero are dropped. If every weight clamps, the h neighbors get weight 1
/// and `fallback` is set.
struct InitialState {
    std::vector<Index> ids;
    std::vector<double> weights;
    bool fallback = false;
};

inline InitialState initial_state_from_row(std::span<const Index> ids, std::span<const double> inner,
                                           const SimilarityConfig& sim) {
    InitialState y;
    for (std::size_t j = 0; j < ids.size(); ++j) {
        const double w = sim(inner[j]);
        if (w > 0.0) {
            y.ids.push_back(ids[j]);
            y.weights.push_back(w);
        }
    }
    if (y.ids.empty()) {
        y.ids.assign(ids.begin(), ids.end());
        y.weights.assign(ids.size(), 1.0);
        y.fallback = true;
    }
    return y;
}

/// Inner products of q with the listed database rows, accumulated in double.
inline std::vector<double> exact_inner(std::span<const float> q, const FeatureSet& db, std::span<const Index> ids) {
    std::vector<double> out(ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j) out[j] = dot(q, db.row(ids[j]));
    return out;
}

/// One initial state per query feature.
///
/// `searcher` finds the h neighbors in `db`; weights are recomputed from the
/// features in double so they do not inherit the searcher's float rounding.
inline std::vector<InitialState> build_initial_state(const FeatureSet& query, const FeatureSet& db,
                                                     const NeighborSearcher& searcher, std::size_t h,
                                                     const SimilarityConfig& sim) {
    sim.validate();
    if (h == 0) throw InvalidArgument("h must be positive");
    if (h > db.n()) throw InvalidArgument("h=" + std::to_string(h) + " exceeds database size " + std::to_string(db.n()));
    const KnnResult nn = searcher.search(query, h);
    std::vector<InitialState> out;
    out.reserve(query.n());
    for (std::size_t q = 0; q < query.n(); ++q) {
        const auto ids = nn.row_ids(q);
        out.push_back(initial_state_from_row(ids, exact_inner(query.row(q), db, ids), sim));
    }
    return out;
}

inline std::vector<InitialState> build_initial_state(const FeatureSet& query, const FeatureSet& db, std::size_t h,
                                                     const SimilarityConfig& sim) {
    return build_initial_state(query, db, BruteForceSearcher(db), h, sim);
}

}  // namespace ddiff
