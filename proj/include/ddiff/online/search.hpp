#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/graph/similarity.hpp>
#include <ddiff/offline/sparsified_inverse.hpp>
#include <ddiff/online/initial_state.hpp>
#include <ddiff/online/ranking.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

/// scores[row_ids(c)] += w * column(c) for every (c, w) in y.
///
/// Touches at most |y| * L entries. Returns the number of columns read.
template <std::floating_point Real>
std::size_t accumulate_columns(const BasicSparsifiedInverse<Real>& idx, const InitialState& y,
                               std::span<double> scores) {
    if (scores.size() != idx.n) throw InvalidArgument("score buffer does not match index size");
    for (std::size_t j = 0; j < y.ids.size(); ++j) {
        const Index col = y.ids[j];
        if (col >= idx.n)
            throw InvalidArgument("column id " + std::to_string(col) + " out of range [0, " + std::to_string(idx.n) + ")");
        const double w = y.weights[j];
        const Index* rows = idx.ids.data() + std::size_t{col} * idx.L;
        const Real* vals = idx.values.data() + std::size_t{col} * idx.L;
        for (std::size_t r = 0; r < idx.L; ++r) scores[rows[r]] += w * double(vals[r]);
    }
    return y.ids.size();
}

/// Linear combination of precomputed columns, ranked.
template <std::floating_point Real>
RankedResult diffuse_query(const BasicSparsifiedInverse<Real>& idx, const InitialState& y) {
    std::vector<double> scores(idx.n, 0.0);
    accumulate_columns(idx, y, scores);
    RankedResult r = rank_scores(std::move(scores));
    r.fallback = y.fallback;
    return r;
}

enum class Aggregation { sum, max };

/// Feature-level scores to image-level scores.
inline std::vector<double> aggregate_regional(std::span<const double> scores, std::span<const Index> image_of,
                                              std::size_t n_images, Aggregation rule = Aggregation::sum) {
    if (image_of.size() != scores.size())
        throw InvalidArgument("image map covers " + std::to_string(image_of.size()) + " features, scores have " +
                              std::to_string(scores.size()));
    std::vector<double> out(n_images, rule == Aggregation::sum ? 0.0 : -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const Index img = image_of[i];
        if (img >= n_images) throw InvalidArgument("image id " + std::to_string(img) + " out of range");
        if (rule == Aggregation::sum)
            out[img] += scores[i];
        else
            out[img] = std::max(out[img], scores[i]);
    }
    return out;
}

namespace detail {

inline std::vector<double> min_max_normalized(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    if (v.empty()) return out;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double range = *hi - *lo;
    for (double& x : out) x = range > 0.0 ? (x - *lo) / range : 0.0;
    return out;
}

}  // namespace detail

/// w * regional + (1 - w) * global after min-max normalizing each score vector.
inline RankedResult late_fusion(const RankedResult& global, const RankedResult& regional, double w = 0.75) {
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("fusion weight must lie in [0, 1]");
    if (global.scores.size() != regional.scores.size())
        throw InvalidArgument("late fusion: global has " + std::to_string(global.scores.size()) +
                              " images, regional has " + std::to_string(regional.scores.size()));
    const auto g = detail::min_max_normalized(global.scores);
    const auto r = detail::min_max_normalized(regional.scores);
    std::vector<double> fused(g.size());
    for (std::size_t i = 0; i < fused.size(); ++i) fused[i] = w * r[i] + (1.0 - w) * g[i];
    RankedResult out = rank_scores(std::move(fused));
    out.fallback = global.fallback || regional.fallback;
    return out;
}

struct SearchParams {
    std::size_t h = 10;
    SimilarityConfig sim{};
    Aggregation aggregation = Aggregation::sum;
};

/// Online search: query kNN, column combination, optional image aggregation.
///
/// Read-only after construction; concurrent calls are safe as long as the
/// searcher is. Every call allocates its own accumulator.
template <std::floating_point Real>
class DiffusionSearch {
public:
    DiffusionSearch(const BasicSparsifiedInverse<Real>& idx, const FeatureSet& db, const NeighborSearcher& searcher,
                    SearchParams params = {})
        : idx_(&idx), db_(&db), searcher_(&searcher), params_(params) {
        params_.sim.validate();
        if (idx.n != db.n())
            throw InvalidArgument("index has " + std::to_string(idx.n) + " columns, database has " +
                                  std::to_string(db.n()) + " features");
        if (params_.h == 0 || params_.h > db.n()) throw InvalidArgument("h must lie in [1, n]");
    }

    /// Feature-level scores summed over all query features.
    std::vector<double> feature_scores(const FeatureSet& query, bool* fallback = nullptr) const {
        std::vector<double> scores(idx_->n, 0.0);
        bool any_fallback = false;
        for (const InitialState& y : build_initial_state(query, *db_, *searcher_, params_.h, params_.sim)) {
            accumulate_columns(*idx_, y, scores);
            any_fallback = any_fallback || y.fallback;
        }
        if (fallback) *fallback = any_fallback;
        return scores;
    }

    /// Image-level scores (feature-level when the database has no image map).
    std::vector<double> scores(const FeatureSet& query, bool* fallback = nullptr) const {
        std::vector<double> s = feature_scores(query, fallback);
        if (!db_->has_image_map()) return s;
        return aggregate_regional(s, db_->image_of(), db_->n_images(), params_.aggregation);
    }

    RankedResult search(const FeatureSet& query) const {
        bool fallback = false;
        RankedResult r = rank_scores(scores(query, &fallback));
        r.fallback = fallback;
        return r;
    }

    std::vector<std::pair<Index, double>> search_top(const FeatureSet& query, std::size_t topk) const {
        return top_k(scores(query), topk);
    }

    const SearchParams& params() const { return params_; }

private:
    const BasicSparsifiedInverse<Real>* idx_;
    const FeatureSet* db_;
    const NeighborSearcher* searcher_;
    SearchParams params_;
};

template <std::floating_point Real>
RankedResult search(const BasicSparsifiedInverse<Real>& idx, const FeatureSet& db, const FeatureSet& query,
                    const SearchParams& params = {}) {
    const BruteForceSearcher searcher(db);
    return DiffusionSearch<Real>(idx, db, searcher, params).search(query);
}

}  // namespace ddiff
