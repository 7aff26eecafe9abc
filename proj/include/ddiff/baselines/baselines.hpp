#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/graph/affinity.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/graph/similarity.hpp>
#include <ddiff/graph/sparse_matrix.hpp>
#include <ddiff/offline/cg.hpp>
#include <ddiff/offline/slice.hpp>
#include <ddiff/online/initial_state.hpp>
#include <ddiff/online/ranking.hpp>
#include <ddiff/online/search.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

namespace detail {

inline void require_same_dim(const FeatureSet& db, const FeatureSet& query) {
    if (query.n() > 0 && query.d() != db.d())
        throw InvalidArgument("dimension mismatch: query d=" + std::to_string(query.d()) +
                              ", database d=" + std::to_string(db.d()));
}

/// Adds s(q, x_i) for every database feature into `scores`.
inline void add_similarity_scores(const FeatureSet& db, std::span<const float> q, const SimilarityConfig& sim,
                                  std::span<double> scores) {
    for (std::size_t i = 0; i < db.n(); ++i) scores[i] += sim(dot(q, db.row(i)));
}

inline RankedResult finish_ranking(const FeatureSet& db, std::vector<double> feature_scores) {
    if (!db.has_image_map()) return rank_scores(std::move(feature_scores));
    return rank_scores(aggregate_regional(feature_scores, db.image_of(), db.n_images()));
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace detail

/// Plain similarity ranking: scores = s(q, x_i), summed over query features.
inline RankedResult knn_rank(const FeatureSet& db, const FeatureSet& query, const SimilarityConfig& sim = {}) {
    sim.validate();
    detail::require_same_dim(db, query);
    std::vector<double> scores(db.n(), 0.0);
    for (std::size_t q = 0; q < query.n(); ++q) detail::add_similarity_scores(db, query.row(q), sim, scores);
    return detail::finish_ranking(db, std::move(scores));
}

/// Expanded query q' = normalize(q + sum of its k_exp nearest database features).
inline std::vector<float> expand_query(const FeatureSet& db, std::span<const float> q, const KnnResult& nn,
                                       std::size_t row) {
    std::vector<double> acc(q.begin(), q.end());
    for (Index id : nn.row_ids(row)) {
        const auto x = db.row(id);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += x[j];
    }
    double sq = 0.0;
    for (double v : acc) sq += v * v;
    std::vector<float> out(acc.size());
    const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    for (std::size_t j = 0; j < acc.size(); ++j) out[j] = static_cast<float>(acc[j] * inv);
    return out;
}

/// Average query expansion followed by a second similarity ranking.
inline RankedResult aqe(const FeatureSet& db, const FeatureSet& query, std::size_t k_exp,
                        const SimilarityConfig& sim = {}) {
    sim.validate();
    detail::require_same_dim(db, query);
    if (k_exp == 0) throw InvalidArgument("k_exp must be positive");
    if (k_exp > db.n()) throw InvalidArgument("k_exp=" + std::to_string(k_exp) + " exceeds database size");
    const KnnResult nn = knn_search(query, db, k_exp);
    std::vector<double> scores(db.n(), 0.0);
    for (std::size_t q = 0; q < query.n(); ++q) {
        const auto expanded = expand_query(db, query.row(q), nn, q);
        detail::add_similarity_scores(db, expanded, sim, scores);
    }
    return detail::finish_ranking(db, std::move(scores));
}

enum class TruncationMode { early, late };

struct OnlineParams {
    std::size_t L = 1000;
    std::size_t k = 50;
    std::size_t h = 10;
    double alpha = 0.99;
    SimilarityConfig sim{};
    CgConfig cg{};  // online budget, 20 iterations by default
};

struct OnlineTiming {
    double knn_ms = 0.0;
    double graph_ms = 0.0;
    double solve_ms = 0.0;
};

/// Query-time diffusion over the query's top-L database neighbors.
///
/// early: build the mutual kNN graph of the subset (k' = min(k, L - 1)),
///        normalize it on its own, solve (I - alpha S_sub) f = y.
/// late:  slice the full-graph L_alpha to the subset and solve.
/// Elements outside the subset are ranked after every member.
class OnlineDiffusion {
public:
    /// `full_laplacian` is required for late mode and must be built over `db`.
    OnlineDiffusion(const FeatureSet& db, OnlineParams params, const SparseMatrix* full_laplacian = nullptr)
        : db_(&db), params_(params), laplacian_(full_laplacian), searcher_(db) {
        params_.sim.validate();
        params_.cg.validate();
        if (params_.L == 0 || params_.L > db.n())
            throw InvalidArgument("L=" + std::to_string(params_.L) + " must lie in [1, " + std::to_string(db.n()) + "]");
        if (params_.k == 0) throw InvalidArgument("k must be positive");
        if (params_.h == 0) throw InvalidArgument("h must be positive");
        if (!(params_.alpha > 0.0 && params_.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
        if (laplacian_ && laplacian_->rows() != db.n())
            throw InvalidArgument("full laplacian does not match the database size");
    }

    struct Truncated {
        std::vector<Index> ids;      // NN_L(q), best first
        std::vector<double> scores;  // diffusion score of each member
        bool fallback = false;
    };

    /// Diffusion restricted to NN_L(q) for a single query vector.
    Truncated diffuse(std::span<const float> q, TruncationMode mode, OnlineTiming* timing = nullptr) const {
        if (q.size() != db_->d()) throw InvalidArgument("query dimension mismatch");
        if (mode == TruncationMode::late && !laplacian_)
            throw InvalidArgument("late truncation needs the full-graph laplacian");
        const std::size_t L = params_.L;
        auto t0 = std::chrono::steady_clock::now();
        const FeatureSet qs(1, q.size(), std::vector<float>(q.begin(), q.end()));
        const KnnResult nn = searcher_.search(qs, L);
        Truncated out;
        out.ids.assign(nn.ids.begin(), nn.ids.end());
        if (timing) timing->knn_ms += detail::elapsed_ms(t0);

        // y restricted to the subset: the first min(h, L) members carry weights.
        const std::size_t h = std::min(params_.h, L);
        const auto head = nn.row_ids(0).first(h);
        const InitialState y0 = initial_state_from_row(head, exact_inner(q, *db_, head), params_.sim);
        out.fallback = y0.fallback;
        std::vector<double> rhs(L, 0.0);
        for (std::size_t r = 0, j = 0; r < h && j < y0.ids.size(); ++r)
            if (out.ids[r] == y0.ids[j]) rhs[r] = y0.weights[j++];

        t0 = std::chrono::steady_clock::now();
        SparseMatrix system;
        if (mode == TruncationMode::early) {
            const FeatureSet sub = db_->subset(out.ids);
            const std::size_t k_sub = std::min(params_.k, L - 1);
            const SparseMatrix a = k_sub == 0 ? SparseMatrix::zeros(L, L) : build_affinity(sub, k_sub, params_.sim);
            system = build_laplacian(normalize_symmetric(a), params_.alpha);
        } else {
            system = slice_laplacian_sparse(*laplacian_, out.ids);
        }
        if (timing) timing->graph_ms += detail::elapsed_ms(t0);

        t0 = std::chrono::steady_clock::now();
        out.scores = solve_cg(system, rhs, params_.cg).x;
        if (timing) timing->solve_ms += detail::elapsed_ms(t0);
        return out;
    }

    /// Full ranking; scores of several query features are summed on the union of their subsets.
    RankedResult rank(const FeatureSet& query, TruncationMode mode, OnlineTiming* timing = nullptr) const {
        detail::require_same_dim(*db_, query);
        std::vector<double> scores(db_->n(), 0.0);
        std::vector<bool> member(db_->n(), false);
        bool fallback = false;
        for (std::size_t q = 0; q < query.n(); ++q) {
            const Truncated t = diffuse(query.row(q), mode, timing);
            fallback = fallback || t.fallback;
            for (std::size_t r = 0; r < t.ids.size(); ++r) {
                scores[t.ids[r]] += t.scores[r];
                member[t.ids[r]] = true;
            }
        }
        RankedResult out;
        if (db_->has_image_map()) {
            std::vector<bool> image_member(db_->n_images(), false);
            for (std::size_t i = 0; i < db_->n(); ++i)
                if (member[i]) image_member[db_->image_of()[i]] = true;
            out = rank_scores(aggregate_regional(scores, db_->image_of(), db_->n_images()), image_member);
        } else {
            out = rank_scores(std::move(scores), member);
        }
        out.fallback = fallback;
        return out;
    }

    const OnlineParams& params() const { return params_; }

private:
    const FeatureSet* db_;
    OnlineParams params_;
    const SparseMatrix* laplacian_;
    BruteForceSearcher searcher_;
};

inline RankedResult online_diffusion(const FeatureSet& db, const FeatureSet& query, const OnlineParams& params,
                                     TruncationMode mode, const SparseMatrix* full_laplacian = nullptr) {
    return OnlineDiffusion(db, params, full_laplacian).rank(query, mode);
}

}  // namespace ddiff
