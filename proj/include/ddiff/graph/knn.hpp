#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/core/parallel.hpp>
#include <ddiff/graph/feature_set.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

/// m x k neighbor table; each row sorted by descending similarity, ties by ascending id.
struct KnnResult {
    std::size_t m = 0;
    std::size_t k = 0;
    std::vector<Index> ids;
    std::vector<float> sims;

    std::span<const Index> row_ids(std::size_t q) const { return {ids.data() + q * k, k}; }
    std::span<const float> row_sims(std::size_t q) const { return {sims.data() + q * k, k}; }
};

/// Single-method search interface so approximate backends can replace the
/// exact one. Implementations must return rows in KnnResult order.
class NeighborSearcher {
public:
    virtual ~NeighborSearcher() = default;
    virtual KnnResult search(const FeatureSet& queries, std::size_t k) const = 0;
};

namespace detail {

struct Candidate {
    float sim;
    Index id;
};

/// Strict "ranks before": higher similarity first, then lower id.
inline bool ranks_before(const Candidate& a, const Candidate& b) {
    return a.sim > b.sim || (a.sim == b.sim && a.id < b.id);
}

/// Top-k of `sims` into `out` (size k), best first. `heap` is scratch.
inline void select_top_k(std::span<const float> sims, std::size_t k, std::vector<Candidate>& heap,
                         std::span<Index> out_ids, std::span<float> out_sims) {
    heap.clear();
    // Max-heap under ranks_before keeps the worst kept candidate on top.
    for (std::size_t j = 0; j < sims.size(); ++j) {
        const Candidate c{sims[j], static_cast<Index>(j)};
        if (heap.size() < k) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end(), ranks_before);
        } else if (ranks_before(c, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), ranks_before);
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end(), ranks_before);
        }
    }
    std::sort(heap.begin(), heap.end(), ranks_before);
    for (std::size_t r = 0; r < k; ++r) {
        out_ids[r] = heap[r].id;
        out_sims[r] = heap[r].sim;
    }
}

}  // namespace detail

/// Exact inner-product search by blocked dense products against the whole database.
///
/// Holds a reference to `db`; the database must outlive the searcher.
class BruteForceSearcher final : public NeighborSearcher {
public:
    explicit BruteForceSearcher(const FeatureSet& db, std::size_t threads = 1)
        : db_(&db), threads_(threads) {}

    KnnResult search(const FeatureSet& queries, std::size_t k) const override {
        const FeatureSet& db = *db_;
        if (k == 0) throw InvalidArgument("k must be positive");
        if (k > db.n())
            throw InvalidArgument("k=" + std::to_string(k) + " exceeds database size " + std::to_string(db.n()));
        if (queries.n() > 0 && queries.d() != db.d())
            throw InvalidArgument("dimension mismatch: queries d=" + std::to_string(queries.d()) +
                                  ", database d=" + std::to_string(db.d()));

        using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        const std::size_t n = db.n();
        const std::size_t d = db.d();
        const Eigen::Map<const RowMat> base(db.values().data(), Eigen::Index(n), Eigen::Index(d));

        KnnResult out;
        out.m = queries.n();
        out.k = k;
        out.ids.resize(out.m * k);
        out.sims.resize(out.m * k);

        const std::size_t n_blocks = (out.m + kBlock - 1) / kBlock;
        parallel_for_chunks(n_blocks, threads_, [&](std::size_t, std::size_t b0, std::size_t b1) {
            RowMat block_sims;
            std::vector<detail::Candidate> heap;
            heap.reserve(k);
            for (std::size_t b = b0; b < b1; ++b) {
                const std::size_t q0 = b * kBlock;
                const std::size_t rows = std::min(kBlock, out.m - q0);
                const Eigen::Map<const RowMat> qs(queries.values().data() + q0 * d, Eigen::Index(rows),
                                                  Eigen::Index(d));
                block_sims.noalias() = qs * base.transpose();
                for (std::size_t r = 0; r < rows; ++r) {
                    const std::size_t q = q0 + r;
                    detail::select_top_k({block_sims.data() + r * n, n}, k, heap,
                                         {out.ids.data() + q * k, k}, {out.sims.data() + q * k, k});
                }
            }
        });
        return out;
    }

    const FeatureSet& database() const { return *db_; }

private:
    static constexpr std::size_t kBlock = 64;
    const FeatureSet* db_;
    std::size_t threads_;
};

/// Exact brute-force top-k of every query row against `database`.
inline KnnResult knn_search(const FeatureSet& queries, const FeatureSet& database, std::size_t k,
                            std::size_t threads = 1) {
    return BruteForceSearcher(database, threads).search(queries, k);
}

/// Database self-search where row i always starts with i itself.
///
/// Exact duplicates with a lower id would otherwise win the ascending-id tie
/// break; the element is moved to the front and the list keeps k entries.
inline KnnResult self_neighbors(const FeatureSet& db, std::size_t k, std::size_t threads = 1) {
    KnnResult nn = knn_search(db, db, k, threads);
    for (std::size_t i = 0; i < nn.m; ++i) {
        Index* ids = nn.ids.data() + i * k;
        float* sims = nn.sims.data() + i * k;
        if (ids[0] == i) continue;
        std::size_t p = 0;
        while (p < k && ids[p] != i) ++p;
        float self_sim = 1.0f;
        if (p == k) {
            p = k - 1;
        } else {
            self_sim = sims[p];
        }
        std::move_backward(ids, ids + p, ids + p + 1);
        std::move_backward(sims, sims + p, sims + p + 1);
        ids[0] = static_cast<Index>(i);
        sims[0] = std::max(self_sim, sims[1 < k ? 1 : 0]);
    }
    return nn;
}

}  // namespace ddiff
