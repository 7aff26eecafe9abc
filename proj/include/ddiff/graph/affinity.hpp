#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/core/parallel.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/graph/similarity.hpp>
#include <ddiff/graph/sparse_matrix.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ddiff {

/// Mutual k-NN affinity from a precomputed self-neighbor table.
///
/// Edge (i, j), i != j, exists iff j is among the first k entries of row i
/// and i among the first k of row j. Its weight is sim(<x_i, x_j>), computed
/// once per unordered pair so that A is exactly symmetric. Pairs whose weight
/// clamps to zero are left out.
inline SparseMatrix build_affinity(const FeatureSet& db, const KnnResult& self_nn, std::size_t k,
                                   const SimilarityConfig& sim, std::size_t threads = 1) {
    sim.validate();
    const std::size_t n = db.n();
    if (k == 0) throw InvalidArgument("k must be positive");
    if (k > n) throw InvalidArgument("k=" + std::to_string(k) + " exceeds database size " + std::to_string(n));
    if (self_nn.m != n || self_nn.k < k) throw InvalidArgument("neighbor table does not cover k for every element");

    // Sorted first-k lists for membership tests.
    std::vector<Index> sorted(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = self_nn.row_ids(i).first(k);
        std::copy(row.begin(), row.end(), sorted.begin() + i * k);
        std::sort(sorted.begin() + i * k, sorted.begin() + (i + 1) * k);
    }
    auto contains = [&](std::size_t row, Index id) {
        const auto b = sorted.begin() + row * k;
        return std::binary_search(b, b + k, id);
    };

    std::vector<std::vector<std::pair<Index, double>>> rows(n);
    parallel_for(n, threads, [&](std::size_t i) {
        auto& out = rows[i];
        for (std::size_t p = 0; p < k; ++p) {
            const Index j = sorted[i * k + p];
            if (j == i || !contains(j, static_cast<Index>(i))) continue;
            const std::size_t lo = std::min<std::size_t>(i, j);
            const std::size_t hi = std::max<std::size_t>(i, j);
            const double w = sim(dot(db.row(lo), db.row(hi)));
            if (w != 0.0) out.emplace_back(j, w);
        }
    });

    std::vector<std::size_t> row_ptr(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) row_ptr[i + 1] = row_ptr[i] + rows[i].size();
    std::vector<Index> col_idx(row_ptr[n]);
    std::vector<double> values(row_ptr[n]);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t p = row_ptr[i];
        for (const auto& [j, w] : rows[i]) {  // already ascending: built from a sorted list
            col_idx[p] = j;
            values[p] = w;
            ++p;
        }
    }
    return SparseMatrix(n, n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

/// Mutual k-NN affinity matrix A of `db`.
inline SparseMatrix build_affinity(const FeatureSet& db, std::size_t k, const SimilarityConfig& sim,
                                   std::size_t threads = 1) {
    if (k == 0) throw InvalidArgument("k must be positive");
    if (k > db.n()) throw InvalidArgument("k=" + std::to_string(k) + " exceeds database size " + std::to_string(db.n()));
    return build_affinity(db, self_neighbors(db, k, threads), k, sim, threads);
}

/// S = D^{-1/2} A D^{-1/2}; zero-degree rows stay zero.
inline SparseMatrix normalize_symmetric(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw InvalidArgument("affinity matrix must be square");
    const std::size_t n = a.rows();
    std::vector<double> inv_sqrt_degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (double v : a.row_values(i)) {
            if (v < 0.0) throw InvalidArgument("negative affinity in row " + std::to_string(i));
            deg += v;
        }
        if (deg > 0.0) inv_sqrt_degree[i] = 1.0 / std::sqrt(deg);
    }
    std::vector<double> values(a.nnz());
    for (std::size_t i = 0; i < n; ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        const std::size_t base = a.row_ptr()[i];
        for (std::size_t p = 0; p < cols.size(); ++p)
            values[base + p] = vals[p] * (inv_sqrt_degree[i] * inv_sqrt_degree[cols[p]]);
    }
    return SparseMatrix(n, n, a.row_ptr(), a.col_idx(), std::move(values));
}

/// L_alpha = I - alpha S with the diagonal stored explicitly.
inline SparseMatrix build_laplacian(const SparseMatrix& s, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (s.rows() != s.cols()) throw InvalidArgument("S must be square");
    const std::size_t n = s.rows();
    std::vector<std::size_t> row_ptr(n + 1, 0);
    std::vector<Index> col_idx;
    std::vector<double> values;
    col_idx.reserve(s.nnz() + n);
    values.reserve(s.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cols = s.row_cols(i);
        const auto vals = s.row_values(i);
        bool diagonal_done = false;
        auto emit_diagonal = [&](double s_ii) {
            col_idx.push_back(static_cast<Index>(i));
            values.push_back(1.0 - alpha * s_ii);
            diagonal_done = true;
        };
        for (std::size_t p = 0; p < cols.size(); ++p) {
            if (!diagonal_done && cols[p] >= i) {
                if (cols[p] == i) {
                    emit_diagonal(vals[p]);
                    continue;
                }
                emit_diagonal(0.0);
            }
            col_idx.push_back(cols[p]);
            values.push_back(-alpha * vals[p]);
        }
        if (!diagonal_done) emit_diagonal(0.0);
        row_ptr[i + 1] = col_idx.size();
    }
    return SparseMatrix(n, n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

/// Laplacian of the full database graph: A -> S -> L_alpha.
struct GraphParams {
    std::size_t k = 50;
    double alpha = 0.99;
    SimilarityConfig sim{};
};

inline SparseMatrix build_database_laplacian(const FeatureSet& db, const KnnResult& self_nn, const GraphParams& p,
                                             std::size_t threads = 1) {
    return build_laplacian(normalize_symmetric(build_affinity(db, self_nn, p.k, p.sim, threads)), p.alpha);
}

inline SparseMatrix build_database_laplacian(const FeatureSet& db, const GraphParams& p, std::size_t threads = 1) {
    return build_laplacian(normalize_symmetric(build_affinity(db, p.k, p.sim, threads)), p.alpha);
}

}  // namespace ddiff
