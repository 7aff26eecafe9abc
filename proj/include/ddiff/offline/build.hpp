#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/graph/affinity.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/offline/cg.hpp>
#include <ddiff/offline/sparsified_inverse.hpp>
#include <ddiff/offline/truncation.hpp>

#include <algorithm>
#include <string>

namespace ddiff {

struct IndexParams {
    std::size_t k = 50;
    std::size_t L = 5000;
    double alpha = 0.99;
    SimilarityConfig sim{};
    CgConfig cg = CgConfig::offline();
};

template <std::floating_point Real>
struct BuiltIndex {
    SparseMatrix laplacian;  // full-graph L_alpha
    BasicSparsifiedInverse<Real> index;
};

/// Whole offline stage from database features to the sparsified inverse.
///
/// A single self-search with max(k, L) neighbors feeds both the graph (first k
/// columns) and the truncation lists (first L columns).
template <std::floating_point Real = float>
BuiltIndex<Real> build_index(const FeatureSet& db, const IndexParams& p, std::size_t threads = 1) {
    p.sim.validate();
    p.cg.validate();
    if (p.k == 0 || p.k > db.n()) throw InvalidArgument("k must lie in [1, " + std::to_string(db.n()) + "]");
    if (p.L == 0 || p.L > db.n()) throw InvalidArgument("L must lie in [1, " + std::to_string(db.n()) + "]");
    KnnResult nn = self_neighbors(db, std::max(p.k, p.L), threads);
    BuiltIndex<Real> out;
    out.laplacian = build_database_laplacian(db, nn, GraphParams{p.k, p.alpha, p.sim}, threads);
    PrecomputeOptions opts;
    opts.threads = threads;
    opts.meta.k = p.k;
    opts.meta.gamma = p.sim.gamma;
    out.index = precompute_inverse<Real>(out.laplacian, truncation_from_neighbors(std::move(nn), p.L), p.cg, p.alpha,
                                         opts);
    return out;
}

}  // namespace ddiff
