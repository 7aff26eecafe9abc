#include <ddiff/graph/affinity.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/graph/similarity.hpp>
#include <ddiff/graph/sparse_matrix.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace ddiff;

namespace {

Eigen::MatrixXd to_eigen(const SparseMatrix& m) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Eigen::Index(m.rows()), Eigen::Index(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto cols = m.row_cols(r);
        const auto vals = m.row_values(r);
        for (std::size_t p = 0; p < cols.size(); ++p) out(Eigen::Index(r), Eigen::Index(cols[p])) = vals[p];
    }
    return out;
}

// Row of the library's kNN result equals the exhaustive sort, except where the
// oracle itself has a near-tie that float arithmetic cannot resolve.
void expect_matches_full_sort(const KnnResult& nn, std::size_t q, const FeatureSet& queries, const FeatureSet& db) {
    const auto order = oracle::full_sort(queries, q, db);
    for (std::size_t r = 0; r < nn.k; ++r) {
        const double s = oracle::inner(queries, q, db, order[r]);
        EXPECT_NEAR(nn.row_sims(q)[r], s, 1e-5);
        const bool tie_before = r > 0 && std::abs(oracle::inner(queries, q, db, order[r - 1]) - s) < 1e-5;
        const bool tie_after =
            r + 1 < order.size() && std::abs(oracle::inner(queries, q, db, order[r + 1]) - s) < 1e-5;
        if (!tie_before && !tie_after) {
            EXPECT_EQ(nn.row_ids(q)[r], order[r]) << "query " << q << " rank " << r;
        }
    }
}

}  // namespace

TEST(Similarity, CubedAndClamped) {
    const SimilarityConfig s;
    EXPECT_DOUBLE_EQ(s(0.5), 0.125);
    EXPECT_DOUBLE_EQ(s(1.0), 1.0);
    EXPECT_DOUBLE_EQ(s(-0.3), 0.0);
    const SimilarityConfig lin{1.0, true};
    EXPECT_DOUBLE_EQ(lin(0.4), 0.4);
    const SimilarityConfig general{2.5, true};
    EXPECT_NEAR(general(0.5), std::pow(0.5, 2.5), 1e-15);
    const SimilarityConfig raw{3.0, false};
    EXPECT_DOUBLE_EQ(raw(-0.5), -0.125);
    EXPECT_THROW(SimilarityConfig{0.0}.validate(), InvalidArgument);
    EXPECT_THROW(SimilarityConfig{-1.0}.validate(), InvalidArgument);
}

TEST(Knn, OrthonormalBasis) {
    const FeatureSet db(2, 2, {1, 0, 0, 1});
    const FeatureSet q(1, 2, {1, 0});
    const KnnResult nn = knn_search(q, db, 2);
    EXPECT_EQ(std::vector<Index>(nn.ids.begin(), nn.ids.end()), std::vector<Index>({0, 1}));
    EXPECT_FLOAT_EQ(nn.sims[0], 1.0f);
    EXPECT_FLOAT_EQ(nn.sims[1], 0.0f);
}

TEST(Knn, SelfSearchK1) {
    std::mt19937_64 rng(3);
    const FeatureSet db = oracle::random_features(60, 6, rng);
    const KnnResult nn = knn_search(db, db, 1);
    for (std::size_t i = 0; i < db.n(); ++i) {
        EXPECT_EQ(nn.ids[i], i);
        EXPECT_NEAR(nn.sims[i], 1.0f, 1e-6);
    }
}

TEST(Knn, MatchesExhaustiveSortOnRandomInstances) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> n_dist(1, 150), d_dist(2, 24), m_dist(1, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = n_dist(rng);
        const std::size_t d = d_dist(rng);
        const FeatureSet db = oracle::random_features(n, d, rng);
        const FeatureSet q = oracle::random_features(m_dist(rng), d, rng);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, n)(rng);
        const KnnResult nn = knn_search(q, db, k);
        ASSERT_EQ(nn.m, q.n());
        ASSERT_EQ(nn.k, k);
        for (std::size_t i = 0; i < q.n(); ++i) expect_matches_full_sort(nn, i, q, db);
    }
}

TEST(Knn, RowInvariants) {
    std::mt19937_64 rng(8);
    const FeatureSet db = oracle::random_features(100, 8, rng);
    const KnnResult nn = knn_search(db, db, 5);
    for (std::size_t q = 0; q < nn.m; ++q) {
        expect_matches_full_sort(nn, q, db, db);
        std::set<Index> seen(nn.row_ids(q).begin(), nn.row_ids(q).end());
        EXPECT_EQ(seen.size(), nn.k);
        for (std::size_t r = 1; r < nn.k; ++r) EXPECT_GE(nn.row_sims(q)[r - 1], nn.row_sims(q)[r]);
        for (Index id : nn.row_ids(q)) EXPECT_LT(id, db.n());
    }
}

TEST(Knn, TiesBrokenByAscendingId) {
    const FeatureSet db(4, 2, {0, 1, 1, 0, 1, 0, 1, 0});
    const FeatureSet q(1, 2, {1, 0});
    const KnnResult nn = knn_search(q, db, 4);
    EXPECT_EQ(std::vector<Index>(nn.ids.begin(), nn.ids.end()), std::vector<Index>({1, 2, 3, 0}));
}

TEST(Knn, Errors) {
    const FeatureSet db(2, 2, {1, 0, 0, 1});
    const FeatureSet q3(1, 3, {1, 0, 0});
    const FeatureSet q2(1, 2, {1, 0});
    EXPECT_THROW(knn_search(q2, db, 3), InvalidArgument);
    EXPECT_THROW(knn_search(q2, db, 0), InvalidArgument);
    EXPECT_THROW(knn_search(q3, db, 1), InvalidArgument);
}

TEST(Knn, ThreadCountDoesNotChangeResult) {
    std::mt19937_64 rng(4);
    const FeatureSet db = oracle::random_features(700, 12, rng);
    const KnnResult a = knn_search(db, db, 9, 1);
    const KnnResult b = knn_search(db, db, 9, 4);
    EXPECT_EQ(a.ids, b.ids);
    EXPECT_EQ(a.sims, b.sims);
}

TEST(Knn, SelfNeighborsPutsSelfFirstEvenWithDuplicates) {
    const FeatureSet db(3, 2, {1, 0, 1, 0, 0, 1});
    const KnnResult nn = self_neighbors(db, 2);
    EXPECT_EQ(nn.row_ids(0)[0], 0u);
    EXPECT_EQ(nn.row_ids(1)[0], 1u);
    EXPECT_EQ(nn.row_ids(1)[1], 0u);
    EXPECT_EQ(nn.row_ids(2)[0], 2u);
    const KnnResult one = self_neighbors(db, 1);
    EXPECT_EQ(one.ids, std::vector<Index>({0, 1, 2}));
}

TEST(SparseMatrix, TripletsAndAccessors) {
    const SparseMatrix m = SparseMatrix::from_triplets(3, 3, {{2, 0, 5.0}, {0, 1, 1.0}, {0, 0, 2.0}, {1, 1, 0.0}});
    EXPECT_EQ(m.nnz(), 3u);
    EXPECT_EQ(m.at(0, 0), 2.0);
    EXPECT_EQ(m.at(0, 1), 1.0);
    EXPECT_EQ(m.at(1, 1), 0.0);
    EXPECT_EQ(m.at(2, 0), 5.0);
    std::vector<double> x{1, 2, 3}, y(3);
    m.multiply(x, y);
    EXPECT_EQ(y, std::vector<double>({4, 0, 5}));
    EXPECT_EQ(SparseMatrix::from_dense(m.to_dense()), m);
    EXPECT_TRUE(std::isinf(m.symmetry_error()));
    EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), InvalidArgument);
}

TEST(SparseMatrix, ValidationRejectsMalformedCsr) {
    EXPECT_THROW(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}), InvalidArgument);              // row_ptr length
    EXPECT_THROW(SparseMatrix(1, 2, {0, 2}, {1, 0}, {1.0, 1.0}), InvalidArgument);      // unsorted
    EXPECT_THROW(SparseMatrix(1, 2, {0, 2}, {0, 0}, {1.0, 1.0}), InvalidArgument);      // duplicate
    EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {0}, {0.0}), InvalidArgument);              // explicit zero
    EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {5}, {1.0}), InvalidArgument);              // column range
    EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), InvalidArgument);   // not monotone
    EXPECT_NO_THROW(SparseMatrix::zeros(4, 4));
}

TEST(Affinity, TwoMutualPoints) {
    const double c = 0.5, s = std::sqrt(1 - c * c);
    const FeatureSet db(2, 2, {1, 0, float(c), float(s)});
    const SparseMatrix a = build_affinity(db, 2, SimilarityConfig{});
    EXPECT_EQ(a.nnz(), 2u);
    EXPECT_NEAR(a.at(0, 1), 0.125, 1e-7);
    EXPECT_EQ(a.at(0, 1), a.at(1, 0));
    EXPECT_EQ(a.at(0, 0), 0.0);
}

TEST(Affinity, SinglePointIsEmpty) {
    const FeatureSet db(1, 3, {1, 2, 3});
    EXPECT_EQ(build_affinity(db, 1, SimilarityConfig{}).nnz(), 0u);
}

TEST(Affinity, Errors) {
    const FeatureSet db(2, 2, {1, 0, 0, 1});
    EXPECT_THROW(build_affinity(db, 3, SimilarityConfig{}), InvalidArgument);
    EXPECT_THROW(build_affinity(db, 0, SimilarityConfig{}), InvalidArgument);
}

TEST(Affinity, MatchesDenseMutualKnnOracle) {
    std::mt19937_64 rng(50);
    for (int trial = 0; trial < 10; ++trial) {
        const FeatureSet db = oracle::clustered_features(50, 6, 4, 0.6, rng);
        for (std::size_t k : {1u, 5u, 12u, 50u}) {
            const Eigen::MatrixXd want = oracle::affinity(db, k);
            const Eigen::MatrixXd got = to_eigen(build_affinity(db, k, SimilarityConfig{}));
            EXPECT_LT((want - got).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial << " k=" << k;
        }
    }
}

TEST(Affinity, ReciprocityAndSymmetry) {
    std::mt19937_64 rng(51);
    const FeatureSet db = oracle::clustered_features(120, 8, 5, 0.5, rng);
    const std::size_t k = 7;
    const SparseMatrix a = build_affinity(db, k, SimilarityConfig{}, 3);
    EXPECT_EQ(a.symmetry_error(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto oi = oracle::full_sort(db, i, db);
        std::stable_partition(oi.begin(), oi.end(), [&](Index j) { return j == i; });
        const std::set<Index> nn_i(oi.begin(), oi.begin() + k);
        for (Index j : a.row_cols(i)) {
            EXPECT_NE(j, i);
            auto oj = oracle::full_sort(db, j, db);
            std::stable_partition(oj.begin(), oj.end(), [&](Index x) { return x == j; });
            const std::set<Index> nn_j(oj.begin(), oj.begin() + k);
            EXPECT_TRUE(nn_i.contains(j) && nn_j.contains(Index(i)));
        }
        for (double v : a.row_values(i)) EXPECT_GT(v, 0.0);
    }
}

TEST(Affinity, ThreadCountDoesNotChangeResult) {
    std::mt19937_64 rng(52);
    const FeatureSet db = oracle::clustered_features(300, 8, 6, 0.5, rng);
    EXPECT_EQ(build_affinity(db, 10, SimilarityConfig{}, 1), build_affinity(db, 10, SimilarityConfig{}, 4));
}

TEST(Normalize, UnitDegrees) {
    const SparseMatrix a = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
    EXPECT_EQ(normalize_symmetric(a), a);
}

TEST(Normalize, Star) {
    const SparseMatrix a = SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {1, 0, 1.0}, {0, 2, 1.0}, {2, 0, 1.0}});
    const SparseMatrix s = normalize_symmetric(a);
    EXPECT_NEAR(s.at(0, 1), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.at(2, 0), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_LT((to_eigen(s) - oracle::normalize(to_eigen(a))).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Normalize, IsolatedNodeStaysZero) {
    const SparseMatrix a = SparseMatrix::from_triplets(3, 3, {{0, 1, 2.0}, {1, 0, 2.0}});
    const SparseMatrix s = normalize_symmetric(a);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(s.at(2, c), 0.0);
        EXPECT_EQ(s.at(c, 2), 0.0);
    }
    for (double v : s.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Normalize, RejectsNegative) {
    const SparseMatrix a = SparseMatrix::from_triplets(2, 2, {{0, 1, -1.0}, {1, 0, -1.0}});
    EXPECT_THROW(normalize_symmetric(a), InvalidArgument);
    EXPECT_THROW(normalize_symmetric(SparseMatrix::zeros(2, 3)), InvalidArgument);
}

TEST(Laplacian, Examples) {
    const SparseMatrix empty = build_laplacian(SparseMatrix::zeros(3, 3), 0.99);
    EXPECT_EQ(empty.to_dense(), DenseMatrix::identity(3));

    const SparseMatrix s = SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
    const SparseMatrix l = build_laplacian(s, 0.99);
    EXPECT_EQ(l.at(0, 0), 1.0);
    EXPECT_EQ(l.at(1, 1), 1.0);
    EXPECT_DOUBLE_EQ(l.at(0, 1), -0.99);
    EXPECT_DOUBLE_EQ(l.at(1, 0), -0.99);

    for (double bad : {0.0, 1.0, -0.5, 1.5}) EXPECT_THROW(build_laplacian(s, bad), InvalidArgument);
}

TEST(Laplacian, DiagonalStoredForEveryRow) {
    // Row 1 has entries on both sides of the diagonal, row 2 has none.
    const SparseMatrix s =
        SparseMatrix::from_triplets(3, 3, {{0, 1, 0.5}, {1, 0, 0.5}, {1, 2, 0.25}, {2, 1, 0.25}});
    const SparseMatrix l = build_laplacian(s, 0.5);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto cols = l.row_cols(i);
        EXPECT_TRUE(std::binary_search(cols.begin(), cols.end(), Index(i)));
    }
    EXPECT_EQ(l.nnz(), s.nnz() + 3);
}

// Graph-wide invariants on random graphs: symmetry, spectral radius, positive definiteness.
TEST(GraphInvariants, RandomGraphs) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 200)(rng);
        const FeatureSet db = oracle::clustered_features(n, 8, 5, 0.7, rng);
        const SparseMatrix a = build_affinity(db, 10, SimilarityConfig{});
        const SparseMatrix s = normalize_symmetric(a);
        const SparseMatrix l = build_laplacian(s, 0.99);
        EXPECT_LT(a.symmetry_error(), 1e-12);
        EXPECT_LT(s.symmetry_error(), 1e-12);

        // power iteration on S
        std::vector<double> v(n), w(n);
        std::normal_distribution<double> g;
        for (double& x : v) x = g(rng);
        double lambda = 0.0;
        for (int it = 0; it < 2000; ++it) {
            s.multiply(v, w);
            double norm = 0.0;
            for (double x : w) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) break;
            lambda = norm;
            for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
        }
        EXPECT_LE(lambda, 1.0 + 1e-9);
        EXPECT_LE(oracle::spectral_radius(to_eigen(s)), 1.0 + 1e-9);

        const Eigen::MatrixXd dl = to_eigen(l);
        Eigen::LLT<Eigen::MatrixXd> llt(dl);
        EXPECT_EQ(llt.info(), Eigen::Success);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dl, Eigen::EigenvaluesOnly);
        EXPECT_GE(es.eigenvalues().minCoeff(), 0.01 - 1e-9);
    }
}
