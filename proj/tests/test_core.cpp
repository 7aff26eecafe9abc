#include <ddiff/core/dense_matrix.hpp>
#include <ddiff/core/error.hpp>
#include <ddiff/core/parallel.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

using namespace ddiff;

TEST(Parallel, ResolveThreads) {
    EXPECT_GE(resolve_threads(0), 1u);
    EXPECT_EQ(resolve_threads(3), 3u);
}

TEST(Parallel, EveryItemVisitedOnce) {
    for (std::size_t threads : {1u, 2u, 4u, 7u}) {
        for (std::size_t n : {0u, 1u, 5u, 100u}) {
            std::vector<std::atomic<int>> hits(n);
            parallel_for(n, threads, [&](std::size_t i) { hits[i]++; });
            for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(hits[i].load(), 1) << "n=" << n << " threads=" << threads;
        }
    }
}

TEST(Parallel, ChunksAreContiguousAndCover) {
    std::vector<int> owner(97, -1);
    parallel_for_chunks(owner.size(), 4, [&](std::size_t w, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) owner[i] = int(w);
    });
    for (std::size_t i = 1; i < owner.size(); ++i) EXPECT_GE(owner[i], owner[i - 1]);
    EXPECT_EQ(owner.front(), 0);
}

TEST(Parallel, ExceptionReachesCaller) {
    EXPECT_THROW(parallel_for(50, 4, [](std::size_t i) {
                     if (i == 37) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
    EXPECT_THROW(parallel_for(50, 1, [](std::size_t i) {
                     if (i == 3) throw InvalidArgument("x");
                 }),
                 InvalidArgument);
}

TEST(Errors, Hierarchy) {
    EXPECT_THROW(throw IoError("x"), Error);
    EXPECT_THROW(throw FormatError("x"), Error);
    EXPECT_THROW(throw SolverError("x"), Error);
    EXPECT_THROW(detail::require(false, "msg"), InvalidArgument);
    EXPECT_NO_THROW(detail::require(true, "msg"));
}

TEST(DenseMatrix, IdentityAndMultiply) {
    const DenseMatrix i3 = DenseMatrix::identity(3);
    std::vector<double> x{1, 2, 3}, y(3);
    i3.multiply(x, y);
    EXPECT_EQ(y, x);

    DenseMatrix m(2, 3);
    m(0, 0) = 1;
    m(0, 2) = 2;
    m(1, 1) = -1;
    std::vector<double> out(2);
    m.multiply(x, out);
    EXPECT_DOUBLE_EQ(out[0], 7.0);
    EXPECT_DOUBLE_EQ(out[1], -2.0);
    EXPECT_EQ(m.row(0).size(), 3u);
    EXPECT_EQ(m.size(), 2u);
}
