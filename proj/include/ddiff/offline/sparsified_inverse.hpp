#pragma once

#include <ddiff/core/error.hpp>
#include <ddiff/core/parallel.hpp>
#include <ddiff/graph/sparse_matrix.hpp>
#include <ddiff/offline/cg.hpp>
#include <ddiff/offline/slice.hpp>
#include <ddiff/offline/truncation.hpp>

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

/// Parameters recorded alongside an index so a file describes how it was built.
struct BuildMetadata {
    std::uint64_t k = 0;
    double gamma = 0.0;
    std::uint32_t cg_max_iters = 0;
    double cg_tol = 0.0;
    std::int64_t build_timestamp = 0;  // unix seconds

    bool operator==(const BuildMetadata&) const = default;
};

/// Column-truncated approximation of inv(L_alpha).
///
/// Column i holds L values paired with the row ids NN_L(x_i), stored in the
/// neighbor (similarity) order, so row_ids(i)[0] == i. Total storage is n * L
/// entries. `Real` is the stored value precision; float is the persisted
/// default and double keeps the solver output unrounded.
template <std::floating_point Real>
struct BasicSparsifiedInverse {
    using value_type = Real;

    std::size_t n = 0;
    std::size_t L = 0;
    double alpha = 0.0;
    BuildMetadata meta{};
    std::vector<Index> ids;    // n * L
    std::vector<Real> values;  // n * L

    std::span<const Index> row_ids(std::size_t col) const { return {ids.data() + col * L, L}; }
    std::span<const Real> column(std::size_t col) const { return {values.data() + col * L, L}; }
    std::size_t entry_count() const { return values.size(); }

    /// Structural equality with bitwise value comparison.
    bool identical(const BasicSparsifiedInverse& o) const {
        return n == o.n && L == o.L && std::memcmp(&alpha, &o.alpha, sizeof alpha) == 0 && meta == o.meta &&
               ids == o.ids && values.size() == o.values.size() &&
               (values.empty() || std::memcmp(values.data(), o.values.data(), values.size() * sizeof(Real)) == 0);
    }
};

using SparsifiedInverse = BasicSparsifiedInverse<float>;

struct PrecomputeOptions {
    std::size_t threads = 1;
    BuildMetadata meta{};  // k / gamma are informational; CG fields and timestamp are filled in
};

/// Solves slice(L_alpha, NN_L(x_i)) c_i = e_1 for every database element.
///
/// Columns are independent; chunked scheduling writes only per-column slots,
/// so the result does not depend on the thread count.
template <std::floating_point Real = float>
BasicSparsifiedInverse<Real> precompute_inverse(const SparseMatrix& laplacian, TruncationIndex trunc,
                                                const CgConfig& cfg, double alpha,
                                                const PrecomputeOptions& opts = {}) {
    cfg.validate();
    if (laplacian.rows() != laplacian.cols()) throw InvalidArgument("L_alpha must be square");
    if (trunc.n != laplacian.rows())
        throw InvalidArgument("truncation lists cover " + std::to_string(trunc.n) + " elements, L_alpha has " +
                              std::to_string(laplacian.rows()));
    if (trunc.L == 0 || trunc.ids.size() != trunc.n * trunc.L) throw InvalidArgument("malformed truncation index");

    BasicSparsifiedInverse<Real> out;
    out.n = trunc.n;
    out.L = trunc.L;
    out.alpha = alpha;
    out.meta = opts.meta;
    out.meta.cg_max_iters = static_cast<std::uint32_t>(cfg.max_iters);
    out.meta.cg_tol = cfg.residual_tol;
    if (out.meta.build_timestamp == 0)
        out.meta.build_timestamp =
            std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
                .count();
    out.values.resize(out.n * out.L);
    out.ids = std::move(trunc.ids);

    const std::size_t L = out.L;
    parallel_for_chunks(out.n, opts.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        LaplacianSlicer slicer(laplacian);
        std::vector<double> rhs(L, 0.0);
        rhs[0] = 1.0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto ids = out.row_ids(i);
            if (ids[0] != i)
                throw InvalidArgument("truncation list " + std::to_string(i) + " does not start with its own id");
            CgResult res;
            try {
                res = solve_cg(slicer.sparse(ids), rhs, cfg);
            } catch (const SolverError& e) {
                throw SolverError("column " + std::to_string(i) + ": " + e.what());
            }
            if (!(res.x[0] > 0.0))
                throw SolverError("column " + std::to_string(i) + ": non-positive self diffusion mass");
            Real* dst = out.values.data() + i * L;
            for (std::size_t r = 0; r < L; ++r) dst[r] = static_cast<Real>(res.x[r]);
        }
    });
    return out;
}

}  // namespace ddiff
