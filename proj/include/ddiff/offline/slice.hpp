#pragma once

#include <ddiff/core/dense_matrix.hpp>
#include <ddiff/core/error.hpp>
#include <ddiff/graph/sparse_matrix.hpp>

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

/// Extracts principal submatrices L[ids, ids] of a square sparse matrix.
///
/// Keeps an n-sized position table between calls so each slice costs
/// O(sum of row lengths of ids) instead of O(n). Not thread-safe; use one
/// slicer per thread.
class LaplacianSlicer {
public:
    explicit LaplacianSlicer(const SparseMatrix& laplacian)
        : lap_(&laplacian), position_(laplacian.rows(), kAbsent) {
        if (laplacian.rows() != laplacian.cols()) throw InvalidArgument("slicing requires a square matrix");
    }

    DenseMatrix dense(std::span<const Index> ids) {
        Marker mark(*this, ids);
        DenseMatrix out(ids.size(), ids.size());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            const auto cols = lap_->row_cols(ids[r]);
            const auto vals = lap_->row_values(ids[r]);
            for (std::size_t p = 0; p < cols.size(); ++p) {
                const std::uint32_t c = position_[cols[p]];
                if (c != kAbsent) out(r, c) = vals[p];
            }
        }
        return out;
    }

    SparseMatrix sparse(std::span<const Index> ids) {
        Marker mark(*this, ids);
        const std::size_t m = ids.size();
        std::vector<std::size_t> row_ptr(m + 1, 0);
        std::vector<Index> col_idx;
        std::vector<double> values;
        std::vector<std::pair<Index, double>> row;
        for (std::size_t r = 0; r < m; ++r) {
            const auto cols = lap_->row_cols(ids[r]);
            const auto vals = lap_->row_values(ids[r]);
            row.clear();
            for (std::size_t p = 0; p < cols.size(); ++p) {
                const std::uint32_t c = position_[cols[p]];
                if (c != kAbsent) row.emplace_back(c, vals[p]);
            }
            std::sort(row.begin(), row.end());
            for (const auto& [c, v] : row) {
                col_idx.push_back(c);
                values.push_back(v);
            }
            row_ptr[r + 1] = col_idx.size();
        }
        return SparseMatrix(m, m, std::move(row_ptr), std::move(col_idx), std::move(values));
    }

private:
    static constexpr std::uint32_t kAbsent = UINT32_MAX;

    // Marks ids in the position table for the lifetime of one slice.
    class Marker {
    public:
        Marker(LaplacianSlicer& s, std::span<const Index> ids) : s_(s), ids_(ids) {
            const std::size_t n = s_.position_.size();
            std::size_t r = 0;
            try {
                for (; r < ids.size(); ++r) {
                    if (ids[r] >= n)
                        throw InvalidArgument("slice id " + std::to_string(ids[r]) + " out of range [0, " +
                                              std::to_string(n) + ")");
                    if (s_.position_[ids[r]] != kAbsent)
                        throw InvalidArgument("duplicate slice id " + std::to_string(ids[r]));
                    s_.position_[ids[r]] = static_cast<std::uint32_t>(r);
                }
            } catch (...) {
                ids_ = ids.first(r);
                clear();
                throw;
            }
        }
        ~Marker() { clear(); }
        Marker(const Marker&) = delete;
        Marker& operator=(const Marker&) = delete;

    private:
        void clear() {
            for (Index id : ids_) s_.position_[id] = kAbsent;
        }
        LaplacianSlicer& s_;
        std::span<const Index> ids_;
    };

    const SparseMatrix* lap_;
    std::vector<std::uint32_t> position_;
};

/// Dense L x L slice: out(r, c) = laplacian(ids[r], ids[c]).
inline DenseMatrix slice_laplacian(const SparseMatrix& laplacian, std::span<const Index> ids) {
    return LaplacianSlicer(laplacian).dense(ids);
}

inline SparseMatrix slice_laplacian_sparse(const SparseMatrix& laplacian, std::span<const Index> ids) {
    return LaplacianSlicer(laplacian).sparse(ids);
}

}  // namespace ddiff
