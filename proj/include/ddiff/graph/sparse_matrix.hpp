#pragma once

#include <ddiff/core/dense_matrix.hpp>
#include <ddiff/core/error.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace ddiff {

/// Compressed-sparse-row matrix of doubles.
///
/// Column indices are strictly ascending within a row and no stored value is
/// zero; both are checked on construction.
class SparseMatrix {
public:
    struct Triplet {
        Index row;
        Index col;
        double value;
    };

    SparseMatrix() : row_ptr_(1, 0) {}

    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                 std::vector<Index> col_idx, std::vector<double> values)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
          values_(std::move(values)) {
        validate();
    }

    /// Empty rows x cols matrix.
    static SparseMatrix zeros(std::size_t rows, std::size_t cols) {
        return SparseMatrix(rows, cols, std::vector<std::size_t>(rows + 1, 0), {}, {});
    }

    /// Builds from unordered triplets; zero values are dropped, duplicates rejected.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
        std::erase_if(triplets, [](const Triplet& t) { return t.value == 0.0; });
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        std::vector<std::size_t> row_ptr(rows + 1, 0);
        std::vector<Index> col_idx;
        std::vector<double> values;
        col_idx.reserve(triplets.size());
        values.reserve(triplets.size());
        for (const Triplet& t : triplets) {
            if (t.row >= rows || t.col >= cols) throw InvalidArgument("triplet out of range");
            ++row_ptr[t.row + 1];
            col_idx.push_back(t.col);
            values.push_back(t.value);
        }
        for (std::size_t r = 0; r < rows; ++r) row_ptr[r + 1] += row_ptr[r];
        return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
    }

    static SparseMatrix from_dense(const DenseMatrix& m) {
        std::vector<Triplet> t;
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c)
                if (m(r, c) != 0.0) t.push_back({Index(r), Index(c), m(r, c)});
        return from_triplets(m.rows(), m.cols(), std::move(t));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const Index> row_cols(std::size_t r) const {
        return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<Index>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    /// Stored value at (r, c), or 0 when absent.
    double at(std::size_t r, std::size_t c) const {
        const auto cols = row_cols(r);
        const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<Index>(c));
        if (it == cols.end() || *it != c) return 0.0;
        return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
    }

    /// y = M x
    void multiply(std::span<const double> x, std::span<double> y) const {
        assert(x.size() == cols_ && y.size() == rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            double acc = 0.0;
            for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) acc += values_[p] * x[col_idx_[p]];
            y[r] = acc;
        }
    }

    DenseMatrix to_dense() const {
        DenseMatrix m(rows_, cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) m(r, col_idx_[p]) = values_[p];
        return m;
    }

    /// Largest |m_ij - m_ji| over stored entries; +inf if the pattern is not symmetric.
    double symmetry_error() const {
        if (rows_ != cols_) return INFINITY;
        double worst = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            const auto cols = row_cols(r);
            const auto vals = row_values(r);
            for (std::size_t p = 0; p < cols.size(); ++p) {
                const auto mirror = row_cols(cols[p]);
                if (!std::binary_search(mirror.begin(), mirror.end(), static_cast<Index>(r))) return INFINITY;
                worst = std::max(worst, std::abs(vals[p] - at(cols[p], r)));
            }
        }
        return worst;
    }

    bool operator==(const SparseMatrix&) const = default;

private:
    void validate() const {
        if (row_ptr_.size() != rows_ + 1) throw InvalidArgument("CSR row_ptr has wrong length");
        if (row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() || col_idx_.size() != values_.size())
            throw InvalidArgument("CSR arrays are inconsistent");
        for (std::size_t r = 0; r < rows_; ++r) {
            if (row_ptr_[r] > row_ptr_[r + 1]) throw InvalidArgument("CSR row_ptr is not monotone");
            for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
                if (col_idx_[p] >= cols_) throw InvalidArgument("CSR column index out of range");
                if (p > row_ptr_[r] && col_idx_[p] <= col_idx_[p - 1])
                    throw InvalidArgument("CSR columns not strictly ascending in row " + std::to_string(r));
                if (values_[p] == 0.0) throw InvalidArgument("CSR stores an explicit zero");
            }
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<Index> col_idx_;
    std::vector<double> values_;
};

}  // namespace ddiff
