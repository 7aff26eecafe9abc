#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace ddiff {

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    /// Dimension of a square operator, as expected by solve_cg.
    std::size_t size() const { return rows_; }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    const std::vector<double>& data() const { return data_; }

    /// y = M x
    void multiply(std::span<const double> x, std::span<double> y) const {
        assert(x.size() == cols_ && y.size() == rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            const double* a = data_.data() + r * cols_;
            double acc = 0.0;
            for (std::size_t c = 0; c < cols_; ++c) acc += a[c] * x[c];
            y[r] = acc;
        }
    }

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace ddiff
