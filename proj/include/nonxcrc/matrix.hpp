#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nonxcrc {

/// Dense row-major matrix of doubles. Small and unclever on purpose: the
/// fits in this project are at most a few dozen columns.
class Matrix {
  public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }

    const std::vector<double>& data() const { return data_; }

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

/// Solve A x = b in place for symmetric positive definite A (Cholesky).
/// Returns false when the factorization breaks down.
bool cholesky_solve(Matrix a, std::vector<double> b, std::vector<double>& x);

}  // namespace nonxcrc
