#pragma once

#include "pctl/rational.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace pctl::linalg {

/// Dense row-major matrix of exact rationals.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Rational> data_;
};

/// Solves A X = B for square A by Gauss-Jordan elimination. Returns nullopt
/// if A is singular.
std::optional<Matrix> solve(const Matrix& a, const Matrix& b);

/// Reduced row echelon form in place; returns the pivot column of each
/// nonzero row.
std::vector<std::size_t> row_reduce(Matrix& m);

/// A nonzero vector x with A x = 0, or nullopt if the kernel is trivial.
std::optional<std::vector<Rational>> kernel_vector(const Matrix& a);

}  // namespace pctl::linalg
