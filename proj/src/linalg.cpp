#include "pctl/linalg.hpp"

#include <stdexcept>
#include <utility>

namespace pctl::linalg {

namespace {

// Height used for pivot choice: |num| * den. Smaller pivots keep entries short.
Integer height(const Rational& r) {
    return abs(r.get_num()) * r.get_den();
}

void swap_rows(Matrix& m, std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t c = 0; c < m.cols(); ++c) std::swap(m(a, c), m(b, c));
}

}  // namespace

std::vector<std::size_t> row_reduce(Matrix& m) {
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
        std::size_t best = m.rows();
        Integer best_height;
        for (std::size_t r = row; r < m.rows(); ++r) {
            if (m(r, col) == 0) continue;
            Integer h = height(m(r, col));
            if (best == m.rows() || h < best_height) {
                best = r;
                best_height = h;
            }
        }
        if (best == m.rows()) continue;
        swap_rows(m, row, best);
        Rational inv = 1 / m(row, col);
        for (std::size_t c = col; c < m.cols(); ++c) m(row, c) *= inv;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (r == row || m(r, col) == 0) continue;
            Rational factor = m(r, col);
            for (std::size_t c = col; c < m.cols(); ++c) m(r, c) -= factor * m(row, c);
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

std::optional<Matrix> solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != a.rows())
        throw std::invalid_argument("solve: dimension mismatch");
    const std::size_t n = a.rows();
    Matrix aug(n, n + b.cols());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) aug(r, c) = a(r, c);
        for (std::size_t c = 0; c < b.cols(); ++c) aug(r, n + c) = b(r, c);
    }
    auto pivots = row_reduce(aug);
    std::size_t rank = 0;
    for (auto p : pivots)
        if (p < n) ++rank;
    if (rank < n) return std::nullopt;
    Matrix x(n, b.cols());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < b.cols(); ++c) x(r, c) = aug(r, n + c);
    return x;
}

std::optional<std::vector<Rational>> kernel_vector(const Matrix& a) {
    Matrix m = a;
    auto pivots = row_reduce(m);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto p : pivots) is_pivot[p] = true;
    std::size_t free_col = m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) {
        if (!is_pivot[c]) {
            free_col = c;
            break;
        }
    }
    if (free_col == m.cols()) return std::nullopt;
    std::vector<Rational> x(m.cols());
    x[free_col] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = -m(r, free_col);
    return x;
}

}  // namespace pctl::linalg
