#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace den {

using Vec = std::vector<double>;

// Dense row-major matrix. Doubles throughout; shapes are validated by the
// operations that consume them, not here.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Vec row(std::size_t i) const {
        return Vec(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                   data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
    }

    void set_row(std::size_t i, const Vec& v) {
        if (v.size() != cols) throw std::invalid_argument("Matrix::set_row: width mismatch");
        for (std::size_t j = 0; j < cols; ++j) (*this)(i, j) = v[j];
    }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

inline Matrix select_columns(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(m.rows, idx.size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(i, j) = m(i, idx[j]);
    return out;
}

inline Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            out(i, j) = m(idx[i], j);
    return out;
}

}  // namespace den
