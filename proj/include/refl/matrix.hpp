#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace refl {

// Dense row-major matrix, just enough linear algebra for the solvers.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) {
        return data[i * cols + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        return data[i * cols + j];
    }

    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }
};

} // namespace refl
