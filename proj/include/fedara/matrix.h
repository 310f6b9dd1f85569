#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fedara {

class Rng;

// Dense row-major matrix of doubles. Once returned from an operation a matrix
// is treated as immutable and may be shared read-only across workers.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;  // rows * cols

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t i, size_t j) { return data[i * cols + j]; }
    double at(size_t i, size_t j) const { return data[i * cols + j]; }
    size_t size() const { return data.size(); }
    bool all_finite() const;
    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
    bool operator==(const Matrix& other) const = default;
};

// Plain triple-loop product with 64-bit accumulation, k ascending per entry.
Matrix mat_mul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix identity(size_t n);

// a - b
Matrix sub(const Matrix& a, const Matrix& b);

// i.i.d. N(0, stddev^2) entries drawn row-major from rng.
Matrix gaussian_fill(Rng& rng, size_t rows, size_t cols, double stddev);

double frobenius_norm(const Matrix& m);
double frobenius_inner(const Matrix& a, const Matrix& b);

// Indices (ascending) of the k largest scores among alive positions; ties
// break toward the lower index. Scores at alive positions must be finite;
// dead positions are never inspected.
std::vector<size_t> top_k_indices(const std::vector<double>& scores, size_t k,
                                  const std::vector<uint8_t>& alive);

}  // namespace fedara
