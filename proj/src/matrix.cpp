#include "fedara/matrix.h"

#include <algorithm>
#include <cmath>

#include "fedara/error.h"
#include "fedara/rng.h"

namespace fedara {

bool Matrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    FED_CHECK(a.cols == b.rows, "mat_mul dimension mismatch");
    Matrix c(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[i * a.cols];
        double* crow = &c.data[i * c.cols];
        for (size_t k = 0; k < a.cols; ++k) {
            double aik = arow[k];
            const double* brow = &b.data[k * b.cols];
            for (size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (size_t i = 0; i < m.rows; ++i) {
        for (size_t j = 0; j < m.cols; ++j) {
            t.at(j, i) = m.at(i, j);
        }
    }
    return t;
}

Matrix identity(size_t n) {
    Matrix m(n, n);
    for (size_t i = 0; i < n; ++i) {
        m.at(i, i) = 1.0;
    }
    return m;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    FED_CHECK(a.same_shape(b), "sub shape mismatch");
    Matrix c(a.rows, a.cols);
    for (size_t i = 0; i < a.data.size(); ++i) {
        c.data[i] = a.data[i] - b.data[i];
    }
    return c;
}

Matrix gaussian_fill(Rng& rng, size_t rows, size_t cols, double stddev) {
    FED_CHECK(stddev > 0.0, "gaussian_fill stddev must be positive");
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = stddev * rng.next_gaussian();
    }
    return m;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data) {
        s += v * v;
    }
    return std::sqrt(s);
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    FED_CHECK(a.same_shape(b), "frobenius_inner shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        s += a.data[i] * b.data[i];
    }
    return s;
}

std::vector<size_t> top_k_indices(const std::vector<double>& scores, size_t k,
                                  const std::vector<uint8_t>& alive) {
    FED_CHECK(scores.size() == alive.size(), "top_k scores/alive length mismatch");
    std::vector<size_t> candidates;
    candidates.reserve(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        if (alive[i]) {
            FED_CHECK(std::isfinite(scores[i]), "top_k score at alive position not finite");
            candidates.push_back(i);
        }
    }
    FED_CHECK(k <= candidates.size(), "top_k k exceeds alive count");
    std::sort(candidates.begin(), candidates.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;  // tie: lower index wins
    });
    candidates.resize(k);
    std::sort(candidates.begin(), candidates.end());
    return candidates;
}

}  // namespace fedara
