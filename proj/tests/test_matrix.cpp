#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fedara/error.h"
#include "fedara/matrix.h"
#include "fedara/rng.h"

using namespace fedara;

TEST_SUITE_BEGIN("matrix");

namespace {

// Scalar-loop reference: local accumulator, k ascending. Must match mat_mul
// exactly (same summation order).
Matrix naive_mul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        for (size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (size_t k = 0; k < a.cols; ++k) {
                s += a.at(i, k) * b.at(k, j);
            }
            c.at(i, j) = s;
        }
    }
    return c;
}

}  // namespace

TEST_CASE("identity times M is M") {
    Rng rng(1);
    Matrix m = gaussian_fill(rng, 2, 2, 1.0);
    CHECK(mat_mul(identity(2), m) == m);
}

TEST_CASE("hand product") {
    Matrix a(2, 2);
    a.data = {1, 2, 3, 4};
    Matrix b(2, 1);
    b.data = {0, 1};
    Matrix c = mat_mul(a, b);
    CHECK(c.at(0, 0) == 2.0);
    CHECK(c.at(1, 0) == 4.0);
}

TEST_CASE("matches the scalar-loop oracle to the last bit") {
    Rng rng(7);
    Matrix a = gaussian_fill(rng, 5, 7, 1.0);
    Matrix b = gaussian_fill(rng, 7, 3, 1.0);
    CHECK(mat_mul(a, b) == naive_mul(a, b));  // 0 ulps: same-order summation
}

TEST_CASE("dimension mismatch is a contract violation") {
    CHECK_THROWS_AS(mat_mul(Matrix(2, 3), Matrix(2, 3)), ContractViolation);
}

TEST_CASE("associativity within tolerance") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a = gaussian_fill(rng, 4, 6, 1.0);
        Matrix b = gaussian_fill(rng, 6, 5, 1.0);
        Matrix c = gaussian_fill(rng, 5, 3, 1.0);
        Matrix left = mat_mul(mat_mul(a, b), c);
        Matrix right = mat_mul(a, mat_mul(b, c));
        double err = frobenius_norm(sub(left, right)) / frobenius_norm(left);
        CHECK(err < 1e-9);
    }
}

TEST_CASE("frobenius norm") {
    CHECK(frobenius_norm(Matrix(3, 4)) == 0.0);
    Matrix m(1, 2);
    m.data = {3, 4};
    CHECK(frobenius_norm(m) == 5.0);

    Rng rng(5);
    Matrix r = gaussian_fill(rng, 4, 4, 1.0);
    Matrix gram = mat_mul(transpose(r), r);
    double trace = 0.0;
    for (size_t i = 0; i < 4; ++i) {
        trace += gram.at(i, i);
    }
    CHECK(frobenius_norm(r) == doctest::Approx(std::sqrt(trace)).epsilon(1e-12));
}

TEST_CASE("gaussian_fill determinism and finiteness") {
    Rng a(31), b(31);
    Matrix ma = gaussian_fill(a, 6, 5, 0.5);
    Matrix mb = gaussian_fill(b, 6, 5, 0.5);
    CHECK(ma == mb);
    CHECK(ma.all_finite());
    CHECK_THROWS_AS(gaussian_fill(a, 2, 2, -1.0), ContractViolation);
}

TEST_CASE("top_k basics") {
    std::vector<uint8_t> alive{1, 1, 1};
    CHECK(top_k_indices({5, 1, 9}, 2, alive) == std::vector<size_t>{0, 2});
    CHECK(top_k_indices({2, 2, 2}, 2, alive) == std::vector<size_t>{0, 1});  // tie rule
    CHECK_THROWS_AS(top_k_indices({1, 2, 3}, 4, alive), ContractViolation);
    CHECK_THROWS_AS(top_k_indices({1, 2, 3}, 3, std::vector<uint8_t>{1, 0, 1}),
                    ContractViolation);
}

TEST_CASE("top_k matches a full-sort oracle and is pure") {
    Rng rng(17);
    std::vector<double> scores(100);
    for (double& s : scores) {
        s = rng.next_double();
    }
    std::vector<uint8_t> alive(100, 1);

    std::vector<size_t> order(100);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    });
    std::vector<size_t> expect(order.begin(), order.begin() + 30);
    std::sort(expect.begin(), expect.end());

    CHECK(top_k_indices(scores, 30, alive) == expect);
    CHECK(top_k_indices(scores, 30, alive) == expect);  // repeated call identical
}

TEST_CASE("top_k ignores dead positions") {
    std::vector<double> scores{10, 20, 30, 40};
    std::vector<uint8_t> alive{1, 0, 1, 0};
    CHECK(top_k_indices(scores, 2, alive) == std::vector<size_t>{0, 2});
}

TEST_SUITE_END();
