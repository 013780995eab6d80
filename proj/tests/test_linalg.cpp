#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "rnnlab/linalg.hpp"

using namespace rnnlab;

TEST_SUITE("linalg") {

TEST_CASE("matvec identity and zero") {
    Vector v{1.0, 2.0, 3.0};
    CHECK(matvec(Matrix::identity(3), v) == v);

    Matrix zero(2, 3);
    Vector fives{5.0, 5.0, 5.0};
    CHECK(matvec(zero, fives) == Vector{0.0, 0.0});
}

TEST_CASE("matvec matches a scalar triple loop") {
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(2, 2);
    for (double& x : m.data) x = dist(rng);
    Vector v = testutil::random_vector(2, rng);

    Vector got = matvec(m, v);
    for (std::size_t i = 0; i < 2; ++i) {
        double expect = 0.0;
        for (std::size_t j = 0; j < 2; ++j) expect += m.at(i, j) * v[j];
        CHECK(got[i] == expect);
    }
}

TEST_CASE("matvec dimension mismatch names both dims") {
    Matrix m(2, 3);
    Vector v(4);
    CHECK_THROWS_WITH_AS(matvec(m, v), "matvec: matrix cols 3 != vector dim 4",
                         std::invalid_argument);
}

TEST_CASE("hadamard basics") {
    CHECK(hadamard(Vector{1.0, 1.0}, Vector{3.0, -7.0}) == Vector{3.0, -7.0});
    CHECK(hadamard(Vector{0.0, 0.0}, Vector{3.0, -7.0}) == Vector{0.0, 0.0});
    CHECK(hadamard(Vector{0.5, 2.0}, Vector{4.0, 0.25}) == Vector{2.0, 0.5});
    CHECK_THROWS_AS(hadamard(Vector(2), Vector(3)), std::invalid_argument);
}

TEST_CASE("sigmoid and tanh reference points") {
    CHECK(sigmoid(Vector{0.0})[0] == 0.5);
    CHECK(rnnlab::tanh(Vector{0.0})[0] == 0.0);
    CHECK(rnnlab::tanh(Vector{1.0})[0] == doctest::Approx(0.7615941559557649).epsilon(1e-12));
}

TEST_CASE("matvec distributes over vector addition") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(5, 4);
        for (double& x : m.data) x = dist(rng);
        Vector a = testutil::random_vector(4, rng);
        Vector b = testutil::random_vector(4, rng);
        Vector lhs = matvec(m, add(a, b));
        Vector rhs = add(matvec(m, a), matvec(m, b));
        CHECK(testutil::max_abs_diff(lhs.data, rhs.data) <= 1e-12);
    }
}

TEST_CASE("sigmoid symmetry: s(x) + s(-x) == 1") {
    std::mt19937_64 rng(8);
    Vector x = testutil::random_vector(64, rng, -6.0, 6.0);
    Vector pos = sigmoid(x);
    Vector neg = sigmoid(scale(x, -1.0));
    for (std::size_t k = 0; k < x.dim(); ++k)
        CHECK(pos[k] + neg[k] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tanh is odd, exactly") {
    std::mt19937_64 rng(9);
    Vector x = testutil::random_vector(64, rng, -4.0, 4.0);
    Vector pos = rnnlab::tanh(x);
    Vector neg = rnnlab::tanh(scale(x, -1.0));
    for (std::size_t k = 0; k < x.dim(); ++k) CHECK(pos[k] == -neg[k]);
}

TEST_CASE("diagonal application equals dense application") {
    std::mt19937_64 rng(10);
    DiagMatrix d(6);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (double& x : d.diag) x = dist(rng);
    Vector v = testutil::random_vector(6, rng);

    Vector via_diag = apply(d, v);
    Vector via_dense = matvec(to_dense(d), v);
    CHECK(testutil::max_abs_diff(via_diag.data, via_dense.data) <= 1e-15);
}

TEST_CASE("results stay finite") {
    std::mt19937_64 rng(11);
    Vector big = testutil::random_vector(16, rng, -500.0, 500.0);
    CHECK(all_finite(sigmoid(big)));
    CHECK(all_finite(rnnlab::tanh(big)));
    Matrix m(4, 16, 1.0);
    CHECK(all_finite(matvec(m, big)));
}

}  // TEST_SUITE
