#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace rnnlab {

// Dense double-precision vector. Values are treated as immutable once an
// operation has returned them; all ops below hand back fresh vectors.
struct Vector {
    std::vector<double> data;

    Vector() = default;
    explicit Vector(std::size_t n, double value = 0.0) : data(n, value) {}
    Vector(std::initializer_list<double> init) : data(init) {}

    std::size_t dim() const { return data.size(); }
    double operator[](std::size_t i) const { return data[i]; }
    double& operator[](std::size_t i) { return data[i]; }

    bool operator==(const Vector&) const = default;
};

// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double value = 0.0)
        : rows(r), cols(c), data(r * c, value) {}

    static Matrix identity(std::size_t n);

    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

// Diagonal matrix, stored as its diagonal.
struct DiagMatrix {
    std::vector<double> diag;

    DiagMatrix() = default;
    explicit DiagMatrix(std::size_t n, double value = 0.0) : diag(n, value) {}

    std::size_t dim() const { return diag.size(); }
    bool operator==(const DiagMatrix&) const = default;
};

// m * v. Throws std::invalid_argument naming both dims on mismatch.
Vector matvec(const Matrix& m, const Vector& v);
// m^T * v.
Vector matvec_transposed(const Matrix& m, const Vector& v);
// diag(d) * v, elementwise.
Vector apply(const DiagMatrix& d, const Vector& v);
// Dense equivalent of a diagonal matrix.
Matrix to_dense(const DiagMatrix& d);

Vector hadamard(const Vector& a, const Vector& b);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double k);

// Elementwise logistic sigmoid; output strictly inside (0,1) away from
// saturation.
Vector sigmoid(const Vector& v);
// Elementwise hyperbolic tangent.
Vector tanh(const Vector& v);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

// Accumulation helpers for gradient buffers. These mutate their first
// argument and are not part of the value-semantics surface above.
void acc_add(Vector& y, const Vector& x);
void acc_add_scaled(Vector& y, const Vector& x, double k);
void acc_add_outer(Matrix& m, const Vector& a, const Vector& b);
void acc_add_hadamard(std::vector<double>& d, const Vector& a, const Vector& b);

}  // namespace rnnlab
