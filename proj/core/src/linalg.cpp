#include "rnnlab/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rnnlab {

namespace {

void require_same_dim(const Vector& a, const Vector& b, const char* op) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument(std::string(op) + ": dim mismatch, " +
                                    std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()));
    }
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols != v.dim()) {
        throw std::invalid_argument("matvec: matrix cols " + std::to_string(m.cols) +
                                    " != vector dim " + std::to_string(v.dim()));
    }
    Vector out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * v.data[j];
        out.data[i] = s;
    }
    return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
    if (m.rows != v.dim()) {
        throw std::invalid_argument("matvec_transposed: matrix rows " +
                                    std::to_string(m.rows) + " != vector dim " +
                                    std::to_string(v.dim()));
    }
    Vector out(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        const double vi = v.data[i];
        for (std::size_t j = 0; j < m.cols; ++j) out.data[j] += vi * row[j];
    }
    return out;
}

Vector apply(const DiagMatrix& d, const Vector& v) {
    if (d.dim() != v.dim()) {
        throw std::invalid_argument("diag apply: dim " + std::to_string(d.dim()) +
                                    " != vector dim " + std::to_string(v.dim()));
    }
    Vector out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) out.data[i] = d.diag[i] * v.data[i];
    return out;
}

Matrix to_dense(const DiagMatrix& d) {
    Matrix m(d.dim(), d.dim());
    for (std::size_t i = 0; i < d.dim(); ++i) m.at(i, i) = d.diag[i];
    return m;
}

Vector hadamard(const Vector& a, const Vector& b) {
    require_same_dim(a, b, "hadamard");
    Vector out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

Vector add(const Vector& a, const Vector& b) {
    require_same_dim(a, b, "add");
    Vector out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

Vector sub(const Vector& a, const Vector& b) {
    require_same_dim(a, b, "sub");
    Vector out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out.data[i] = a.data[i] - b.data[i];
    return out;
}

Vector scale(const Vector& a, double k) {
    Vector out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out.data[i] = k * a.data[i];
    return out;
}

Vector sigmoid(const Vector& v) {
    Vector out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-v.data[i]));
    return out;
}

Vector tanh(const Vector& v) {
    Vector out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) out.data[i] = std::tanh(v.data[i]);
    return out;
}

double dot(const Vector& a, const Vector& b) {
    require_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

bool all_finite(const Vector& v) {
    for (double x : v.data)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Matrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

void acc_add(Vector& y, const Vector& x) {
    require_same_dim(y, x, "acc_add");
    for (std::size_t i = 0; i < y.dim(); ++i) y.data[i] += x.data[i];
}

void acc_add_scaled(Vector& y, const Vector& x, double k) {
    require_same_dim(y, x, "acc_add_scaled");
    for (std::size_t i = 0; i < y.dim(); ++i) y.data[i] += k * x.data[i];
}

void acc_add_outer(Matrix& m, const Vector& a, const Vector& b) {
    if (m.rows != a.dim() || m.cols != b.dim()) {
        throw std::invalid_argument("acc_add_outer: matrix " + std::to_string(m.rows) +
                                    "x" + std::to_string(m.cols) + " vs vectors " +
                                    std::to_string(a.dim()) + ", " + std::to_string(b.dim()));
    }
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double* row = m.data.data() + i * m.cols;
        const double ai = a.data[i];
        for (std::size_t j = 0; j < b.dim(); ++j) row[j] += ai * b.data[j];
    }
}

void acc_add_hadamard(std::vector<double>& d, const Vector& a, const Vector& b) {
    if (d.size() != a.dim() || a.dim() != b.dim()) {
        throw std::invalid_argument("acc_add_hadamard: dim mismatch " +
                                    std::to_string(d.size()) + ", " +
                                    std::to_string(a.dim()) + ", " +
                                    std::to_string(b.dim()));
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += a.data[i] * b.data[i];
}

}  // namespace rnnlab
