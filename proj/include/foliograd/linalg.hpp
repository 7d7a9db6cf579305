#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "foliograd/errors.hpp"

namespace foliograd {

// Dense row-major matrix of doubles. Deliberately minimal: the problems here
// are m-by-m with m in the single digits.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::vector<double> row(std::size_t r) const {
        return std::vector<double>(data.begin() + static_cast<long>(r * cols),
                                   data.begin() + static_cast<long>((r + 1) * cols));
    }

    std::vector<double> col(std::size_t c) const {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
        return out;
    }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> matvec(const Matrix& m, const std::vector<double>& v) {
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) s += m.at(r, c) * v[c];
        out[r] = s;
    }
    return out;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample standard deviation, (n-1) denominator.
inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Cholesky factor L (lower) of a symmetric positive semi-definite matrix.
// Zero pivots (within tol) produce a zero column, so exactly singular PSD
// inputs such as perfectly correlated assets still factor. A pivot below
// -tol means the matrix is not PSD.
inline Matrix cholesky_psd(const Matrix& a, double tol = 1e-10) {
    if (a.rows != a.cols) throw DataError("cholesky: matrix not square");
    const std::size_t n = a.rows;
    Matrix l(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a.at(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l.at(j, k) * l.at(j, k);
        if (d < -tol * (1.0 + std::fabs(a.at(j, j)))) {
            throw DataError("matrix not positive semi-definite");
        }
        if (d <= tol) {
            // semi-definite direction: zero column, but off-diagonal mass
            // below it must also vanish
            for (std::size_t i = j; i < n; ++i) l.at(i, j) = 0.0;
            continue;
        }
        double ljj = std::sqrt(d);
        l.at(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            l.at(i, j) = s / ljj;
        }
    }
    return l;
}

// Column means of the rows [begin, end).
inline std::vector<double> column_means(const Matrix& m, std::size_t begin,
                                        std::size_t end) {
    std::vector<double> mu(m.cols, 0.0);
    if (end <= begin) return mu;
    for (std::size_t r = begin; r < end; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) mu[c] += m.at(r, c);
    for (auto& x : mu) x /= static_cast<double>(end - begin);
    return mu;
}

// Sample covariance ((n-1) denominator) of the rows [begin, end).
inline Matrix sample_covariance(const Matrix& m, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    Matrix cov(m.cols, m.cols, 0.0);
    if (n < 2) return cov;
    std::vector<double> mu = column_means(m, begin, end);
    for (std::size_t r = begin; r < end; ++r) {
        for (std::size_t i = 0; i < m.cols; ++i) {
            double di = m.at(r, i) - mu[i];
            for (std::size_t j = i; j < m.cols; ++j) {
                cov.at(i, j) += di * (m.at(r, j) - mu[j]);
            }
        }
    }
    for (std::size_t i = 0; i < m.cols; ++i)
        for (std::size_t j = i; j < m.cols; ++j) {
            cov.at(i, j) /= static_cast<double>(n - 1);
            cov.at(j, i) = cov.at(i, j);
        }
    return cov;
}

}  // namespace foliograd
