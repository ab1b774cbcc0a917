#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "ckgnn/rng.hpp"

namespace ckgnn {

// Dense 2-D array of 64-bit floats, row-major. Scalars are 1x1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("Tensor: negative shape");
    }
    Tensor(std::initializer_list<std::initializer_list<double>> init) {
        rows = static_cast<int>(init.size());
        cols = rows > 0 ? static_cast<int>(init.begin()->size()) : 0;
        data.reserve(static_cast<std::size_t>(rows) * cols);
        for (const auto& row : init) {
            if (static_cast<int>(row.size()) != cols)
                throw std::invalid_argument("Tensor: ragged initializer");
            data.insert(data.end(), row.begin(), row.end());
        }
    }

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static Tensor identity(int n) {
        Tensor t(n, n);
        for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
        return t;
    }
    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }
    // Glorot/Xavier uniform over (fan_in, fan_out) = (r, c)
    static Tensor glorot(int r, int c, Rng& rng) {
        Tensor t(r, c);
        const double limit = std::sqrt(6.0 / (r + c));
        for (auto& v : t.data) v = rng.uniform(-limit, limit);
        return t;
    }

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }

    std::string shape_str() const {
        return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    double max_abs_diff(const Tensor& o) const {
        if (!same_shape(o)) throw std::invalid_argument("max_abs_diff: shape mismatch");
        double m = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
            m = std::max(m, std::abs(data[i] - o.data[i]));
        return m;
    }
};

// C = A * B, ikj order (the j-inner loop vectorizes), fixed accumulation order.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
    Tensor c(a.rows, b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
    for (int i = 0; i < m; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * k;
        double* crow = c.data.data() + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.data.data() + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C = A^T * B without materializing the transpose
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_tn: shape mismatch");
    Tensor c(a.cols, b.cols);
    const int m = a.cols, k = a.rows, n = b.cols;
    for (int p = 0; p < k; ++p) {
        const double* arow = a.data.data() + static_cast<std::size_t>(p) * m;
        const double* brow = b.data.data() + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.data.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C = A * B^T
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_nt: shape mismatch");
    Tensor c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + static_cast<std::size_t>(j) * b.cols;
            double s = 0.0;
            for (int p = 0; p < a.cols; ++p) s += arow[p] * brow[p];
            c.at(i, j) = s;
        }
    }
    return c;
}

}  // namespace ckgnn
