#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ckgnn/sparse.hpp"
#include "ckgnn/tensor.hpp"

namespace ckgnn {

// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
// ascending. Absolute accuracy is driven down to ~1e-13 * ||A||_F, far
// inside the 1e-8 tolerances used by the PSD checks.
inline std::vector<double> symmetric_eigenvalues(Tensor a) {
    if (a.rows != a.cols) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
    const int n = a.rows;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (a.at(i, j) != a.at(j, i))
                throw std::invalid_argument("symmetric_eigenvalues: matrix not symmetric");
    double fro = 0.0;
    for (double v : a.data) fro += v * v;
    fro = std::sqrt(fro);
    const double stop = 1e-14 * std::max(1.0, fro);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
        if (std::sqrt(2.0 * off) <= stop) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double tau = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(p, k), akq = a.at(q, k);
                    a.at(p, k) = c * akp - s * akq;
                    a.at(q, k) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a.at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

struct PsdReport {
    double min_eig_s = 0.0;
    double min_eig_i_minus_s = 0.0;
    bool passes = false;
};

// Krein-decomposition check for an aggregation matrix S: S is a valid
// indefinite kernel matrix when both I and I - S are PSD, so the test is
// min eig(I - S) >= -tol. min eig(S) is reported for diagnostics only.
inline constexpr int kDenseGuard = 2000;

inline PsdReport check_psd_decomposition(const SparseMatrix& s, double tol = 1e-8) {
    if (s.n > kDenseGuard)
        throw std::invalid_argument("check_psd_decomposition: n=" + std::to_string(s.n) +
                                    " exceeds the dense guard of " + std::to_string(kDenseGuard));
    if (!s.check_symmetric())
        throw std::invalid_argument("check_psd_decomposition: matrix is not symmetric");

    Tensor dense = s.to_dense();
    Tensor i_minus(dense.rows, dense.cols);
    for (int i = 0; i < dense.rows; ++i)
        for (int j = 0; j < dense.cols; ++j)
            i_minus.at(i, j) = (i == j ? 1.0 : 0.0) - dense.at(i, j);

    PsdReport r;
    r.min_eig_s = symmetric_eigenvalues(std::move(dense)).front();
    r.min_eig_i_minus_s = symmetric_eigenvalues(std::move(i_minus)).front();
    r.passes = r.min_eig_i_minus_s >= -tol;
    return r;
}

}  // namespace ckgnn
