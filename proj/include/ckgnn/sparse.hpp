#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ckgnn/tensor.hpp"

namespace ckgnn {

// CSR square matrix. Column indices are strictly increasing within each row.
struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr;   // length n+1
    std::vector<int> col_idx;   // length nnz
    std::vector<double> values; // length nnz
    bool symmetric = false;

    int nnz() const { return row_ptr.empty() ? 0 : row_ptr.back(); }

    bool same_pattern(const SparseMatrix& o) const {
        return n == o.n && row_ptr == o.row_ptr && col_idx == o.col_idx;
    }

    // stored entries as (row, col) in CSR order
    std::vector<std::pair<int, int>> stored_pairs() const {
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(static_cast<std::size_t>(nnz()));
        for (int i = 0; i < n; ++i)
            for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
                pairs.emplace_back(i, col_idx[e]);
        return pairs;
    }

    // value at (i, j), 0 if not stored; binary search within the row
    double value_at(int i, int j) const {
        const int* lo = col_idx.data() + row_ptr[i];
        const int* hi = col_idx.data() + row_ptr[i + 1];
        const int* it = std::lower_bound(lo, hi, j);
        if (it == hi || *it != j) return 0.0;
        return values[static_cast<std::size_t>(it - col_idx.data())];
    }

    bool has_entry(int i, int j) const {
        const int* lo = col_idx.data() + row_ptr[i];
        const int* hi = col_idx.data() + row_ptr[i + 1];
        const int* it = std::lower_bound(lo, hi, j);
        return it != hi && *it == j;
    }

    // structural + exact-value symmetry
    bool check_symmetric() const {
        for (int i = 0; i < n; ++i)
            for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
                const int j = col_idx[e];
                if (!has_entry(j, i) || value_at(j, i) != values[e]) return false;
            }
        return true;
    }

    Tensor to_dense() const {
        Tensor d(n, n);
        for (int i = 0; i < n; ++i)
            for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
                d.at(i, col_idx[e]) = values[e];
        return d;
    }

    void validate() const {
        if (static_cast<int>(row_ptr.size()) != n + 1)
            throw std::invalid_argument("SparseMatrix: row_ptr length != n+1");
        if (row_ptr.front() != 0 || row_ptr.back() != static_cast<int>(col_idx.size()) ||
            col_idx.size() != values.size())
            throw std::invalid_argument("SparseMatrix: inconsistent offsets");
        for (int i = 0; i < n; ++i) {
            if (row_ptr[i] > row_ptr[i + 1])
                throw std::invalid_argument("SparseMatrix: row_ptr must be non-decreasing");
            for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
                if (col_idx[e] < 0 || col_idx[e] >= n)
                    throw std::invalid_argument("SparseMatrix: column index out of range");
                if (e > row_ptr[i] && col_idx[e] <= col_idx[e - 1])
                    throw std::invalid_argument("SparseMatrix: columns not strictly increasing");
            }
        }
    }
};

struct Edge {
    int u = 0;
    int v = 0;
    double w = 1.0;
};

// Undirected graph as validated edge list: no self-loops, no duplicates,
// strictly positive weights.
struct Graph {
    int n = 0;
    std::vector<Edge> edges;

    static Graph from_edges(int n, std::vector<Edge> edges) {
        if (n <= 0) throw std::invalid_argument("Graph: node count must be positive");
        for (auto& e : edges) {
            if (e.u == e.v)
                throw std::invalid_argument("Graph: self-loop at node " + std::to_string(e.u));
            if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n)
                throw std::invalid_argument("Graph: edge endpoint out of range");
            if (!(e.w > 0.0))
                throw std::invalid_argument("Graph: edge weight must be strictly positive");
            if (e.u > e.v) std::swap(e.u, e.v);
        }
        std::vector<std::pair<int, int>> seen;
        seen.reserve(edges.size());
        for (const auto& e : edges) seen.emplace_back(e.u, e.v);
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            throw std::invalid_argument("Graph: duplicate undirected edge");
        Graph g;
        g.n = n;
        g.edges = std::move(edges);
        return g;
    }
};

// Symmetric zero-diagonal adjacency matrix A from an undirected edge list.
inline SparseMatrix adjacency_matrix(const Graph& g) {
    SparseMatrix a;
    a.n = g.n;
    a.symmetric = true;
    std::vector<int> count(g.n, 0);
    for (const auto& e : g.edges) {
        ++count[e.u];
        ++count[e.v];
    }
    a.row_ptr.assign(g.n + 1, 0);
    for (int i = 0; i < g.n; ++i) a.row_ptr[i + 1] = a.row_ptr[i] + count[i];
    const int nnz = a.row_ptr.back();
    a.col_idx.assign(nnz, 0);
    a.values.assign(nnz, 0.0);
    std::vector<int> cursor(a.row_ptr.begin(), a.row_ptr.end() - 1);
    // per-row (col, value) pairs, then sort columns
    for (const auto& e : g.edges) {
        a.col_idx[cursor[e.u]] = e.v;
        a.values[cursor[e.u]++] = e.w;
        a.col_idx[cursor[e.v]] = e.u;
        a.values[cursor[e.v]++] = e.w;
    }
    for (int i = 0; i < g.n; ++i) {
        const int b = a.row_ptr[i], e = a.row_ptr[i + 1];
        std::vector<std::pair<int, double>> row;
        row.reserve(e - b);
        for (int k = b; k < e; ++k) row.emplace_back(a.col_idx[k], a.values[k]);
        std::sort(row.begin(), row.end());
        for (int k = b; k < e; ++k) {
            a.col_idx[k] = row[k - b].first;
            a.values[k] = row[k - b].second;
        }
    }
    return a;
}

// A~ = A + I. Rejects input that already stores any diagonal entry, which
// also makes a second application fail instead of silently stacking loops.
inline SparseMatrix add_self_loops(const SparseMatrix& a) {
    a.validate();
    for (int i = 0; i < a.n; ++i)
        if (a.has_entry(i, i))
            throw std::invalid_argument("add_self_loops: diagonal entry already present at node " +
                                        std::to_string(i));
    SparseMatrix t;
    t.n = a.n;
    t.symmetric = a.symmetric;
    t.row_ptr.assign(a.n + 1, 0);
    for (int i = 0; i < a.n; ++i)
        t.row_ptr[i + 1] = t.row_ptr[i] + (a.row_ptr[i + 1] - a.row_ptr[i]) + 1;
    t.col_idx.reserve(t.row_ptr.back());
    t.values.reserve(t.row_ptr.back());
    for (int i = 0; i < a.n; ++i) {
        bool placed = false;
        for (int e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
            if (!placed && a.col_idx[e] > i) {
                t.col_idx.push_back(i);
                t.values.push_back(1.0);
                placed = true;
            }
            t.col_idx.push_back(a.col_idx[e]);
            t.values.push_back(a.values[e]);
        }
        if (!placed) {
            t.col_idx.push_back(i);
            t.values.push_back(1.0);
        }
    }
    return t;
}

using DegreeVector = std::vector<double>;

// row sums of A~; every entry >= 1 once self-loops are in
inline DegreeVector weighted_degrees(const SparseMatrix& a_tilde) {
    DegreeVector d(a_tilde.n, 0.0);
    for (int i = 0; i < a_tilde.n; ++i)
        for (int e = a_tilde.row_ptr[i]; e < a_tilde.row_ptr[i + 1]; ++e)
            d[i] += a_tilde.values[e];
    return d;
}

// A^ with a^_{ij} = a~_{ij} / sqrt(d_i d_j). The divisor is formed as
// sqrt(d_i * d_j) so the (i,j) and (j,i) entries come out bit-equal.
inline SparseMatrix symmetric_normalize(const SparseMatrix& a_tilde) {
    const DegreeVector d = weighted_degrees(a_tilde);
    for (int i = 0; i < a_tilde.n; ++i)
        if (!(d[i] > 0.0))
            throw std::invalid_argument("symmetric_normalize: row " + std::to_string(i) +
                                        " has non-positive sum; add self-loops first");
    SparseMatrix out = a_tilde;
    for (int i = 0; i < out.n; ++i)
        for (int e = out.row_ptr[i]; e < out.row_ptr[i + 1]; ++e)
            out.values[e] = a_tilde.values[e] / std::sqrt(d[i] * d[out.col_idx[e]]);
    return out;
}

// Y = S * X, row-major accumulation in stored-entry order
inline Tensor spmm(const SparseMatrix& s, const Tensor& x) {
    if (s.n != x.rows)
        throw std::invalid_argument("spmm: S is " + std::to_string(s.n) + "x" + std::to_string(s.n) +
                                    " but X has " + std::to_string(x.rows) + " rows");
    Tensor y(s.n, x.cols);
    for (int i = 0; i < s.n; ++i) {
        double* yrow = y.data.data() + static_cast<std::size_t>(i) * x.cols;
        for (int e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
            const double v = s.values[e];
            const double* xrow = x.data.data() + static_cast<std::size_t>(s.col_idx[e]) * x.cols;
            for (int c = 0; c < x.cols; ++c) yrow[c] += v * xrow[c];
        }
    }
    return y;
}

// normalized adjacency of a graph: A -> A+I -> D^{-1/2}(A+I)D^{-1/2}
inline SparseMatrix normalized_adjacency(const Graph& g) {
    return symmetric_normalize(add_self_loops(adjacency_matrix(g)));
}

}  // namespace ckgnn
