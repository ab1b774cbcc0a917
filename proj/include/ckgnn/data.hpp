#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ckgnn/rng.hpp"
#include "ckgnn/sparse.hpp"
#include "ckgnn/tensor.hpp"

namespace ckgnn {

struct SplitMasks {
    std::vector<char> train, val, test;

    void validate(int n) const {
        if (static_cast<int>(train.size()) != n || static_cast<int>(val.size()) != n ||
            static_cast<int>(test.size()) != n)
            throw std::invalid_argument("SplitMasks: mask length must equal node count");
        int nt = 0, nv = 0, ns = 0;
        for (int i = 0; i < n; ++i) {
            if (train[i] && val[i]) throw std::invalid_argument("SplitMasks: node " + std::to_string(i) + " in train and val");
            if (train[i] && test[i]) throw std::invalid_argument("SplitMasks: node " + std::to_string(i) + " in train and test");
            if (val[i] && test[i]) throw std::invalid_argument("SplitMasks: node " + std::to_string(i) + " in val and test");
            nt += train[i] ? 1 : 0;
            nv += val[i] ? 1 : 0;
            ns += test[i] ? 1 : 0;
        }
        if (nt == 0 || nv == 0 || ns == 0)
            throw std::invalid_argument("SplitMasks: every split must be nonempty");
    }

    static SplitMasks empty(int n) {
        SplitMasks m;
        m.train.assign(n, 0);
        m.val.assign(n, 0);
        m.test.assign(n, 0);
        return m;
    }
};

struct DatasetBundle {
    Tensor X;                  // n x d
    std::vector<int> labels;   // values in [0, classes)
    int classes = 0;
    std::vector<Edge> edges;
    std::optional<SplitMasks> masks;

    int n() const { return X.rows; }
    int dim() const { return X.cols; }
    Graph graph() const { return Graph::from_edges(n(), edges); }

    void validate() const {
        if (X.rows < 1 || X.cols < 1) throw std::invalid_argument("DatasetBundle: empty feature matrix");
        if (classes < 1) throw std::invalid_argument("DatasetBundle: need at least one class");
        if (static_cast<int>(labels.size()) != X.rows)
            throw std::invalid_argument("DatasetBundle: label count must equal node count");
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] < 0 || labels[i] >= classes)
                throw std::invalid_argument("DatasetBundle: label out of range at node " + std::to_string(i));
        if (!X.all_finite()) throw std::invalid_argument("DatasetBundle: non-finite feature");
        Graph::from_edges(n(), edges);  // validates endpoints, duplicates, weights
        if (masks) masks->validate(n());
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] inline void parse_fail(const std::string& path, int line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace detail

// Line-oriented text format:
//   n d c                      header
//   N <id> <label> <d floats>  one per node, ids 0..n-1 in order
//   E <i> <j> [weight]         undirected edge, i < j, weight defaults 1.0
//   M <train|val|test> <ids>   optional mask lines (may repeat per split)
// Full-line # comments and blank lines are ignored.
inline DatasetBundle load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

    DatasetBundle b;
    int n = 0, d = 0;
    int next_node = 0;
    bool have_header = false, have_mask_line = false;
    SplitMasks masks;
    std::set<std::pair<int, int>> seen_edges;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok) || tok[0] == '#') continue;

        if (!have_header) {
            std::istringstream hs(line);
            if (!(hs >> n >> d >> b.classes) || n < 1 || d < 1 || b.classes < 1)
                detail::parse_fail(path, line_no, "expected header 'n d c' with positive counts");
            std::string extra;
            if (hs >> extra) detail::parse_fail(path, line_no, "trailing tokens after header");
            have_header = true;
            b.X = Tensor(n, d);
            b.labels.assign(n, 0);
            masks = SplitMasks::empty(n);
            continue;
        }

        if (tok == "N") {
            int id = 0, label = 0;
            if (!(ls >> id >> label)) detail::parse_fail(path, line_no, "malformed node line");
            if (id != next_node)
                detail::parse_fail(path, line_no, "node ids must appear in order; expected " +
                                                      std::to_string(next_node) + ", got " +
                                                      std::to_string(id));
            if (label < 0 || label >= b.classes)
                detail::parse_fail(path, line_no, "label " + std::to_string(label) +
                                                      " out of range [0, " +
                                                      std::to_string(b.classes) + ")");
            b.labels[id] = label;
            for (int k = 0; k < d; ++k) {
                double v;
                if (!(ls >> v)) detail::parse_fail(path, line_no, "expected " + std::to_string(d) + " features");
                if (!std::isfinite(v)) detail::parse_fail(path, line_no, "non-finite feature");
                b.X.at(id, k) = v;
            }
            double extra;
            if (ls >> extra) detail::parse_fail(path, line_no, "too many features on node line");
            ++next_node;
        } else if (tok == "E") {
            int i = 0, j = 0;
            if (!(ls >> i >> j)) detail::parse_fail(path, line_no, "malformed edge line");
            if (i < 0 || j < 0 || i >= n || j >= n)
                detail::parse_fail(path, line_no, "edge endpoint out of range");
            if (i >= j) detail::parse_fail(path, line_no, "edges must satisfy i < j");
            double w = 1.0;
            if (ls >> w) {
                if (!(w > 0.0) || !std::isfinite(w))
                    detail::parse_fail(path, line_no, "edge weight must be positive and finite");
            }
            if (!seen_edges.insert({i, j}).second)
                detail::parse_fail(path, line_no, "duplicate edge " + std::to_string(i) + "-" + std::to_string(j));
            b.edges.push_back({i, j, w});
        } else if (tok == "M") {
            std::string split;
            if (!(ls >> split)) detail::parse_fail(path, line_no, "malformed mask line");
            std::vector<char>* mask = nullptr;
            if (split == "train") mask = &masks.train;
            else if (split == "val") mask = &masks.val;
            else if (split == "test") mask = &masks.test;
            else detail::parse_fail(path, line_no, "mask split must be train|val|test, got '" + split + "'");
            int id;
            bool any = false;
            while (ls >> id) {
                any = true;
                if (id < 0 || id >= n) detail::parse_fail(path, line_no, "mask id out of range");
                (*mask)[id] = 1;
            }
            if (!any) detail::parse_fail(path, line_no, "mask line lists no ids");
            have_mask_line = true;
        } else {
            detail::parse_fail(path, line_no, "unknown record type '" + tok + "'");
        }
    }
    if (!have_header) throw std::runtime_error("load_dataset: " + path + " has no header line");
    if (next_node != n)
        throw std::runtime_error("load_dataset: " + path + " declares " + std::to_string(n) +
                                 " nodes but has " + std::to_string(next_node) + " node lines");
    if (have_mask_line) {
        masks.validate(n);
        b.masks = std::move(masks);
    }
    b.validate();
    return b;
}

inline void save_dataset(const DatasetBundle& b, const std::string& path) {
    b.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset: cannot write " + path);
    out << b.n() << ' ' << b.dim() << ' ' << b.classes << '\n';
    for (int i = 0; i < b.n(); ++i) {
        out << "N " << i << ' ' << b.labels[i];
        for (int k = 0; k < b.dim(); ++k) out << ' ' << detail::fmt_double(b.X.at(i, k));
        out << '\n';
    }
    for (const Edge& e : b.edges)
        out << "E " << e.u << ' ' << e.v << ' ' << detail::fmt_double(e.w) << '\n';
    if (b.masks) {
        auto emit = [&out, &b](const char* name, const std::vector<char>& mask) {
            out << "M " << name;
            for (int i = 0; i < b.n(); ++i)
                if (mask[i]) out << ' ' << i;
            out << '\n';
        };
        emit("train", b.masks->train);
        emit("val", b.masks->val);
        emit("test", b.masks->test);
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

// Stochastic block model over c equal blocks. Features are a per-class mean
// (random unit direction scaled by `signal`) plus standard Gaussian noise.
// Draw order is fixed: class directions, then node noise, then one uniform
// per upper-triangle node pair. Masks (20 per class for training when blocks
// are large enough, remainder alternating val/test) are embedded so small
// generated datasets can be trained directly with --split file.
inline DatasetBundle gen_sbm(int n, int c, double p_in, double p_out, int feature_dim,
                             double signal, std::uint64_t seed) {
    if (c < 2) throw std::invalid_argument("gen_sbm: need c >= 2");
    if (n < c) throw std::invalid_argument("gen_sbm: need n >= c");
    if (n % c != 0) throw std::invalid_argument("gen_sbm: c must divide n (equal blocks)");
    if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0))
        throw std::invalid_argument("gen_sbm: need 0 <= p_out < p_in <= 1");
    if (feature_dim < 1) throw std::invalid_argument("gen_sbm: need feature_dim >= 1");
    if (signal < 0.0) throw std::invalid_argument("gen_sbm: signal must be >= 0");

    Rng rng(seed);
    const int block = n / c;
    DatasetBundle b;
    b.classes = c;
    b.labels.resize(n);
    for (int i = 0; i < n; ++i) b.labels[i] = i / block;

    Tensor means(c, feature_dim);
    for (int a = 0; a < c; ++a) {
        double norm2 = 0.0;
        for (int k = 0; k < feature_dim; ++k) {
            means.at(a, k) = rng.normal();
            norm2 += means.at(a, k) * means.at(a, k);
        }
        const double inv = norm2 > 0.0 ? signal / std::sqrt(norm2) : 0.0;
        for (int k = 0; k < feature_dim; ++k) means.at(a, k) *= inv;
    }
    b.X = Tensor(n, feature_dim);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < feature_dim; ++k) b.X.at(i, k) = means.at(b.labels[i], k) + rng.normal();

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double p = b.labels[i] == b.labels[j] ? p_in : p_out;
            const double u = rng.uniform01();  // always drawn, so the stream does not depend on p
            if (u < p) b.edges.push_back({i, j, 1.0});
        }
    }

    const int train_per_class = std::min(20, block / 3);
    if (train_per_class >= 1) {
        SplitMasks m = SplitMasks::empty(n);
        std::vector<int> rest;
        for (int i = 0; i < n; ++i) {
            if (i % block < train_per_class) m.train[i] = 1;
            else rest.push_back(i);
        }
        for (std::size_t r = 0; r < rest.size(); ++r)
            (r % 2 == 0 ? m.val : m.test)[rest[r]] = 1;
        if (rest.size() >= 2) {
            m.validate(n);
            b.masks = std::move(m);
        }
    }
    b.validate();
    return b;
}

// Writes aligned sparse triplets of the composite kernel and the normalized
// adjacency with per-entry absolute differences, preceded by a # summary.
inline void export_kernel_comparison(const SparseMatrix& k_hat, const SparseMatrix& a_hat,
                                     const std::string& path) {
    if (!k_hat.same_pattern(a_hat))
        throw std::invalid_argument("export_kernel_comparison: pattern mismatch");
    double max_diff = 0.0, sum_diff = 0.0;
    for (int e = 0; e < k_hat.nnz(); ++e) {
        const double d = std::abs(k_hat.values[e] - a_hat.values[e]);
        max_diff = std::max(max_diff, d);
        sum_diff += d;
    }
    const double mean_diff = k_hat.nnz() > 0 ? sum_diff / k_hat.nnz() : 0.0;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_kernel_comparison: cannot write " + path);
    out << "# kernel-comparison nnz=" << k_hat.nnz()
        << " mean_abs_diff=" << detail::fmt_double(mean_diff)
        << " max_abs_diff=" << detail::fmt_double(max_diff) << '\n';
    out << "# i\tj\tk_hat\ta_hat\tabs_diff\n";
    const auto pairs = k_hat.stored_pairs();
    for (int e = 0; e < k_hat.nnz(); ++e) {
        const double d = std::abs(k_hat.values[e] - a_hat.values[e]);
        out << pairs[e].first << '\t' << pairs[e].second << '\t'
            << detail::fmt_double(k_hat.values[e]) << '\t' << detail::fmt_double(a_hat.values[e])
            << '\t' << detail::fmt_double(d) << '\n';
    }
    if (!out) throw std::runtime_error("export_kernel_comparison: write failed for " + path);
}

struct KernelComparisonRow {
    int i, j;
    double k_hat, a_hat, abs_diff;
};

inline std::vector<KernelComparisonRow> read_kernel_comparison(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_kernel_comparison: cannot open " + path);
    std::vector<KernelComparisonRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        KernelComparisonRow r{};
        if (!(ls >> r.i >> r.j >> r.k_hat >> r.a_hat >> r.abs_diff))
            detail::parse_fail(path, line_no, "malformed comparison row");
        rows.push_back(r);
    }
    return rows;
}

}  // namespace ckgnn
