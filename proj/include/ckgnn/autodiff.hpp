#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ckgnn/rng.hpp"
#include "ckgnn/sparse.hpp"
#include "ckgnn/tensor.hpp"

namespace ckgnn::ad {

struct Node {
    Tensor value;
    Tensor grad;  // allocated iff requires_grad
    bool requires_grad = false;
};

using Var = std::shared_ptr<Node>;

inline const Tensor& val(const Var& v) { return v->value; }

// Reverse-mode tape over dense tensors. Each primitive records one backward
// closure; backward() replays them once in reverse. Every forward output is
// checked finite so a NaN/Inf surfaces where it is produced, not epochs later.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        if (requires_grad) n->grad = Tensor(n->value.rows, n->value.cols);
        return n;
    }

    Var matmul(const Var& a, const Var& b) {
        Var o = make(ckgnn::matmul(a->value, b->value), a->requires_grad || b->requires_grad, "matmul");
        if (o->requires_grad) record([a, b, o] {
            if (a->requires_grad) accumulate(a->grad, matmul_nt(o->grad, b->value));
            if (b->requires_grad) accumulate(b->grad, matmul_tn(a->value, o->grad));
        });
        return o;
    }

    Var add(const Var& a, const Var& b) {
        require_same_shape(a, b, "add");
        Tensor out = a->value;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b->value.data[i];
        Var o = make(std::move(out), a->requires_grad || b->requires_grad, "add");
        if (o->requires_grad) record([a, b, o] {
            if (a->requires_grad) accumulate(a->grad, o->grad);
            if (b->requires_grad) accumulate(b->grad, o->grad);
        });
        return o;
    }

    Var sub(const Var& a, const Var& b) {
        require_same_shape(a, b, "sub");
        Tensor out = a->value;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b->value.data[i];
        Var o = make(std::move(out), a->requires_grad || b->requires_grad, "sub");
        if (o->requires_grad) record([a, b, o] {
            if (a->requires_grad) accumulate(a->grad, o->grad);
            if (b->requires_grad)
                for (std::size_t i = 0; i < o->grad.size(); ++i) b->grad.data[i] -= o->grad.data[i];
        });
        return o;
    }

    Var mul(const Var& a, const Var& b) {
        require_same_shape(a, b, "mul");
        Tensor out = a->value;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b->value.data[i];
        Var o = make(std::move(out), a->requires_grad || b->requires_grad, "mul");
        if (o->requires_grad) record([a, b, o] {
            if (a->requires_grad)
                for (std::size_t i = 0; i < o->grad.size(); ++i)
                    a->grad.data[i] += b->value.data[i] * o->grad.data[i];
            if (b->requires_grad)
                for (std::size_t i = 0; i < o->grad.size(); ++i)
                    b->grad.data[i] += a->value.data[i] * o->grad.data[i];
        });
        return o;
    }

    // x (n x w) plus a row vector b (1 x w) broadcast over rows
    Var add_rowvec(const Var& x, const Var& b) {
        if (b->value.rows != 1 || b->value.cols != x->value.cols)
            throw std::invalid_argument("add_rowvec: bias must be 1 x " +
                                        std::to_string(x->value.cols));
        Tensor out = x->value;
        for (int i = 0; i < out.rows; ++i)
            for (int j = 0; j < out.cols; ++j) out.at(i, j) += b->value.data[j];
        Var o = make(std::move(out), x->requires_grad || b->requires_grad, "add_rowvec");
        if (o->requires_grad) record([x, b, o] {
            if (x->requires_grad) accumulate(x->grad, o->grad);
            if (b->requires_grad)
                for (int i = 0; i < o->value.rows; ++i)
                    for (int j = 0; j < o->value.cols; ++j) b->grad.data[j] += o->grad.at(i, j);
        });
        return o;
    }

    Var scale(const Var& a, double c) {
        Tensor out = a->value;
        for (auto& v : out.data) v *= c;
        Var o = make(std::move(out), a->requires_grad, "scale");
        if (o->requires_grad) record([a, o, c] {
            for (std::size_t i = 0; i < o->grad.size(); ++i) a->grad.data[i] += c * o->grad.data[i];
        });
        return o;
    }

    Var concat_cols(const std::vector<Var>& xs) {
        if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
        const int rows = xs.front()->value.rows;
        int cols = 0;
        bool rg = false;
        for (const auto& x : xs) {
            if (x->value.rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
            cols += x->value.cols;
            rg = rg || x->requires_grad;
        }
        Tensor out(rows, cols);
        int off = 0;
        for (const auto& x : xs) {
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < x->value.cols; ++j) out.at(i, off + j) = x->value.at(i, j);
            off += x->value.cols;
        }
        Var o = make(std::move(out), rg, "concat_cols");
        if (o->requires_grad) record([xs, o] {
            int off = 0;
            for (const auto& x : xs) {
                if (x->requires_grad)
                    for (int i = 0; i < x->value.rows; ++i)
                        for (int j = 0; j < x->value.cols; ++j)
                            x->grad.at(i, j) += o->grad.at(i, off + j);
                off += x->value.cols;
            }
        });
        return o;
    }

    Var concat_cols(const Var& a, const Var& b) { return concat_cols(std::vector<Var>{a, b}); }

    Var slice_rows(const Var& x, int begin, int end) {
        if (begin < 0 || end > x->value.rows || begin >= end)
            throw std::invalid_argument("slice_rows: bad range");
        Tensor out(end - begin, x->value.cols);
        for (int i = begin; i < end; ++i)
            for (int j = 0; j < x->value.cols; ++j) out.at(i - begin, j) = x->value.at(i, j);
        Var o = make(std::move(out), x->requires_grad, "slice_rows");
        if (o->requires_grad) record([x, o, begin] {
            for (int i = 0; i < o->value.rows; ++i)
                for (int j = 0; j < o->value.cols; ++j) x->grad.at(begin + i, j) += o->grad.at(i, j);
        });
        return o;
    }

    Var relu(const Var& x) {
        Tensor out = x->value;
        for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        Var o = make(std::move(out), x->requires_grad, "relu");
        // subgradient 0 at exactly 0
        if (o->requires_grad) record([x, o] {
            for (std::size_t i = 0; i < o->grad.size(); ++i)
                if (x->value.data[i] > 0.0) x->grad.data[i] += o->grad.data[i];
        });
        return o;
    }

    Var leaky_relu(const Var& x, double slope) {
        Tensor out = x->value;
        for (auto& v : out.data) v = v > 0.0 ? v : slope * v;
        Var o = make(std::move(out), x->requires_grad, "leaky_relu");
        if (o->requires_grad) record([x, o, slope] {
            for (std::size_t i = 0; i < o->grad.size(); ++i)
                x->grad.data[i] += (x->value.data[i] > 0.0 ? 1.0 : slope) * o->grad.data[i];
        });
        return o;
    }

    Var exp(const Var& x) {
        Tensor out = x->value;
        for (auto& v : out.data) v = std::exp(v);
        Var o = make(std::move(out), x->requires_grad, "exp");
        if (o->requires_grad) record([x, o] {
            for (std::size_t i = 0; i < o->grad.size(); ++i)
                x->grad.data[i] += o->value.data[i] * o->grad.data[i];
        });
        return o;
    }

    Var row_softmax(const Var& x) {
        Tensor out = x->value;
        for (int i = 0; i < out.rows; ++i) {
            double* row = out.data.data() + static_cast<std::size_t>(i) * out.cols;
            double m = row[0];
            for (int j = 1; j < out.cols; ++j) m = std::max(m, row[j]);
            double s = 0.0;
            for (int j = 0; j < out.cols; ++j) {
                row[j] = std::exp(row[j] - m);
                s += row[j];
            }
            for (int j = 0; j < out.cols; ++j) row[j] /= s;
        }
        Var o = make(std::move(out), x->requires_grad, "row_softmax");
        if (o->requires_grad) record([x, o] {
            for (int i = 0; i < o->value.rows; ++i) {
                const double* p = o->value.data.data() + static_cast<std::size_t>(i) * o->value.cols;
                const double* u = o->grad.data.data() + static_cast<std::size_t>(i) * o->value.cols;
                double dot = 0.0;
                for (int j = 0; j < o->value.cols; ++j) dot += u[j] * p[j];
                double* g = x->grad.data.data() + static_cast<std::size_t>(i) * o->value.cols;
                for (int j = 0; j < o->value.cols; ++j) g[j] += p[j] * (u[j] - dot);
            }
        });
        return o;
    }

    // softmax over variable-length contiguous segments of a column vector;
    // offsets has length #segments+1 (a CSR row_ptr fits directly)
    Var segment_softmax(const Var& x, const std::vector<int>& offsets) {
        if (x->value.cols != 1) throw std::invalid_argument("segment_softmax: input must be m x 1");
        if (offsets.empty() || offsets.front() != 0 || offsets.back() != x->value.rows)
            throw std::invalid_argument("segment_softmax: offsets do not cover the input");
        Tensor out = x->value;
        for (std::size_t seg = 0; seg + 1 < offsets.size(); ++seg) {
            const int b = offsets[seg], e = offsets[seg + 1];
            if (b >= e)
                throw std::invalid_argument("segment_softmax: empty segment " + std::to_string(seg));
            double m = out.data[b];
            for (int k = b + 1; k < e; ++k) m = std::max(m, out.data[k]);
            double s = 0.0;
            for (int k = b; k < e; ++k) {
                out.data[k] = std::exp(out.data[k] - m);
                s += out.data[k];
            }
            for (int k = b; k < e; ++k) out.data[k] /= s;
        }
        Var o = make(std::move(out), x->requires_grad, "segment_softmax");
        if (o->requires_grad) record([x, o, offsets] {
            for (std::size_t seg = 0; seg + 1 < offsets.size(); ++seg) {
                const int b = offsets[seg], e = offsets[seg + 1];
                double dot = 0.0;
                for (int k = b; k < e; ++k) dot += o->grad.data[k] * o->value.data[k];
                for (int k = b; k < e; ++k)
                    x->grad.data[k] += o->value.data[k] * (o->grad.data[k] - dot);
            }
        });
        return o;
    }

    // out_e = -||z_i - z_j||^2 for each pair e=(i,j)
    Var neg_sqdist_on_pairs(const Var& z, const std::vector<std::pair<int, int>>& pairs) {
        const int d = z->value.cols;
        Tensor out(static_cast<int>(pairs.size()), 1);
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            const double* zi = z->value.data.data() + static_cast<std::size_t>(pairs[e].first) * d;
            const double* zj = z->value.data.data() + static_cast<std::size_t>(pairs[e].second) * d;
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = zi[k] - zj[k];
                s += diff * diff;
            }
            out.data[e] = -s;
        }
        Var o = make(std::move(out), z->requires_grad, "neg_sqdist_on_pairs");
        if (o->requires_grad) record([z, o, pairs] {
            const int d = z->value.cols;
            for (std::size_t e = 0; e < pairs.size(); ++e) {
                const double g = o->grad.data[e];
                if (g == 0.0) continue;
                const int i = pairs[e].first, j = pairs[e].second;
                for (int k = 0; k < d; ++k) {
                    const double diff = z->value.at(i, k) - z->value.at(j, k);
                    z->grad.at(i, k) -= 2.0 * diff * g;
                    z->grad.at(j, k) += 2.0 * diff * g;
                }
            }
        });
        return o;
    }

    // out_e = s_i + t_j per pair e=(i,j); s and t are n x 1 columns
    Var pair_sum_on_edges(const Var& s, const Var& t, const std::vector<std::pair<int, int>>& pairs) {
        if (s->value.cols != 1 || t->value.cols != 1)
            throw std::invalid_argument("pair_sum_on_edges: inputs must be n x 1");
        Tensor out(static_cast<int>(pairs.size()), 1);
        for (std::size_t e = 0; e < pairs.size(); ++e)
            out.data[e] = s->value.data[pairs[e].first] + t->value.data[pairs[e].second];
        Var o = make(std::move(out), s->requires_grad || t->requires_grad, "pair_sum_on_edges");
        if (o->requires_grad) record([s, t, o, pairs] {
            for (std::size_t e = 0; e < pairs.size(); ++e) {
                if (s->requires_grad) s->grad.data[pairs[e].first] += o->grad.data[e];
                if (t->requires_grad) t->grad.data[pairs[e].second] += o->grad.data[e];
            }
        });
        return o;
    }

    // sparse-dense product with differentiable sparse values (nnz x 1) and
    // dense operand; adjoints flow into both. The pattern is captured by
    // reference and must outlive backward().
    Var spmm(const SparseMatrix& pattern, const Var& values, const Var& x) {
        if (values->value.rows != pattern.nnz() || values->value.cols != 1)
            throw std::invalid_argument("spmm: values must be nnz x 1");
        if (x->value.rows != pattern.n)
            throw std::invalid_argument("spmm: dense operand must have n rows");
        const int cols = x->value.cols;
        Tensor out(pattern.n, cols);
        for (int i = 0; i < pattern.n; ++i) {
            double* yrow = out.data.data() + static_cast<std::size_t>(i) * cols;
            for (int e = pattern.row_ptr[i]; e < pattern.row_ptr[i + 1]; ++e) {
                const double v = values->value.data[e];
                const double* xrow =
                    x->value.data.data() + static_cast<std::size_t>(pattern.col_idx[e]) * cols;
                for (int c = 0; c < cols; ++c) yrow[c] += v * xrow[c];
            }
        }
        Var o = make(std::move(out), values->requires_grad || x->requires_grad, "spmm");
        if (o->requires_grad) record([&pattern, values, x, o] {
            const int cols = x->value.cols;
            for (int i = 0; i < pattern.n; ++i) {
                const double* grow = o->grad.data.data() + static_cast<std::size_t>(i) * cols;
                for (int e = pattern.row_ptr[i]; e < pattern.row_ptr[i + 1]; ++e) {
                    const int j = pattern.col_idx[e];
                    if (values->requires_grad) {
                        // d loss / d s_ij = <upstream row i, dense row j>
                        const double* xrow =
                            x->value.data.data() + static_cast<std::size_t>(j) * cols;
                        double dot = 0.0;
                        for (int c = 0; c < cols; ++c) dot += grow[c] * xrow[c];
                        values->grad.data[e] += dot;
                    }
                    if (x->requires_grad) {
                        const double v = values->value.data[e];
                        double* xg = x->grad.data.data() + static_cast<std::size_t>(j) * cols;
                        for (int c = 0; c < cols; ++c) xg[c] += v * grow[c];
                    }
                }
            }
        });
        return o;
    }

    // inverted dropout; eval mode is the identity and consumes no randomness
    Var dropout(const Var& x, double rate, bool train, Rng& rng) {
        if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
        if (!train || rate == 0.0) return x;
        const double keep = 1.0 - rate;
        std::vector<char> mask(x->value.size());
        for (auto& m : mask) m = rng.uniform01() >= rate ? 1 : 0;
        Tensor out = x->value;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = mask[i] ? out.data[i] / keep : 0.0;
        Var o = make(std::move(out), x->requires_grad, "dropout");
        if (o->requires_grad) record([x, o, mask = std::move(mask), keep] {
            for (std::size_t i = 0; i < o->grad.size(); ++i)
                if (mask[i]) x->grad.data[i] += o->grad.data[i] / keep;
        });
        return o;
    }

    // mean over masked rows of -log softmax(logits)[label]; fused log-softmax
    // keeps the loss finite for any finite logits
    Var masked_cross_entropy(const Var& logits, const std::vector<int>& labels,
                             const std::vector<char>& mask) {
        const int n = logits->value.rows, c = logits->value.cols;
        if (static_cast<int>(labels.size()) != n || static_cast<int>(mask.size()) != n)
            throw std::invalid_argument("masked_cross_entropy: labels/mask length mismatch");
        int count = 0;
        for (char m : mask)
            if (m) ++count;
        if (count == 0) throw std::invalid_argument("masked_cross_entropy: empty mask");
        auto probs = std::make_shared<Tensor>(n, c);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!mask[i]) continue;
            if (labels[i] < 0 || labels[i] >= c)
                throw std::invalid_argument("masked_cross_entropy: label out of range at row " +
                                            std::to_string(i));
            const double* row = logits->value.data.data() + static_cast<std::size_t>(i) * c;
            double m = row[0];
            for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
            double s = 0.0;
            for (int j = 0; j < c; ++j) s += std::exp(row[j] - m);
            const double lse = m + std::log(s);
            total += lse - row[labels[i]];
            for (int j = 0; j < c; ++j) probs->at(i, j) = std::exp(row[j] - m) / s;
        }
        Var o = make(Tensor::scalar(total / count), logits->requires_grad, "masked_cross_entropy");
        if (o->requires_grad) record([logits, o, probs, labels, mask, count] {
            const int n = logits->value.rows, c = logits->value.cols;
            const double g = o->grad.data[0] / count;
            for (int i = 0; i < n; ++i) {
                if (!mask[i]) continue;
                for (int j = 0; j < c; ++j)
                    logits->grad.at(i, j) += g * (probs->at(i, j) - (j == labels[i] ? 1.0 : 0.0));
            }
        });
        return o;
    }

    Var sum(const Var& x) {
        double s = 0.0;
        for (double v : x->value.data) s += v;
        Var o = make(Tensor::scalar(s), x->requires_grad, "sum");
        if (o->requires_grad) record([x, o] {
            for (auto& g : x->grad.data) g += o->grad.data[0];
        });
        return o;
    }

    Var mean(const Var& x) {
        if (x->value.size() == 0) throw std::invalid_argument("mean: empty tensor");
        double s = 0.0;
        for (double v : x->value.data) s += v;
        const double inv = 1.0 / static_cast<double>(x->value.size());
        Var o = make(Tensor::scalar(s * inv), x->requires_grad, "mean");
        if (o->requires_grad) record([x, o, inv] {
            for (auto& g : x->grad.data) g += inv * o->grad.data[0];
        });
        return o;
    }

    // max/min over all elements; ties propagate to the first attaining
    // element in row-major order
    Var reduce_max(const Var& x) { return reduce_extreme(x, true); }
    Var reduce_min(const Var& x) { return reduce_extreme(x, false); }

    // scalar sum_e w_e * v_e with constant weights
    Var weighted_sum(const Var& x, std::vector<double> weights) {
        if (x->value.size() != weights.size())
            throw std::invalid_argument("weighted_sum: weight length mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x->value.data[i];
        Var o = make(Tensor::scalar(s), x->requires_grad, "weighted_sum");
        if (o->requires_grad) record([x, o, w = std::move(weights)] {
            for (std::size_t i = 0; i < w.size(); ++i) x->grad.data[i] += w[i] * o->grad.data[0];
        });
        return o;
    }

    // Propagates d loss / d node into every requires_grad tensor reachable
    // from loss. One shot per recording; gradients accumulate additively
    // across multiple uses of a tensor.
    void backward(const Var& loss) {
        if (consumed_)
            throw std::logic_error("Tape::backward: tape already consumed; re-record the forward pass");
        if (!loss->value.is_scalar())
            throw std::invalid_argument("Tape::backward: loss must be a 1x1 scalar");
        consumed_ = true;
        if (!loss->requires_grad) return;
        loss->grad.data[0] = 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

    std::size_t recorded_ops() const { return ops_.size(); }

private:
    Var make(Tensor value, bool requires_grad, const char* op) {
        if (!value.all_finite())
            throw std::runtime_error(std::string(op) + ": non-finite value in forward output");
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        if (requires_grad) n->grad = Tensor(n->value.rows, n->value.cols);
        return n;
    }

    void record(std::function<void()> fn) { ops_.push_back(std::move(fn)); }

    static void accumulate(Tensor& dst, const Tensor& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
    }

    static void require_same_shape(const Var& a, const Var& b, const char* op) {
        if (!a->value.same_shape(b->value))
            throw std::invalid_argument(std::string(op) + ": shape mismatch " + a->value.shape_str() +
                                        " vs " + b->value.shape_str());
    }

    Var reduce_extreme(const Var& x, bool take_max) {
        if (x->value.size() == 0) throw std::invalid_argument("reduce: empty tensor");
        std::size_t arg = 0;
        for (std::size_t i = 1; i < x->value.size(); ++i) {
            if (take_max ? x->value.data[i] > x->value.data[arg]
                         : x->value.data[i] < x->value.data[arg])
                arg = i;
        }
        Var o = make(Tensor::scalar(x->value.data[arg]), x->requires_grad,
                     take_max ? "reduce_max" : "reduce_min");
        if (o->requires_grad) record([x, o, arg] { x->grad.data[arg] += o->grad.data[0]; });
        return o;
    }

    std::vector<std::function<void()>> ops_;
    bool consumed_ = false;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    int coords_checked = 0;
};

// Central-difference verification of an analytic gradient. fn evaluates the
// scalar objective at the current parameter values and, when grads is
// non-null, fills one same-shape gradient per parameter. fn must be
// deterministic (dropout off); that is checked by evaluating twice.
// Relative error uses a 1e-3 floor so near-zero gradients are compared
// absolutely at 1e-7 instead of amplifying truncation noise.
inline GradCheckReport grad_check(const std::function<double(std::vector<Tensor>* grads)>& fn,
                                  const std::vector<Tensor*>& params, double eps = 1e-4,
                                  int min_coords = 50, std::uint64_t seed = 17) {
    std::vector<Tensor> grads;
    const double base = fn(&grads);
    if (fn(nullptr) != base)
        throw std::runtime_error("grad_check: objective is non-deterministic across evaluations");
    if (grads.size() != params.size())
        throw std::invalid_argument("grad_check: fn returned wrong gradient count");
    for (std::size_t p = 0; p < params.size(); ++p)
        if (!grads[p].same_shape(*params[p]))
            throw std::invalid_argument("grad_check: gradient shape mismatch at parameter " +
                                        std::to_string(p));

    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t p = 0; p < params.size(); ++p)
        for (std::size_t k = 0; k < params[p]->size(); ++k) coords.emplace_back(p, k);
    Rng rng(seed);
    rng.shuffle(coords);
    const std::size_t take = std::min<std::size_t>(coords.size(),
                                                   static_cast<std::size_t>(std::max(min_coords, 1)));

    GradCheckReport report;
    for (std::size_t c = 0; c < take; ++c) {
        auto [p, k] = coords[c];
        double& slot = params[p]->data[k];
        const double saved = slot;
        slot = saved + eps;
        const double f_plus = fn(nullptr);
        slot = saved - eps;
        const double f_minus = fn(nullptr);
        slot = saved;
        const double numeric = (f_plus - f_minus) / (2.0 * eps);
        const double analytic = grads[p].data[k];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
        report.max_rel_err = std::max(report.max_rel_err, std::abs(numeric - analytic) / denom);
        ++report.coords_checked;
    }
    return report;
}

// standalone dropout on a plain tensor (shares the primitive's semantics)
inline Tensor dropout_apply(const Tensor& x, double rate, bool train, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout_apply: rate must be in [0, 1)");
    if (!train || rate == 0.0) return x;
    Tensor out = x;
    const double keep = 1.0 - rate;
    for (auto& v : out.data) v = rng.uniform01() >= rate ? v / keep : 0.0;
    return out;
}

}  // namespace ckgnn::ad
