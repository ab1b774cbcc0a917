#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ckgnn/autodiff.hpp"
#include "ckgnn/rng.hpp"
#include "ckgnn/sparse.hpp"
#include "ckgnn/tensor.hpp"

namespace ckgnn {

// Geometric interpolation between input width d and latent width z across
// `layers` affine maps: w_i = round(d^(1-i/L) * z^(i/L)), endpoints pinned.
inline std::vector<int> autoencoder_widths(int d, int z, int layers) {
    if (d < 1 || z < 1) throw std::invalid_argument("autoencoder_widths: widths must be positive");
    if (layers < 1) throw std::invalid_argument("autoencoder_widths: need at least one layer");
    std::vector<int> w(layers + 1);
    w.front() = d;
    w.back() = z;
    for (int i = 1; i < layers; ++i) {
        const double t = static_cast<double>(i) / layers;
        const double wi = std::exp((1.0 - t) * std::log(static_cast<double>(d)) +
                                   t * std::log(static_cast<double>(z)));
        w[i] = std::max(1, static_cast<int>(std::lround(wi)));
    }
    return w;
}

// Encoder/decoder MLP weights for the learnable kernel. The decoder mirrors
// the encoder widths. Biases start at zero.
struct KernelParams {
    std::vector<Tensor> enc_W, enc_b;
    std::vector<Tensor> dec_W, dec_b;

    int input_dim() const { return enc_W.empty() ? 0 : enc_W.front().rows; }
    int latent_dim() const { return enc_W.empty() ? 0 : enc_W.back().cols; }

    static KernelParams glorot(int d, int z, int layers, Rng& rng) {
        KernelParams p;
        const auto w = autoencoder_widths(d, z, layers);
        for (int i = 0; i < layers; ++i) {
            p.enc_W.push_back(Tensor::glorot(w[i], w[i + 1], rng));
            p.enc_b.emplace_back(1, w[i + 1]);
        }
        for (int i = layers; i > 0; --i) {
            p.dec_W.push_back(Tensor::glorot(w[i], w[i - 1], rng));
            p.dec_b.emplace_back(1, w[i - 1]);
        }
        return p;
    }

    // all-zero parameters; the encoder then maps every input to the same
    // latent point and the kernel is identically 1
    static KernelParams zeros(int d, int z, int layers) {
        KernelParams p;
        const auto w = autoencoder_widths(d, z, layers);
        for (int i = 0; i < layers; ++i) {
            p.enc_W.emplace_back(w[i], w[i + 1]);
            p.enc_b.emplace_back(1, w[i + 1]);
        }
        for (int i = layers; i > 0; --i) {
            p.dec_W.emplace_back(w[i], w[i - 1]);
            p.dec_b.emplace_back(1, w[i - 1]);
        }
        return p;
    }
};

struct KernelVars {
    std::vector<ad::Var> enc_W, enc_b;
    std::vector<ad::Var> dec_W, dec_b;
};

inline KernelVars kernel_leaves(ad::Tape& tape, const KernelParams& p, bool requires_grad) {
    KernelVars v;
    for (const auto& t : p.enc_W) v.enc_W.push_back(tape.leaf(t, requires_grad));
    for (const auto& t : p.enc_b) v.enc_b.push_back(tape.leaf(t, requires_grad));
    for (const auto& t : p.dec_W) v.dec_W.push_back(tape.leaf(t, requires_grad));
    for (const auto& t : p.dec_b) v.dec_b.push_back(tape.leaf(t, requires_grad));
    return v;
}

// affine stack with ReLU between layers, none after the last
inline ad::Var mlp_forward(ad::Tape& tape, ad::Var h, const std::vector<ad::Var>& Ws,
                           const std::vector<ad::Var>& bs) {
    if (Ws.size() != bs.size()) throw std::invalid_argument("mlp_forward: W/b count mismatch");
    for (std::size_t i = 0; i < Ws.size(); ++i) {
        h = tape.add_rowvec(tape.matmul(h, Ws[i]), bs[i]);
        if (i + 1 < Ws.size()) h = tape.relu(h);
    }
    return h;
}

struct AutoencoderOut {
    ad::Var z;      // n x latent
    ad::Var x_bar;  // n x d reconstruction
};

inline AutoencoderOut autoencoder_forward(ad::Tape& tape, const ad::Var& x, const KernelVars& v) {
    AutoencoderOut out;
    out.z = mlp_forward(tape, x, v.enc_W, v.enc_b);
    out.x_bar = mlp_forward(tape, out.z, v.dec_W, v.dec_b);
    return out;
}

// k(i,j) = exp(-||z_i - z_j||^2) evaluated at every stored entry of a
// symmetric pattern, returned as an nnz x 1 column aligned with the pattern.
// Diagonal entries come out exactly 1 (exp of exact zero).
inline ad::Var kernel_values_on_pattern(ad::Tape& tape, const ad::Var& z,
                                        const SparseMatrix& pattern) {
    if (!pattern.check_symmetric())
        throw std::invalid_argument("kernel_values_on_pattern: pattern must be symmetric");
    if (z->value.rows != pattern.n)
        throw std::invalid_argument("kernel_values_on_pattern: latent rows must match pattern size");
    ad::Var k = tape.exp(tape.neg_sqdist_on_pairs(z, pattern.stored_pairs()));
    const auto pairs = pattern.stored_pairs();
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        const double v = k->value.data[e];
        if (!(v > 0.0 && v <= 1.0))
            throw std::logic_error("kernel_values_on_pattern: value out of (0, 1]");
        if (pairs[e].first == pairs[e].second && v != 1.0)
            throw std::logic_error("kernel_values_on_pattern: diagonal entry is not exactly 1");
    }
    return k;
}

// Khat = K elementwise* Ahat on a shared pattern; differentiable in the
// kernel values, with the normalized adjacency held constant.
inline ad::Var composite_kernel_values(ad::Tape& tape, const ad::Var& k_values,
                                       const SparseMatrix& a_hat) {
    if (k_values->value.rows != a_hat.nnz() || k_values->value.cols != 1)
        throw std::invalid_argument("composite_kernel_values: kernel column must be nnz x 1");
    Tensor a_col(a_hat.nnz(), 1);
    for (int e = 0; e < a_hat.nnz(); ++e) a_col.data[e] = a_hat.values[e];
    return tape.mul(k_values, tape.leaf(std::move(a_col), false));
}

// plain composite kernel matrix for inspection/export
inline SparseMatrix composite_kernel_matrix(const std::vector<double>& k_values,
                                            const SparseMatrix& a_hat) {
    if (static_cast<int>(k_values.size()) != a_hat.nnz())
        throw std::invalid_argument("composite_kernel_matrix: value count mismatch");
    SparseMatrix out = a_hat;
    for (int e = 0; e < out.nnz(); ++e) out.values[e] = k_values[e] * a_hat.values[e];
    return out;
}

// Biased (V-statistic) squared MMD between two index sets under an arbitrary
// kernel function. Self-pairs are included, so MMD^2(S, S) is exactly the
// same sum twice minus itself. For singletons {x}, {y} with k(x,x) =
// k(y,y) = 1 this evaluates 1 + 1 - 2 k(x,y).
inline double mmd_squared(const std::vector<int>& a, const std::vector<int>& b,
                          const std::function<double(int, int)>& kernel) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mmd_squared: empty index set");
    double term_a = 0.0, term_b = 0.0, term_ab = 0.0;
    for (int i : a)
        for (int j : a) term_a += kernel(i, j);
    for (int i : b)
        for (int j : b) term_b += kernel(i, j);
    for (int i : a)
        for (int j : b) term_ab += kernel(i, j);
    term_a /= static_cast<double>(a.size()) * static_cast<double>(a.size());
    term_b /= static_cast<double>(b.size()) * static_cast<double>(b.size());
    term_ab /= static_cast<double>(a.size()) * static_cast<double>(b.size());
    return term_a + term_b - 2.0 * term_ab;
}

// labeled nodes grouped by class; classes with no labeled node are dropped
struct ClassPartition {
    std::vector<std::vector<int>> members;  // ascending node ids per class
    std::vector<int> labeled;               // all labeled nodes, ascending

    static ClassPartition from_labels(const std::vector<int>& labels, const std::vector<char>& mask,
                                      int num_classes) {
        if (labels.size() != mask.size())
            throw std::invalid_argument("ClassPartition: labels/mask length mismatch");
        std::vector<std::vector<int>> buckets(num_classes);
        ClassPartition p;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!mask[i]) continue;
            if (labels[i] < 0 || labels[i] >= num_classes)
                throw std::invalid_argument("ClassPartition: label out of range at node " +
                                            std::to_string(i));
            buckets[labels[i]].push_back(static_cast<int>(i));
            p.labeled.push_back(static_cast<int>(i));
        }
        for (auto& b : buckets)
            if (!b.empty()) p.members.push_back(std::move(b));
        if (p.members.size() < 2)
            throw std::invalid_argument("ClassPartition: need labeled nodes from at least 2 classes");
        return p;
    }
};

// Sum of squared MMDs over all ordered pairs of distinct classes, folded
// into a single weighted sum over ordered labeled node pairs (self-pairs
// included). A pair inside class a of size s appears in the first term of
// MMD^2(a, b) and the second term of MMD^2(b, a) for each of the c-1 other
// classes, giving weight 2(c-1)/s^2; a cross pair (i in a, j in b) appears
// once in the cross term of MMD^2(a, b), giving weight -2/(|a| |b|).
struct MmdPairPlan {
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> weights;
};

inline MmdPairPlan mmd_pair_plan(const ClassPartition& part) {
    const int c = static_cast<int>(part.members.size());
    std::vector<int> class_of;
    std::vector<double> size_of;
    {
        int max_node = 0;
        for (int i : part.labeled) max_node = std::max(max_node, i);
        class_of.assign(max_node + 1, -1);
        for (int a = 0; a < c; ++a)
            for (int i : part.members[a]) class_of[i] = a;
        for (int a = 0; a < c; ++a) size_of.push_back(static_cast<double>(part.members[a].size()));
    }
    MmdPairPlan plan;
    plan.pairs.reserve(part.labeled.size() * part.labeled.size());
    plan.weights.reserve(plan.pairs.capacity());
    for (int i : part.labeled) {
        for (int j : part.labeled) {
            const int a = class_of[i], b = class_of[j];
            plan.pairs.emplace_back(i, j);
            plan.weights.push_back(a == b ? 2.0 * (c - 1) / (size_of[a] * size_of[a])
                                          : -2.0 / (size_of[a] * size_of[b]));
        }
    }
    return plan;
}

// differentiable sum_a sum_{b != a} MMD^2(P_a, P_b) under the latent kernel
inline ad::Var mmd_pair_term(ad::Tape& tape, const ad::Var& z, const MmdPairPlan& plan) {
    ad::Var k = tape.exp(tape.neg_sqdist_on_pairs(z, plan.pairs));
    return tape.weighted_sum(k, plan.weights);
}

// L_d = -(max k - min k)^2 over the supplied kernel values
inline ad::Var difference_regularizer(ad::Tape& tape, const ad::Var& k_values) {
    if (k_values->value.size() < 2)
        throw std::invalid_argument("difference_regularizer: need at least 2 kernel values");
    ad::Var r = tape.sub(tape.reduce_max(k_values), tape.reduce_min(k_values));
    return tape.scale(tape.mul(r, r), -1.0);
}

// L_k = sum_i ||x_i - xbar_i||^2 - beta * mmd_sum
inline ad::Var kernel_loss(ad::Tape& tape, const ad::Var& x, const ad::Var& x_bar,
                           const ad::Var& mmd_sum, double beta) {
    ad::Var diff = tape.sub(x, x_bar);
    ad::Var recon = tape.sum(tape.mul(diff, diff));
    return tape.add(recon, tape.scale(mmd_sum, -beta));
}

// l_k and l_d may be null when the corresponding weight is zero.
inline ad::Var total_loss(ad::Tape& tape, const ad::Var& l_ce, const ad::Var& l_k,
                          const ad::Var& l_d, double lambda1, double lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw std::invalid_argument("total_loss: loss weights must be >= 0");
    if ((lambda1 > 0.0 && !l_k) || (lambda2 > 0.0 && !l_d))
        throw std::invalid_argument("total_loss: missing loss term with nonzero weight");
    ad::Var total = l_ce;
    if (l_k && lambda1 > 0.0) total = tape.add(total, tape.scale(l_k, lambda1));
    if (l_d && lambda2 > 0.0) total = tape.add(total, tape.scale(l_d, lambda2));
    return total;
}

}  // namespace ckgnn
