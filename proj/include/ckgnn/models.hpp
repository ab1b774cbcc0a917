#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ckgnn/autodiff.hpp"
#include "ckgnn/kernel.hpp"
#include "ckgnn/rng.hpp"
#include "ckgnn/sparse.hpp"
#include "ckgnn/tensor.hpp"

namespace ckgnn {

enum class ModelKind { gcn, gat, ckgcn, ckgat };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::gcn: return "gcn";
        case ModelKind::gat: return "gat";
        case ModelKind::ckgcn: return "ckgcn";
        case ModelKind::ckgat: return "ckgat";
    }
    throw std::logic_error("to_string: bad ModelKind");
}

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "gcn") return ModelKind::gcn;
    if (s == "gat") return ModelKind::gat;
    if (s == "ckgcn") return ModelKind::ckgcn;
    if (s == "ckgat") return ModelKind::ckgat;
    throw std::invalid_argument("unknown model '" + s + "' (expected gcn|gat|ckgcn|ckgat)");
}

inline bool uses_attention(ModelKind k) { return k == ModelKind::gat || k == ModelKind::ckgat; }
inline bool uses_kernel(ModelKind k) { return k == ModelKind::ckgcn || k == ModelKind::ckgat; }

struct ModelConfig {
    ModelKind kind = ModelKind::gcn;
    int in_dim = 0;
    int classes = 0;
    int hidden = 16;   // per head / per branch width of hidden layers
    int layers = 2;
    int heads = 8;     // attention models
    int latent_z = 16; // kernel models
    int ae_layers = 4; // affine maps per autoencoder side
    double dropout = 0.5;
    bool dropout_kernel = false;

    void validate() const {
        if (in_dim < 1 || classes < 2) throw std::invalid_argument("ModelConfig: need in_dim >= 1 and classes >= 2");
        if (hidden < 1 || layers < 1) throw std::invalid_argument("ModelConfig: need hidden >= 1 and layers >= 1");
        if (uses_attention(kind) && heads < 1) throw std::invalid_argument("ModelConfig: need heads >= 1");
        if (uses_kernel(kind) && (latent_z < 1 || ae_layers < 1))
            throw std::invalid_argument("ModelConfig: need latent_z >= 1 and ae_layers >= 1");
        if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("ModelConfig: dropout must be in [0, 1)");
    }
};

// per-layer (input width, per-head-per-branch output width); the next
// layer's input absorbs the concatenation factor of this layer's output
inline std::vector<std::pair<int, int>> layer_widths(const ModelConfig& cfg) {
    std::vector<std::pair<int, int>> w;
    int in = cfg.in_dim;
    for (int l = 0; l < cfg.layers; ++l) {
        const bool last = l + 1 == cfg.layers;
        const int out = last ? cfg.classes : cfg.hidden;
        w.emplace_back(in, out);
        if (!last) {
            int mult = 1;
            if (cfg.kind == ModelKind::ckgcn) mult = 2;
            if (cfg.kind == ModelKind::gat) mult = cfg.heads;
            if (cfg.kind == ModelKind::ckgat) mult = 2 * cfg.heads;
            in = mult * out;
        }
    }
    return w;
}

struct LayerParams {
    Tensor W;                    // shared across heads and branches
    std::vector<Tensor> theta;   // one (2*out) x 1 vector per head
};

struct ModelParams {
    ModelKind kind = ModelKind::gcn;
    std::vector<LayerParams> layers;
    KernelParams kernel;  // empty for gcn/gat
};

inline ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParams p;
    p.kind = cfg.kind;
    for (auto [in, out] : layer_widths(cfg)) {
        LayerParams layer;
        layer.W = Tensor::glorot(in, out, rng);
        if (uses_attention(cfg.kind))
            for (int m = 0; m < cfg.heads; ++m) layer.theta.push_back(Tensor::glorot(2 * out, 1, rng));
        p.layers.push_back(std::move(layer));
    }
    if (uses_kernel(cfg.kind))
        p.kernel = KernelParams::glorot(cfg.in_dim, cfg.latent_z, cfg.ae_layers, rng);
    return p;
}

inline void validate_params(const ModelConfig& cfg, const ModelParams& p) {
    cfg.validate();
    if (p.kind != cfg.kind) throw std::invalid_argument("validate_params: model kind mismatch");
    const auto widths = layer_widths(cfg);
    if (p.layers.size() != widths.size())
        throw std::invalid_argument("validate_params: expected " + std::to_string(widths.size()) +
                                    " layers, got " + std::to_string(p.layers.size()));
    for (std::size_t l = 0; l < widths.size(); ++l) {
        const auto [in, out] = widths[l];
        if (p.layers[l].W.rows != in || p.layers[l].W.cols != out)
            throw std::invalid_argument("validate_params: layer " + std::to_string(l) + " W is " +
                                        p.layers[l].W.shape_str() + ", expected " +
                                        std::to_string(in) + "x" + std::to_string(out));
        const std::size_t want_heads = uses_attention(cfg.kind) ? static_cast<std::size_t>(cfg.heads) : 0;
        if (p.layers[l].theta.size() != want_heads)
            throw std::invalid_argument("validate_params: layer " + std::to_string(l) +
                                        " has wrong head count");
        for (const auto& th : p.layers[l].theta)
            if (th.rows != 2 * out || th.cols != 1)
                throw std::invalid_argument("validate_params: theta must be " +
                                            std::to_string(2 * out) + "x1");
    }
    if (uses_kernel(cfg.kind)) {
        if (p.kernel.input_dim() != cfg.in_dim || p.kernel.latent_dim() != cfg.latent_z)
            throw std::invalid_argument("validate_params: kernel dims do not match config");
    } else if (!p.kernel.enc_W.empty()) {
        throw std::invalid_argument("validate_params: unexpected kernel parameters");
    }
}

struct ParamRef {
    Tensor* tensor;
    bool weight_decay;  // decay applies to layer weights, not the autoencoder
    std::string name;
};

inline std::vector<ParamRef> param_refs(ModelParams& p) {
    std::vector<ParamRef> out;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        out.push_back({&p.layers[l].W, true, "layer" + std::to_string(l) + ".W"});
        for (std::size_t m = 0; m < p.layers[l].theta.size(); ++m)
            out.push_back({&p.layers[l].theta[m], true,
                           "layer" + std::to_string(l) + ".theta" + std::to_string(m)});
    }
    auto push_group = [&out](std::vector<Tensor>& ts, const std::string& base) {
        for (std::size_t i = 0; i < ts.size(); ++i)
            out.push_back({&ts[i], false, base + std::to_string(i)});
    };
    push_group(p.kernel.enc_W, "kernel.enc_W");
    push_group(p.kernel.enc_b, "kernel.enc_b");
    push_group(p.kernel.dec_W, "kernel.dec_W");
    push_group(p.kernel.dec_b, "kernel.dec_b");
    return out;
}

struct ModelVars {
    std::vector<ad::Var> W;
    std::vector<std::vector<ad::Var>> theta;
    KernelVars kernel;
};

inline ModelVars model_leaves(ad::Tape& tape, const ModelParams& p, bool requires_grad) {
    ModelVars v;
    for (const auto& layer : p.layers) {
        v.W.push_back(tape.leaf(layer.W, requires_grad));
        std::vector<ad::Var> th;
        th.reserve(layer.theta.size());
        for (const auto& t : layer.theta) th.push_back(tape.leaf(t, requires_grad));
        v.theta.push_back(std::move(th));
    }
    v.kernel = kernel_leaves(tape, p.kernel, requires_grad);
    return v;
}

// same order as param_refs so gradients can be read back by index
inline std::vector<ad::Var> flatten_vars(const ModelVars& v) {
    std::vector<ad::Var> out;
    for (std::size_t l = 0; l < v.W.size(); ++l) {
        out.push_back(v.W[l]);
        for (const auto& t : v.theta[l]) out.push_back(t);
    }
    for (const auto& t : v.kernel.enc_W) out.push_back(t);
    for (const auto& t : v.kernel.enc_b) out.push_back(t);
    for (const auto& t : v.kernel.dec_W) out.push_back(t);
    for (const auto& t : v.kernel.dec_b) out.push_back(t);
    return out;
}

// normalized adjacency plus the index structures every forward pass reuses
struct GraphOperators {
    SparseMatrix a_hat;  // pattern A + I, symmetric-normalized values
    std::vector<std::pair<int, int>> edge_pairs;

    static GraphOperators build(const Graph& g) {
        GraphOperators ops;
        ops.a_hat = normalized_adjacency(g);
        ops.edge_pairs = ops.a_hat.stored_pairs();
        return ops;
    }
};

inline Tensor values_column(const SparseMatrix& s) {
    Tensor col(s.nnz(), 1);
    for (int e = 0; e < s.nnz(); ++e) col.data[e] = s.values[e];
    return col;
}

// attention coefficients for one head: t_ij = softmax over j in N(i) of
// LeakyReLU((h_i W)' theta_src + (h_j W)' theta_dst), slope 0.2
inline ad::Var attention_values(ad::Tape& tape, const ad::Var& hw, const ad::Var& theta,
                                const GraphOperators& ops, double rate, bool train, Rng& rng) {
    const int out = hw->value.cols;
    if (theta->value.rows != 2 * out || theta->value.cols != 1)
        throw std::invalid_argument("attention_values: theta must be " + std::to_string(2 * out) + "x1");
    ad::Var th_src = tape.slice_rows(theta, 0, out);
    ad::Var th_dst = tape.slice_rows(theta, out, 2 * out);
    ad::Var s = tape.matmul(hw, th_src);
    ad::Var d = tape.matmul(hw, th_dst);
    ad::Var e = tape.leaky_relu(tape.pair_sum_on_edges(s, d, ops.edge_pairs), 0.2);
    ad::Var t = tape.segment_softmax(e, ops.a_hat.row_ptr);
    return tape.dropout(t, rate, train, rng);
}

struct ForwardOut {
    ad::Var logits;     // n x c
    ad::Var probs;      // row-stochastic
    ad::Var z;          // latent codes, null unless the model learns a kernel
    ad::Var k_pattern;  // kernel values on the adjacency pattern, null otherwise
};

inline ForwardOut model_forward(ad::Tape& tape, const ModelConfig& cfg, const ModelVars& v,
                                const GraphOperators& ops, const ad::Var& x, bool train, Rng& rng) {
    cfg.validate();
    if (x->value.rows != ops.a_hat.n)
        throw std::invalid_argument("model_forward: feature rows must match graph size");
    const double rate = cfg.dropout;
    ForwardOut fwd;

    ad::Var a_col = tape.leaf(values_column(ops.a_hat), false);
    ad::Var k_hat;  // composite values for ckgcn, shared by every layer
    if (uses_kernel(cfg.kind)) {
        // the encoder always sees raw features, never dropped ones
        fwd.z = mlp_forward(tape, x, v.kernel.enc_W, v.kernel.enc_b);
        fwd.k_pattern = kernel_values_on_pattern(tape, fwd.z, ops.a_hat);
        if (cfg.dropout_kernel) fwd.k_pattern = tape.dropout(fwd.k_pattern, rate, train, rng);
        if (cfg.kind == ModelKind::ckgcn)
            k_hat = composite_kernel_values(tape, fwd.k_pattern, ops.a_hat);
    }

    ad::Var h = x;
    for (int l = 0; l < cfg.layers; ++l) {
        const bool last = l + 1 == cfg.layers;
        h = tape.dropout(h, rate, train, rng);
        ad::Var hw = tape.matmul(h, v.W[l]);
        switch (cfg.kind) {
            case ModelKind::gcn: {
                ad::Var agg = tape.spmm(ops.a_hat, a_col, hw);
                h = last ? agg : tape.relu(agg);
                break;
            }
            case ModelKind::ckgcn: {
                ad::Var kagg = tape.spmm(ops.a_hat, k_hat, hw);
                ad::Var aagg = tape.spmm(ops.a_hat, a_col, hw);
                h = last ? tape.add(kagg, aagg) : tape.relu(tape.concat_cols(kagg, aagg));
                break;
            }
            case ModelKind::gat: {
                std::vector<ad::Var> heads;
                ad::Var total;
                for (int m = 0; m < cfg.heads; ++m) {
                    ad::Var t = attention_values(tape, hw, v.theta[l][m], ops, rate, train, rng);
                    ad::Var agg = tape.spmm(ops.a_hat, t, hw);
                    if (last)
                        total = total ? tape.add(total, agg) : agg;
                    else
                        heads.push_back(agg);
                }
                h = last ? total : tape.relu(tape.concat_cols(heads));
                break;
            }
            case ModelKind::ckgat: {
                std::vector<ad::Var> parts;
                ad::Var total;
                for (int m = 0; m < cfg.heads; ++m) {
                    ad::Var t = attention_values(tape, hw, v.theta[l][m], ops, rate, train, rng);
                    ad::Var kt = tape.mul(fwd.k_pattern, t);
                    ad::Var kagg = tape.spmm(ops.a_hat, kt, hw);
                    ad::Var tagg = tape.spmm(ops.a_hat, t, hw);
                    if (last) {
                        ad::Var head = tape.add(kagg, tagg);
                        total = total ? tape.add(total, head) : head;
                    } else {
                        parts.push_back(kagg);
                        parts.push_back(tagg);
                    }
                }
                h = last ? total : tape.relu(tape.concat_cols(parts));
                break;
            }
        }
    }
    fwd.logits = h;
    fwd.probs = tape.row_softmax(h);
    return fwd;
}

}  // namespace ckgnn
