#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ckgnn/autodiff.hpp"
#include "ckgnn/data.hpp"
#include "ckgnn/kernel.hpp"
#include "ckgnn/models.hpp"
#include "ckgnn/optim.hpp"
#include "ckgnn/rng.hpp"

namespace ckgnn {

enum class SplitMode { semi, super, file };

inline std::string to_string(SplitMode s) {
    switch (s) {
        case SplitMode::semi: return "semi";
        case SplitMode::super: return "super";
        case SplitMode::file: return "file";
    }
    throw std::logic_error("to_string: bad SplitMode");
}

inline SplitMode parse_split_mode(const std::string& s) {
    if (s == "semi") return SplitMode::semi;
    if (s == "super") return SplitMode::super;
    if (s == "file") return SplitMode::file;
    throw std::invalid_argument("unknown split '" + s + "' (expected semi|super|file)");
}

struct TrainConfig {
    ModelKind model = ModelKind::gcn;
    SplitMode split = SplitMode::semi;
    double lr = 0.01;
    double weight_decay = 5e-4;
    double dropout = 0.5;
    double lambda1 = 0.5;
    double lambda2 = 0.1;
    double beta = 1.0;
    int hidden = 16;
    int layers = 2;
    int heads = 8;
    int latent_z = 16;
    int ae_layers = 4;
    int epochs = 300;
    int patience = 30;
    int warmup_epochs = 0;
    bool dropout_kernel = false;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
        if (lambda1 < 0.0 || lambda2 < 0.0 || beta < 0.0)
            throw std::invalid_argument("TrainConfig: lambda1, lambda2, beta must be >= 0");
        if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
        if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("TrainConfig: dropout must be in [0, 1)");
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (patience < 1 || patience > epochs)
            throw std::invalid_argument("TrainConfig: need 1 <= patience <= epochs");
        if (hidden < 1 || layers < 1 || heads < 1 || latent_z < 1 || ae_layers < 1)
            throw std::invalid_argument("TrainConfig: architecture sizes must be >= 1");
        if (warmup_epochs < 0) throw std::invalid_argument("TrainConfig: warmup_epochs must be >= 0");
    }

    ModelConfig model_config(int in_dim, int classes) const {
        ModelConfig m;
        m.kind = model;
        m.in_dim = in_dim;
        m.classes = classes;
        m.hidden = hidden;
        m.layers = layers;
        m.heads = heads;
        m.latent_z = latent_z;
        m.ae_layers = ae_layers;
        m.dropout = dropout;
        m.dropout_kernel = dropout_kernel;
        return m;
    }
};

// 20 labeled nodes per class for training, then 500 validation and 1000 test
// nodes from the remainder, all chosen from one shuffled permutation
inline SplitMasks make_semi_supervised_split(const std::vector<int>& labels, int classes, Rng& rng) {
    const int n = static_cast<int>(labels.size());
    std::vector<int> class_count(classes, 0);
    for (int l : labels) {
        if (l < 0 || l >= classes) throw std::invalid_argument("make_semi_supervised_split: label out of range");
        ++class_count[l];
    }
    for (int a = 0; a < classes; ++a)
        if (class_count[a] < 20)
            throw std::invalid_argument("make_semi_supervised_split: class " + std::to_string(a) +
                                        " has only " + std::to_string(class_count[a]) +
                                        " nodes, need >= 20");
    if (n < 20 * classes + 1500)
        throw std::invalid_argument("make_semi_supervised_split: need n >= 20c + 1500, got n = " +
                                    std::to_string(n));

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);

    SplitMasks m = SplitMasks::empty(n);
    std::vector<int> taken(classes, 0);
    for (int i : perm) {
        if (taken[labels[i]] < 20) {
            m.train[i] = 1;
            ++taken[labels[i]];
        }
    }
    int val_left = 500, test_left = 1000;
    for (int i : perm) {
        if (m.train[i]) continue;
        if (val_left > 0) {
            m.val[i] = 1;
            --val_left;
        } else if (test_left > 0) {
            m.test[i] = 1;
            --test_left;
        }
    }
    m.validate(n);
    return m;
}

// 500 validation, 1000 test, all remaining nodes train
inline SplitMasks make_supervised_split(int n, Rng& rng) {
    if (n <= 1500) throw std::invalid_argument("make_supervised_split: need n > 1500, got " + std::to_string(n));
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    SplitMasks m = SplitMasks::empty(n);
    for (int r = 0; r < n; ++r) {
        if (r < 500) m.val[perm[r]] = 1;
        else if (r < 1500) m.test[perm[r]] = 1;
        else m.train[perm[r]] = 1;
    }
    m.validate(n);
    return m;
}

// fraction of masked nodes whose argmax prediction matches; argmax ties go
// to the lowest class index
inline double evaluate_accuracy(const Tensor& probs, const std::vector<int>& labels,
                                const std::vector<char>& mask) {
    if (static_cast<int>(labels.size()) != probs.rows || static_cast<int>(mask.size()) != probs.rows)
        throw std::invalid_argument("evaluate_accuracy: labels/mask length mismatch");
    int total = 0, correct = 0;
    for (int i = 0; i < probs.rows; ++i) {
        if (!mask[i]) continue;
        ++total;
        int arg = 0;
        for (int j = 1; j < probs.cols; ++j)
            if (probs.at(i, j) > probs.at(i, arg)) arg = j;
        if (arg == labels[i]) ++correct;
    }
    if (total == 0) throw std::invalid_argument("evaluate_accuracy: empty mask");
    return static_cast<double>(correct) / total;
}

struct EpochRecord {
    int epoch = 0;
    double l_ce = 0.0, l_k = 0.0, l_d = 0.0, total = 0.0;
    double train_acc = 0.0, val_acc = 0.0;
};

struct Metrics {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val_acc = 0.0;
    double test_acc = 0.0;
    double seconds = 0.0;  // wall clock, excluded from the determinism contract
};

struct TrainResult {
    ModelParams params;  // from the best-validation epoch
    Metrics metrics;
    SplitMasks masks;
    ModelConfig model_cfg;
};

namespace detail {

// ordered labeled pairs i < j for the difference regularizer; self-pairs are
// excluded because k(x, x) = 1 would pin the maximum
inline std::vector<std::pair<int, int>> regularizer_pairs(const ClassPartition& part) {
    std::vector<std::pair<int, int>> pairs;
    const auto& lab = part.labeled;
    pairs.reserve(lab.size() * (lab.size() - 1) / 2);
    for (std::size_t a = 0; a < lab.size(); ++a)
        for (std::size_t b = a + 1; b < lab.size(); ++b) pairs.emplace_back(lab[a], lab[b]);
    return pairs;
}

}  // namespace detail

// When initial is given it replaces the random parameter draw; the rng stream
// then skips the init draws, so dropout noise differs from an init-drawn run.
inline TrainResult train(const DatasetBundle& bundle, const TrainConfig& cfg,
                         const std::function<void(const EpochRecord&)>& on_epoch = {},
                         const ModelParams* initial = nullptr) {
    bundle.validate();
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    Rng rng(cfg.seed);
    SplitMasks masks;
    switch (cfg.split) {
        case SplitMode::semi: masks = make_semi_supervised_split(bundle.labels, bundle.classes, rng); break;
        case SplitMode::super: masks = make_supervised_split(bundle.n(), rng); break;
        case SplitMode::file:
            if (!bundle.masks) throw std::invalid_argument("train: split 'file' requires mask lines in the dataset");
            masks = *bundle.masks;
            masks.validate(bundle.n());
            break;
    }

    const Graph g = bundle.graph();
    const GraphOperators ops = GraphOperators::build(g);
    const ModelConfig mcfg = cfg.model_config(bundle.dim(), bundle.classes);
    ModelParams params;
    if (initial) {
        validate_params(mcfg, *initial);
        params = *initial;
    } else {
        params = init_params(mcfg, rng);
    }

    const bool kernel_model = uses_kernel(cfg.model);
    const bool use_lk = kernel_model && cfg.lambda1 > 0.0;
    const bool use_ld = kernel_model && cfg.lambda2 > 0.0;

    MmdPairPlan mmd_plan;
    std::vector<std::pair<int, int>> ld_pairs;
    if (use_lk || use_ld) {
        const ClassPartition part = ClassPartition::from_labels(bundle.labels, masks.train, bundle.classes);
        if (use_lk) mmd_plan = mmd_pair_plan(part);
        if (use_ld) ld_pairs = detail::regularizer_pairs(part);
    }

    auto run_epoch_guard = [](int epoch, auto&& fn) {
        try {
            fn();
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("epoch " + std::to_string(epoch) + ": " + e.what());
        }
    };

    // warmup: optimize the kernel losses over autoencoder parameters only
    if (cfg.warmup_epochs > 0) {
        if (!kernel_model)
            throw std::invalid_argument("train: warmup_epochs requires a kernel-learning model");
        if (!use_lk && !use_ld)
            throw std::invalid_argument("train: warmup_epochs requires lambda1 > 0 or lambda2 > 0");
        std::vector<Tensor*> phi;
        for (auto& ref : param_refs(params))
            if (!ref.weight_decay) phi.push_back(ref.tensor);
        AdamState warm_state = AdamState::like(phi);
        for (int epoch = 1; epoch <= cfg.warmup_epochs; ++epoch) {
            run_epoch_guard(epoch, [&] {
                ad::Tape tape;
                KernelVars kv = kernel_leaves(tape, params.kernel, true);
                ad::Var x = tape.leaf(bundle.X, false);
                AutoencoderOut ae = autoencoder_forward(tape, x, kv);
                ad::Var loss;
                if (use_lk) {
                    ad::Var lk = kernel_loss(tape, x, ae.x_bar, mmd_pair_term(tape, ae.z, mmd_plan), cfg.beta);
                    loss = tape.scale(lk, cfg.lambda1);
                }
                if (use_ld) {
                    ad::Var k_ld = tape.exp(tape.neg_sqdist_on_pairs(ae.z, ld_pairs));
                    ad::Var ld = tape.scale(difference_regularizer(tape, k_ld), cfg.lambda2);
                    loss = loss ? tape.add(loss, ld) : ld;
                }
                tape.backward(loss);
                std::vector<ad::Var> leaves;
                for (const auto& v : kv.enc_W) leaves.push_back(v);
                for (const auto& v : kv.enc_b) leaves.push_back(v);
                for (const auto& v : kv.dec_W) leaves.push_back(v);
                for (const auto& v : kv.dec_b) leaves.push_back(v);
                std::vector<Tensor> grads;
                for (const auto& v : leaves) grads.push_back(v->grad);
                adam_step(phi, grads, warm_state, cfg.lr);
            });
        }
    }

    std::vector<ParamRef> refs = param_refs(params);
    std::vector<Tensor*> param_ptrs;
    for (auto& r : refs) param_ptrs.push_back(r.tensor);
    AdamState state = AdamState::like(param_ptrs);

    Metrics metrics;
    ModelParams best_params = params;
    double best_val = -1.0, best_test = 0.0;
    int since_improve = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        run_epoch_guard(epoch, [&] {
            ad::Tape tape;
            ModelVars vars = model_leaves(tape, params, true);
            ad::Var x = tape.leaf(bundle.X, false);
            ForwardOut fwd = model_forward(tape, mcfg, vars, ops, x, true, rng);
            ad::Var l_ce = tape.masked_cross_entropy(fwd.logits, bundle.labels, masks.train);
            rec.l_ce = l_ce->value.data[0];
            ad::Var l_k, l_d;
            if (use_lk) {
                ad::Var x_bar = mlp_forward(tape, fwd.z, vars.kernel.dec_W, vars.kernel.dec_b);
                l_k = kernel_loss(tape, x, x_bar, mmd_pair_term(tape, fwd.z, mmd_plan), cfg.beta);
                rec.l_k = l_k->value.data[0];
            }
            if (use_ld) {
                ad::Var k_ld = tape.exp(tape.neg_sqdist_on_pairs(fwd.z, ld_pairs));
                l_d = difference_regularizer(tape, k_ld);
                rec.l_d = l_d->value.data[0];
            }
            ad::Var total = total_loss(tape, l_ce, l_k, l_d, use_lk ? cfg.lambda1 : 0.0,
                                       use_ld ? cfg.lambda2 : 0.0);
            rec.total = total->value.data[0];
            tape.backward(total);

            const std::vector<ad::Var> leaves = flatten_vars(vars);
            if (leaves.size() != refs.size())
                throw std::logic_error("train: parameter order mismatch between refs and leaves");
            std::vector<Tensor> grads;
            grads.reserve(leaves.size());
            for (std::size_t p = 0; p < leaves.size(); ++p) {
                Tensor gr = leaves[p]->grad;
                if (refs[p].weight_decay && cfg.weight_decay > 0.0)
                    for (std::size_t i = 0; i < gr.size(); ++i)
                        gr.data[i] += cfg.weight_decay * refs[p].tensor->data[i];
                grads.push_back(std::move(gr));
            }
            adam_step(param_ptrs, grads, state, cfg.lr);
        });

        double test_acc = 0.0;
        run_epoch_guard(epoch, [&] {
            ad::Tape tape;
            ModelVars vars = model_leaves(tape, params, false);
            ad::Var x = tape.leaf(bundle.X, false);
            ForwardOut fwd = model_forward(tape, mcfg, vars, ops, x, false, rng);
            rec.train_acc = evaluate_accuracy(fwd.probs->value, bundle.labels, masks.train);
            rec.val_acc = evaluate_accuracy(fwd.probs->value, bundle.labels, masks.val);
            test_acc = evaluate_accuracy(fwd.probs->value, bundle.labels, masks.test);
        });
        metrics.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.val_acc > best_val) {
            best_val = rec.val_acc;
            best_test = test_acc;
            best_params = params;
            metrics.best_epoch = epoch;
            since_improve = 0;
        } else {
            ++since_improve;
            if (since_improve >= cfg.patience) break;
        }
    }

    metrics.best_val_acc = best_val;
    metrics.test_acc = best_test;
    metrics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    TrainResult result;
    result.params = std::move(best_params);
    result.metrics = std::move(metrics);
    result.masks = std::move(masks);
    result.model_cfg = mcfg;
    return result;
}

}  // namespace ckgnn
