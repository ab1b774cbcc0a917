#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ckgnn/data.hpp"
#include "ckgnn/kernel.hpp"
#include "ckgnn/models.hpp"
#include "ckgnn/serialize.hpp"
#include "ckgnn/train.hpp"
#include "ckgnn/verify.hpp"

namespace ckgnn::cli {

namespace detail {

struct TrainOpts {
    std::string model = "gcn";
    std::string data;
    std::string split = "semi";
    double lr = 0.01, weight_decay = 5e-4, dropout = 0.5;
    double lambda1 = 0.5, lambda2 = 0.1, beta = 1.0;
    int latent_z = 16, heads = 8, hidden = 16, layers = 2, ae_layers = 4;
    int epochs = 300, patience = 30, warmup_epochs = 0;
    bool dropout_kernel = false;
    std::uint64_t seed = 0;
    std::string save_params;

    TrainConfig to_config() const {
        TrainConfig c;
        c.model = parse_model_kind(model);
        c.split = parse_split_mode(split);
        c.lr = lr;
        c.weight_decay = weight_decay;
        c.dropout = dropout;
        c.lambda1 = lambda1;
        c.lambda2 = lambda2;
        c.beta = beta;
        c.latent_z = latent_z;
        c.heads = heads;
        c.hidden = hidden;
        c.layers = layers;
        c.ae_layers = ae_layers;
        c.epochs = epochs;
        c.patience = patience;
        c.warmup_epochs = warmup_epochs;
        c.dropout_kernel = dropout_kernel;
        c.seed = seed;
        c.validate();
        return c;
    }

    nlohmann::json snapshot(const char* command) const {
        return nlohmann::json{{"record", "config"},
                              {"command", command},
                              {"model", model},
                              {"data", data},
                              {"split", split},
                              {"lr", lr},
                              {"weight_decay", weight_decay},
                              {"dropout", dropout},
                              {"lambda1", lambda1},
                              {"lambda2", lambda2},
                              {"beta", beta},
                              {"latent_z", latent_z},
                              {"heads", heads},
                              {"hidden", hidden},
                              {"layers", layers},
                              {"ae_layers", ae_layers},
                              {"epochs", epochs},
                              {"patience", patience},
                              {"warmup_epochs", warmup_epochs},
                              {"dropout_kernel", dropout_kernel},
                              {"seed", seed}};
    }
};

inline void add_train_options(CLI::App* sub, TrainOpts& o, bool with_seed = true) {
    sub->add_option("--model", o.model, "model: gcn|gat|ckgcn|ckgat")->capture_default_str();
    sub->add_option("--data", o.data, "dataset file")->required();
    sub->add_option("--split", o.split, "split: semi|super|file")->capture_default_str();
    sub->add_option("--lr", o.lr, "learning rate")->capture_default_str();
    sub->add_option("--weight-decay", o.weight_decay, "L2 weight decay on layer weights")->capture_default_str();
    sub->add_option("--dropout", o.dropout, "dropout rate")->capture_default_str();
    sub->add_option("--lambda1", o.lambda1, "kernel loss weight")->capture_default_str();
    sub->add_option("--lambda2", o.lambda2, "difference regularizer weight")->capture_default_str();
    sub->add_option("--beta", o.beta, "MMD weight inside the kernel loss")->capture_default_str();
    sub->add_option("--latent-z", o.latent_z, "autoencoder latent width")->capture_default_str();
    sub->add_option("--heads", o.heads, "attention heads per layer")->capture_default_str();
    sub->add_option("--hidden", o.hidden, "hidden width per head/branch")->capture_default_str();
    sub->add_option("--layers", o.layers, "number of layers")->capture_default_str();
    sub->add_option("--ae-layers", o.ae_layers, "affine maps per autoencoder side")->capture_default_str();
    sub->add_option("--epochs", o.epochs, "training epochs")->capture_default_str();
    sub->add_option("--patience", o.patience, "early stopping patience")->capture_default_str();
    sub->add_option("--warmup-epochs", o.warmup_epochs, "kernel-only warmup epochs")->capture_default_str();
    sub->add_flag("--dropout-kernel", o.dropout_kernel, "also apply dropout to kernel values");
    if (with_seed) sub->add_option("--seed", o.seed, "random seed")->capture_default_str();
}

// the default patience follows epochs down so short runs stay valid; an
// explicit --patience larger than --epochs still errors
inline void finalize_patience(const CLI::App* cmd, TrainOpts& o) {
    if (cmd->count("--patience") == 0) o.patience = std::min(o.patience, std::max(1, o.epochs));
}

inline nlohmann::json epoch_json(const EpochRecord& r) {
    return nlohmann::json{{"record", "epoch"},   {"epoch", r.epoch},
                          {"l_ce", r.l_ce},      {"l_k", r.l_k},
                          {"l_d", r.l_d},        {"total", r.total},
                          {"train_acc", r.train_acc}, {"val_acc", r.val_acc}};
}

inline int do_train(const TrainOpts& o, std::ostream& out) {
    const DatasetBundle bundle = load_dataset(o.data);
    const TrainConfig cfg = o.to_config();
    out << o.snapshot("train").dump() << '\n';
    TrainResult result = train(bundle, cfg, [&out](const EpochRecord& r) {
        out << epoch_json(r).dump() << '\n';
    });
    nlohmann::json final_rec{{"record", "final"},
                             {"best_epoch", result.metrics.best_epoch},
                             {"best_val_acc", result.metrics.best_val_acc},
                             {"test_acc", result.metrics.test_acc},
                             {"seconds", result.metrics.seconds},
                             {"seed", o.seed}};
    if (!o.save_params.empty()) {
        save_params(o.save_params, result.model_cfg, result.params);
        final_rec["params_path"] = o.save_params;
    }
    out << final_rec.dump() << '\n';
    return 0;
}

inline int do_eval(const std::string& data_path, const std::string& params_path,
                   const std::string& split, std::uint64_t seed, std::ostream& out) {
    const DatasetBundle bundle = load_dataset(data_path);
    auto [mcfg, params] = load_params(params_path);
    if (mcfg.in_dim != bundle.dim() || mcfg.classes != bundle.classes)
        throw std::invalid_argument("eval: params were trained for " + std::to_string(mcfg.in_dim) +
                                    " features / " + std::to_string(mcfg.classes) +
                                    " classes, dataset has " + std::to_string(bundle.dim()) + " / " +
                                    std::to_string(bundle.classes));
    Rng rng(seed);
    SplitMasks masks;
    switch (parse_split_mode(split)) {
        case SplitMode::semi: masks = make_semi_supervised_split(bundle.labels, bundle.classes, rng); break;
        case SplitMode::super: masks = make_supervised_split(bundle.n(), rng); break;
        case SplitMode::file:
            if (!bundle.masks) throw std::invalid_argument("eval: split 'file' requires mask lines in the dataset");
            masks = *bundle.masks;
            break;
    }
    const GraphOperators ops = GraphOperators::build(bundle.graph());
    ad::Tape tape;
    ModelVars vars = model_leaves(tape, params, false);
    Rng unused(0);
    ForwardOut fwd = model_forward(tape, mcfg, vars, ops, tape.leaf(bundle.X, false), false, unused);
    out << nlohmann::json{{"record", "eval"},
                          {"data", data_path},
                          {"params", params_path},
                          {"split", split},
                          {"seed", seed},
                          {"train_acc", evaluate_accuracy(fwd.probs->value, bundle.labels, masks.train)},
                          {"val_acc", evaluate_accuracy(fwd.probs->value, bundle.labels, masks.val)},
                          {"test_acc", evaluate_accuracy(fwd.probs->value, bundle.labels, masks.test)}}
               .dump()
        << '\n';
    return 0;
}

inline int do_verify(const std::string& data_path, std::ostream& out) {
    std::optional<Graph> graph;
    if (!data_path.empty()) graph = load_dataset(data_path).graph();
    const auto results = verify::run_all(graph);
    int failures = 0;
    for (const auto& r : results) {
        out << (r.passed ? "[ ok ] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
        if (!r.passed) ++failures;
    }
    out << "verify: " << results.size() << " checks, " << failures << " failed\n";
    return failures == 0 ? 0 : 3;
}

inline int do_inspect_kernel(const std::string& data_path, const std::string& params_path,
                             const std::string& out_path, std::ostream& out) {
    const DatasetBundle bundle = load_dataset(data_path);
    auto [mcfg, params] = load_params(params_path);
    if (!uses_kernel(mcfg.kind))
        throw std::invalid_argument("inspect-kernel: model '" + to_string(mcfg.kind) +
                                    "' has no learned kernel");
    if (mcfg.in_dim != bundle.dim())
        throw std::invalid_argument("inspect-kernel: feature width mismatch");
    const GraphOperators ops = GraphOperators::build(bundle.graph());
    ad::Tape tape;
    KernelVars kv = kernel_leaves(tape, params.kernel, false);
    ad::Var z = mlp_forward(tape, tape.leaf(bundle.X, false), kv.enc_W, kv.enc_b);
    ad::Var k_vals = kernel_values_on_pattern(tape, z, ops.a_hat);
    std::vector<double> kv_col(k_vals->value.data.begin(), k_vals->value.data.end());
    const SparseMatrix k_hat = composite_kernel_matrix(kv_col, ops.a_hat);
    export_kernel_comparison(k_hat, ops.a_hat, out_path);
    double max_diff = 0.0, sum_diff = 0.0;
    for (int e = 0; e < k_hat.nnz(); ++e) {
        const double d = std::abs(k_hat.values[e] - ops.a_hat.values[e]);
        max_diff = std::max(max_diff, d);
        sum_diff += d;
    }
    out << nlohmann::json{{"record", "inspect-kernel"},
                          {"out", out_path},
                          {"nnz", k_hat.nnz()},
                          {"mean_abs_diff", k_hat.nnz() ? sum_diff / k_hat.nnz() : 0.0},
                          {"max_abs_diff", max_diff}}
               .dump()
        << '\n';
    return 0;
}

inline int do_sweep(const TrainOpts& o, int seeds, std::uint64_t seed_base, std::ostream& out) {
    if (seeds < 1) throw std::invalid_argument("sweep: need --seeds >= 1");
    const DatasetBundle bundle = load_dataset(o.data);
    nlohmann::json snap = o.snapshot("sweep");
    snap["seeds"] = seeds;
    snap["seed"] = seed_base;
    out << snap.dump() << '\n';
    std::vector<double> accs;
    for (int s = 0; s < seeds; ++s) {
        TrainConfig cfg = o.to_config();
        cfg.seed = seed_base + static_cast<std::uint64_t>(s);
        const TrainResult result = train(bundle, cfg);
        accs.push_back(result.metrics.test_acc);
        out << nlohmann::json{{"record", "sweep-run"},
                              {"seed", cfg.seed},
                              {"best_epoch", result.metrics.best_epoch},
                              {"best_val_acc", result.metrics.best_val_acc},
                              {"test_acc", result.metrics.test_acc},
                              {"seconds", result.metrics.seconds}}
                   .dump()
            << '\n';
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= accs.size();
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    const double std_dev = accs.size() > 1 ? std::sqrt(var / (accs.size() - 1)) : 0.0;
    out << nlohmann::json{{"record", "sweep"},
                          {"model", o.model},
                          {"seeds", seeds},
                          {"mean_test_acc", mean},
                          {"std_test_acc", std_dev}}
               .dump()
        << '\n';
    return 0;
}

}  // namespace detail

// Parses and runs one invocation. Normal output goes to `out`; errors and
// usage text go to stderr. Exit codes: 0 success, 1 runtime failure, 2 bad
// arguments or config, 3 verification failure.
inline int run_command(std::vector<std::string> args, std::ostream& out) {
    CLI::App app{"composite-kernel graph neural networks"};
    app.require_subcommand(1);
    const char* env_cfg = std::getenv("CKGNN_CONFIG");
    app.set_config("--config", env_cfg ? env_cfg : "",
                   "INI config file (default from $CKGNN_CONFIG); CLI flags take precedence");

    detail::TrainOpts train_opts;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model, emitting one JSON record per line");
    detail::add_train_options(train_cmd, train_opts);
    train_cmd->add_option("--save-params", train_opts.save_params, "write best-epoch parameters (JSON)");

    std::string eval_data, eval_params, eval_split = "file";
    std::uint64_t eval_seed = 0;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate saved parameters on a dataset");
    eval_cmd->add_option("--data", eval_data, "dataset file")->required();
    eval_cmd->add_option("--params", eval_params, "parameters JSON from train --save-params")->required();
    eval_cmd->add_option("--split", eval_split, "split: semi|super|file")->capture_default_str();
    eval_cmd->add_option("--seed", eval_seed, "seed for semi/super split resolution")->capture_default_str();

    std::string verify_data;
    CLI::App* verify_cmd = app.add_subcommand("verify", "run the built-in verification suites");
    verify_cmd->add_option("--data", verify_data, "also check the normalized adjacency of this dataset");

    std::string ik_data, ik_params, ik_out;
    CLI::App* ik_cmd = app.add_subcommand("inspect-kernel", "export composite kernel vs normalized adjacency");
    ik_cmd->add_option("--data", ik_data, "dataset file")->required();
    ik_cmd->add_option("--params", ik_params, "parameters JSON of a kernel model")->required();
    ik_cmd->add_option("--out", ik_out, "output comparison table path")->required();

    struct GenOpts {
        int n = 400, classes = 4, dim = 16;
        double p_in = 0.05, p_out = 0.005, signal = 1.0;
        std::uint64_t seed = 0;
        std::string out_path;
    } gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-synthetic", "generate a stochastic block model dataset");
    gen_cmd->add_option("--n", gen.n, "node count")->capture_default_str();
    gen_cmd->add_option("--classes", gen.classes, "number of classes (must divide n)")->capture_default_str();
    gen_cmd->add_option("--p-in", gen.p_in, "intra-class edge probability")->capture_default_str();
    gen_cmd->add_option("--p-out", gen.p_out, "inter-class edge probability")->capture_default_str();
    gen_cmd->add_option("--dim", gen.dim, "feature dimension")->capture_default_str();
    gen_cmd->add_option("--signal", gen.signal, "class mean magnitude")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out_path, "output dataset path")->required();

    detail::TrainOpts sweep_opts;
    int sweep_seeds = 5;
    std::uint64_t sweep_base = 0;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "train across seeds and aggregate test accuracy");
    detail::add_train_options(sweep_cmd, sweep_opts, false);
    sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds")->capture_default_str();
    sweep_cmd->add_option("--seed", sweep_base, "base seed; runs use seed, seed+1, ...")->capture_default_str();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n' << app.help();
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            detail::finalize_patience(train_cmd, train_opts);
            return detail::do_train(train_opts, out);
        }
        if (eval_cmd->parsed()) return detail::do_eval(eval_data, eval_params, eval_split, eval_seed, out);
        if (verify_cmd->parsed()) return detail::do_verify(verify_data, out);
        if (ik_cmd->parsed()) return detail::do_inspect_kernel(ik_data, ik_params, ik_out, out);
        if (gen_cmd->parsed()) {
            const DatasetBundle b = gen_sbm(gen.n, gen.classes, gen.p_in, gen.p_out, gen.dim,
                                            gen.signal, gen.seed);
            save_dataset(b, gen.out_path);
            out << nlohmann::json{{"record", "gen-synthetic"},
                                  {"out", gen.out_path},
                                  {"n", b.n()},
                                  {"dim", b.dim()},
                                  {"classes", b.classes},
                                  {"edges", b.edges.size()},
                                  {"has_masks", b.masks.has_value()}}
                       .dump()
                << '\n';
            return 0;
        }
        if (sweep_cmd->parsed()) {
            detail::finalize_patience(sweep_cmd, sweep_opts);
            return detail::do_sweep(sweep_opts, sweep_seeds, sweep_base, out);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand\n" << app.help();
    return 2;
}

}  // namespace ckgnn::cli
