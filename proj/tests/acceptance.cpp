// Acceptance gate for the composite-kernel GNN stack. Each criterion prints
// one PASS/FAIL line with its measured values and runtime; the exit code is
// nonzero when any criterion fails. The full-scale Cora check is skipped (not
// failed) when no converted Cora file is present.
#include <ckgnn/data.hpp>
#include <ckgnn/train.hpp>
#include <ckgnn/verify.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace {

using ckgnn::Tensor;

struct Outcome {
    bool ok = true;
    std::string detail;
};

int g_pass = 0, g_fail = 0, g_skip = 0;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

template <typename Fn>
void run(int idx, const char* name, double budget_s, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = budget_s <= 0.0 || secs < budget_s;
    const bool ok = o.ok && in_budget;
    std::printf("[%s] %d. %s: %s (%.2f s%s)\n", ok ? "PASS" : "FAIL", idx, name,
                o.detail.c_str(), secs,
                in_budget ? "" : (", budget " + fmt(budget_s) + " s exceeded").c_str());
    std::fflush(stdout);
    ++(ok ? g_pass : g_fail);
}

void skip(int idx, const char* name, const std::string& why) {
    std::printf("[SKIP] %d. %s: %s\n", idx, name, why.c_str());
    std::fflush(stdout);
    ++g_skip;
}

// ---- criterion 1: min eig(I - Ahat) >= -1e-8 on random graphs ----

Outcome criterion_psd() {
    ckgnn::Rng rng(101);
    bool all_pass = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 20; ++t) {
        const int n = t == 0 ? 10 : t == 1 ? 200 : 10 + static_cast<int>(rng.below(191));
        const bool weighted = t % 2 == 1;
        const ckgnn::Graph g = ckgnn::verify::make_er_graph(n, 0.08, weighted, rng);
        const ckgnn::PsdReport rep =
            ckgnn::check_psd_decomposition(ckgnn::normalized_adjacency(g));
        all_pass = all_pass && rep.passes;
        worst = std::min(worst, rep.min_eig_i_minus_s);
    }
    Outcome o;
    o.ok = all_pass && worst >= -1e-8;
    o.detail = "worst min eig(I - Ahat) = " + fmt(worst) +
               " over 20 random graphs, n in [10, 200], mixed weights";
    return o;
}

// ---- criterion 2: learned-kernel Gram validity ----

Outcome criterion_gram() {
    const ckgnn::verify::CheckResult r = ckgnn::verify::gram_psd_check(50);
    return {r.passed, r.detail};
}

// ---- criterion 3: gradient checks for every model ----

Outcome criterion_grads() {
    Outcome o;
    for (ckgnn::ModelKind kind : {ckgnn::ModelKind::gcn, ckgnn::ModelKind::gat,
                                  ckgnn::ModelKind::ckgcn, ckgnn::ModelKind::ckgat}) {
        const ckgnn::verify::CheckResult r = ckgnn::verify::model_grad_check(kind, 1e-4);
        o.ok = o.ok && r.passed;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += ckgnn::to_string(kind) + " " + r.detail;
    }
    return o;
}

// ---- criterion 4: MMD oracle equivalence ----

Outcome criterion_mmd() {
    Outcome o;
    for (const ckgnn::verify::CheckResult& r : ckgnn::verify::mmd_suite(41, 50)) {
        o.ok = o.ok && r.passed;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += r.name.substr(5) + " (" + r.detail + ")";
    }
    return o;
}

// ---- criterion 5: CKGCN with K = 1 vs a dense duplicated-aggregation GCN ----

Tensor mm(const Tensor& a, const Tensor& b) {
    Tensor out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double av = a.at(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += av * b.at(k, j);
        }
    return out;
}

Tensor mm_at(const Tensor& a, const Tensor& b) {  // a' * b
    Tensor out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k)
        for (int i = 0; i < a.cols; ++i) {
            const double av = a.at(k, i);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += av * b.at(k, j);
        }
    return out;
}

Tensor mm_bt(const Tensor& a, const Tensor& b) {  // a * b'
    Tensor out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(j, k);
            out.at(i, j) = s;
        }
    return out;
}

struct CeOut {
    double loss = 0.0;
    Tensor grad;  // d loss / d logits
};

CeOut dense_masked_ce(const Tensor& logits, const std::vector<int>& labels,
                      const std::vector<char>& mask) {
    CeOut out;
    out.grad = Tensor(logits.rows, logits.cols);
    int count = 0;
    for (char m : mask)
        if (m) ++count;
    double total = 0.0;
    for (int i = 0; i < logits.rows; ++i) {
        if (!mask[i]) continue;
        double mx = logits.at(i, 0);
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
        double s = 0.0;
        for (int j = 0; j < logits.cols; ++j) s += std::exp(logits.at(i, j) - mx);
        total += mx + std::log(s) - logits.at(i, labels[i]);
        for (int j = 0; j < logits.cols; ++j) {
            const double p = std::exp(logits.at(i, j) - mx) / s;
            out.grad.at(i, j) = (p - (j == labels[i] ? 1.0 : 0.0)) / count;
        }
    }
    out.loss = total / count;
    return out;
}

// forward of the duplicated-aggregation GCN: logits = 2 A relu([A X W0, A X W0]) W1
struct DenseForward {
    Tensor a1;      // A X W0
    Tensor cat;     // [a1, a1]
    Tensor h1;      // relu(cat)
    Tensor logits;  // 2 A h1 W1
};

DenseForward dense_forward(const Tensor& a, const Tensor& x, const Tensor& w0,
                           const Tensor& w1) {
    DenseForward f;
    f.a1 = mm(a, mm(x, w0));
    f.cat = Tensor(f.a1.rows, 2 * f.a1.cols);
    for (int i = 0; i < f.a1.rows; ++i)
        for (int j = 0; j < f.a1.cols; ++j) {
            f.cat.at(i, j) = f.a1.at(i, j);
            f.cat.at(i, j + f.a1.cols) = f.a1.at(i, j);
        }
    f.h1 = f.cat;
    for (double& v : f.h1.data) v = v > 0.0 ? v : 0.0;
    const Tensor ag = mm(a, mm(f.h1, w1));
    f.logits = ag;
    for (std::size_t i = 0; i < f.logits.data.size(); ++i) f.logits.data[i] += ag.data[i];
    return f;
}

Outcome criterion_reduction() {
    const ckgnn::DatasetBundle bundle = ckgnn::gen_sbm(60, 3, 0.2, 0.02, 6, 1.5, 9);
    ckgnn::TrainConfig cfg;
    cfg.model = ckgnn::ModelKind::ckgcn;
    cfg.split = ckgnn::SplitMode::file;
    cfg.lr = 0.01;
    cfg.weight_decay = 5e-4;
    cfg.dropout = 0.0;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    cfg.hidden = 5;
    cfg.heads = 1;
    cfg.latent_z = 2;
    cfg.ae_layers = 2;
    cfg.epochs = 40;
    cfg.patience = 40;
    cfg.seed = 13;

    const ckgnn::ModelConfig mcfg = cfg.model_config(bundle.dim(), bundle.classes);
    ckgnn::Rng prng(77);
    ckgnn::ModelParams init = ckgnn::init_params(mcfg, prng);
    init.kernel = ckgnn::KernelParams::zeros(bundle.dim(), cfg.latent_z, cfg.ae_layers);

    const ckgnn::GraphOperators ops = ckgnn::GraphOperators::build(bundle.graph());
    const Tensor a = ops.a_hat.to_dense();
    const std::vector<char>& train_mask = bundle.masks->train;

    // forward identity at the initial parameters, and K must sit at exactly 1
    double fwd_diff = 0.0, kernel_off = 0.0;
    {
        ckgnn::ad::Tape tape;
        ckgnn::ModelVars vars = ckgnn::model_leaves(tape, init, false);
        ckgnn::Rng unused(0);
        const ckgnn::ForwardOut fwd = ckgnn::model_forward(tape, mcfg, vars, ops,
                                                           tape.leaf(bundle.X, false), false,
                                                           unused);
        for (double v : fwd.k_pattern->value.data)
            kernel_off = std::max(kernel_off, std::abs(v - 1.0));
        const DenseForward ref =
            dense_forward(a, bundle.X, init.layers[0].W, init.layers[1].W);
        for (std::size_t i = 0; i < ref.logits.data.size(); ++i)
            fwd_diff = std::max(fwd_diff,
                                std::abs(ref.logits.data[i] - fwd.logits->value.data[i]));
    }

    // library trajectory from the shared initial parameters
    const ckgnn::TrainResult res = ckgnn::train(bundle, cfg, {}, &init);

    // dense oracle trajectory with its own Adam
    Tensor w0 = init.layers[0].W, w1 = init.layers[1].W;
    Tensor m0(w0.rows, w0.cols), v0(w0.rows, w0.cols);
    Tensor m1(w1.rows, w1.cols), v1(w1.rows, w1.cols);
    auto adam = [&cfg](Tensor& w, const Tensor& g, Tensor& m, Tensor& v, int t) {
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            m.data[i] = b1 * m.data[i] + (1.0 - b1) * g.data[i];
            v.data[i] = b2 * v.data[i] + (1.0 - b2) * g.data[i] * g.data[i];
            w.data[i] -= cfg.lr * (m.data[i] / bc1) / (std::sqrt(v.data[i] / bc2) + eps);
        }
    };

    std::vector<double> ce_series;
    std::vector<std::pair<Tensor, Tensor>> snaps;
    const int h = cfg.hidden;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const DenseForward f = dense_forward(a, bundle.X, w0, w1);
        const CeOut ce = dense_masked_ce(f.logits, bundle.labels, train_mask);
        ce_series.push_back(ce.loss);

        Tensor dhw = mm(a, ce.grad);  // both aggregation branches feed the same product
        for (double& v : dhw.data) v *= 2.0;
        Tensor dw1 = mm_at(f.h1, dhw);
        const Tensor dh1 = mm_bt(dhw, w1);
        Tensor da1(f.a1.rows, h);
        for (int i = 0; i < f.a1.rows; ++i)
            for (int j = 0; j < h; ++j)
                da1.at(i, j) = (f.cat.at(i, j) > 0.0 ? dh1.at(i, j) : 0.0) +
                               (f.cat.at(i, j + h) > 0.0 ? dh1.at(i, j + h) : 0.0);
        Tensor dw0 = mm_at(bundle.X, mm(a, da1));
        for (std::size_t i = 0; i < dw0.data.size(); ++i)
            dw0.data[i] += cfg.weight_decay * w0.data[i];
        for (std::size_t i = 0; i < dw1.data.size(); ++i)
            dw1.data[i] += cfg.weight_decay * w1.data[i];
        adam(w0, dw0, m0, v0, epoch);
        adam(w1, dw1, m1, v1, epoch);
        snaps.emplace_back(w0, w1);
    }

    double ce_diff = 0.0;
    for (int e = 0; e < cfg.epochs; ++e)
        ce_diff = std::max(ce_diff, std::abs(res.metrics.epochs[e].l_ce - ce_series[e]));

    const auto& [bw0, bw1] = snaps[res.metrics.best_epoch - 1];
    double par_diff = 0.0;
    for (std::size_t i = 0; i < bw0.data.size(); ++i)
        par_diff = std::max(par_diff, std::abs(bw0.data[i] - res.params.layers[0].W.data[i]));
    for (std::size_t i = 0; i < bw1.data.size(); ++i)
        par_diff = std::max(par_diff, std::abs(bw1.data[i] - res.params.layers[1].W.data[i]));

    double kernel_drift = 0.0;
    for (const auto& group : {res.params.kernel.enc_W, res.params.kernel.enc_b,
                              res.params.kernel.dec_W, res.params.kernel.dec_b})
        for (const Tensor& t : group)
            for (double v : t.data) kernel_drift = std::max(kernel_drift, std::abs(v));

    Outcome o;
    o.ok = kernel_off == 0.0 && fwd_diff <= 1e-12 && ce_diff <= 1e-10 && par_diff <= 1e-10 &&
           kernel_drift == 0.0;
    o.detail = "max |K - 1| = " + fmt(kernel_off) + ", forward max diff = " + fmt(fwd_diff) +
               ", l_ce trajectory max diff = " + fmt(ce_diff) + " over " +
               std::to_string(cfg.epochs) + " epochs, best-epoch param max diff = " +
               fmt(par_diff) + ", kernel drift = " + fmt(kernel_drift);
    return o;
}

// ---- criterion 6: attention rows are softmax-normalized ----

Outcome criterion_attention() {
    ckgnn::Rng rng(55);
    double worst_row = 0.0;
    for (int t = 0; t < 3; ++t) {
        const ckgnn::Graph g = ckgnn::verify::make_er_graph(40, 0.12, t % 2 == 1, rng);
        const ckgnn::GraphOperators ops = ckgnn::GraphOperators::build(g);
        Tensor x(g.n, 6);
        for (double& v : x.data) v = rng.normal();
        for (ckgnn::ModelKind kind : {ckgnn::ModelKind::gat, ckgnn::ModelKind::ckgat}) {
            ckgnn::ModelConfig mcfg;
            mcfg.kind = kind;
            mcfg.in_dim = 6;
            mcfg.classes = 3;
            mcfg.hidden = 4;
            mcfg.layers = 2;
            mcfg.heads = 3;
            mcfg.latent_z = 2;
            mcfg.ae_layers = 2;
            mcfg.dropout = 0.0;
            ckgnn::Rng init_rng(700 + t);
            ckgnn::ModelParams params = ckgnn::init_params(mcfg, init_rng);

            ckgnn::ad::Tape tape;
            ckgnn::ad::Var hw =
                tape.matmul(tape.leaf(x, false), tape.leaf(params.layers[0].W, false));
            ckgnn::Rng unused(0);
            for (int m = 0; m < mcfg.heads; ++m) {
                const ckgnn::ad::Var tv = ckgnn::attention_values(
                    tape, hw, tape.leaf(params.layers[0].theta[m], false), ops, 0.0, false,
                    unused);
                for (int r = 0; r < g.n; ++r) {
                    double sum = 0.0;
                    for (int e = ops.a_hat.row_ptr[r]; e < ops.a_hat.row_ptr[r + 1]; ++e)
                        sum += tv->value.data[e];
                    worst_row = std::max(worst_row, std::abs(sum - 1.0));
                }
            }
        }
    }

    // theta = 0 must give exactly uniform coefficients over each neighborhood
    bool uniform_exact = true;
    {
        const ckgnn::Graph g = ckgnn::verify::make_er_graph(30, 0.15, false, rng);
        const ckgnn::GraphOperators ops = ckgnn::GraphOperators::build(g);
        Tensor x(g.n, 5);
        for (double& v : x.data) v = rng.normal();
        ckgnn::Rng wr(9);
        ckgnn::ad::Tape tape;
        ckgnn::ad::Var hw =
            tape.matmul(tape.leaf(x, false), tape.leaf(Tensor::glorot(5, 4, wr), false));
        ckgnn::Rng unused(0);
        const ckgnn::ad::Var tv = ckgnn::attention_values(tape, hw, tape.leaf(Tensor(8, 1), false),
                                                          ops, 0.0, false, unused);
        for (int r = 0; r < g.n; ++r) {
            const int deg = ops.a_hat.row_ptr[r + 1] - ops.a_hat.row_ptr[r];
            for (int e = ops.a_hat.row_ptr[r]; e < ops.a_hat.row_ptr[r + 1]; ++e)
                if (tv->value.data[e] != 1.0 / deg) uniform_exact = false;
        }
    }
    Outcome o;
    o.ok = worst_row <= 1e-12 && uniform_exact;
    o.detail = "worst |row sum - 1| = " + fmt(worst_row) +
               " across GAT/CKGAT heads on 3 graphs; theta = 0 uniform: " +
               (uniform_exact ? "exact" : "NOT exact");
    return o;
}

// ---- criterion 7: synthetic end-to-end benchmark ----

struct MeanStd {
    double mean = 0.0, stdev = 0.0;
};

MeanStd sweep_mean(const ckgnn::DatasetBundle& bundle, ckgnn::ModelKind kind,
                   ckgnn::SplitMode split, int ae_layers, int epochs) {
    std::vector<double> accs;
    for (std::uint64_t s = 0; s < 5; ++s) {
        ckgnn::TrainConfig cfg;
        cfg.model = kind;
        cfg.split = split;
        cfg.ae_layers = ae_layers;
        cfg.epochs = epochs;
        cfg.seed = s;
        accs.push_back(ckgnn::train(bundle, cfg).metrics.test_acc);
    }
    MeanStd r;
    for (double a : accs) r.mean += a;
    r.mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - r.mean) * (a - r.mean);
    r.stdev = std::sqrt(var / (accs.size() - 1));
    return r;
}

Outcome criterion_synthetic() {
    const ckgnn::DatasetBundle bundle = ckgnn::gen_sbm(400, 4, 0.05, 0.005, 16, 1.0, 1);
    const MeanStd gcn = sweep_mean(bundle, ckgnn::ModelKind::gcn, ckgnn::SplitMode::file, 4, 300);
    const MeanStd ck = sweep_mean(bundle, ckgnn::ModelKind::ckgcn, ckgnn::SplitMode::file, 4, 300);
    Outcome o;
    o.ok = gcn.mean >= 0.85 && ck.mean >= gcn.mean - 0.01;
    o.detail = "5 seeds: GCN mean = " + fmt(gcn.mean) + " (std " + fmt(gcn.stdev) +
               "), CKGCN mean = " + fmt(ck.mean) + " (std " + fmt(ck.stdev) +
               "); need GCN >= 0.85 and CKGCN >= GCN - 0.01";
    return o;
}

// ---- criterion 8: converted-Cora spot check (optional input) ----

std::string find_cora() {
    if (const char* env = std::getenv("CKGNN_CORA"); env && *env) return env;
    for (const char* p : {"data/cora.ckg", "../data/cora.ckg", "../../data/cora.ckg"})
        if (std::filesystem::exists(p)) return p;
    return "";
}

Outcome criterion_cora(const std::string& path) {
    const ckgnn::DatasetBundle bundle = ckgnn::load_dataset(path);
    const MeanStd gcn =
        sweep_mean(bundle, ckgnn::ModelKind::gcn, ckgnn::SplitMode::semi, 2, 200);
    const MeanStd ck =
        sweep_mean(bundle, ckgnn::ModelKind::ckgcn, ckgnn::SplitMode::semi, 2, 200);
    Outcome o;
    o.ok = std::abs(gcn.mean - 0.815) <= 0.020 && ck.mean >= gcn.mean;
    o.detail = "5 seeds on " + path + ": GCN mean = " + fmt(gcn.mean) + " (std " +
               fmt(gcn.stdev) + "), CKGCN mean = " + fmt(ck.mean) + " (std " + fmt(ck.stdev) +
               "); need GCN within 0.815 +/- 0.020 and CKGCN >= GCN";
    return o;
}

// ---- criterion 9: bit-identical metrics under a fixed seed ----

Outcome criterion_determinism() {
    const ckgnn::DatasetBundle bundle = ckgnn::gen_sbm(60, 3, 0.2, 0.02, 6, 1.5, 9);
    ckgnn::TrainConfig cfg;
    cfg.model = ckgnn::ModelKind::ckgcn;
    cfg.split = ckgnn::SplitMode::file;
    cfg.hidden = 8;
    cfg.latent_z = 3;
    cfg.ae_layers = 2;
    cfg.epochs = 8;
    cfg.patience = 8;
    cfg.seed = 21;

    const ckgnn::TrainResult a = ckgnn::train(bundle, cfg);
    const ckgnn::TrainResult b = ckgnn::train(bundle, cfg);
    bool same = a.metrics.epochs.size() == b.metrics.epochs.size() &&
                a.metrics.best_epoch == b.metrics.best_epoch &&
                a.metrics.best_val_acc == b.metrics.best_val_acc &&
                a.metrics.test_acc == b.metrics.test_acc;
    for (std::size_t e = 0; same && e < a.metrics.epochs.size(); ++e) {
        const ckgnn::EpochRecord &ra = a.metrics.epochs[e], &rb = b.metrics.epochs[e];
        same = ra.l_ce == rb.l_ce && ra.l_k == rb.l_k && ra.l_d == rb.l_d &&
               ra.total == rb.total && ra.train_acc == rb.train_acc && ra.val_acc == rb.val_acc;
    }
    Outcome o;
    o.ok = same;
    o.detail = std::to_string(a.metrics.epochs.size()) +
               " epochs (ckgcn, dropout 0.5) repeated with seed 21: " +
               (same ? "bit-identical" : "DIVERGED");
    return o;
}

}  // namespace

int main() {
    std::printf("acceptance: composite-kernel GNN stack\n");
    run(1, "indefinite-kernel property of the normalized adjacency", 10.0, criterion_psd);
    run(2, "learned-kernel Gram validity", 5.0, criterion_gram);
    run(3, "gradient correctness for gcn/gat/ckgcn/ckgat", 60.0, criterion_grads);
    run(4, "MMD oracle equivalence", 0.0, criterion_mmd);
    run(5, "CKGCN reduction identity at K = 1", 0.0, criterion_reduction);
    run(6, "attention normalization", 0.0, criterion_attention);
    run(7, "synthetic end-to-end benchmark", 120.0, criterion_synthetic);
    const std::string cora = find_cora();
    if (cora.empty())
        skip(8, "full-scale Cora spot check",
             "no converted Cora file (set CKGNN_CORA or place data/cora.ckg; see "
             "docs/convert_cora.py)");
    else
        run(8, "full-scale Cora spot check", 1800.0, [&cora] { return criterion_cora(cora); });
    run(9, "seeded determinism", 0.0, criterion_determinism);
    std::printf("acceptance: %d passed, %d failed, %d skipped\n", g_pass, g_fail, g_skip);
    return g_fail == 0 ? 0 : 1;
}
