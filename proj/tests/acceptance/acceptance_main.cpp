// Acceptance suite: every criterion below runs end to end and prints one
// PASS/FAIL line. The synthetic benchmark stands in for full-scale data; the
// numeric checks compare against independent in-file oracles.
//
// Criterion 8 drives the command-line binary; its path arrives via MPVAD_CLI.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "mpvad/evaluation.hpp"
#include "mpvad/threading.hpp"

namespace fs = std::filesystem;
using namespace mpvad;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

fs::path work_root() {
    static fs::path root = [] {
        fs::path d = fs::temp_directory_path() / "mpvad_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return root;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.next_uniform(lo, hi));
    return t;
}

// ---------------------------------------------------------------------------
// Independent oracles (direct-formula recomputation, plain double loops)
// ---------------------------------------------------------------------------

double intensity_oracle(const Tensor<double>& target, const Tensor<double>& pred) {
    const int c = target.dim(0), h = target.dim(1), w = target.dim(2);
    double acc = 0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double q = 0;
            for (int ch = 0; ch < c; ++ch) {
                double d = target.at(ch, i, j) - pred.at(ch, i, j);
                q += d * d;
            }
            acc += std::sqrt(q);
        }
    return acc;
}

double gd_oracle(const Tensor<double>& target, const Tensor<double>& pred) {
    const int c = target.dim(0), h = target.dim(1), w = target.dim(2);
    double acc = 0;
    for (int ch = 0; ch < c; ++ch) {
        for (int i = 1; i < h; ++i)
            for (int j = 0; j < w; ++j)
                acc += std::abs(std::abs(pred.at(ch, i, j) - pred.at(ch, i - 1, j)) -
                                std::abs(target.at(ch, i, j) - target.at(ch, i - 1, j)));
        for (int i = 0; i < h; ++i)
            for (int j = 1; j < w; ++j)
                acc += std::abs(std::abs(pred.at(ch, i, j) - pred.at(ch, i, j - 1)) -
                                std::abs(target.at(ch, i, j) - target.at(ch, i, j - 1)));
    }
    return acc;
}

// Standalone rerun of the frozen feature stack (conv3x3 + relu + maxpool).
std::vector<Tensor<double>> loss_stack_oracle(LossNetwork<double>& net,
                                              const Tensor<double>& frame) {
    const int h = frame.dim(1), w = frame.dim(2);
    Tensor<double> x({3, h, w});
    for (int c = 0; c < 3; ++c) {
        const int src = frame.dim(0) == 1 ? 0 : c;
        double s = 0.5 / kLossNetStd[c], o = (0.5 - kLossNetMean[c]) / kLossNetStd[c];
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) x.at(c, i, j) = frame.at(src, i, j) * s + o;
    }
    const LossNetConfig& cfg = net.config();
    std::vector<Tensor<double>> taps;
    size_t pi = 0;
    ParamBag<double>& bag = net.params();
    for (size_t layer = 0; layer < cfg.widths.size(); ++layer) {
        const Tensor<double>& wt = bag.params[pi]->value;
        const Tensor<double>& bt = bag.params[pi + 1]->value;
        pi += 2;
        const int ci = x.dim(0), hh = x.dim(1), ww = x.dim(2), co = wt.dim(0);
        Tensor<double> y({co, hh, ww});
        for (int o = 0; o < co; ++o)
            for (int i = 0; i < hh; ++i)
                for (int j = 0; j < ww; ++j) {
                    double acc = bt[static_cast<size_t>(o)];
                    for (int c = 0; c < ci; ++c)
                        for (int di = -1; di <= 1; ++di)
                            for (int dj = -1; dj <= 1; ++dj) {
                                int ii = i + di, jj = j + dj;
                                if (ii < 0 || ii >= hh || jj < 0 || jj >= ww) continue;
                                acc += wt[((static_cast<size_t>(o) * ci + c) * 3 + di + 1) * 3 +
                                          dj + 1] *
                                       x.at(c, ii, jj);
                            }
                    y.at(o, i, j) = std::max(0.0, acc);
                }
        x = y;
        int idx = static_cast<int>(layer) + 1;
        for (int t : cfg.taps)
            if (t == idx) taps.push_back(x);
        if (taps.size() == cfg.taps.size()) break;
        for (int p : cfg.pool_after)
            if (p == idx && x.dim(1) >= 2 && x.dim(2) >= 2) {
                Tensor<double> pooled({x.dim(0), x.dim(1) / 2, x.dim(2) / 2});
                for (int c = 0; c < x.dim(0); ++c)
                    for (int i = 0; i < pooled.dim(1); ++i)
                        for (int j = 0; j < pooled.dim(2); ++j)
                            pooled.at(c, i, j) =
                                std::max({x.at(c, 2 * i, 2 * j), x.at(c, 2 * i, 2 * j + 1),
                                          x.at(c, 2 * i + 1, 2 * j), x.at(c, 2 * i + 1, 2 * j + 1)});
                x = pooled;
            }
    }
    return taps;
}

double nt_oracle(LossNetwork<double>& net, const Tensor<double>& target,
                 const Tensor<double>& pred, const std::map<int, double>& alpha) {
    auto t_taps = loss_stack_oracle(net, target);
    auto p_taps = loss_stack_oracle(net, pred);
    double total = 0;
    for (size_t k = 0; k < t_taps.size(); ++k) {
        double l1 = 0;
        for (size_t i = 0; i < t_taps[k].numel(); ++i)
            l1 += std::abs(t_taps[k][i] - p_taps[k][i]);
        total += alpha.at(net.config().taps[k]) * l1;
    }
    return total;
}

// All-pairs embedded-Gaussian attention with explicit loops.
template <typename T>
Tensor<T> nonlocal_oracle(const NonLocalBlock<T>& block, const Tensor<T>& x) {
    const int c = x.dim(0), n = x.dim(1) * x.dim(2), e = block.embed;
    auto project = [&](const Conv2dLayer<T>& conv, int pos, int out_dim) {
        std::vector<double> r(static_cast<size_t>(out_dim));
        for (int o = 0; o < out_dim; ++o) {
            double acc = conv.b.value[static_cast<size_t>(o)];
            for (int ci = 0; ci < c; ++ci)
                acc += static_cast<double>(conv.w.value[static_cast<size_t>(o) * c + ci]) *
                       x.data[static_cast<size_t>(ci) * n + pos];
            r[static_cast<size_t>(o)] = acc;
        }
        return r;
    };
    std::vector<std::vector<double>> th(static_cast<size_t>(n)), ph(static_cast<size_t>(n)),
        gg(static_cast<size_t>(n));
    for (int p = 0; p < n; ++p) {
        th[static_cast<size_t>(p)] = project(block.theta, p, e);
        ph[static_cast<size_t>(p)] = project(block.phi, p, e);
        gg[static_cast<size_t>(p)] = project(block.g, p, e);
    }
    Tensor<T> out(x.shape);
    for (int u = 0; u < n; ++u) {
        std::vector<double> a(static_cast<size_t>(n));
        double mx = -1e300;
        for (int v = 0; v < n; ++v) {
            double dot = 0;
            for (int k = 0; k < e; ++k)
                dot += th[static_cast<size_t>(u)][static_cast<size_t>(k)] *
                       ph[static_cast<size_t>(v)][static_cast<size_t>(k)];
            a[static_cast<size_t>(v)] = dot;
            mx = std::max(mx, dot);
        }
        double z = 0;
        for (int v = 0; v < n; ++v) {
            a[static_cast<size_t>(v)] = std::exp(a[static_cast<size_t>(v)] - mx);
            z += a[static_cast<size_t>(v)];
        }
        std::vector<double> y(static_cast<size_t>(e), 0.0);
        for (int v = 0; v < n; ++v)
            for (int k = 0; k < e; ++k)
                y[static_cast<size_t>(k)] +=
                    a[static_cast<size_t>(v)] / z *
                    gg[static_cast<size_t>(v)][static_cast<size_t>(k)];
        for (int o = 0; o < c; ++o) {
            double acc = block.out.b.value[static_cast<size_t>(o)];
            for (int k = 0; k < e; ++k)
                acc += static_cast<double>(block.out.w.value[static_cast<size_t>(o) * e + k]) *
                       y[static_cast<size_t>(k)];
            out.data[static_cast<size_t>(o) * n + u] =
                static_cast<T>(acc + x.data[static_cast<size_t>(o) * n + u]);
        }
    }
    return out;
}

double auc_pairs_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0;
    size_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Shared desk-scale configuration for the synthetic benchmark (criterion 6/9).
// The architecture keeps every component of the full model; channel widths
// and tap resolutions are scaled to desk size.
// ---------------------------------------------------------------------------

NetworkConfig desk_network(uint64_t seed) {
    NetworkConfig c;
    c.num_paths = 3;
    c.input_len = 8;
    c.in_channels = 1;
    c.path_channels = {8, 16, 32};
    c.path_divisors = {4, 8, 16};
    c.seed = seed;
    return c;
}

TrainConfig desk_train(uint64_t seed, double lambda_nt) {
    TrainConfig tc;
    tc.epochs = 5;
    tc.batch_size = 4;
    tc.learning_rate = 3e-4;
    tc.weight_decay = 1e-4;
    tc.window_stride = 2;
    tc.seed = seed;
    tc.weights.lambda_nt = lambda_nt;
    return tc;
}

struct VariantResult {
    double auc = 0.0;
    double delta_s = 0.0;
    std::string checkpoint;
};

VariantResult run_desk_variant(const DatasetManifest& manifest, const AblationSpec& spec,
                               uint64_t seed, const std::string& out_dir,
                               std::vector<ScoreSeries>* series_out = nullptr) {
    NetworkConfig net_cfg = derive_network_config(desk_network(seed), spec);
    TrainConfig tc = desk_train(seed, spec.nt_loss ? 1.0 : 0.0);
    std::unique_ptr<LossNetwork<float>> ln;
    if (spec.nt_loss) ln = std::make_unique<LossNetwork<float>>(LossNetConfig::scaled(8, seed));
    TrainResult tr = train(manifest, net_cfg, tc, ln.get(), out_dir);
    LoadedCheckpoint ckpt = load_network_checkpoint(tr.final_checkpoint);

    std::vector<ScoreSeries> series(manifest.test_clips.size());
    parallel_for(static_cast<int>(manifest.test_clips.size()),
                 static_cast<int>(std::thread::hardware_concurrency()), [&](int i) {
                     VideoClip clip =
                         load_clip(manifest, manifest.test_clips[static_cast<size_t>(i)]);
                     series[static_cast<size_t>(i)] =
                         score_clip(clip, *ckpt.network, net_cfg.input_len);
                 });
    VariantResult r;
    r.auc = global_auc(series);
    r.delta_s = score_gap(series).delta_s;
    r.checkpoint = tr.final_checkpoint;
    if (series_out) *series_out = std::move(series);
    return r;
}

// Shared state across criteria.
std::string g_desk_checkpoint;
std::string g_desk_manifest;
double g_desk_auc = 0.0;

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome criterion1_loss_oracles() {
    double t0 = now_seconds();
    LossNetwork<double> net(LossNetConfig::scaled(2, 71));
    std::map<int, double> alpha = {{2, 0.1}, {4, 1.0}, {7, 10.0}, {10, 10.0}, {13, 10.0}};
    double worst = 0.0;
    const int pairs = 24;
    for (int k = 0; k < pairs; ++k) {
        Rng rng(1000 + static_cast<uint64_t>(k));
        Tensor<double> target = random_tensor<double>({3, 8, 8}, rng);
        Tensor<double> pred = random_tensor<double>({3, 8, 8}, rng);
        Tape<double> tp;
        Var<double> pv = tp.constant(pred);
        double li = tp.value(intensity_loss(tp, pv, target, Reduction::sum).id)[0];
        double lg = tp.value(gradient_difference_loss(tp, pv, target, Reduction::sum).id)[0];
        double ln = tp.value(noise_tolerance_loss(tp, pv, target, net, alpha, Reduction::sum).id)[0];
        auto rel = [](double got, double want) {
            return std::abs(got - want) / std::max({std::abs(want), std::abs(got), 1e-12});
        };
        worst = std::max(worst, rel(li, intensity_oracle(target, pred)));
        worst = std::max(worst, rel(lg, gd_oracle(target, pred)));
        worst = std::max(worst, rel(ln, nt_oracle(net, target, pred, alpha)));
    }
    double secs = now_seconds() - t0;
    std::ostringstream d;
    d << pairs << " pairs, max rel err " << worst << ", " << secs << " s";
    return {worst <= 1e-6 && secs < 10.0, d.str()};
}

// The parameter-space check runs the intensity + gradient-difference
// objective (the lambda_nt = 0 total loss, the configuration grayscale data
// trains with) against a high-contrast checkerboard target: that keeps every
// l1 argument bounded away from its kink, so h = 1e-4 central differences
// measure the true derivative instead of a chord across an |.| corner. The
// noise tolerance term is piecewise linear in thousands of arguments (any
// weight step crosses many kinks), so its gradient is verified separately
// with respect to the prediction, where the same step stays kink-free.
Outcome criterion2_gradient_check() {
    double t0 = now_seconds();
    NetworkConfig cfg;
    cfg.num_paths = 2;
    cfg.path_channels = {4, 8};
    cfg.path_divisors = {2, 4};
    cfg.in_channels = 1;
    cfg.input_len = 2;
    cfg.seed = 42;

    TotalLossConfig loss_cfg;
    loss_cfg.reduction = Reduction::mean;
    loss_cfg.weights.lambda_nt = 0.0;

    Rng data_rng(77);
    std::vector<Tensor<double>> frames;
    for (int i = 0; i < cfg.input_len; ++i)
        frames.push_back(random_tensor<double>({1, 16, 16}, data_rng));
    Tensor<double> target({1, 16, 16});
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) target.at(0, i, j) = ((i + j) % 2 ? 0.8 : -0.8);

    auto make_net = [&]() {
        auto net = std::make_unique<PredictionNetwork<double>>(cfg);
        // Non-local output projections start at zero; randomize them so
        // gradients reach the attention branches.
        Rng wr(4242);
        for (int l = 0; l < cfg.num_paths; ++l)
            for (auto* p : net->path_params(l))
                if (p->name.find("nonlocal.out") != std::string::npos)
                    for (auto& v : p->value.data) v = wr.next_uniform(-0.3, 0.3);
        return net;
    };

    auto net = make_net();
    auto eval_loss = [&](PredictionNetwork<double>& n) {
        Tape<double> tape;
        Var<double> pred = n.forward(tape, frames);
        return static_cast<double>(
            total_loss(tape, pred, target, loss_cfg, static_cast<LossNetwork<double>*>(nullptr))
                .value.val()[0]);
    };

    // Analytic gradients.
    std::vector<Parameter<double>*> params = net->params().params;
    for (auto* p : params) p->zero_grad();
    {
        Tape<double> tape;
        Var<double> pred = net->forward(tape, frames);
        TotalLoss<double> loss = total_loss(tape, pred, target, loss_cfg,
                                            static_cast<LossNetwork<double>*>(nullptr));
        tape.backward(loss.value);
        tape.accumulate_param_grads(1.0);
    }
    std::vector<std::vector<double>> analytic;
    size_t coords = 0;
    for (auto* p : params) {
        analytic.push_back(p->grad.data);
        coords += p->value.numel();
    }

    const double h = 1e-4;
    const int workers = std::max(2u, std::thread::hardware_concurrency());
    std::vector<size_t> fail_counts(static_cast<size_t>(workers), 0);
    parallel_for(workers, workers, [&](int w) {
        auto wnet = make_net();
        std::vector<Parameter<double>*> wparams = wnet->params().params;
        for (size_t pi = 0; pi < wparams.size(); ++pi) {
            Parameter<double>* p = wparams[pi];
            for (size_t i = static_cast<size_t>(w); i < p->value.numel();
                 i += static_cast<size_t>(workers)) {
                double orig = p->value[i];
                p->value[i] = orig + h;
                double fp = eval_loss(*wnet);
                p->value[i] = orig - h;
                double fm = eval_loss(*wnet);
                p->value[i] = orig;
                double fd = (fp - fm) / (2 * h);
                double a = analytic[pi][i];
                double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
                if (rel > 1e-5 && std::abs(a - fd) > 1e-9) ++fail_counts[static_cast<size_t>(w)];
            }
        }
    });
    size_t failures = std::accumulate(fail_counts.begin(), fail_counts.end(), size_t{0});
    double frac = 1.0 - static_cast<double>(failures) / static_cast<double>(coords);

    // Noise tolerance gradient w.r.t. the prediction, same h and tolerance.
    LossNetwork<double> loss_net(LossNetConfig::scaled(2, 7));
    std::map<int, double> alpha = {{2, 0.1}, {4, 1.0}, {7, 10.0}, {10, 10.0}, {13, 10.0}};
    Tensor<double> pred0 = random_tensor<double>({1, 16, 16}, data_rng);
    Tensor<double> nt_grad;
    {
        Tape<double> tape;
        Var<double> pv = tape.input(pred0);
        Var<double> loss = noise_tolerance_loss(tape, pv, target, loss_net, alpha,
                                                Reduction::mean);
        tape.backward(loss);
        nt_grad = tape.grad(pv.id);
    }
    auto eval_nt = [&](const Tensor<double>& pv) {
        Tape<double> tape;
        return static_cast<double>(
            tape.value(noise_tolerance_loss(tape, tape.constant(pv), target, loss_net, alpha,
                                            Reduction::mean)
                           .id)[0]);
    };
    size_t nt_failures = 0;
    Tensor<double> pp = pred0;
    for (size_t i = 0; i < pp.numel(); ++i) {
        double orig = pp[i];
        pp[i] = orig + h;
        double fp = eval_nt(pp);
        pp[i] = orig - h;
        double fm = eval_nt(pp);
        pp[i] = orig;
        double fd = (fp - fm) / (2 * h);
        double a = nt_grad[i];
        double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
        if (rel > 1e-5 && std::abs(a - fd) > 1e-9) ++nt_failures;
    }
    double nt_frac = 1.0 - static_cast<double>(nt_failures) / static_cast<double>(pp.numel());

    double secs = now_seconds() - t0;
    std::ostringstream d;
    d << coords << " parameter coordinates, " << failures << " outside tolerance ("
      << frac * 100 << "% pass); NT-loss grad vs pred " << nt_frac * 100 << "% pass; " << secs
      << " s";
    return {frac >= 0.99 && nt_frac >= 0.99 && secs < 120.0, d.str()};
}

Outcome criterion3_nonlocal_oracle() {
    double worst = 0.0;
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Rng init(seed);
        NonLocalBlock<double> block;
        block.init("nl", 4, init);
        Rng wr(seed + 100);
        for (auto& v : block.out.w.value.data) v = wr.next_uniform(-0.5, 0.5);
        for (auto& v : block.out.b.value.data) v = wr.next_uniform(-0.1, 0.1);
        Tensor<double> x = random_tensor<double>({4, 8, 8}, wr);
        Tape<double> tp;
        Var<double> y = block(tp, tp.constant(x));
        Tensor<double> ref = nonlocal_oracle(block, x);
        for (size_t i = 0; i < ref.numel(); ++i)
            worst = std::max(worst, std::abs(tp.value(y.id)[i] - ref[i]));
    }
    // Float path with the vectorized exp.
    {
        Rng init(7);
        NonLocalBlock<float> block;
        block.init("nl", 4, init);
        Rng wr(8);
        for (auto& v : block.out.w.value.data) v = static_cast<float>(wr.next_uniform(-0.5, 0.5));
        Tensor<float> x = random_tensor<float>({4, 8, 8}, wr);
        Tape<float> tp;
        Var<float> y = block(tp, tp.constant(x));
        Tensor<float> ref = nonlocal_oracle(block, x);
        for (size_t i = 0; i < ref.numel(); ++i)
            worst = std::max(worst, static_cast<double>(std::abs(tp.value(y.id)[i] - ref[i])));
    }
    // Exact identity at zero-initialized output projection.
    bool identity_ok = true;
    {
        Rng init(9);
        NonLocalBlock<float> block;
        block.init("nl", 6, init);
        Rng xr(10);
        Tensor<float> x = random_tensor<float>({6, 8, 8}, xr);
        Tape<float> tp;
        Var<float> y = block(tp, tp.constant(x));
        identity_ok = tp.value(y.id).data == x.data;
    }
    std::ostringstream d;
    d << "max abs dev " << worst << " vs brute force; identity at init: "
      << (identity_ok ? "exact" : "BROKEN");
    return {worst <= 1e-5 && identity_ok, d.str()};
}

Outcome criterion4_auc_oracle() {
    if (auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) != 1.0)
        return {false, "reference instance did not give exactly 1.0"};
    Rng rng(51);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        size_t n = 2 + rng.next_below(49);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.next_below(7)) / 6.0;  // tie-heavy grid
            labels[i] = static_cast<int>(rng.next_below(2));
        }
        labels[0] = 1;
        labels[n - 1] = 0;
        worst = std::max(worst, std::abs(auc(scores, labels) - auc_pairs_oracle(scores, labels)));
    }
    std::ostringstream d;
    d << "100 instances, max |rank - pair| = " << worst;
    return {worst <= 1e-12, d.str()};
}

Outcome criterion5_scoring_chain() {
    // PSNR strictly decreasing in MSE.
    double prev = 1e300;
    for (double diff = 0.01; diff < 1.0; diff += 0.023) {
        Tensor<float> a({1, 1, 1});
        Tensor<float> b({1, 1, 1});
        b[0] = static_cast<float>(diff);
        double r = psnr_db(a, b, 1.0);
        if (r >= prev) return {false, "psnr not strictly decreasing in mse"};
        prev = r;
    }
    auto s = normalize_scores({30.0, 20.0, 40.0});
    if (std::abs(s[0] - 0.5) > 1e-12 || std::abs(s[1] - 1.0) > 1e-12 || std::abs(s[2]) > 1e-12)
        return {false, "normalize_scores( 30,20,40 ) != (0.5,1.0,0.0)"};

    // Reuse equality on a trained tiny model.
    SynthConfig synth;
    synth.seed = 31;
    synth.num_clips = 3;
    synth.frames_per_clip = 24;
    synth.frame_size = 32;
    synth.root = (work_root() / "c5_data").string();
    DatasetManifest manifest = generate_synthetic(synth);

    NetworkConfig net_cfg;
    net_cfg.num_paths = 2;
    net_cfg.path_channels = {2, 4};
    net_cfg.path_divisors = {2, 4};
    net_cfg.in_channels = 1;
    net_cfg.input_len = 3;
    net_cfg.seed = 31;
    TrainConfig tc;
    tc.epochs = 1;
    tc.window_stride = 2;
    tc.seed = 31;
    tc.weights.lambda_nt = 0.0;
    TrainResult tr = train(manifest, net_cfg, tc, nullptr, (work_root() / "c5_run").string());
    LoadedCheckpoint ckpt = load_network_checkpoint(tr.final_checkpoint);

    double worst = 0.0;
    for (const auto& id : manifest.test_clips) {
        VideoClip clip = load_clip(manifest, id);
        ScoreSeries plain = score_clip(clip, *ckpt.network, net_cfg.input_len);
        ScoreSeries reuse = score_clip_reuse(clip, *ckpt.network, net_cfg.input_len, 1);
        for (size_t i = 0; i < plain.psnr.size(); ++i) {
            worst = std::max(worst, std::abs(plain.psnr[i] - reuse.psnr[i]));
            worst = std::max(worst, std::abs(plain.score[i] - reuse.score[i]));
        }
    }
    std::ostringstream d;
    d << "psnr monotone, normalization exact, Q=1 reuse max dev " << worst;
    return {worst <= 1e-6, d.str()};
}

Outcome criterion6_synthetic_benchmark() {
    double t0 = now_seconds();
    SynthConfig synth;
    synth.seed = 7;
    synth.num_clips = 20;
    synth.frames_per_clip = 100;
    synth.frame_size = 64;
    synth.root = (work_root() / "c6_data").string();
    DatasetManifest manifest = generate_synthetic(synth);
    if (manifest.train_clips.size() != 20 || manifest.test_clips.size() != 10)
        return {false, "expected 20 train + 10 test clips"};
    g_desk_manifest = (fs::path(synth.root) / "manifest.json").string();

    auto grid = default_ablation_grid();
    const AblationSpec& single_path = grid[0];  // ConvGRU only
    const AblationSpec& no_nt = grid[2];        // multi-path + non-local, no NT loss
    const AblationSpec& full = grid[3];

    // Supplementary trainer check: mean epoch loss strictly decreases on a
    // small run (5 clips x 50 frames, 64 px, 5 epochs).
    SynthConfig small = synth;
    small.seed = 13;
    small.num_clips = 5;
    small.frames_per_clip = 50;
    small.root = (work_root() / "c6_small").string();
    DatasetManifest small_manifest = generate_synthetic(small);
    {
        NetworkConfig cfg = desk_network(13);
        TrainConfig tc = desk_train(13, 1.0);
        LossNetwork<float> ln(LossNetConfig::scaled(8, 13));
        TrainResult tr =
            train(small_manifest, cfg, tc, &ln, (work_root() / "c6_small_run").string());
        for (size_t e = 1; e < tr.epoch_means.size(); ++e)
            if (tr.epoch_means[e].total >= tr.epoch_means[e - 1].total)
                return {false, "epoch loss did not strictly decrease on the small run"};
    }

    std::map<std::string, std::vector<double>> aucs;
    double headline_auc = 0.0, headline_delta = 0.0;
    int argmax_localized = 0, argmax_clips = 0;
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        for (const AblationSpec* spec : {&full, &no_nt, &single_path}) {
            std::string run_dir =
                (work_root() / ("c6_" + spec->name + "_s" + std::to_string(seed))).string();
            std::vector<ScoreSeries> series;
            bool headline = spec->name == "full" && seed == 1;
            VariantResult r =
                run_desk_variant(manifest, *spec, seed, run_dir, headline ? &series : nullptr);
            aucs[spec->name].push_back(r.auc);
            if (headline) {
                headline_auc = r.auc;
                headline_delta = r.delta_s;
                g_desk_checkpoint = r.checkpoint;
                g_desk_auc = r.auc;
                // Localization: the highest-scoring frame of a test clip
                // falls inside a labeled anomaly segment for most clips.
                for (const auto& s : series) {
                    size_t best = 0;
                    for (size_t i = 1; i < s.score.size(); ++i)
                        if (s.score[i] > s.score[best]) best = i;
                    ++argmax_clips;
                    argmax_localized += s.labels[best];
                }
            }
        }
    }
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    double m_full = mean(aucs["full"]), m_nont = mean(aucs["nonlocal"]),
           m_single = mean(aucs["convgru"]);
    double secs = now_seconds() - t0;

    std::ostringstream d;
    d << "headline AUC " << headline_auc << " (delta_s " << headline_delta << ", score argmax in "
      << "a labeled segment for " << argmax_localized << "/" << argmax_clips
      << " clips); seed-mean AUC full " << m_full << " >= no-NT " << m_nont
      << " >= single-path " << m_single << "; " << secs << " s";
    bool pass = headline_auc >= 0.80 && m_full >= m_nont && m_nont >= m_single &&
                argmax_localized * 10 >= argmax_clips * 7 && secs < 1800.0;
    return {pass, d.str()};
}

Outcome criterion7_noise_attenuation() {
    LossNetwork<float> net(LossNetConfig::scaled(4, 99));
    std::map<int, double> alpha = {{2, 0.1}, {4, 1.0}, {7, 10.0}, {10, 10.0}, {13, 10.0}};
    const int size = 64;

    // A natural-image-like base frame: smooth gradient plus rigid shapes.
    Tensor<float> base({1, size, size});
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            float v = -0.8f + 0.3f * static_cast<float>(i) / size +
                      0.1f * static_cast<float>(j) / size;
            if (std::abs(i - 20) <= 6 && std::abs(j - 14) <= 6) v = 0.55f;
            int di = i - 44, dj = j - 40;
            if (di * di + dj * dj <= 64) v = 0.3f;
            base.at(0, i, j) = v;
        }

    auto nt_of = [&](const Tensor<float>& a, const Tensor<float>& b) {
        Tape<float> tp;
        return static_cast<double>(
            tp.value(noise_tolerance_loss(tp, tp.constant(b), a, net, alpha, Reduction::sum).id)[0]);
    };
    auto intensity_of = [&](const Tensor<float>& a, const Tensor<float>& b) {
        Tape<float> tp;
        return static_cast<double>(
            tp.value(intensity_loss(tp, tp.constant(b), a, Reduction::sum).id)[0]);
    };

    int wins = 0;
    const int trials = 10;
    for (int t = 0; t < trials; ++t) {
        Rng rng(500 + static_cast<uint64_t>(t));
        // Structured edit: a bright 8x8 patch at a seed-dependent position.
        Tensor<float> edited = base;
        int pi = static_cast<int>(rng.next_int(4, size - 12));
        int pj = static_cast<int>(rng.next_int(4, size - 12));
        for (int i = pi; i < pi + 8; ++i)
            for (int j = pj; j < pj + 8; ++j) edited.at(0, i, j) += 0.4f;
        double k_edit = intensity_of(base, edited);

        // i.i.d. noise scaled to the same intensity loss (the loss is
        // 1-homogeneous in the perturbation).
        Tensor<float> noisy = base;
        for (size_t i = 0; i < noisy.numel(); ++i)
            noisy[i] += static_cast<float>(rng.next_uniform(-0.0125, 0.0125));
        double k_noise = intensity_of(base, noisy);
        float rescale = static_cast<float>(k_edit / k_noise);
        for (size_t i = 0; i < noisy.numel(); ++i)
            noisy[i] = base[i] + (noisy[i] - base[i]) * rescale;
        k_noise = intensity_of(base, noisy);

        double ratio_noise = nt_of(base, noisy) / k_noise;
        double ratio_edit = nt_of(base, edited) / k_edit;
        if (ratio_noise < ratio_edit) ++wins;
    }
    std::ostringstream d;
    d << wins << "/" << trials << " seeds with lower NT-to-intensity ratio for i.i.d. noise";
    return {wins >= 8, d.str()};
}

Outcome criterion8_determinism() {
    const char* cli = std::getenv("MPVAD_CLI");
    if (!cli) return {false, "MPVAD_CLI not set"};
    auto run_pipeline = [&](const std::string& tag) -> fs::path {
        fs::path root = work_root() / ("c8_" + tag);
        std::string c = std::string(cli);
        std::string data = (root / "data").string();
        auto shell = [&](const std::string& cmd) {
            std::string full = cmd + " >" + (root / "log.txt").string() + " 2>&1";
            if (std::system(full.c_str()) != 0)
                throw Error("pipeline command failed: " + cmd);
        };
        fs::create_directories(root);
        shell(c + " synth --out " + data + " --seed 7 --clips 4 --frames 48 --size 32");
        shell(c + " train --data " + data + "/manifest.json --out " + (root / "run").string() +
              " --p 4 --channels 4,8 --divisors 2,4 --epochs 2 --stride 2 --lambda-nt 1" +
              " --loss-net-width 4 --seed 5 --workers 2");
        shell(c + " score --data " + data + "/manifest.json --checkpoint " +
              (root / "run/checkpoints/final.ckpt").string() + " --out " +
              (root / "scores").string() + " --q 1");
        shell(c + " eval --scores " + (root / "scores").string() + " --out " +
              (root / "eval").string());
        return root;
    };
    fs::path a = run_pipeline("a");
    fs::path b = run_pipeline("b");

    std::vector<std::string> compared;
    auto same = [&](const fs::path& rel) {
        compared.push_back(rel.string());
        return slurp(a / rel) == slurp(b / rel);
    };
    bool ok = same("run/checkpoints/final.ckpt") && same("eval/report.json") &&
              same("eval/roc.csv");
    for (const auto& e : fs::directory_iterator(a / "scores"))
        if (e.path().extension() == ".csv")
            ok = ok && same(fs::path("scores") / e.path().filename());
    std::ostringstream d;
    d << compared.size() << " artifacts byte-compared across two synth->train->score->eval runs";
    return {ok, d.str()};
}

Outcome criterion9_reuse_throughput() {
    if (g_desk_checkpoint.empty()) return {false, "no trained desk checkpoint (criterion 6)"};
    DatasetManifest manifest = load_manifest(g_desk_manifest);
    LoadedCheckpoint ckpt = load_network_checkpoint(g_desk_checkpoint);
    const int p = ckpt.config.input_len;

    std::vector<VideoClip> clips;
    for (size_t i = 0; i < 3; ++i) clips.push_back(load_clip(manifest, manifest.test_clips[i]));

    auto time_scoring = [&](int q) {
        double best = 1e300;
        size_t frames = 0;
        for (int rep = 0; rep < 3; ++rep) {
            double t0 = now_seconds();
            frames = 0;
            for (const auto& clip : clips) {
                ScoreSeries s = q == 1 ? score_clip(clip, *ckpt.network, p)
                                       : score_clip_reuse(clip, *ckpt.network, p, q);
                frames += s.score.size();
            }
            best = std::min(best, now_seconds() - t0);
        }
        return best / static_cast<double>(frames);
    };
    double t1 = time_scoring(1);
    double t8 = time_scoring(8);

    // Accuracy under reuse: AUC at Q=8 stays within 2 points of Q=1.
    std::vector<ScoreSeries> series(manifest.test_clips.size());
    parallel_for(static_cast<int>(manifest.test_clips.size()),
                 static_cast<int>(std::thread::hardware_concurrency()), [&](int i) {
                     VideoClip clip =
                         load_clip(manifest, manifest.test_clips[static_cast<size_t>(i)]);
                     series[static_cast<size_t>(i)] = score_clip_reuse(clip, *ckpt.network, p, 8);
                 });
    double auc_q8 = global_auc(series);

    std::ostringstream d;
    d << "per-frame " << t1 * 1e3 << " ms (Q=1) vs " << t8 * 1e3 << " ms (Q=8), ratio "
      << t8 / t1 << "; AUC Q=8 " << auc_q8 << " vs Q=1 " << g_desk_auc;
    bool pass = t8 <= 0.60 * t1 && std::abs(auc_q8 - g_desk_auc) <= 0.02;
    return {pass, d.str()};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> criteria = {
        {1, "loss oracles (direct-formula recomputation)", criterion1_loss_oracles},
        {2, "gradient check vs central finite differences", criterion2_gradient_check},
        {3, "non-local block vs all-pairs attention oracle", criterion3_nonlocal_oracle},
        {4, "rank AUC vs brute-force pair counting", criterion4_auc_oracle},
        {5, "scoring chain (psnr, normalization, Q=1 reuse)", criterion5_scoring_chain},
        {6, "end-to-end synthetic benchmark + ablation ordering", criterion6_synthetic_benchmark},
        {7, "noise attenuation of the NT loss", criterion7_noise_attenuation},
        {8, "bit-identical synth->train->score->eval runs", criterion8_determinism},
        {9, "Q=8 reuse throughput and accuracy", criterion9_reuse_throughput},
    };

    int passed = 0;
    for (const auto& c : criteria) {
        double t0 = now_seconds();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = now_seconds() - t0;
        std::printf("[%d] %-52s %s  (%.1f s)\n      %s\n", c.id, c.name,
                    o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
        passed += o.pass;
    }
    std::printf("ACCEPTANCE: %d/%d criteria passed\n", passed,
                static_cast<int>(criteria.size()));
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
