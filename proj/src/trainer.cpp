#include "mpvad/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mpvad/checkpoint.hpp"
#include "mpvad/threading.hpp"

namespace fs = std::filesystem;

namespace mpvad {

void TrainConfig::validate(int num_paths) const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("train: learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("train: weight decay must be >= 0");
    if (window_stride < 1) throw ConfigError("train: window stride must be >= 1");
    for (auto [path, epoch] : freeze_epochs) {
        if (path < 1 || path > num_paths)
            throw ValidationError("train: freeze path index " + std::to_string(path) +
                                  " out of range");
        if (epoch > epochs)
            throw ValidationError("train: freeze epoch " + std::to_string(epoch) +
                                  " exceeds epoch budget");
    }
}

std::vector<std::pair<int, int>> default_freeze_epochs(int num_paths, int epochs) {
    std::vector<std::pair<int, int>> out;
    for (int l = 1; l < num_paths; ++l) {
        double frac = 0.6 + 0.2 * (l - 1);
        if (frac >= 1.0) break;
        int mark = static_cast<int>(std::llround(frac * epochs));
        if (mark >= 1 && mark <= epochs) out.emplace_back(l, mark);
    }
    return out;
}

void freeze_paths(PredictionNetwork<float>& net, const std::vector<int>& path_indices_1based) {
    for (int idx : path_indices_1based) {
        if (idx < 1 || idx > net.config().num_paths)
            throw ValidationError("freeze_paths: path index " + std::to_string(idx) +
                                  " out of range");
        for (auto* p : net.path_params(idx - 1)) p->trainable = false;
    }
}

namespace {

struct WindowRef {
    int clip = 0;
    int target = 0;
};

struct ItemResult {
    std::vector<std::pair<Parameter<float>*, Tensor<float>>> grads;
    LossBreakdown breakdown;
};

void check_finite(const LossBreakdown& bd, int epoch) {
    auto bad = [](double v) { return !std::isfinite(v); };
    const char* term = nullptr;
    if (bad(bd.intensity))
        term = "intensity";
    else if (bad(bd.gradient))
        term = "gradient";
    else if (bad(bd.noise_tolerance))
        term = "noise_tolerance";
    else if (bad(bd.total))
        term = "total";
    if (term)
        throw Error(std::string("train: non-finite ") + term + " loss at epoch " +
                    std::to_string(epoch));
}

std::string ckpt_name(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt", epoch);
    return buf;
}

void save_checkpoint(const std::string& path, PredictionNetwork<float>& net,
                     AdamW<float>& opt, const TrainConfig& tc, int epoch,
                     const std::vector<LossBreakdown>& history) {
    Archive a;
    a.meta["kind"] = "checkpoint";
    a.meta["network"] = to_json(net.config());
    a.meta["epoch"] = epoch;
    a.meta["step"] = opt.step_count();
    a.meta["train"] = {{"batch_size", tc.batch_size},
                       {"learning_rate", tc.learning_rate},
                       {"weight_decay", tc.weight_decay},
                       {"epochs", tc.epochs},
                       {"seed", tc.seed},
                       {"window_stride", tc.window_stride}};
    auto& hist = a.meta["loss_history"] = nlohmann::json::array();
    for (const auto& bd : history)
        hist.push_back({{"intensity", bd.intensity},
                        {"gradient", bd.gradient},
                        {"noise_tolerance", bd.noise_tolerance},
                        {"total", bd.total}});
    put_params(a, net.params());
    for (size_t k = 0; k < opt.size(); ++k) {
        const std::string& name = opt.param(k)->name;
        NamedTensorF m{"opt.m." + name, opt.moment1(k).shape, opt.moment1(k).data};
        NamedTensorF v{"opt.v." + name, opt.moment2(k).shape, opt.moment2(k).data};
        a.tensors.push_back(std::move(m));
        a.tensors.push_back(std::move(v));
    }
    save_archive(a, path);
}

}  // namespace

LoadedCheckpoint load_network_checkpoint(const std::string& path) {
    Archive a = load_archive(path);
    LoadedCheckpoint out;
    out.config = network_config_from_json(a.meta.at("network"));
    out.network = std::make_unique<PredictionNetwork<float>>(out.config);
    load_params(a, out.network->params());
    out.epoch = a.meta.value("epoch", 0);
    return out;
}

TrainResult train(const DatasetManifest& manifest, const NetworkConfig& net_config,
                  const TrainConfig& train_config, LossNetwork<float>* loss_net,
                  const std::string& out_dir, const std::string& resume_from) {
    TrainConfig tc = train_config;
    net_config.validate();
    if (tc.freeze_epochs.empty())
        tc.freeze_epochs = default_freeze_epochs(net_config.num_paths, tc.epochs);
    tc.validate(net_config.num_paths);
    if (manifest.train_clips.empty()) throw ConfigError("train: empty train split");
    if (tc.weights.lambda_nt != 0.0 && !loss_net)
        throw ConfigError("train: lambda_nt != 0 requires a loss network");

    // Snapshot of the frozen loss-network weights; verified unchanged below.
    std::vector<float> nt_before;
    if (loss_net)
        for (auto* p : loss_net->params().params)
            nt_before.insert(nt_before.end(), p->value.data.begin(), p->value.data.end());

    std::vector<VideoClip> clips;
    clips.reserve(manifest.train_clips.size());
    for (const auto& id : manifest.train_clips) clips.push_back(load_clip(manifest, id));

    std::vector<WindowRef> all_windows;
    for (size_t ci = 0; ci < clips.size(); ++ci)
        for (const auto& w : windows(clips[ci], net_config.input_len, tc.window_stride))
            all_windows.push_back({static_cast<int>(ci), w.target_index});
    if (all_windows.empty())
        throw ConfigError("train: no windows (clips shorter than input length?)");

    fs::create_directories(fs::path(out_dir) / "checkpoints");
    std::ofstream log(fs::path(out_dir) / "log.jsonl",
                      resume_from.empty() ? std::ios::trunc : std::ios::app);

    PredictionNetwork<float> net(net_config);
    AdamW<float> opt(net.params().params, tc.learning_rate, tc.weight_decay);
    int start_epoch = 0;
    std::vector<LossBreakdown> history;
    if (!resume_from.empty()) {
        Archive a = load_archive(resume_from);
        NetworkConfig saved = network_config_from_json(a.meta.at("network"));
        saved.validate();
        load_params(a, net.params());
        for (size_t k = 0; k < opt.size(); ++k) {
            const std::string& name = opt.param(k)->name;
            const NamedTensorF* m = a.find("opt.m." + name);
            const NamedTensorF* v = a.find("opt.v." + name);
            if (!m || !v) throw ValidationError("resume: optimizer state missing for " + name);
            opt.moment1(k).data = m->data;
            opt.moment2(k).data = v->data;
        }
        opt.set_step_count(a.meta.at("step").get<int64_t>());
        start_epoch = a.meta.at("epoch").get<int>();
        for (const auto& h : a.meta.at("loss_history")) {
            LossBreakdown bd;
            bd.intensity = h.at("intensity").get<double>();
            bd.gradient = h.at("gradient").get<double>();
            bd.noise_tolerance = h.at("noise_tolerance").get<double>();
            bd.total = h.at("total").get<double>();
            history.push_back(bd);
        }
    }

    TotalLossConfig loss_cfg{tc.weights, tc.reduction};
    int workers = tc.num_workers > 0 ? tc.num_workers
                                     : static_cast<int>(std::thread::hardware_concurrency());

    TrainResult result;
    result.epoch_means = history;
    for (int epoch = start_epoch + 1; epoch <= tc.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();

        // Freezing takes effect after the configured epoch completes.
        std::vector<int> frozen;
        for (auto [path, mark] : tc.freeze_epochs)
            if (epoch > mark) frozen.push_back(path);
        freeze_paths(net, frozen);

        std::vector<WindowRef> order = all_windows;
        Rng shuffle_rng(derive_seed(tc.seed, "train/shuffle", static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order.begin(), order.end());

        LossBreakdown epoch_sum;
        size_t batches = (order.size() + tc.batch_size - 1) / tc.batch_size;
        for (size_t b = 0; b < batches; ++b) {
            size_t lo = b * tc.batch_size;
            size_t hi = std::min(order.size(), lo + tc.batch_size);
            int n = static_cast<int>(hi - lo);
            std::vector<ItemResult> items(static_cast<size_t>(n));
            parallel_for(n, workers, [&](int i) {
                const WindowRef& wr = order[lo + static_cast<size_t>(i)];
                const VideoClip& clip = clips[static_cast<size_t>(wr.clip)];
                std::vector<Tensor<float>> inputs(
                    clip.frames.begin() + (wr.target - net_config.input_len),
                    clip.frames.begin() + wr.target);
                Tape<float> tape;
                Var<float> pred = net.forward(tape, inputs);
                TotalLoss<float> loss = total_loss(
                    tape, pred, clip.frames[static_cast<size_t>(wr.target)], loss_cfg, loss_net);
                tape.backward(loss.value);
                ItemResult& item = items[static_cast<size_t>(i)];
                item.breakdown = loss.breakdown;
                for (auto& [p, id] : tape.param_leaves())
                    if (p->trainable && tape.has_grad(id))
                        item.grads.emplace_back(p, tape.grad(id));
            });

            opt.zero_grad();
            const float scale = 1.0f / static_cast<float>(n);
            for (auto& item : items) {
                check_finite(item.breakdown, epoch);
                epoch_sum.intensity += item.breakdown.intensity;
                epoch_sum.gradient += item.breakdown.gradient;
                epoch_sum.noise_tolerance += item.breakdown.noise_tolerance;
                epoch_sum.total += item.breakdown.total;
                for (auto& [p, g] : item.grads) {
                    p->ensure_grad();
                    float* dst = p->grad.ptr();
                    const float* src = g.ptr();
                    for (size_t i = 0; i < g.numel(); ++i) dst[i] += scale * src[i];
                }
            }
            opt.step();
        }

        LossBreakdown mean;
        const double inv = 1.0 / static_cast<double>(order.size());
        mean.intensity = epoch_sum.intensity * inv;
        mean.gradient = epoch_sum.gradient * inv;
        mean.noise_tolerance = epoch_sum.noise_tolerance * inv;
        mean.total = epoch_sum.total * inv;
        history.push_back(mean);
        result.epoch_means.push_back(mean);

        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        nlohmann::json line = {{"epoch", epoch},
                               {"intensity", mean.intensity},
                               {"gradient", mean.gradient},
                               {"noise_tolerance", mean.noise_tolerance},
                               {"total", mean.total},
                               {"seconds", seconds}};
        log << line.dump() << "\n";
        log.flush();

        save_checkpoint((fs::path(out_dir) / "checkpoints" / ckpt_name(epoch)).string(), net,
                        opt, tc, epoch, history);
    }

    std::string final_path = (fs::path(out_dir) / "checkpoints" / "final.ckpt").string();
    save_checkpoint(final_path, net, opt, tc, tc.epochs, history);
    result.final_checkpoint = final_path;

    if (loss_net) {
        std::vector<float> nt_after;
        for (auto* p : loss_net->params().params)
            nt_after.insert(nt_after.end(), p->value.data.begin(), p->value.data.end());
        if (nt_after != nt_before)
            throw Error("train: loss network parameters changed during training");
    }
    return result;
}

}  // namespace mpvad
