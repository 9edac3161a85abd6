#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mpvad/data_io.hpp"
#include "mpvad/losses.hpp"
#include "mpvad/network.hpp"

namespace mpvad {

// ============================================================================
// Training: AdamW with decoupled weight decay over stride-1 sliding windows
// of the (normal-only) train split, with the staged freezing of shallow
// prediction paths. All shuffling and batching is driven by the run seed, so
// identical configurations reproduce bit-identical checkpoints.
// ============================================================================

struct TrainConfig {
    int batch_size = 4;
    double learning_rate = 3e-4;
    double weight_decay = 1e-4;
    int epochs = 50;
    // (1-based path index, epoch after which it stops updating). Empty means
    // the default schedule scaled to `epochs` (60% / 80% marks).
    std::vector<std::pair<int, int>> freeze_epochs;
    uint64_t seed = 0;
    LossWeights weights;
    Reduction reduction = Reduction::mean;
    int window_stride = 1;
    int num_workers = 0;  // 0 = hardware concurrency

    void validate(int num_paths) const;
};

// Freeze marks for paths 1..L-1 at the 60%/80%/... points of the epoch
// budget; reproduces the reference schedule (30, 40) at 50 epochs.
std::vector<std::pair<int, int>> default_freeze_epochs(int num_paths, int epochs);

template <typename T = float>
class AdamW {
public:
    AdamW(std::vector<Parameter<T>*> params, double lr, double wd, double beta1 = 0.9,
          double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), wd_(wd), b1_(beta1), b2_(beta2), eps_(eps) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (auto* p : params_) {
            m_.emplace_back(p->value.shape);
            v_.emplace_back(p->value.shape);
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    // One decoupled-weight-decay step; parameters flagged non-trainable are
    // skipped entirely (no moment update, no decay).
    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, t_);
        const double bc2 = 1.0 - std::pow(b2_, t_);
        for (size_t k = 0; k < params_.size(); ++k) {
            Parameter<T>* p = params_[k];
            if (!p->trainable) continue;
            p->ensure_grad();
            T* w = p->value.ptr();
            const T* g = p->grad.ptr();
            T* m = m_[k].ptr();
            T* v = v_[k].ptr();
            for (size_t i = 0; i < p->value.numel(); ++i) {
                double gi = static_cast<double>(g[i]);
                double mi = b1_ * m[i] + (1.0 - b1_) * gi;
                double vi = b2_ * v[i] + (1.0 - b2_) * gi * gi;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                double update = (mi / bc1) / (std::sqrt(vi / bc2) + eps_);
                w[i] = static_cast<T>(w[i] - lr_ * update - lr_ * wd_ * w[i]);
            }
        }
    }

    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }
    Tensor<T>& moment1(size_t k) { return m_[k]; }
    Tensor<T>& moment2(size_t k) { return v_[k]; }
    size_t size() const { return params_.size(); }
    Parameter<T>* param(size_t k) { return params_[k]; }

private:
    std::vector<Parameter<T>*> params_;
    std::vector<Tensor<T>> m_, v_;
    double lr_, wd_, b1_, b2_, eps_;
    int64_t t_ = 0;
};

// Marks the predictor parameters (non-local block + ConvGRU) of the listed
// 1-based paths as non-trainable.
void freeze_paths(PredictionNetwork<float>& net, const std::vector<int>& path_indices_1based);

struct TrainResult {
    std::string final_checkpoint;
    std::vector<LossBreakdown> epoch_means;
};

// Runs the full loop and writes per-epoch checkpoints, final.ckpt and a
// line-oriented JSON log under out_dir. loss_net may be null iff
// weights.lambda_nt == 0. resume_from continues from a saved checkpoint and
// yields the same trajectory as an uninterrupted run.
TrainResult train(const DatasetManifest& manifest, const NetworkConfig& net_config,
                  const TrainConfig& train_config, LossNetwork<float>* loss_net,
                  const std::string& out_dir, const std::string& resume_from = "");

// Checkpoint helpers shared with scoring/CLI.
struct LoadedCheckpoint {
    NetworkConfig config;
    std::unique_ptr<PredictionNetwork<float>> network;
    int epoch = 0;
};
LoadedCheckpoint load_network_checkpoint(const std::string& path);

}  // namespace mpvad
