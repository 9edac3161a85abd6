#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mpvad/checkpoint.hpp"
#include "mpvad/nn.hpp"

namespace mpvad {

// ============================================================================
// Frozen loss network: a VGG16-style conv/ReLU/maxpool feature stack. Taps are
// counted as "output of the v-th conv+ReLU pair" (v = 2, 4, 7, 10, 13 gives
// the second ReLU of each of the five conv blocks). Parameters never receive
// gradients; gradients still flow through to the input.
// ============================================================================

struct LossNetConfig {
    std::vector<int> widths;                      // one width per conv layer
    std::vector<int> taps = {2, 4, 7, 10, 13};    // 1-based conv indices
    std::vector<int> pool_after = {2, 4, 7, 10};  // 2x2 maxpool after these convs
    bool random_weights = true;                   // false = load from weights file
    std::string weights_path;
    uint64_t seed = 0;

    // Full-width stack matching the standard 13-conv feature hierarchy.
    static LossNetConfig vgg16() {
        LossNetConfig c;
        c.widths = {64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512};
        return c;
    }

    // Same layer pattern at reduced width, for tests and desk-scale training.
    static LossNetConfig scaled(int base, uint64_t seed = 0) {
        LossNetConfig c;
        c.widths = {base,     base,     2 * base, 2 * base, 4 * base, 4 * base, 4 * base,
                    8 * base, 8 * base, 8 * base, 8 * base, 8 * base, 8 * base};
        c.seed = seed;
        return c;
    }

    void validate() const {
        if (widths.empty()) throw ConfigError("loss network: empty conv stack");
        for (int t : taps)
            if (t < 1 || t > static_cast<int>(widths.size()))
                throw ConfigError("loss network: tap index out of range");
    }
};

// Input adaptation: frames live in [-1,1]; the loss network expects 3-channel
// inputs remapped to [0,1] and standardized with the pretrained per-channel
// statistics. Single-channel frames are replicated to 3 channels.
inline const float kLossNetMean[3] = {0.485f, 0.456f, 0.406f};
inline const float kLossNetStd[3] = {0.229f, 0.224f, 0.225f};

template <typename T>
Var<T> adapt_for_loss_network(Tape<T>&, Var<T> frame) {
    Var<T> x = frame;
    if (x.shape()[0] == 1) x = replicate_ch3(x);
    std::vector<T> s(3), o(3);
    for (int c = 0; c < 3; ++c) {
        s[static_cast<size_t>(c)] = static_cast<T>(0.5 / kLossNetStd[c]);
        o[static_cast<size_t>(c)] = static_cast<T>((0.5 - kLossNetMean[c]) / kLossNetStd[c]);
    }
    return channel_affine(x, std::move(s), std::move(o));
}

template <typename T>
class LossNetwork {
public:
    explicit LossNetwork(LossNetConfig config) : cfg_(std::move(config)) {
        cfg_.validate();
        Rng rng(derive_seed(cfg_.seed, "loss_network"));
        convs_.resize(cfg_.widths.size());
        int prev = 3;
        for (size_t i = 0; i < cfg_.widths.size(); ++i) {
            convs_[i].init("conv" + std::to_string(i + 1), prev, cfg_.widths[i], 3, 1, rng);
            prev = cfg_.widths[i];
        }
        for (auto& c : convs_) c.collect(bag_);
        if (!cfg_.random_weights) {
            if (cfg_.weights_path.empty() || !std::filesystem::exists(cfg_.weights_path))
                throw ConfigError("loss network: weights file not found: '" + cfg_.weights_path +
                                  "'");
            Archive a = load_archive(cfg_.weights_path);
            load_params(a, bag_);
        }
        for (auto* p : bag_.params) p->trainable = false;  // frozen, permanently
    }

    // Weights archive in the shared checkpoint format (key per layer).
    Archive to_archive() {
        Archive a;
        a.meta["kind"] = "loss_network";
        a.meta["widths"] = cfg_.widths;
        put_params(a, bag_);
        return a;
    }

    const LossNetConfig& config() const { return cfg_; }
    ParamBag<T>& params() { return bag_; }

    // Runs the stack on an already-adapted input; returns one activation per
    // configured tap, in tap order.
    std::vector<Var<T>> forward(Tape<T>& tp, Var<T> x) {
        std::vector<Var<T>> out;
        out.reserve(cfg_.taps.size());
        for (size_t i = 0; i < convs_.size(); ++i) {
            x = relu(convs_[i](tp, x));
            int idx = static_cast<int>(i) + 1;
            for (int t : cfg_.taps)
                if (t == idx) out.push_back(x);
            bool done = out.size() == cfg_.taps.size();
            if (done) break;
            // Pooling stops once the map collapses to one pixel, so tiny test
            // inputs still reach the deepest taps.
            for (int p : cfg_.pool_after)
                if (p == idx && x.shape()[1] >= 2 && x.shape()[2] >= 2) x = maxpool2(x);
        }
        return out;
    }

private:
    LossNetConfig cfg_;
    std::vector<Conv2dLayer<T>> convs_;
    ParamBag<T> bag_;
};

}  // namespace mpvad
