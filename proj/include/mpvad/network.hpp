#pragma once

#include <string>
#include <vector>

#include "mpvad/nn.hpp"

namespace mpvad {

// ============================================================================
// Multi-path frame prediction network.
//
// Encoder: stem conv + stride-2 residual stages (no normalization layers),
// tapping the feature map after each stage listed in path_divisors.
// Predictor: per path, a non-local block feeding a ConvGRU that runs over the
// input window from a zero state.
// Decoder: coarse-to-fine; upsample x2 (nearest), residual block, concatenate
// the next shallower path's hidden state, fuse with a projected residual
// block; final x2 upsample and a tanh output convolution.
// ============================================================================

struct NetworkConfig {
    int num_paths = 3;                            // parallel prediction paths
    int input_len = 8;                            // frames fed per prediction
    int in_channels = 3;
    std::vector<int> path_channels = {32, 64, 128};
    std::vector<int> path_divisors = {2, 4, 8};   // input size / divisor = tap size
    uint64_t seed = 0;
    bool use_nonlocal = true;                     // identity passthrough when false
    bool use_gru = true;                          // last-input passthrough when false
    std::vector<int> active_paths;                // path indices; empty = all

    std::vector<int> active() const {
        if (!active_paths.empty()) return active_paths;
        std::vector<int> all(static_cast<size_t>(num_paths));
        for (int i = 0; i < num_paths; ++i) all[static_cast<size_t>(i)] = i;
        return all;
    }

    void validate() const {
        if (num_paths < 1) throw ConfigError("network: need at least one path");
        if (path_channels.size() != static_cast<size_t>(num_paths) ||
            path_divisors.size() != static_cast<size_t>(num_paths))
            throw ConfigError("network: path_channels/path_divisors must have one entry per path");
        for (size_t i = 0; i < path_divisors.size(); ++i) {
            int d = path_divisors[i];
            if (d < 2 || (d & (d - 1)) != 0)
                throw ConfigError("network: path divisors must be powers of two >= 2");
            if (i > 0 && d <= path_divisors[i - 1])
                throw ConfigError("network: path resolutions must strictly decrease with depth");
        }
        if (in_channels != 1 && in_channels != 3)
            throw ConfigError("network: in_channels must be 1 or 3");
        if (input_len < 1) throw ConfigError("network: input_len must be >= 1");
        for (int p : active())
            if (p < 0 || p >= num_paths) throw ConfigError("network: invalid active path index");
    }
};

template <typename T>
class PredictionNetwork {
public:
    explicit PredictionNetwork(NetworkConfig config) : cfg_(std::move(config)) {
        cfg_.validate();
        build();
    }

    const NetworkConfig& config() const { return cfg_; }
    ParamBag<T>& params() { return bag_; }
    size_t parameter_count() const { return bag_.total_count(); }

    // --- encoder -------------------------------------------------------------

    void validate_frame(const Tensor<T>& frame) const {
        if (frame.shape.size() != 3 || frame.dim(0) != cfg_.in_channels)
            throw ValidationError("encode: frame must be [" + std::to_string(cfg_.in_channels) +
                                  ",H,W], got " + shape_string(frame.shape));
        int maxdiv = cfg_.path_divisors.back();
        if (frame.dim(1) % maxdiv || frame.dim(2) % maxdiv || frame.dim(1) < 2 * maxdiv)
            throw ValidationError("encode: spatial size must be a multiple of " +
                                  std::to_string(maxdiv));
    }

    // Returns the L per-path taps for one frame.
    std::vector<Var<T>> encode(Tape<T>& tp, Var<T> frame) {
        validate_frame(frame.val());
        std::vector<Var<T>> taps;
        Var<T> x = stem_(tp, frame);
        for (size_t s = 0; s < stages_.size(); ++s) {
            x = stages_[s].down(tp, x);
            x = stages_[s].rb(tp, x);
            if (stages_[s].tap >= 0) taps.push_back(x);
        }
        return taps;
    }

    // --- predictor -----------------------------------------------------------

    Var<T> zero_state(Tape<T>& tp, int path, int frame_h, int frame_w) {
        int d = cfg_.path_divisors[static_cast<size_t>(path)];
        return tp.constant(
            Tensor<T>({cfg_.path_channels[static_cast<size_t>(path)], frame_h / d, frame_w / d}));
    }

    // One recurrent step of path `l`: non-local on the tap, then the ConvGRU.
    Var<T> path_step(Tape<T>& tp, int l, Var<T> h, Var<T> z) {
        Var<T> zi = cfg_.use_nonlocal ? paths_[static_cast<size_t>(l)].nonlocal(tp, z) : z;
        if (!cfg_.use_gru) return zi;
        return paths_[static_cast<size_t>(l)].gru.step(tp, h, zi);
    }

    // Runs path `l` over a full warm-up sequence from a zero state.
    Var<T> path_forward(Tape<T>& tp, int l, const std::vector<Var<T>>& zseq) {
        if (zseq.empty()) throw ValidationError("path_forward: empty input sequence");
        const std::vector<int> s0 = zseq.front().shape();
        Var<T> h = tp.constant(Tensor<T>({s0[0], s0[1], s0[2]}));
        for (const auto& z : zseq) h = path_step(tp, l, h, z);
        return h;
    }

    // --- decoder ---------------------------------------------------------------

    Var<T> decode(Tape<T>& tp, const std::vector<Var<T>>& hidden) {
        auto act = cfg_.active();
        Var<T> x = hidden[static_cast<size_t>(act.back())];
        for (auto& lvl : dec_levels_) {
            x = upsample_nearest2(x);
            if (lvl.rb) x = (*lvl.rb)(tp, x);
            if (lvl.fuse_path >= 0)
                x = lvl.fuse(tp, concat_ch(x, hidden[static_cast<size_t>(lvl.fuse_path)]));
        }
        x = upsample_nearest2(x);
        return tanh_act(out_conv_(tp, x));
    }

    // --- full pass -------------------------------------------------------------

    Var<T> forward(Tape<T>& tp, const std::vector<Tensor<T>>& frames) {
        if (static_cast<int>(frames.size()) != cfg_.input_len)
            throw ValidationError("forward: expected " + std::to_string(cfg_.input_len) +
                                  " input frames, got " + std::to_string(frames.size()));
        std::vector<std::vector<Var<T>>> taps;
        taps.reserve(frames.size());
        for (const auto& f : frames) taps.push_back(encode(tp, tp.constant(f)));
        std::vector<Var<T>> hidden(static_cast<size_t>(cfg_.num_paths));
        for (int l : cfg_.active()) {
            std::vector<Var<T>> zseq;
            zseq.reserve(taps.size());
            for (auto& t : taps) zseq.push_back(t[static_cast<size_t>(l)]);
            hidden[static_cast<size_t>(l)] = path_forward(tp, l, zseq);
        }
        return decode(tp, hidden);
    }

    // Parameters of path l's predictor (non-local + ConvGRU), for freezing.
    std::vector<Parameter<T>*> path_params(int l) {
        ParamBag<T> bag;
        paths_[static_cast<size_t>(l)].nonlocal.collect(bag);
        paths_[static_cast<size_t>(l)].gru.collect(bag);
        return bag.params;
    }

private:
    struct Stage {
        ResBlock<T> down;  // stride-2
        ResBlock<T> rb;
        int tap = -1;      // path index tapped after this stage, -1 = none
    };
    struct Path {
        NonLocalBlock<T> nonlocal;
        ConvGRU<T> gru;
    };
    struct DecLevel {
        std::optional<ResBlock<T>> rb;
        ResBlock<T> fuse;
        int fuse_path = -1;
    };

    void build() {
        Rng rng(derive_seed(cfg_.seed, "network"));
        int c0 = cfg_.path_channels.front();
        stem_.init("encoder.stem", cfg_.in_channels, c0, 3, 1, rng);

        int depth = 0;
        int maxdiv = cfg_.path_divisors.back();
        int cur = c0;
        for (int div = 2; div <= maxdiv; div *= 2) {
            ++depth;
            int tap = -1;
            for (size_t l = 0; l < cfg_.path_divisors.size(); ++l)
                if (cfg_.path_divisors[l] == div) tap = static_cast<int>(l);
            int out_ch = tap >= 0 ? cfg_.path_channels[static_cast<size_t>(tap)] : cur;
            Stage st;
            std::string name = "encoder.stage" + std::to_string(depth);
            st.down.init(name + ".down", cur, out_ch, 2, rng);
            st.rb.init(name + ".rb", out_ch, out_ch, 1, rng);
            st.tap = tap;
            stages_.push_back(std::move(st));
            cur = out_ch;
        }

        paths_.resize(static_cast<size_t>(cfg_.num_paths));
        for (int l = 0; l < cfg_.num_paths; ++l) {
            int ch = cfg_.path_channels[static_cast<size_t>(l)];
            std::string name = "path" + std::to_string(l);
            paths_[static_cast<size_t>(l)].nonlocal.init(name + ".nonlocal", ch, rng);
            paths_[static_cast<size_t>(l)].gru.init(name + ".gru", ch, ch, rng);
        }

        auto act = cfg_.active();
        int start_div = cfg_.path_divisors[static_cast<size_t>(act.back())];
        cur = cfg_.path_channels[static_cast<size_t>(act.back())];
        for (int div = start_div; div > 2; div /= 2) {
            DecLevel lvl;
            std::string name = "decoder.lvl" + std::to_string(div / 2);
            lvl.rb.emplace();
            lvl.rb->init(name + ".rb", cur, cur, 1, rng);
            for (int l : act)
                if (l != act.back() && cfg_.path_divisors[static_cast<size_t>(l)] == div / 2)
                    lvl.fuse_path = l;
            if (lvl.fuse_path >= 0) {
                int tap_ch = cfg_.path_channels[static_cast<size_t>(lvl.fuse_path)];
                lvl.fuse.init(name + ".fuse", cur + tap_ch, tap_ch, 1, rng);
                cur = tap_ch;
            }
            dec_levels_.push_back(std::move(lvl));
        }
        out_conv_.init("decoder.out", cur, cfg_.in_channels, 3, 1, rng);

        stem_.collect(bag_);
        for (auto& s : stages_) {
            s.down.collect(bag_);
            s.rb.collect(bag_);
        }
        for (auto& p : paths_) {
            p.nonlocal.collect(bag_);
            p.gru.collect(bag_);
        }
        for (auto& lvl : dec_levels_) {
            if (lvl.rb) lvl.rb->collect(bag_);
            if (lvl.fuse_path >= 0) lvl.fuse.collect(bag_);
        }
        out_conv_.collect(bag_);
    }

    NetworkConfig cfg_;
    Conv2dLayer<T> stem_;
    std::vector<Stage> stages_;
    std::vector<Path> paths_;
    std::vector<DecLevel> dec_levels_;
    Conv2dLayer<T> out_conv_;
    ParamBag<T> bag_;
};

}  // namespace mpvad
