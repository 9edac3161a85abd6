#include "mpvad/scoring.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mpvad {

double mse(const Tensor<float>& target, const Tensor<float>& pred) {
    require_same_shape(target, pred, "mse");
    const int c = target.dim(0);
    const size_t plane = static_cast<size_t>(target.dim(1)) * target.dim(2);
    double acc = 0.0;
    for (size_t i = 0; i < plane; ++i)
        for (int ch = 0; ch < c; ++ch) {
            double d = static_cast<double>(target.data[ch * plane + i]) -
                       static_cast<double>(pred.data[ch * plane + i]);
            acc += d * d;
        }
    return acc / static_cast<double>(plane);
}

double psnr_db(const Tensor<float>& target, const Tensor<float>& pred, double max_value) {
    constexpr double kEps = 1e-10;
    double m = std::max(mse(target, pred), kEps);
    return 10.0 * std::log10(max_value * max_value / m);
}

std::vector<double> normalize_scores(const std::vector<double>& psnr_values) {
    if (psnr_values.empty()) throw ValidationError("normalize_scores: empty PSNR list");
    double lo = psnr_values[0], hi = psnr_values[0];
    for (double v : psnr_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(psnr_values.size(), 0.0);
    if (hi > lo) {
        const double inv = 1.0 / (hi - lo);
        for (size_t i = 0; i < psnr_values.size(); ++i)
            out[i] = std::clamp(1.0 - (psnr_values[i] - lo) * inv, 0.0, 1.0);
    }
    return out;
}

namespace {

// Shared rollout used by both scoring modes: warm the recurrent states on
// frames [start_target - P, start_target - 2], then emit `count` predictions
// while states advance frame by frame. Q = 1 degenerates to the plain
// fixed-window forward pass, op for op.
void rollout_block(const VideoClip& clip, PredictionNetwork<float>& net, int input_len,
                   int start_target, int count, ScoreSeries& out) {
    Tape<float> tape;
    const NetworkConfig& cfg = net.config();
    auto active = cfg.active();
    std::vector<Var<float>> hidden(static_cast<size_t>(cfg.num_paths));

    auto feed = [&](int frame_index) {
        auto taps = net.encode(tape, tape.constant(clip.frames[static_cast<size_t>(frame_index)]));
        for (int l : active) {
            Var<float>& h = hidden[static_cast<size_t>(l)];
            if (!h.defined()) {
                const std::vector<int> s = taps[static_cast<size_t>(l)].shape();
                h = tape.constant(Tensor<float>({s[0], s[1], s[2]}));
            }
            h = net.path_step(tape, l, h, taps[static_cast<size_t>(l)]);
        }
    };

    for (int f = start_target - input_len; f < start_target - 1; ++f) feed(f);
    for (int q = 0; q < count; ++q) {
        feed(start_target - 1 + q);
        Var<float> pred = net.decode(tape, hidden);
        int t = start_target + q;
        const Tensor<float>& target = clip.frames[static_cast<size_t>(t)];
        double r = psnr_db(to_unit_range(target), to_unit_range(pred.val()), 1.0);
        out.frame_indices.push_back(t);
        out.psnr.push_back(r);
    }
}

ScoreSeries finish_series(const VideoClip& clip, int input_len, ScoreSeries s) {
    s.clip_id = clip.id;
    s.skipped_prefix = input_len;
    s.score = normalize_scores(s.psnr);
    if (clip.labels) {
        s.labels.assign(clip.labels->begin() + input_len, clip.labels->end());
    }
    return s;
}

}  // namespace

ScoreSeries score_clip(const VideoClip& clip, PredictionNetwork<float>& net, int input_len) {
    if (clip.length() <= input_len)
        throw ValidationError("score_clip: clip '" + clip.id + "' has " +
                              std::to_string(clip.length()) + " frames, needs more than " +
                              std::to_string(input_len));
    ScoreSeries s;
    for (int t = input_len; t < clip.length(); ++t) rollout_block(clip, net, input_len, t, 1, s);
    return finish_series(clip, input_len, std::move(s));
}

ScoreSeries score_clip_reuse(const VideoClip& clip, PredictionNetwork<float>& net, int input_len,
                             int reuse_len) {
    if (reuse_len < 1) throw ValidationError("score_clip_reuse: Q must be >= 1");
    if (clip.length() <= input_len)
        throw ValidationError("score_clip_reuse: clip too short");
    ScoreSeries s;
    for (int t0 = input_len; t0 < clip.length(); t0 += reuse_len) {
        int count = std::min(reuse_len, clip.length() - t0);
        rollout_block(clip, net, input_len, t0, count, s);
    }
    return finish_series(clip, input_len, std::move(s));
}

ScoreGapReport score_gap(const std::vector<ScoreSeries>& all_series) {
    ScoreGapReport r;
    double sum_ab = 0.0, sum_no = 0.0;
    for (const auto& s : all_series) {
        if (s.labels.size() != s.score.size())
            throw ValidationError("score_gap: series '" + s.clip_id + "' has no labels");
        for (size_t i = 0; i < s.score.size(); ++i) {
            if (s.labels[i]) {
                sum_ab += s.score[i];
                ++r.abnormal_frames;
            } else {
                sum_no += s.score[i];
                ++r.normal_frames;
            }
        }
    }
    if (r.abnormal_frames == 0 || r.normal_frames == 0)
        throw UndefinedMetricError("score_gap: both normal and abnormal frames required");
    r.mean_abnormal = sum_ab / r.abnormal_frames;
    r.mean_normal = sum_no / r.normal_frames;
    r.delta_s = r.mean_abnormal - r.mean_normal;
    return r;
}

void write_score_csv(const ScoreSeries& s, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError(path + ": cannot open for writing");
    const bool with_labels = !s.labels.empty();
    f << "clip_id,frame_index,psnr_db,score" << (with_labels ? ",label" : "") << "\n";
    char buf[64];
    for (size_t i = 0; i < s.score.size(); ++i) {
        f << s.clip_id << "," << s.frame_indices[i] << ",";
        std::snprintf(buf, sizeof(buf), "%.10g", s.psnr[i]);
        f << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.10g", s.score[i]);
        f << buf;
        if (with_labels) f << "," << s.labels[i];
        f << "\n";
    }
    if (!f) throw IoError(path + ": write failed");
}

ScoreSeries read_score_csv(const std::string& path) {
    if (!std::filesystem::exists(path)) throw NotFoundError(path + ": no such file");
    std::ifstream f(path);
    std::string line;
    if (!std::getline(f, line)) throw DecodeError(path + ": empty file");
    bool with_labels = line.find(",label") != std::string::npos;
    ScoreSeries s;
    int min_index = -1;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        s.clip_id = field;
        std::getline(ss, field, ',');
        int idx = std::stoi(field);
        s.frame_indices.push_back(idx);
        if (min_index < 0 || idx < min_index) min_index = idx;
        std::getline(ss, field, ',');
        s.psnr.push_back(std::stod(field));
        std::getline(ss, field, ',');
        s.score.push_back(std::stod(field));
        if (with_labels) {
            std::getline(ss, field, ',');
            s.labels.push_back(std::stoi(field));
        }
    }
    s.skipped_prefix = std::max(0, min_index);
    return s;
}

}  // namespace mpvad
