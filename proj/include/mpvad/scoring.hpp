#pragma once

#include <string>
#include <vector>

#include "mpvad/data_io.hpp"
#include "mpvad/network.hpp"

namespace mpvad {

// ============================================================================
// Anomaly scoring. Predictions are compared with their targets on intensities
// remapped to [0,1] (so PSNR uses max value 1.0); PSNR values of one clip are
// min-max normalized into anomaly scores S = 1 - (R - min) / (max - min).
// The first P frames of a clip have no prediction and are excluded.
// ============================================================================

struct ScoreSeries {
    std::string clip_id;
    int skipped_prefix = 0;            // = P
    std::vector<int> frame_indices;    // P .. T-1
    std::vector<double> psnr;          // R_t in dB
    std::vector<double> score;         // S_t in [0,1]
    std::vector<int> labels;           // empty when the clip has no labels
};

// Mean over pixels of the squared channel-difference norm (on the frames as
// given, no remapping).
double mse(const Tensor<float>& target, const Tensor<float>& pred);

// 10*log10(max^2 / max(mse, 1e-10)); the epsilon caps PSNR at 100 dB for
// max_value = 1.
double psnr_db(const Tensor<float>& target, const Tensor<float>& pred, double max_value);

// S = 1 - (R - min)/(max - min); all zeros when max == min.
std::vector<double> normalize_scores(const std::vector<double>& psnr_values);

ScoreSeries score_clip(const VideoClip& clip, PredictionNetwork<float>& net, int input_len);

// Block-reuse scoring: recurrent states warm up on P-1 frames, then Q
// consecutive predictions are emitted without resetting states; states reset
// between blocks. Q = 1 reproduces score_clip exactly.
ScoreSeries score_clip_reuse(const VideoClip& clip, PredictionNetwork<float>& net, int input_len,
                             int reuse_len);

struct ScoreGapReport {
    double delta_s = 0.0;  // mean abnormal score - mean normal score
    double mean_abnormal = 0.0;
    double mean_normal = 0.0;
    int abnormal_frames = 0;
    int normal_frames = 0;
};

// Gap over all scored frames of all series; every series must carry labels.
ScoreGapReport score_gap(const std::vector<ScoreSeries>& all_series);

// CSV export/import: clip_id,frame_index,psnr_db,score[,label]
void write_score_csv(const ScoreSeries& s, const std::string& path);
ScoreSeries read_score_csv(const std::string& path);

}  // namespace mpvad
