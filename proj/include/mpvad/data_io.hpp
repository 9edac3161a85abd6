#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mpvad/image.hpp"

namespace mpvad {

// ============================================================================
// Dataset access. A dataset is a directory tree of clips, each clip a
// directory of zero-padded numbered PNG frames plus an optional labels.txt
// (one 0/1 per line) for test clips, described by a manifest.json at the
// root. The synthetic generator emits the same layout, so synthetic and real
// data are interchangeable downstream.
// ============================================================================

struct DatasetManifest {
    std::string root;
    int frame_size = 64;
    int channels = 1;
    std::vector<std::string> train_clips;  // ids are root-relative dirs
    std::vector<std::string> test_clips;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// One video as normalized frames. Values live in [-1,1]; labels (when
// present) have exactly one 0/1 entry per frame.
struct VideoClip {
    std::string id;
    std::vector<Tensor<float>> frames;
    std::optional<std::vector<int>> labels;

    int length() const { return static_cast<int>(frames.size()); }
};

// Loads, resizes (bilinear) and normalizes a clip. Throws NotFoundError for a
// missing clip directory, DecodeError (naming the file) for a corrupt frame,
// ValidationError when labels.txt disagrees with the frame count.
VideoClip load_clip(const DatasetManifest& m, const std::string& clip_id);

// A training/scoring window: frames [t-P, t) predict frame t.
struct SlidingWindow {
    const VideoClip* clip = nullptr;
    int input_len = 0;
    int target_index = 0;

    const Tensor<float>& target() const {
        return clip->frames[static_cast<size_t>(target_index)];
    }
    const Tensor<float>& input(int i) const {
        return clip->frames[static_cast<size_t>(target_index - input_len + i)];
    }
};

// All windows of a clip with targets at P, P+stride, ... A clip shorter than
// P+1 frames yields an empty sequence.
std::vector<SlidingWindow> windows(const VideoClip& clip, int input_len, int stride = 1);

// ----------------------------------------------------------------------------
// Synthetic benchmark: rigid shapes moving at constant velocity and bouncing
// off borders. Test clips contain labeled anomaly segments: a speed jump
// (velocity x3), an unseen shape class entering, or reversed motion. All
// pixel math is integer, so regeneration is byte-identical for a given seed
// on any machine.
// ----------------------------------------------------------------------------

struct SynthConfig {
    uint64_t seed = 7;
    int num_clips = 20;        // train clips; the test split gets num_clips/2
    int frames_per_clip = 100;
    int frame_size = 64;
    std::set<std::string> anomaly_kinds = {"speed_jump", "new_shape", "reverse"};
    double anomaly_rate = 0.25;  // fraction of test frames inside anomaly segments
    std::string root;

    void validate() const;
};

DatasetManifest generate_synthetic(const SynthConfig& cfg);

}  // namespace mpvad
