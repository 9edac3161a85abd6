#include "mpvad/data_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace mpvad {

DatasetManifest load_manifest(const std::string& path) {
    if (!fs::exists(path)) throw NotFoundError(path + ": manifest not found");
    std::ifstream f(path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw DecodeError(path + ": " + e.what());
    }
    DatasetManifest m;
    m.root = fs::path(path).parent_path().string();
    if (m.root.empty()) m.root = ".";
    m.frame_size = j.at("frame_size").get<int>();
    m.channels = j.at("channels").get<int>();
    m.train_clips = j.at("train").get<std::vector<std::string>>();
    m.test_clips = j.at("test").get<std::vector<std::string>>();
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["frame_size"] = m.frame_size;
    j["channels"] = m.channels;
    j["train"] = m.train_clips;
    j["test"] = m.test_clips;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError(path + ": cannot write manifest");
    f << j.dump(2) << "\n";
}

VideoClip load_clip(const DatasetManifest& m, const std::string& clip_id) {
    fs::path dir = fs::path(m.root) / clip_id;
    if (!fs::is_directory(dir)) throw NotFoundError(dir.string() + ": clip directory not found");

    std::vector<std::string> frame_files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".png") frame_files.push_back(e.path().string());
    }
    std::sort(frame_files.begin(), frame_files.end());

    VideoClip clip;
    clip.id = clip_id;
    clip.frames.reserve(frame_files.size());
    for (const auto& ff : frame_files) {
        ImageU8 raw = read_png(ff);
        Tensor<float> unit = to_unit_float(raw, m.channels);
        unit = resize_bilinear(unit, m.frame_size, m.frame_size);
        clip.frames.push_back(to_model_range(unit));
    }

    fs::path labels_path = dir / "labels.txt";
    if (fs::exists(labels_path)) {
        std::ifstream lf(labels_path);
        std::vector<int> labels;
        std::string line;
        while (std::getline(lf, line)) {
            if (line.empty()) continue;
            if (line != "0" && line != "1")
                throw ValidationError(labels_path.string() + ": labels must be 0 or 1, got '" +
                                      line + "'");
            labels.push_back(line == "1" ? 1 : 0);
        }
        if (labels.size() != clip.frames.size())
            throw ValidationError(labels_path.string() + ": " + std::to_string(labels.size()) +
                                  " labels for " + std::to_string(clip.frames.size()) + " frames");
        clip.labels = std::move(labels);
    }
    return clip;
}

std::vector<SlidingWindow> windows(const VideoClip& clip, int input_len, int stride) {
    if (stride < 1) throw ValidationError("windows: stride must be >= 1");
    if (input_len < 1) throw ValidationError("windows: input length must be >= 1");
    std::vector<SlidingWindow> out;
    for (int t = input_len; t < clip.length(); t += stride)
        out.push_back(SlidingWindow{&clip, input_len, t});
    return out;
}

}  // namespace mpvad
